#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "renorm/grid.hpp"
#include "renorm/multiindex.hpp"

namespace renorm::kernels {

struct KernelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// dyadic slice envelope K^i(z) <= C 2^{(d-2)i} exp(-c 2^{2i}|z|^2);
// c is frozen, C was fitted once at d = 2 and dominates d = 3 as well
inline constexpr double kSliceRateC = 0.125;
inline constexpr double kSliceConstC = 0.112;

enum class KernelKind { Green, Power, Gaussian, Slice, Mollified, Bump };

struct KernelSpec {
  KernelKind kind = KernelKind::Green;
  int d = 2;
  double beta = 1.0;      // power kernels |z|^{-beta}
  double scale = 1.0;     // gaussian width
  int slice_index = 0;    // dyadic slice of the green kernel
  double eps = 1.0;       // mollifier width
  double trunc_radius = 0.0;  // 0 disables the smooth cutoff
  MultiIndex derivative;
  std::shared_ptr<const KernelSpec> inner;  // mollified wraps another kernel
};

KernelSpec green_spec(int d);
KernelSpec power_spec(double beta, int d);
KernelSpec gaussian_spec(double scale, int d);
KernelSpec slice_spec(int d, int i);
KernelSpec mollified_spec(const KernelSpec& inner, double eps);
KernelSpec mollifier(double eps, int d);

double green_kernel_radial(double r, int d);
double green_kernel(const std::vector<double>& z, int d);
double scale_slice_radial(double r, int i, int d);
double scale_slice(const std::vector<double>& z, int i, int d);
double slice_envelope(double r, int i, int d);

// smooth cutoff: 1 on [0, 1/2], 0 on [1, inf)
double cutoff_chi(double s);
KernelSpec truncate(const KernelSpec& K, double radius);

// rho^eps(z) = eps^{-d} rho(z/eps), unit-mass bump supported in the eps-ball
double bump_value(const std::vector<double>& z, double eps, int d);

// pointwise kernel value at displacement z (no derivative applied)
double kernel_value(const KernelSpec& K, const std::vector<double>& z);

// real-space sample on the torus at minimum-image displacements; singular
// origins of power kernels get the equal-volume cell average; bump samples
// are renormalized to exact unit grid mass
grid::GridField sample_kernel(const KernelSpec& K, int N, double L);

grid::GridField mollify(const grid::GridField& f, double eps);

double hadamard_finite_part(const std::function<double(const std::vector<double>&)>& f,
                            double beta, int d, double R);

// spectral multiplier of K on the N-periodic torus of side L
std::vector<std::complex<double>> kernel_symbol(const KernelSpec& K, int N, double L);

grid::GridField periodic_convolution(const grid::GridField& f, const KernelSpec& K,
                                     const MultiIndex& k = MultiIndex());

// periodic (f*g)(z) = h^d sum_w f(z-w) g(w)
grid::GridField convolve_fields(const grid::GridField& f, const grid::GridField& g);

// periodic correlation h^d sum_w f(w) g(w+z)
grid::GridField correlate_fields(const grid::GridField& f, const grid::GridField& g);

}  // namespace renorm::kernels
