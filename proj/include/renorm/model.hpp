#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "renorm/grid.hpp"
#include "renorm/kernels.hpp"
#include "renorm/noise.hpp"
#include "renorm/symbols.hpp"

namespace renorm::model {

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Interpretation environment: the mollified noise field, an optional field
// bound to the noise-derivative symbol, and the kernel realizing every
// planted edge as a periodic convolution.
struct ModelContext {
  grid::GridField xi_eps;
  std::optional<grid::GridField> h_eps;
  kernels::KernelSpec kernel = kernels::green_spec(2);
};

// Multiplicative interpretation: One -> 1, Xi -> xi_eps, XiDot -> h_eps,
// X^k -> coordinate monomial on the fundamental domain [0,L)^d,
// I_k(t) -> d^k K * interpret(t), products multiply pointwise.
grid::GridField interpret_naive(const sym::Symbol& tau, const ModelContext& ctx);

// Recentered model at a grid base point. Monomials become min-image (y-x)^k,
// planted symbols of positive degree lose their Taylor jet at x, products
// multiply. The noise-derivative symbol loses its value at x exactly when the
// degree parameters give it positive degree.
grid::GridField recenter(const sym::Symbol& tau, const std::vector<int>& x_site,
                         const ModelContext& ctx, const sym::DegreeParams& params);

// Per-symbol, per-base-point recentered field with its metadata.
struct ModelData {
  sym::Symbol tau;
  std::vector<int> base;
  grid::GridField field;
};
ModelData make_model_data(const sym::Symbol& tau, const std::vector<int>& x_site,
                          const ModelContext& ctx, const sym::DegreeParams& params);

// One root extraction: sigma is a negative-degree subtree containing the
// root, remainder is the product of the cut branches reattached at the root
// placeholder. The trivial pair is (One, tau) with multiplicity 1.
struct RootExtraction {
  sym::Symbol sigma;
  sym::Symbol remainder;
  long long multiplicity = 1;
};

// All root subtrees of negative degree that are free of the noise-derivative
// symbol, obtained by cutting an antichain of planted edges. Cut branches
// reattach at the root placeholder; the extraction forgets their interior
// attachment points. The trivial pair is always present.
std::vector<RootExtraction> extract_root_negative(const sym::Symbol& tau,
                                                  const sym::DegreeParams& params);

// Character on negative-degree symbols, keyed by canonical text. Lookup of an
// unset symbol returns 0 unless strict, in which case it throws.
struct Character {
  std::map<std::string, double> values;
  bool strict = false;
  double get(const sym::Symbol& s) const;
  void set(const sym::Symbol& s, double v);
  bool has(const sym::Symbol& s) const;
};

// Preparation-map recursion: subtrees are renormalized innermost-first and at
// each node the sum of ell(sigma) * interpretation(remainder) over nontrivial
// root extractions is subtracted. With ell identically zero this is
// interpret_naive exactly.
grid::GridField renormalize_interpretation(const sym::Symbol& tau, const Character& ell,
                                           const ModelContext& ctx,
                                           const sym::DegreeParams& params);

struct MCSpec {
  int n_seeds = 100;
  std::uint64_t seed0 = 1;
};

struct MCValue {
  double value = 0;
  double stderr_ = 0;
};

// Sample mean and standard error of the mean.
MCValue mc_mean(const std::vector<double>& samples);

// The character value making the spatial-plus-ensemble average of the
// renormalized interpretation vanish, given the characters of all smaller
// symbols in `known`. Requires negative degree.
MCValue bphz_character(const sym::Symbol& tau, const Character& known, int N, double L,
                       double eps, const kernels::KernelSpec& kernel,
                       const sym::DegreeParams& params, const MCSpec& mc);

// Characters for every negative-degree symbol of the catalogue, computed in
// preorder (noise count, edge count, degree) so each step only needs the
// previously filled values.
Character bphz_characters(const std::vector<sym::Symbol>& catalogue, int N, double L,
                          double eps, const kernels::KernelSpec& kernel,
                          const sym::DegreeParams& params, const MCSpec& mc);

// Fixed smooth profile with every moment int u^k phi(u) du nonzero: the
// product (1+u_1)...(1+u_d) times a radial bump supported in the unit ball.
double test_profile(const std::vector<double>& u);

// lambda^{-d} phi((y-x)/lambda) sampled on the grid, min-image displacement.
grid::GridField sample_test_function(int d, int N, double L,
                                     const std::vector<double>& center, double lambda);

struct SlopeFit {
  double slope = 0;
  double intercept = 0;
  double stderr_ = 0;
};

// Least squares on (log x, log y); y must be positive.
SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

struct ScalingReport {
  std::vector<double> lambdas;
  std::vector<double> values;  // E[ pairing^2 ]^{1/2} per lambda
  SlopeFit fit;
};

// Validates the lambda grid: at least 4 points spanning 1.5 decades.
void check_lambda_grid(const std::vector<double>& lambdas);

// Deterministic monomial scaling. The pairing <(.)^k, phi^lambda> is computed
// in substituted coordinates u = y/lambda with a lambda-independent
// quadrature, so the fitted slope equals |k| up to rounding.
ScalingReport scaling_fit_poly(const MultiIndex& k, int d,
                               const std::vector<double>& lambdas);

// White-noise pairing scaling; expected slope -d/2.
ScalingReport scaling_fit_noise(int d, int N, double L,
                                const std::vector<double>& lambdas, const MCSpec& mc);

// Recentered, renormalized cherry against the |x|^{-beta} kernel at base 0;
// the lattice supplies the UV regularization and the subtracted constant is
// the origin-cell tadpole. Expected slope 2*alpha0 + (d-beta) with alpha0 the
// white-noise degree -d/2.
ScalingReport scaling_fit_renormalized_cherry(double beta, int N, double L,
                                              const std::vector<double>& lambdas,
                                              const MCSpec& mc);

// Sup-norm gap between the exact polarization derivative of xi -> naive
// interpretation in direction h and the interpretation of the formal
// derivative with the noise-derivative symbol bound to h*rho^eps.
// Polarization stencils are exact on polynomial functionals of degree <= 4.
double malliavin_identity_check(const sym::Symbol& tau, const grid::GridField& xi,
                                const grid::GridField& h, double eps,
                                const kernels::KernelSpec& kernel);

}  // namespace renorm::model
