#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace renorm::grid {

struct GridError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// periodic scalar field sampled at lattice sites j*h, row-major storage
struct GridField {
  int d = 2;
  int N = 32;
  double L = 1.0;
  std::vector<double> v;

  GridField() = default;
  GridField(int d_, int N_, double L_);

  double h() const { return L / N; }
  std::size_t sites() const { return v.size(); }
  std::size_t index(const std::vector<int>& idx) const;
  double& at(const std::vector<int>& idx) { return v[index(idx)]; }
  double at(const std::vector<int>& idx) const { return v[index(idx)]; }
};

// N must be a power of two >= 8 and every value finite
void validate(const GridField& f);

void save_grid(const GridField& f, const std::string& path);
GridField load_grid(const std::string& path);

// integer frequency of axis index j on an N-periodic lattice
int freq(int j, int N);

// unnormalized forward transform; inverse divides by N^d
std::vector<std::complex<double>> fft_forward(const GridField& f);
GridField ifft_real(const std::vector<std::complex<double>>& spec, int d, int N, double L);

double max_abs(const GridField& f);
double mean(const GridField& f);

// elementwise field algebra; shapes must agree exactly
bool same_shape(const GridField& a, const GridField& b);
void require_same_shape(const GridField& a, const GridField& b);
GridField operator+(const GridField& a, const GridField& b);
GridField operator-(const GridField& a, const GridField& b);
GridField operator*(const GridField& a, const GridField& b);
GridField operator*(double c, const GridField& a);
GridField& operator+=(GridField& a, const GridField& b);
GridField& operator-=(GridField& a, const GridField& b);
GridField& operator*=(GridField& a, const GridField& b);
GridField constant_field(int d, int N, double L, double value);

}  // namespace renorm::grid
