#include "renorm/grid.hpp"

#include <fftw3.h>

#include <bit>
#include <cmath>
#include <cstdio>
#include <mutex>

namespace renorm::grid {

namespace {

std::size_t pow_n(int N, int d) {
  std::size_t s = 1;
  for (int i = 0; i < d; ++i) s *= static_cast<std::size_t>(N);
  return s;
}

// fftw plan creation is not thread-safe; execution of a ready plan is
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

constexpr std::uint32_t kEndianTag = 0x01020304u;

}  // namespace

GridField::GridField(int d_, int N_, double L_) : d(d_), N(N_), L(L_) {
  v.assign(pow_n(N_, d_), 0.0);
}

std::size_t GridField::index(const std::vector<int>& idx) const {
  std::size_t s = 0;
  for (int a = 0; a < d; ++a) {
    int j = idx[a] % N;
    if (j < 0) j += N;
    s = s * static_cast<std::size_t>(N) + static_cast<std::size_t>(j);
  }
  return s;
}

void validate(const GridField& f) {
  if (f.d < 1 || f.d > 4) throw GridError("grid dimension out of range");
  if (f.N < 8 || !std::has_single_bit(static_cast<unsigned>(f.N)))
    throw GridError("grid side must be a power of two >= 8");
  if (!(f.L > 0)) throw GridError("grid length must be positive");
  if (f.v.size() != pow_n(f.N, f.d)) throw GridError("grid storage size mismatch");
  for (double x : f.v)
    if (!std::isfinite(x)) throw GridError("grid holds a non-finite value");
}

void save_grid(const GridField& f, const std::string& path) {
  validate(f);
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw GridError("cannot open grid file for writing: " + path);
  std::uint32_t tag = kEndianTag;
  std::int32_t d32 = f.d, n32 = f.N;
  bool ok = std::fwrite(&tag, sizeof tag, 1, fp) == 1 &&
            std::fwrite(&d32, sizeof d32, 1, fp) == 1 &&
            std::fwrite(&n32, sizeof n32, 1, fp) == 1 &&
            std::fwrite(&f.L, sizeof f.L, 1, fp) == 1 &&
            std::fwrite(f.v.data(), sizeof(double), f.v.size(), fp) == f.v.size();
  std::fclose(fp);
  if (!ok) throw GridError("short write on grid file: " + path);
}

GridField load_grid(const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw GridError("cannot open grid file: " + path);
  std::uint32_t tag = 0;
  std::int32_t d32 = 0, n32 = 0;
  double L = 0;
  GridField f;
  bool ok = std::fread(&tag, sizeof tag, 1, fp) == 1 &&
            std::fread(&d32, sizeof d32, 1, fp) == 1 &&
            std::fread(&n32, sizeof n32, 1, fp) == 1 && std::fread(&L, sizeof L, 1, fp) == 1;
  if (ok && tag != kEndianTag) {
    std::fclose(fp);
    throw GridError("grid file endianness mismatch");
  }
  if (ok) {
    f.d = d32;
    f.N = n32;
    f.L = L;
    if (d32 >= 1 && d32 <= 4 && n32 >= 8 && n32 <= (1 << 14)) {
      f.v.resize(pow_n(n32, d32));
      ok = std::fread(f.v.data(), sizeof(double), f.v.size(), fp) == f.v.size();
    } else {
      ok = false;
    }
  }
  std::fclose(fp);
  if (!ok) throw GridError("malformed grid file: " + path);
  validate(f);
  return f;
}

int freq(int j, int N) { return j <= N / 2 ? j : j - N; }

std::vector<std::complex<double>> fft_forward(const GridField& f) {
  std::vector<std::complex<double>> buf(f.v.begin(), f.v.end());
  std::vector<int> dims(f.d, f.N);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(plan_mutex());
    plan = fftw_plan_dft(f.d, dims.data(), reinterpret_cast<fftw_complex*>(buf.data()),
                         reinterpret_cast<fftw_complex*>(buf.data()), FFTW_FORWARD,
                         FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_destroy_plan(plan);
  }
  return buf;
}

GridField ifft_real(const std::vector<std::complex<double>>& spec, int d, int N, double L) {
  std::vector<std::complex<double>> buf = spec;
  std::vector<int> dims(d, N);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(plan_mutex());
    plan = fftw_plan_dft(d, dims.data(), reinterpret_cast<fftw_complex*>(buf.data()),
                         reinterpret_cast<fftw_complex*>(buf.data()), FFTW_BACKWARD,
                         FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_destroy_plan(plan);
  }
  GridField out(d, N, L);
  double scale = 1.0 / static_cast<double>(pow_n(N, d));
  for (std::size_t i = 0; i < buf.size(); ++i) out.v[i] = buf[i].real() * scale;
  return out;
}

double max_abs(const GridField& f) {
  double m = 0;
  for (double x : f.v) m = std::max(m, std::fabs(x));
  return m;
}

double mean(const GridField& f) {
  double s = 0, c = 0;
  for (double x : f.v) {
    double y = x - c;
    double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  return s / static_cast<double>(f.v.size());
}

bool same_shape(const GridField& a, const GridField& b) {
  return a.d == b.d && a.N == b.N && a.L == b.L;
}

void require_same_shape(const GridField& a, const GridField& b) {
  if (!same_shape(a, b)) throw GridError("grid shape mismatch");
}

GridField operator+(const GridField& a, const GridField& b) {
  GridField r = a;
  return r += b;
}

GridField operator-(const GridField& a, const GridField& b) {
  GridField r = a;
  return r -= b;
}

GridField operator*(const GridField& a, const GridField& b) {
  GridField r = a;
  return r *= b;
}

GridField operator*(double c, const GridField& a) {
  GridField r = a;
  for (double& x : r.v) x *= c;
  return r;
}

GridField& operator+=(GridField& a, const GridField& b) {
  require_same_shape(a, b);
  for (std::size_t i = 0; i < a.v.size(); ++i) a.v[i] += b.v[i];
  return a;
}

GridField& operator-=(GridField& a, const GridField& b) {
  require_same_shape(a, b);
  for (std::size_t i = 0; i < a.v.size(); ++i) a.v[i] -= b.v[i];
  return a;
}

GridField& operator*=(GridField& a, const GridField& b) {
  require_same_shape(a, b);
  for (std::size_t i = 0; i < a.v.size(); ++i) a.v[i] *= b.v[i];
  return a;
}

GridField constant_field(int d, int N, double L, double value) {
  GridField f(d, N, L);
  std::fill(f.v.begin(), f.v.end(), value);
  return f;
}

}  // namespace renorm::grid
