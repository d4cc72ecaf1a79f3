#include <cmath>
#include <cstdio>
#include <random>

#include "doctest.h"
#include "renorm/integrand.hpp"
#include "renorm/kernels.hpp"

using namespace renorm;

namespace {

grid::GridField random_field(int d, int N, double L, std::uint64_t seed) {
  grid::GridField f(d, N, L);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (double& x : f.v) x = gauss(rng);
  return f;
}

double linf_diff(const grid::GridField& a, const grid::GridField& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.v.size(); ++i) m = std::max(m, std::fabs(a.v[i] - b.v[i]));
  return m;
}

}  // namespace

TEST_CASE("green kernel matches closed forms") {
  // d=2: K(z) = K_0(sqrt(2)|z|) / (2 pi)
  for (double r : {0.05, 0.2, 0.7, 1.5, 3.0}) {
    double want = std::cyl_bessel_k(0.0, std::sqrt(2.0) * r) / (2.0 * M_PI);
    CHECK(kernels::green_kernel_radial(r, 2) == doctest::Approx(want).epsilon(1e-7));
  }
  // d=3: K(z) = sqrt(2) exp(-sqrt(2)|z|) / (8 pi |z|)
  for (double r : {0.05, 0.2, 0.7, 1.5, 3.0}) {
    double want = std::sqrt(2.0) * std::exp(-std::sqrt(2.0) * r) / (8.0 * M_PI * r);
    CHECK(kernels::green_kernel_radial(r, 3) == doctest::Approx(want).epsilon(1e-7));
  }

  double prev = kernels::green_kernel_radial(3.0, 3);
  for (double r = 3.25; r <= 6.0; r += 0.25) {
    double cur = kernels::green_kernel_radial(r, 3);
    CHECK(cur < prev);
    // exponential decay: one unit of radius costs at least e^{-1}
    CHECK(cur < std::exp(-1.0) * kernels::green_kernel_radial(r - 1.0, 3));
    prev = cur;
  }

  CHECK_THROWS_AS(kernels::green_kernel({0.0, 0.0}, 2), kernels::KernelError);
  CHECK_THROWS_AS(kernels::green_kernel_radial(0.0, 3), kernels::KernelError);

  // logarithmic asymptote at small radius in d=2
  for (double r : {1e-3, 5e-4}) {
    double lead = -std::log(r) / (2.0 * M_PI);
    CHECK(std::fabs(kernels::green_kernel_radial(r, 2) / lead - 1.0) < 0.05);
  }
}

TEST_CASE("dyadic slices reassemble the kernel over the window") {
  for (int d : {2, 3})
    for (double r : {0.05, 0.3, 1.0, 3.0}) {
      double sum = 0;
      for (int i = -2; i <= 12; ++i) sum += kernels::scale_slice_radial(r, i, d);
      double whole = kernels::green_kernel_radial(r, d);
      CHECK(std::fabs(sum / whole - 1.0) < 1e-6);
    }
}

TEST_CASE("slices die super-polynomially at fixed separation") {
  CHECK(kernels::scale_slice_radial(1.0, 4, 2) > 0.0);
  CHECK(kernels::scale_slice_radial(1.0, 8, 2) < 1e-30);
  // d=2 envelope carries no growth in i: sup over z stays O(1)
  for (int i : {0, 2, 4, 6, 8}) {
    double sup = 0;
    for (double r = 0.0; r <= 3.0; r += 0.05)
      sup = std::max(sup, kernels::scale_slice_radial(r, i, 2));
    CHECK(sup <= kernels::kSliceConstC);
  }
}

TEST_CASE("slice envelope bound holds on the test grid") {
  for (int d : {2, 3})
    for (int i = -2; i <= 8; ++i)
      for (double r = 0.0; r <= 3.0 + 1e-9; r += 0.05) {
        double v = kernels::scale_slice_radial(r, i, d);
        double env = kernels::slice_envelope(r, i, d);
        CHECK(v <= env * (1.0 + 1e-9) + 1e-300);
      }
}

TEST_CASE("smooth cutoff truncates without wrap-around") {
  CHECK(kernels::cutoff_chi(0.0) == 1.0);
  CHECK(kernels::cutoff_chi(0.5) == 1.0);
  CHECK(kernels::cutoff_chi(1.0) == 0.0);
  CHECK(kernels::cutoff_chi(1.7) == 0.0);
  double last = 1.0;
  for (double s = 0.55; s < 1.0; s += 0.05) {
    double c = kernels::cutoff_chi(s);
    CHECK(c < last);
    CHECK(c > 0.0);
    last = c;
  }

  kernels::KernelSpec K = kernels::truncate(kernels::green_spec(2), 0.8);
  for (double r : {0.1, 0.25, 0.4})
    CHECK(kernels::kernel_value(K, {r, 0.0}) == kernels::green_kernel_radial(r, 2));
  CHECK(kernels::kernel_value(K, {0.85, 0.0}) == 0.0);

  // support radius below the torus half-width: fft convolution equals the
  // direct non-periodized sum
  int N = 32;
  double L = 2.0;
  kernels::KernelSpec T = kernels::truncate(kernels::gaussian_spec(0.1, 2), 0.4);
  grid::GridField f = random_field(2, N, L, 99);
  grid::GridField conv = kernels::periodic_convolution(f, T);
  double h = L / N;
  double worst = 0;
  for (int x0 = 0; x0 < N; ++x0)
    for (int x1 = 0; x1 < N; ++x1) {
      double acc = 0;
      for (int y0 = 0; y0 < N; ++y0)
        for (int y1 = 0; y1 < N; ++y1) {
          double d0 = (x0 - y0) * h, d1 = (x1 - y1) * h;
          d0 -= L * std::round(d0 / L);
          d1 -= L * std::round(d1 / L);
          acc += kernels::kernel_value(T, {d0, d1}) * f.at({y0, y1}) * h * h;
        }
      worst = std::max(worst, std::fabs(acc - conv.at({x0, x1})));
    }
  CHECK(worst < 1e-10);
}

TEST_CASE("mollifier has unit mass and contracts sup norms") {
  grid::GridField rho = kernels::sample_kernel(kernels::mollifier(0.3, 2), 64, 2.0);
  double mass = 0;
  for (double x : rho.v) mass += x;
  mass *= rho.h() * rho.h();
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));
  for (double x : rho.v) CHECK(x >= 0.0);

  grid::GridField c(2, 32, 2.0);
  for (double& x : c.v) x = 0.7;
  grid::GridField mc = kernels::mollify(c, 0.3);
  CHECK(linf_diff(mc, c) < 1e-12);

  grid::GridField f = random_field(2, 64, 2.0, 7);
  CHECK(grid::max_abs(kernels::mollify(f, 0.25)) <= grid::max_abs(f) * (1.0 + 1e-12));

  // quadratic convergence on a smooth field
  grid::GridField s(2, 128, 2.0);
  for (int a = 0; a < 128; ++a)
    for (int b = 0; b < 128; ++b)
      s.at({a, b}) = std::sin(M_PI * a * s.h()) * std::cos(M_PI * b * s.h());
  std::vector<double> eps = {0.4, 0.2, 0.1, 0.05}, err;
  for (double e : eps) err.push_back(linf_diff(kernels::mollify(s, e), s));
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    double x = std::log(eps[i]), y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  double n = static_cast<double>(eps.size());
  double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(slope >= 1.9);

  CHECK_THROWS_AS(kernels::mollify(f, 1.5), kernels::KernelError);
}

TEST_CASE("hadamard finite part") {
  // no subtraction below dimension: plain integral
  auto gauss2 = [](const std::vector<double>& y) {
    return std::exp(-(y[0] * y[0] + y[1] * y[1]));
  };
  double got = kernels::hadamard_finite_part(gauss2, 0.7, 2, 1.0);
  double ref = 0;
  {
    // r = u^4 smooths the fractional-power cusp at the origin
    int n = 200000;
    double acc = 0;
    for (int j = 0; j < n; ++j) {
      double u = (j + 0.5) / n;
      double r = u * u * u * u;
      acc += std::pow(r, 1.0 - 0.7) * std::exp(-r * r) * 4.0 * u * u * u / n;
    }
    ref = 2.0 * M_PI * acc;
  }
  CHECK(got == doctest::Approx(ref).epsilon(1e-8));

  // constant with one subtraction: exact zero
  auto one = [](const std::vector<double>&) { return 1.0; };
  CHECK(std::fabs(kernels::hadamard_finite_part(one, 1.2, 1, 1.0)) < 1e-10);
  CHECK(std::fabs(kernels::hadamard_finite_part(one, 2.4, 2, 0.7)) < 1e-10);

  // cosine in d=1 against an independent graded quadrature
  auto cosf = [](const std::vector<double>& y) { return std::cos(y[0]); };
  double fp = kernels::hadamard_finite_part(cosf, 1.5, 1, 1.0);
  double oracle = 0;
  {
    // r = u^2 substitution; integrand 4 (cos(u^2) - 1) / u^2 is smooth
    int n = 400000;
    double acc = 0;
    for (int j = 0; j < n; ++j) {
      double u = (j + 0.5) / n;
      acc += 4.0 * (std::cos(u * u) - 1.0) / (u * u) / n;
    }
    oracle = acc;
  }
  CHECK(fp == doctest::Approx(oracle).epsilon(1e-8));

  // gaussian in d=2 with one subtraction against a radial reference
  double fp2 = kernels::hadamard_finite_part(gauss2, 2.5, 2, 1.0);
  double ref2 = 0;
  {
    int n = 400000;
    double acc = 0;
    for (int j = 0; j < n; ++j) {
      double u = (j + 0.5) / n;
      double r = u * u;
      acc += std::pow(r, 1.0 - 2.5) * (std::exp(-r * r) - 1.0) * 2.0 * u / n;
    }
    ref2 = 2.0 * M_PI * acc;
  }
  CHECK(fp2 == doctest::Approx(ref2).epsilon(1e-7));

  CHECK_THROWS_AS(kernels::hadamard_finite_part(one, 9.0, 1, 1.0), kernels::KernelError);
}

TEST_CASE("periodic convolution spectral identities") {
  int N = 64;
  double L = 2.0;
  grid::GridField f(2, N, L);
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b)
      f.at({a, b}) = std::cos(2.0 * M_PI * (3.0 * a + 1.0 * b) / N);
  grid::GridField conv = kernels::periodic_convolution(f, kernels::green_spec(2));
  double xi2 = std::pow(2.0 * M_PI / L, 2) * (9.0 + 1.0);
  double worst = 0;
  for (std::size_t i = 0; i < f.v.size(); ++i)
    worst = std::max(worst, std::fabs(conv.v[i] - f.v[i] / (1.0 + xi2)));
  CHECK(worst < 1e-12);

  grid::GridField c(2, 32, 1.0);
  for (double& x : c.v) x = 4.2;
  grid::GridField dc = kernels::periodic_convolution(c, kernels::green_spec(2), {1, 0});
  CHECK(grid::max_abs(dc) < 1e-12);

  grid::GridField g = random_field(2, 64, 2.0, 31);
  grid::GridField lhs = kernels::periodic_convolution(kernels::mollify(g, 0.3),
                                                      kernels::green_spec(2));
  grid::GridField rhs = kernels::periodic_convolution(
      g, kernels::mollified_spec(kernels::green_spec(2), 0.3));
  CHECK(linf_diff(lhs, rhs) < 1e-10);
}

TEST_CASE("sampled kernels are even") {
  grid::GridField s = kernels::sample_kernel(kernels::slice_spec(2, 3), 32, 2.0);
  for (int a = 0; a < 32; ++a)
    for (int b = 0; b < 32; ++b)
      CHECK(s.at({a, b}) == s.at({(32 - a) % 32, (32 - b) % 32}));
  grid::GridField p = kernels::sample_kernel(kernels::power_spec(1.0, 2), 16, 1.0);
  for (int a = 0; a < 16; ++a)
    for (int b = 0; b < 16; ++b)
      CHECK(p.at({a, b}) == p.at({(16 - a) % 16, (16 - b) % 16}));
  CHECK(std::isfinite(p.at({0, 0})));
}

TEST_CASE("grid fields round-trip through the binary format") {
  grid::GridField f = random_field(2, 16, 3.0, 5);
  std::string path = "/tmp/renorm_grid_test.bin";
  grid::save_grid(f, path);
  grid::GridField g = grid::load_grid(path);
  CHECK(g.d == f.d);
  CHECK(g.N == f.N);
  CHECK(g.L == f.L);
  CHECK(g.v == f.v);

  grid::GridField bad(2, 16, 1.0);
  bad.N = 12;
  bad.v.assign(144, 0.0);
  CHECK_THROWS_AS(grid::validate(bad), grid::GridError);
  grid::GridField nan_field(2, 16, 1.0);
  nan_field.v[3] = std::nan("");
  CHECK_THROWS_AS(grid::save_grid(nan_field, path), grid::GridError);

  // corrupt the endianness tag
  {
    std::FILE* fp = std::fopen(path.c_str(), "rb+");
    REQUIRE(fp != nullptr);
    std::uint32_t swapped = 0x04030201u;
    std::fwrite(&swapped, sizeof swapped, 1, fp);
    std::fclose(fp);
  }
  CHECK_THROWS_AS(grid::load_grid(path), grid::GridError);
}

TEST_CASE("fft round trip preserves the field and its energy") {
  grid::GridField f = random_field(2, 32, 1.0, 11);
  auto spec = grid::fft_forward(f);
  grid::GridField back = grid::ifft_real(spec, 2, 32, 1.0);
  CHECK(linf_diff(back, f) < 1e-12);
  double real_energy = 0, spec_energy = 0;
  for (double x : f.v) real_energy += x * x;
  for (auto& c : spec) spec_energy += std::norm(c);
  CHECK(spec_energy / f.v.size() == doctest::Approx(real_energy).epsilon(1e-12));
}

TEST_CASE("grid evaluate agrees with fft convolution") {
  int N = 32;
  double L = 2.0;
  double h = L / N;
  grid::GridField phi(2, N, L);
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b)
      phi.at({a, b}) = std::sin(2.0 * M_PI * a / N) + 0.5 * std::cos(4.0 * M_PI * b / N);

  grid::GridField conv = kernels::periodic_convolution(phi, kernels::green_spec(2));
  // the discrete kernel the symbol encodes, as a real-space sample
  auto sym = kernels::kernel_symbol(kernels::green_spec(2), N, L);
  grid::GridField kdisc = grid::ifft_real(sym, 2, N, L);
  for (double& x : kdisc.v) x /= h * h;

  integrand::Integrand I;
  I.n_ext = 1;
  I.n_vars = 2;
  integrand::Term t;
  t.factors.push_back(integrand::make_kernel("K", 0, MultiIndex({0, 0}), 0, 1).first);
  t.factors.push_back(integrand::make_test("phi", 1, 1.0, MultiIndex({0, 0})));
  I.terms.push_back(t);
  integrand::canonicalize(I);

  auto site = [&](double x) {
    int j = static_cast<int>(std::llround(x / h));
    return j;
  };
  std::map<std::string, integrand::Callable> bindings;
  bindings["K"] = [&](int, const MultiIndex&, const std::array<double, 4>& zp, double) {
    return kdisc.at({site(zp[0]), site(zp[1])});
  };
  bindings["phi"] = [&](int, const MultiIndex&, const std::array<double, 4>& zp, double) {
    return phi.at({site(zp[0]), site(zp[1])});
  };

  integrand::EvalMethod method;
  method.kind = integrand::EvalMethod::Kind::Grid;
  method.d = 2;
  method.box = L;
  method.n = N;
  method.midpoint = false;
  method.ext_positions = {{5 * h, 7 * h, 0.0, 0.0}};
  integrand::EvalResult r = integrand::evaluate(I, bindings, method);
  CHECK(std::fabs(r.value - conv.at({5, 7})) < 1e-8);
}
