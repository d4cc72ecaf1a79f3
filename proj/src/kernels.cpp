#include "renorm/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace renorm::kernels {

namespace {

constexpr double kPi = 3.14159265358979323846;

double norm2(const std::vector<double>& z) {
  double s = 0;
  for (double x : z) s += x * x;
  return std::sqrt(s);
}

// surface measure of the unit sphere in dimension d
double sphere_area(int d) {
  switch (d) {
    case 1: return 2.0;
    case 2: return 2.0 * kPi;
    case 3: return 4.0 * kPi;
    default: throw KernelError("kernel dimension out of range");
  }
}

double ball_volume(int d) { return sphere_area(d) / d; }

template <class F>
double simpson_rec(const F& f, double a, double m, double b, double fa, double fm, double fb,
                   double whole, double tol, int depth) {
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_rec(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <class F>
double integrate(const F& f, double a, double b, double tol, int depth = 40) {
  double m = 0.5 * (a + b);
  double fa = f(a), fm = f(m), fb = f(b);
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_rec(f, a, m, b, fa, fm, fb, whole, tol, depth);
}

double heat_integrand(double t, double r, int d) {
  double expo = -0.5 * r * r / t - t;
  if (expo < -745.0) return 0.0;
  return std::exp(expo) / std::pow(4.0 * kPi * t, 0.5 * d);
}

}  // namespace

double scale_slice_radial(double r, int i, int d) {
  double t_lo = std::exp2(-2.0 * i);
  // log substitution keeps the dyadic interval well conditioned at every i
  auto g = [r, d, t_lo](double u) {
    double t = t_lo * std::exp(u);
    return heat_integrand(t, r, d) * t;
  };
  double peak = std::max({g(0.0), g(std::log(2.0)), g(std::log(4.0))});
  if (peak == 0.0) return 0.0;
  return integrate(g, 0.0, std::log(4.0), 1e-10 * peak);
}

double scale_slice(const std::vector<double>& z, int i, int d) {
  return scale_slice_radial(norm2(z), i, d);
}

double slice_envelope(double r, int i, int d) {
  return kSliceConstC * std::exp2(static_cast<double>((d - 2) * i)) *
         std::exp(-kSliceRateC * std::exp2(2.0 * i) * r * r);
}

double green_kernel_radial(double r, int d) {
  if (r < 0 || !std::isfinite(r)) throw KernelError("green kernel needs a finite radius");
  if (r == 0.0 && d >= 2) throw KernelError("green kernel is singular at the origin");
  // slices near the saddle t = r/sqrt(2) carry the mass; expand both ways
  double t_peak = std::clamp(r / std::sqrt(2.0), 1e-12, 1.0);
  int i0 = static_cast<int>(std::ceil(-0.5 * std::log2(t_peak)));
  double acc = scale_slice_radial(r, i0, d);
  for (int i = i0 + 1, stale = 0; i <= i0 + 240 && stale < 2; ++i) {
    double s = scale_slice_radial(r, i, d);
    acc += s;
    stale = s <= 1e-12 * acc ? stale + 1 : 0;
  }
  for (int i = i0 - 1, stale = 0; i >= -8 && stale < 2; --i) {
    double s = scale_slice_radial(r, i, d);
    acc += s;
    stale = s <= 1e-12 * acc ? stale + 1 : 0;
  }
  return acc;
}

double green_kernel(const std::vector<double>& z, int d) {
  return green_kernel_radial(norm2(z), d);
}

double cutoff_chi(double s) {
  if (s <= 0.5) return 1.0;
  if (s >= 1.0) return 0.0;
  auto g = [](double u) { return u > 0 ? std::exp(-1.0 / u) : 0.0; };
  double u = 2.0 - 2.0 * s;
  return g(u) / (g(u) + g(1.0 - u));
}

KernelSpec green_spec(int d) {
  KernelSpec K;
  K.kind = KernelKind::Green;
  K.d = d;
  return K;
}

KernelSpec power_spec(double beta, int d) {
  KernelSpec K;
  K.kind = KernelKind::Power;
  K.d = d;
  K.beta = beta;
  return K;
}

KernelSpec gaussian_spec(double scale, int d) {
  if (!(scale > 0)) throw KernelError("gaussian scale must be positive");
  KernelSpec K;
  K.kind = KernelKind::Gaussian;
  K.d = d;
  K.scale = scale;
  return K;
}

KernelSpec slice_spec(int d, int i) {
  KernelSpec K;
  K.kind = KernelKind::Slice;
  K.d = d;
  K.slice_index = i;
  return K;
}

KernelSpec mollified_spec(const KernelSpec& inner, double eps) {
  if (!(eps > 0 && eps <= 1.0)) throw KernelError("mollifier width must lie in (0, 1]");
  KernelSpec K;
  K.kind = KernelKind::Mollified;
  K.d = inner.d;
  K.eps = eps;
  K.inner = std::make_shared<KernelSpec>(inner);
  return K;
}

KernelSpec mollifier(double eps, int d) {
  if (!(eps > 0 && eps <= 1.0)) throw KernelError("mollifier width must lie in (0, 1]");
  KernelSpec K;
  K.kind = KernelKind::Bump;
  K.d = d;
  K.eps = eps;
  return K;
}

KernelSpec truncate(const KernelSpec& K, double radius) {
  if (!(radius > 0)) throw KernelError("truncation radius must be positive");
  KernelSpec T = K;
  T.trunc_radius = radius;
  return T;
}

namespace {

// integral of exp(-1/(1-r^2)) r^{d-1} over [0,1), cached per dimension
double bump_radial_mass(int d) {
  static std::map<int, double> cache;
  auto it = cache.find(d);
  if (it != cache.end()) return it->second;
  auto g = [d](double r) {
    double w = 1.0 - r * r;
    return w > 1e-12 ? std::exp(-1.0 / w) * std::pow(r, d - 1) : 0.0;
  };
  double m = integrate(g, 0.0, 1.0, 1e-14);
  cache.emplace(d, m);
  return m;
}

}  // namespace

double bump_value(const std::vector<double>& z, double eps, int d) {
  double r = norm2(z) / eps;
  if (r >= 1.0) return 0.0;
  double w = 1.0 - r * r;
  double n = sphere_area(d) * bump_radial_mass(d);
  return std::exp(-1.0 / w) / (n * std::pow(eps, d));
}

double kernel_value(const KernelSpec& K, const std::vector<double>& z) {
  double r = norm2(z);
  double chi = K.trunc_radius > 0 ? cutoff_chi(r / K.trunc_radius) : 1.0;
  if (chi == 0.0) return 0.0;
  switch (K.kind) {
    case KernelKind::Green:
      return chi * green_kernel_radial(r, K.d);
    case KernelKind::Power:
      if (r == 0.0) throw KernelError("power kernel is singular at the origin");
      return chi * std::pow(r, -K.beta);
    case KernelKind::Gaussian:
      return chi * std::exp(-0.5 * r * r / (K.scale * K.scale)) /
             std::pow(2.0 * kPi * K.scale * K.scale, 0.5 * K.d);
    case KernelKind::Slice:
      return chi * scale_slice_radial(r, K.slice_index, K.d);
    case KernelKind::Bump:
      return chi * bump_value(z, K.eps, K.d);
    case KernelKind::Mollified:
      throw KernelError("mollified kernels live on grids; sample or convolve them");
  }
  throw KernelError("unknown kernel kind");
}

grid::GridField sample_kernel(const KernelSpec& K, int N, double L) {
  if (K.kind == KernelKind::Mollified)
    return mollify(sample_kernel(*K.inner, N, L), K.eps);
  grid::GridField out(K.d, N, L);
  double h = out.h();
  std::vector<int> idx(K.d, 0);
  std::vector<double> z(K.d, 0.0);
  for (std::size_t s = 0; s < out.sites(); ++s) {
    std::size_t rem = s;
    for (int a = K.d - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(rem % N);
      rem /= N;
    }
    bool origin = true;
    for (int a = 0; a < K.d; ++a) {
      int j = idx[a] <= N / 2 ? idx[a] : idx[a] - N;
      z[a] = j * h;
      origin = origin && j == 0;
    }
    if (origin && K.kind == KernelKind::Power) {
      // equal-volume cell average keeps the integrable singularity summable
      if (!(K.beta < K.d)) throw KernelError("power kernel exponent must stay below d");
      double rc = h * std::pow(ball_volume(K.d), -1.0 / K.d);
      out.v[s] = sphere_area(K.d) * std::pow(rc, K.d - K.beta) /
                 ((K.d - K.beta) * std::pow(h, K.d));
      continue;
    }
    out.v[s] = kernel_value(K, z);
  }
  if (K.kind == KernelKind::Bump) {
    double mass = 0;
    for (double x : out.v) mass += x;
    mass *= std::pow(h, K.d);
    if (!(mass > 0)) throw KernelError("bump mollifier unresolved by the grid");
    for (double& x : out.v) x /= mass;
  }
  return out;
}

grid::GridField mollify(const grid::GridField& f, double eps) {
  grid::validate(f);
  if (eps > 0.5 * f.L) throw KernelError("mollifier wider than the torus half-width");
  grid::GridField rho = sample_kernel(mollifier(eps, f.d), f.N, f.L);
  auto fs = grid::fft_forward(f);
  auto rs = grid::fft_forward(rho);
  double vol = std::pow(f.h(), f.d);
  for (std::size_t i = 0; i < fs.size(); ++i) fs[i] *= rs[i] * vol;
  return grid::ifft_real(fs, f.d, f.N, f.L);
}

std::vector<std::complex<double>> kernel_symbol(const KernelSpec& K, int N, double L) {
  int d = K.d;
  bool spectral = K.trunc_radius == 0.0 &&
                  (K.kind == KernelKind::Green || K.kind == KernelKind::Gaussian);
  if (K.kind == KernelKind::Mollified && K.inner) {
    auto sym = kernel_symbol(*K.inner, N, L);
    auto rho = kernel_symbol(mollifier(K.eps, d), N, L);
    for (std::size_t i = 0; i < sym.size(); ++i) sym[i] *= rho[i];
    return sym;
  }
  if (!spectral) {
    grid::GridField samp = sample_kernel(K, N, L);
    auto sym = grid::fft_forward(samp);
    double vol = std::pow(samp.h(), d);
    for (auto& c : sym) c *= vol;
    return sym;
  }
  std::size_t total = 1;
  for (int a = 0; a < d; ++a) total *= static_cast<std::size_t>(N);
  std::vector<std::complex<double>> sym(total);
  std::vector<int> idx(d, 0);
  for (std::size_t s = 0; s < total; ++s) {
    std::size_t rem = s;
    double xi2 = 0;
    for (int a = d - 1; a >= 0; --a) {
      int j = static_cast<int>(rem % N);
      rem /= N;
      double xi = 2.0 * kPi * grid::freq(j, N) / L;
      xi2 += xi * xi;
    }
    sym[s] = K.kind == KernelKind::Green ? 1.0 / (1.0 + xi2)
                                         : std::exp(-0.5 * K.scale * K.scale * xi2);
  }
  return sym;
}

grid::GridField periodic_convolution(const grid::GridField& f, const KernelSpec& K,
                                     const MultiIndex& k) {
  grid::validate(f);
  if (K.d != f.d) throw KernelError("kernel and field dimensions disagree");
  auto fs = grid::fft_forward(f);
  auto sym = kernel_symbol(K, f.N, f.L);
  MultiIndex deriv = K.derivative + k;
  std::vector<int> idx(f.d, 0);
  for (std::size_t s = 0; s < fs.size(); ++s) {
    std::size_t rem = s;
    std::complex<double> m = sym[s];
    for (int a = f.d - 1; a >= 0; --a) {
      int j = static_cast<int>(rem % f.N);
      rem /= f.N;
      double xi = 2.0 * kPi * grid::freq(j, f.N) / f.L;
      for (int q = 0; q < deriv[a]; ++q) m *= std::complex<double>(0.0, xi);
    }
    fs[s] *= m;
  }
  return grid::ifft_real(fs, f.d, f.N, f.L);
}

grid::GridField convolve_fields(const grid::GridField& f, const grid::GridField& g) {
  grid::require_same_shape(f, g);
  auto fs = grid::fft_forward(f);
  auto gs = grid::fft_forward(g);
  const double vol = std::pow(f.h(), f.d);
  for (std::size_t i = 0; i < fs.size(); ++i) fs[i] *= gs[i] * vol;
  return grid::ifft_real(fs, f.d, f.N, f.L);
}

grid::GridField correlate_fields(const grid::GridField& f, const grid::GridField& g) {
  grid::require_same_shape(f, g);
  auto fs = grid::fft_forward(f);
  auto gs = grid::fft_forward(g);
  const double vol = std::pow(f.h(), f.d);
  for (std::size_t i = 0; i < fs.size(); ++i) fs[i] = std::conj(fs[i]) * gs[i] * vol;
  return grid::ifft_real(fs, f.d, f.N, f.L);
}

namespace {

// Fornberg weights at 0 for the m-th derivative on the given nodes
std::vector<double> fd_weights(const std::vector<double>& xs, int m) {
  int nd = static_cast<int>(xs.size()) - 1;
  std::vector<std::vector<double>> c(xs.size(), std::vector<double>(m + 1, 0.0));
  double c1 = 1.0, c4 = xs[0];
  c[0][0] = 1.0;
  for (int i = 1; i <= nd; ++i) {
    int mn = std::min(i, m);
    double c2 = 1.0, c5 = c4;
    c4 = xs[i];
    for (int j = 0; j < i; ++j) {
      double c3 = xs[i] - xs[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int q = mn; q >= 1; --q) c[i][q] = c1 * (q * c[i - 1][q - 1] - c5 * c[i - 1][q]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int q = mn; q >= 1; --q) c[j][q] = (c4 * c[j][q] - q * c[j][q - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(xs.size());
  for (std::size_t j = 0; j < xs.size(); ++j) w[j] = c[j][m];
  return w;
}

// tensor-product central differences for the mixed derivative k of f at 0
double partial_at_zero(const std::function<double(const std::vector<double>&)>& f,
                       const MultiIndex& k, int d, double step) {
  std::vector<std::vector<double>> nodes(d), weights(d);
  for (int a = 0; a < d; ++a) {
    if (k[a] == 0) {
      nodes[a] = {0.0};
      weights[a] = {1.0};
      continue;
    }
    for (int j = -4; j <= 4; ++j) nodes[a].push_back(j * step);
    weights[a] = fd_weights(nodes[a], k[a]);
  }
  double sum = 0;
  std::vector<std::size_t> pos(d, 0);
  std::vector<double> x(d, 0.0);
  while (true) {
    double w = 1.0;
    for (int a = 0; a < d; ++a) {
      w *= weights[a][pos[a]];
      x[a] = nodes[a][pos[a]];
    }
    if (w != 0.0) sum += w * f(x);
    int a = d - 1;
    while (a >= 0 && ++pos[a] == nodes[a].size()) pos[a--] = 0;
    if (a < 0) break;
  }
  return sum;
}

struct SphereRule {
  std::vector<std::vector<double>> nodes;
  std::vector<double> weights;  // sum to the sphere area
};

// Gauss-Legendre nodes on [-1, 1]
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double t = std::cos(kPi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int j = 2; j <= n; ++j) {
        double p2 = ((2.0 * j - 1.0) * t * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      double dp = n * (t * p1 - p0) / (t * t - 1.0);
      double dt = p1 / dp;
      t -= dt;
      if (std::fabs(dt) < 1e-15) break;
    }
    x[i] = t;
    double p0 = 1.0, p1 = t;
    for (int j = 2; j <= n; ++j) {
      double p2 = ((2.0 * j - 1.0) * t * p1 - (j - 1.0) * p0) / j;
      p0 = p1;
      p1 = p2;
    }
    double dp = n * (t * p1 - p0) / (t * t - 1.0);
    w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
  }
}

const SphereRule& sphere_rule(int d) {
  static std::map<int, SphereRule> cache;
  auto it = cache.find(d);
  if (it != cache.end()) return it->second;
  SphereRule rule;
  if (d == 1) {
    rule.nodes = {{1.0}, {-1.0}};
    rule.weights = {1.0, 1.0};
  } else if (d == 2) {
    int M = 96;
    for (int j = 0; j < M; ++j) {
      double th = 2.0 * kPi * (j + 0.5) / M;
      rule.nodes.push_back({std::cos(th), std::sin(th)});
      rule.weights.push_back(2.0 * kPi / M);
    }
  } else if (d == 3) {
    std::vector<double> cx, cw;
    gauss_legendre(24, cx, cw);
    int M = 48;
    for (int i = 0; i < 24; ++i) {
      double st = std::sqrt(std::max(0.0, 1.0 - cx[i] * cx[i]));
      for (int j = 0; j < M; ++j) {
        double ph = 2.0 * kPi * (j + 0.5) / M;
        rule.nodes.push_back({st * std::cos(ph), st * std::sin(ph), cx[i]});
        rule.weights.push_back(cw[i] * 2.0 * kPi / M);
      }
    }
  } else {
    throw KernelError("kernel dimension out of range");
  }
  return cache.emplace(d, std::move(rule)).first->second;
}

}  // namespace

double hadamard_finite_part(const std::function<double(const std::vector<double>&)>& f,
                            double beta, int d, double R) {
  if (!(beta > 0) || !(R > 0)) throw KernelError("hadamard needs beta > 0 and R > 0");
  if (d < 1 || d > 3) throw KernelError("kernel dimension out of range");
  int m = std::max(0, static_cast<int>(std::floor(beta - d + 1.0)));
  if (m > 6) throw KernelError("hadamard subtraction order exceeds the configured maximum");

  std::vector<std::pair<MultiIndex, double>> taylor;
  for (const MultiIndex& k : multiindices_up_to(d, m - 1)) {
    double fact = 1.0;
    for (int a = 0; a < d; ++a)
      for (int q = 2; q <= k[a]; ++q) fact *= q;
    taylor.emplace_back(k, partial_at_zero(f, k, d, R / 40.0) / fact);
  }
  auto subtracted = [&](const std::vector<double>& y) {
    double t = f(y);
    for (const auto& [k, c] : taylor) {
      double mono = c;
      for (int a = 0; a < d; ++a)
        for (int q = 0; q < k[a]; ++q) mono *= y[a];
      t -= mono;
    }
    return t;
  };

  const SphereRule& sphere = sphere_rule(d);
  auto ring = [&](double r) {
    double s = 0;
    std::vector<double> y(d);
    for (std::size_t j = 0; j < sphere.nodes.size(); ++j) {
      for (int a = 0; a < d; ++a) y[a] = r * sphere.nodes[j][a];
      s += sphere.weights[j] * subtracted(y);
    }
    return s;
  };

  // graded substitution r = R u^p flattens the r^{d-1-beta+m} endpoint
  double rho = d - 1.0 - beta + m;
  if (rho + 1.0 <= 1e-4) throw KernelError("hadamard radial quadrature non-convergent");
  int p = 1;
  while (p * (rho + 1.0) - 1.0 <= 0.5 && p < 4096) p *= 2;
  auto radial = [&](double u) {
    if (u <= 0.0) return 0.0;
    double r = R * std::pow(u, p);
    if (r <= 0.0) return 0.0;
    return std::pow(r, d - 1.0 - beta) * ring(r) * R * p * std::pow(u, p - 1.0);
  };
  double coarse = 0;
  for (int j = 0; j < 8; ++j) coarse += 0.125 * std::fabs(radial((j + 0.5) / 8.0));
  return integrate(radial, 0.0, 1.0, 1e-11 * std::max(1.0, coarse));
}

}  // namespace renorm::kernels
