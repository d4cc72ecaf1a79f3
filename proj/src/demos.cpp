#include "renorm/demos.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "renorm/kernels.hpp"
#include "renorm/noise.hpp"
#include "renorm/parallel.hpp"

namespace renorm::demos {

namespace {

using grid::GridField;
using model::ModelError;

template <class Fn>
void for_sites(int d, int N, Fn&& fn) {
  std::vector<int> idx(d, 0);
  while (true) {
    fn(idx);
    int ax = d - 1;
    while (ax >= 0 && ++idx[ax] == N) idx[ax--] = 0;
    if (ax < 0) break;
  }
}

GridField translate(const GridField& f, const std::vector<int>& z) {
  GridField g(f.d, f.N, f.L);
  std::vector<int> src(f.d);
  for_sites(f.d, f.N, [&](const std::vector<int>& idx) {
    for (int i = 0; i < f.d; ++i) src[i] = ((idx[i] - z[i]) % f.N + f.N) % f.N;
    g.at(idx) = f.at(src);
  });
  return g;
}

double rms(const GridField& f) {
  double s = 0;
  for (double x : f.v) s += x * x;
  return std::sqrt(s / static_cast<double>(f.v.size()));
}

}  // namespace

DivergenceReport divergence_demo(double beta, const std::vector<double>& eps_list, int N,
                                 double L) {
  if (!(beta > 0.0 && beta < 2.0))
    throw ModelError("power kernel exponent must lie in (0, 2)");
  if (eps_list.size() < 3) throw ModelError("divergence fit needs at least three widths");
  DivergenceReport rep;
  rep.eps = eps_list;
  std::sort(rep.eps.begin(), rep.eps.end(), std::greater<double>());
  const int d = 2;
  const kernels::KernelSpec pk = kernels::power_spec(beta, d);
  const GridField phi =
      model::sample_test_function(d, N, L, std::vector<double>(d, 0.0), L / 4);
  const std::vector<int> origin(d, 0);
  std::vector<double> inv_eps;
  for (double e : rep.eps) {
    const GridField rho = kernels::sample_kernel(kernels::mollifier(e, d), N, L);
    const GridField cov = kernels::convolve_fields(rho, rho);
    const GridField t = kernels::periodic_convolution(cov, pk);
    rep.tadpole.push_back(t.at(origin));
    rep.paired.push_back(noise::pair_fields(t, phi));
    inv_eps.push_back(1.0 / e);
  }
  rep.tadpole_slope = model::fit_loglog(inv_eps, rep.tadpole);
  for (std::size_t i = 0; i + 1 < rep.paired.size(); ++i)
    rep.cauchy_gaps.push_back(std::fabs(rep.paired[i + 1] - rep.paired[i]));
  return rep;
}

PoincareReport poincare_check(const CylinderFunctional& F, int n_samples,
                              std::uint64_t seed) {
  if (F.probes.empty()) throw ModelError("cylinder functional needs at least one probe");
  if (!F.f || !F.grad) throw ModelError("cylinder functional needs f and its gradient");
  if (n_samples < 2) throw ModelError("variance estimate needs at least two samples");
  const int m = static_cast<int>(F.probes.size());
  for (const GridField& p : F.probes) grid::require_same_shape(F.probes.front(), p);
  if (static_cast<int>(F.grad(std::vector<double>(m, 0.0)).size()) != m)
    throw ModelError("gradient arity differs from the probe count");
  std::vector<std::vector<double>> gram(m, std::vector<double>(m, 0.0));
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) gram[a][b] = noise::pair_fields(F.probes[a], F.probes[b]);
  const GridField& g0 = F.probes.front();
  std::vector<double> fs(n_samples, 0.0), es(n_samples, 0.0);
  par::for_each_index(n_samples, [&](int i) {
    noise::NoiseSample xi = noise::sample_white_noise(g0.d, g0.N, g0.L, seed + i);
    std::vector<double> args(m);
    for (int a = 0; a < m; ++a) args[a] = noise::pair_fields(xi.xi, F.probes[a]);
    fs[i] = F.f(args);
    const std::vector<double> gr = F.grad(args);
    double e = 0;
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) e += gr[a] * gr[b] * gram[a][b];
    es[i] = e;
  });
  const double mean_f = model::mc_mean(fs).value;
  double m2 = 0, m4 = 0;
  for (double x : fs) {
    const double c = x - mean_f;
    m2 += c * c;
    m4 += c * c * c * c;
  }
  const auto n = static_cast<double>(n_samples);
  m2 /= n;
  m4 /= n;
  PoincareReport rep;
  rep.variance = m2 * n / (n - 1.0);
  rep.variance_se = std::sqrt(std::max(0.0, m4 - m2 * m2) / n);
  const model::MCValue en = model::mc_mean(es);
  rep.energy = en.value;
  rep.energy_se = en.stderr_;
  return rep;
}

DerivativeDecompositionReport derivative_decomposition_demo(const GridField& h, double eps,
                                                            std::uint64_t seed) {
  grid::validate(h);
  if (h.d != 3) throw ModelError("derivative decomposition runs on the 3d torus");
  if (std::fabs(noise::pair_fields(h, h) - 1.0) > 1e-8)
    throw ModelError("direction field must have unit L2 norm");
  const int d = 3, N = h.N;
  const double L = h.L, hs = h.h();
  const kernels::KernelSpec green = kernels::green_spec(d);
  const noise::NoiseSample xi = noise::sample_white_noise(d, N, L, seed);
  const GridField xie = kernels::mollify(xi.xi, eps);
  const GridField he = kernels::mollify(h, eps);
  const GridField k_xi = kernels::periodic_convolution(xie, green);
  const GridField k_he = kernels::periodic_convolution(he, green);
  const GridField dk_he = kernels::periodic_convolution(he, green, MultiIndex{1, 0, 0});

  DerivativeDecompositionReport rep;
  // the rough germ is read above the lattice-regularization scale, where its
  // exponent sits strictly below one half
  for (int j : {2, 4, 8, 16, 28}) {
    if (j >= N / 2) break;
    const double t = j * hs;
    std::vector<int> shift{-j, 0, 0};  // g(x) = f(x + t e1)
    GridField ax = translate(k_xi, shift) - k_xi;
    rep.a_germ.offsets.push_back(t);
    rep.a_germ.values.push_back(rms(ax));
  }
  // the smooth germs are read in their Taylor window near the base point
  for (int j : {1, 2, 4, 8, 16}) {
    if (j >= N / 2) break;
    const double t = j * hs;
    std::vector<int> shift{-j, 0, 0};
    GridField bx = translate(k_he, shift) - k_he;
    GridField bp = bx - t * dk_he;
    rep.b_naive.offsets.push_back(t);
    rep.b_naive.values.push_back(rms(bx));
    rep.b_plus.offsets.push_back(t);
    rep.b_plus.values.push_back(rms(bp));
  }
  rep.a_germ.fit = model::fit_loglog(rep.a_germ.offsets, rep.a_germ.values);
  rep.b_naive.fit = model::fit_loglog(rep.b_naive.offsets, rep.b_naive.values);
  rep.b_plus.fit = model::fit_loglog(rep.b_plus.offsets, rep.b_plus.values);

  for (double lam : {L / 4, L / 8, L / 16, L / 32}) {
    GridField psi(d, N, L);
    std::vector<double> u(d);
    const double norm = 1.0 / (lam * lam * lam);
    for_sites(d, N, [&](const std::vector<int>& idx) {
      for (int i = 0; i < d; ++i) {
        int m = ((idx[i] % N) + N) % N;
        if (m > N / 2) m -= N;
        u[i] = m * hs / lam;
      }
      psi.at(idx) = u[0] * lam * norm * model::test_profile(u);
    });
    GridField c = kernels::correlate_fields(psi, xie);
    c *= dk_he;
    double s = 0;
    for (double x : c.v) s += std::pow(std::fabs(x), 6.0);
    rep.c_term.offsets.push_back(lam);
    rep.c_term.values.push_back(std::pow(s / static_cast<double>(c.v.size()), 1.0 / 6.0));
  }
  rep.c_term.fit = model::fit_loglog(rep.c_term.offsets, rep.c_term.values);
  return rep;
}

namespace {

double monomial(const std::vector<double>& dx, const MultiIndex& l) {
  double v = 1.0;
  for (std::size_t i = 0; i < dx.size(); ++i)
    for (int p = 0; p < l[static_cast<int>(i)]; ++p) v *= dx[i];
  return v;
}

}  // namespace

PointedNormReport pointed_norm_archetype(const DerivCallable& deriv,
                                         const std::vector<int>& x_site, int gamma, int nu,
                                         double p, int d, int N, double L,
                                         const std::vector<double>& lambdas) {
  if (gamma >= nu) throw ModelError("transport order must stay below the jet order");
  if (gamma < 1) throw ModelError("need at least the zeroth coefficient");
  if (p < 1.0) throw ModelError("integrability exponent must be at least 1");
  if (static_cast<int>(x_site.size()) != d)
    throw ModelError("base point dimension differs from the grid dimension");
  if (lambdas.size() < 2) throw ModelError("improvement fit needs at least two scales");
  const double hs = L / N;
  std::vector<double> xc(d);
  for (int i = 0; i < d; ++i) {
    if (x_site[i] < 0 || x_site[i] >= N) throw ModelError("base point outside the grid");
    xc[i] = x_site[i] * hs;
  }
  const double lam_max = *std::max_element(lambdas.begin(), lambdas.end());
  for (int i = 0; i < d; ++i)
    if (xc[i] - lam_max < 0.0 || xc[i] + lam_max > L - hs)
      throw ModelError("ball leaves the domain");

  // jet of f at the base point, all orders below nu
  std::map<MultiIndex, double> jet;
  for (const MultiIndex& m : multiindices_up_to(d, nu - 1)) jet[m] = deriv(m, xc);

  const std::vector<MultiIndex> ks = multiindices_up_to(d, gamma - 1);
  auto coeff = [&](const MultiIndex& k, const std::vector<double>& y) {
    double v = deriv(k, y);
    std::vector<double> dx(d);
    for (int i = 0; i < d; ++i) dx[i] = y[i] - xc[i];
    for (const MultiIndex& l : multiindices_up_to(d, nu - 1 - k.order()))
      v -= jet.at(k + l) * monomial(dx, l) / multi_factorial(l);
    return v;
  };

  auto normalized_defect = [&](const std::vector<double>& z, const std::vector<double>& y) {
    std::vector<double> dzy(d);
    double r2 = 0;
    for (int i = 0; i < d; ++i) {
      dzy[i] = z[i] - y[i];
      r2 += dzy[i] * dzy[i];
    }
    const double r = std::sqrt(r2);
    if (r == 0.0) return 0.0;
    double worst = 0;
    for (const MultiIndex& k : ks) {
      double v = coeff(k, z);
      for (const MultiIndex& l : multiindices_up_to(d, gamma - 1 - k.order()))
        v -= coeff(k + l, y) * monomial(dzy, l) / multi_factorial(l);
      worst = std::max(worst, std::fabs(v) / std::pow(r, gamma - k.order()));
    }
    return worst;
  };

  PointedNormReport rep;
  rep.lambdas = lambdas;

  // global pairs on a coarse sublattice
  {
    const int stride = std::max(1, N / 10);
    std::vector<std::vector<double>> pts;
    for_sites(d, N / stride, [&](const std::vector<int>& idx) {
      std::vector<double> y(d);
      for (int i = 0; i < d; ++i) y[i] = idx[i] * stride * hs;
      pts.push_back(y);
    });
    for (std::size_t a = 0; a < pts.size(); ++a)
      for (std::size_t b = a + 1; b < pts.size(); ++b)
        rep.rest_norm = std::max(rep.rest_norm, normalized_defect(pts[a], pts[b]));
  }

  // local pairs inside each ball B(x, lambda)
  for (double lam : lambdas) {
    const int reach = static_cast<int>(std::floor(lam / hs));
    const int stride = std::max(1, (2 * reach + 1) / 9);
    std::vector<std::vector<double>> pts;
    std::vector<int> off(d, -reach);
    while (true) {
      double r2 = 0;
      for (int i = 0; i < d; ++i) r2 += off[i] * off[i];
      if (r2 * hs * hs <= lam * lam) {
        std::vector<double> y(d);
        for (int i = 0; i < d; ++i) y[i] = (x_site[i] + off[i]) * hs;
        pts.push_back(y);
      }
      int ax = d - 1;
      while (ax >= 0 && (off[ax] += stride) > reach) off[ax--] = -reach;
      if (ax < 0) break;
    }
    double sup = 0;
    for (std::size_t a = 0; a < pts.size(); ++a)
      for (std::size_t b = a + 1; b < pts.size(); ++b)
        sup = std::max(sup, normalized_defect(pts[a], pts[b]));
    rep.local_sups.push_back(sup);
  }
  bool positive = true;
  for (double s : rep.local_sups) positive = positive && s > 0;
  if (positive) rep.improvement = model::fit_loglog(rep.lambdas, rep.local_sups);

  // pointed norms over the largest ball, ratio against ||y-x||^{nu-|k|}
  {
    const int reach = static_cast<int>(std::floor(lam_max / hs));
    double sum_p = 0;
    long long count = 0;
    std::vector<int> off(d, -reach);
    while (true) {
      double r2 = 0;
      for (int i = 0; i < d; ++i) r2 += off[i] * off[i];
      const double r = std::sqrt(r2) * hs;
      if (r > 0.0 && r <= lam_max) {
        std::vector<double> y(d);
        for (int i = 0; i < d; ++i) y[i] = (x_site[i] + off[i]) * hs;
        double g = 0;
        for (const MultiIndex& k : ks)
          g = std::max(g, std::fabs(coeff(k, y)) / std::pow(r, nu - k.order()));
        rep.sup_norm = std::max(rep.sup_norm, g);
        sum_p += std::pow(g, p);
        ++count;
      }
      int ax = d - 1;
      while (ax >= 0 && ++off[ax] > reach) off[ax--] = -reach;
      if (ax < 0) break;
    }
    double vol = static_cast<double>(count);
    for (int i = 0; i < d; ++i) vol *= hs;
    rep.ball_volume = vol;
    if (count > 0) rep.p_norm = std::pow(sum_p * std::pow(hs, d), 1.0 / p);
  }
  return rep;
}

}  // namespace renorm::demos
