#include "renorm/chaos.hpp"

#include <cmath>
#include <complex>

#include "renorm/kernels.hpp"
#include "renorm/noise.hpp"
#include "renorm/parallel.hpp"

namespace renorm::chaos {

namespace {

using grid::GridField;
using model::ModelError;
using sym::Symbol;

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

int min_image_steps(int delta, int N) {
  int m = ((delta % N) + N) % N;
  if (m > N / 2) m -= N;
  return m;
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

// shared grid data of one pairing evaluation
struct Workspace {
  int d = 2;
  int N = 64;
  double L = 2.0;
  kernels::KernelSpec green;
  GridField phi;       // bump at scale lambda, center L/2
  GridField phi_corr;  // correlate(phi, phi)
  double phi_int = 0;
  double lambda = 0;
};

Workspace make_workspace(int d, int N, double L, double lambda) {
  if (d < 1 || d > 3) throw ModelError("chaos pairings support dimensions 1 to 3");
  Workspace w;
  w.d = d;
  w.N = N;
  w.L = L;
  w.lambda = lambda;
  w.green = kernels::green_spec(d);
  w.phi = model::sample_test_function(d, N, L, std::vector<double>(d, L / 2), lambda);
  w.phi_corr = kernels::correlate_fields(w.phi, w.phi);
  w.phi_int = noise::field_integral(w.phi);
  return w;
}

// iint phi(a) phi(b) G(b-a) da db
double pair_quad(const GridField& g, const Workspace& w) {
  return noise::pair_fields(w.phi_corr, g);
}

struct LegParts {
  GridField rho;  // sampled mollifier kernel
  GridField q;    // d^k K * rho
  double mean = 0;   // (rho corr q)(0), the cherry mean
  double mq = 0;     // ||q||^2
  GridField w1;      // order-1 kernel of the three-noise tree, one variable
};

// order-3 cross pairing of the three-noise tree between mollifier widths
double triple_p3(const LegParts& a, const LegParts& b, const GridField& kd,
                 const Workspace& w) {
  GridField q2 = kernels::correlate_fields(a.q, b.q);
  q2 *= q2;
  GridField m = kernels::periodic_convolution(
      kernels::periodic_convolution(q2, w.green), w.green);
  m *= kernels::correlate_fields(a.rho, b.rho);
  const double t_a = pair_quad(m, w);

  // T_B(z) = int int K(u) K(z-v) S_ab(v) S_ba(u-z) Q(v-u) du dv, summed
  // against the phi autocorrelation; only z in the support annulus matter
  GridField s_ab = kernels::correlate_fields(a.rho, b.q);
  GridField s_ba = kernels::correlate_fields(b.rho, a.q);
  GridField q_ab = kernels::correlate_fields(a.q, b.q);
  auto qhat = grid::fft_forward(q_ab);
  const double vol = std::pow(w.phi.h(), w.d);
  const double reach = 2.0 * w.lambda + 3.0 * w.phi.h();
  double t_b = 0;
  std::vector<int> zv(w.d);
  for_sites(w.d, w.N, [&](const std::vector<int>& z) {
    const double pc = w.phi_corr.at(z);
    double r2 = 0;
    for (int i = 0; i < w.d; ++i) {
      const double x = min_image_steps(z[i], w.N) * w.phi.h();
      r2 += x * x;
    }
    if (r2 > reach * reach) return;
    for (int i = 0; i < w.d; ++i) zv[i] = z[i];
    GridField bz = translate(kd, zv);
    bz *= s_ab;
    auto bh = grid::fft_forward(bz);
    for (std::size_t i = 0; i < bh.size(); ++i) bh[i] = std::conj(qhat[i]) * bh[i] * vol;
    GridField inner = grid::ifft_real(bh, w.d, w.N, w.L);
    GridField az = translate(s_ba, zv);
    az *= kd;
    t_b += vol * pc * noise::pair_fields(az, inner);
  });
  return 2.0 * t_a + 4.0 * t_b;
}

LegParts make_leg(double eps, const ChaosShape& shape, const GridField& kd, double khat0,
                  const Workspace& w) {
  LegParts p;
  p.rho = kernels::sample_kernel(kernels::mollifier(eps, w.d), w.N, w.L);
  if (shape.tree == ChaosTree::Noise) return p;
  const MultiIndex k =
      shape.tree == ChaosTree::Triple ? shape.inner_derivative : MultiIndex(w.d);
  p.q = kernels::periodic_convolution(p.rho, w.green, k);
  p.mean = noise::pair_fields(p.rho, p.q);
  if (shape.tree != ChaosTree::Triple) return p;
  p.mq = noise::pair_fields(p.q, p.q);
  GridField e = kernels::correlate_fields(p.rho, p.q);
  e *= kd;
  p.w1 = 2.0 * kernels::correlate_fields(e, p.q) + (khat0 * p.mq) * p.rho;
  return p;
}

}  // namespace

std::optional<ChaosShape> classify_chaos_symbol(const Symbol& tau) {
  if (!tau.valid()) return std::nullopt;
  if (tau == sym::xi()) return ChaosShape{ChaosTree::Noise, MultiIndex()};
  Symbol noise, plant;
  for (const Symbol& f : sym::root_factors(tau)) {
    if (f->kind == sym::Kind::Xi && !noise.valid())
      noise = f;
    else if (f->kind == sym::Kind::Planted && !plant.valid())
      plant = f;
    else
      return std::nullopt;
  }
  if (!noise.valid() || !plant.valid()) return std::nullopt;
  if (!plant->mi.is_zero()) return std::nullopt;
  if (plant->child == sym::xi()) return ChaosShape{ChaosTree::Cherry, MultiIndex()};
  const Symbol& c = plant->child;
  if (c->kind != sym::Kind::Product) return std::nullopt;
  const std::vector<Symbol> cf = sym::root_factors(c);
  if (cf.size() == 2 && cf[0] == cf[1] && cf[0]->kind == sym::Kind::Planted &&
      cf[0]->child == sym::xi())
    return ChaosShape{ChaosTree::Triple, cf[0]->mi};
  return std::nullopt;
}

ChaosShape classify_or_throw(const Symbol& tau) {
  auto s = classify_chaos_symbol(tau);
  if (!s) throw ModelError("symbol outside the chaos catalogue: " + tau->text);
  return *s;
}

std::vector<ChaosTermInfo> chaos_kernel_terms(const Symbol& tau) {
  switch (classify_or_throw(tau).tree) {
    case ChaosTree::Noise:
      return {{1, 1, "rho(a-y)"}};
    case ChaosTree::Cherry:
      return {{0, 1, "int rho(a-y) q(a-y) dy"}, {2, 1, "rho(a-y1) q(a-y2)"}};
    case ChaosTree::Triple:
      return {{3, 1, "rho(a-y1) int K(a-c) q(c-y2) q(c-y3) dc"},
              {1, 2, "int rho(a-b) K(a-c) q(c-b) q(c-y) db dc"},
              {1, 1, "rho(a-y) int K(a-c) q(c-b)^2 db dc"}};
  }
  throw ModelError("unreachable chaos tree");
}

ChaosPairing chaos_pairing(const Symbol& tau, double eps1, double eps2, double lambda,
                           int d, int N, double L) {
  const ChaosShape shape = classify_or_throw(tau);
  Workspace w = make_workspace(d, N, L, lambda);

  GridField kd;
  double khat0 = 0;
  if (shape.tree == ChaosTree::Triple) {
    auto symb = kernels::kernel_symbol(w.green, N, L);
    khat0 = symb[0].real();
    kd = grid::ifft_real(symb, d, N, L);
    kd = (1.0 / std::pow(kd.h(), d)) * kd;
  }

  const LegParts legs[2] = {make_leg(eps1, shape, kd, khat0, w),
                            make_leg(eps2, shape, kd, khat0, w)};
  const double wgt[3] = {1.0, -2.0, 1.0};
  const int ia[3] = {0, 0, 1}, ib[3] = {0, 1, 1};

  ChaosPairing out;
  switch (shape.tree) {
    case ChaosTree::Noise: {
      double p1 = 0;
      for (int t = 0; t < 3; ++t)
        p1 += wgt[t] *
              pair_quad(kernels::correlate_fields(legs[ia[t]].rho, legs[ib[t]].rho), w);
      out.per_order[1] = p1;
      break;
    }
    case ChaosTree::Cherry: {
      const double dm = (legs[0].mean - legs[1].mean) * w.phi_int;
      out.per_order[0] = dm * dm;
      double p2 = 0;
      for (int t = 0; t < 3; ++t) {
        const LegParts& a = legs[ia[t]];
        const LegParts& b = legs[ib[t]];
        GridField g = kernels::correlate_fields(a.rho, b.rho) *
                      kernels::correlate_fields(a.q, b.q);
        g += kernels::correlate_fields(a.rho, b.q) *
             kernels::correlate_fields(a.q, b.rho);
        p2 += wgt[t] * pair_quad(g, w);
      }
      out.per_order[2] = p2;
      break;
    }
    case ChaosTree::Triple: {
      double p1 = 0, p3 = 0;
      for (int t = 0; t < 3; ++t) {
        const LegParts& a = legs[ia[t]];
        const LegParts& b = legs[ib[t]];
        p1 += wgt[t] * pair_quad(kernels::correlate_fields(a.w1, b.w1), w);
        p3 += wgt[t] * triple_p3(a, b, kd, w);
      }
      out.per_order[1] = p1;
      out.per_order[3] = p3;
      break;
    }
  }
  for (const auto& [m, v] : out.per_order) out.total += v;
  return out;
}

model::MCValue chaos_mc(const Symbol& tau, double eps1, double eps2, double lambda, int d,
                        int N, double L, const model::MCSpec& mc) {
  classify_or_throw(tau);
  if (mc.n_seeds < 2) throw ModelError("squared-pairing estimate needs at least two seeds");
  const kernels::KernelSpec green = kernels::green_spec(d);
  const GridField phi =
      model::sample_test_function(d, N, L, std::vector<double>(d, L / 2), lambda);
  std::vector<double> sq(mc.n_seeds, 0.0);
  par::for_each_index(mc.n_seeds, [&](int i) {
    noise::NoiseSample xi = noise::sample_white_noise(d, N, L, mc.seed0 + i);
    model::ModelContext c1{kernels::mollify(xi.xi, eps1), std::nullopt, green};
    model::ModelContext c2{kernels::mollify(xi.xi, eps2), std::nullopt, green};
    const double v = noise::pair_fields(model::interpret_naive(tau, c1), phi) -
                     noise::pair_fields(model::interpret_naive(tau, c2), phi);
    sq[i] = v * v;
  });
  return model::mc_mean(sq);
}

}  // namespace renorm::chaos
