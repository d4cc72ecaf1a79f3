#include <cmath>
#include <numbers>

#include "doctest.h"
#include "renorm/chaos.hpp"
#include "renorm/demos.hpp"
#include "renorm/kernels.hpp"
#include "renorm/model.hpp"
#include "renorm/noise.hpp"
#include "renorm/symbols.hpp"

using namespace renorm;
using grid::GridField;
using model::ModelContext;
using model::ModelError;
using sym::Symbol;

namespace {

double linf_diff(const GridField& a, const GridField& b) {
  REQUIRE(a.v.size() == b.v.size());
  double m = 0;
  for (std::size_t i = 0; i < a.v.size(); ++i) m = std::max(m, std::fabs(a.v[i] - b.v[i]));
  return m;
}

const sym::DegreeParams kP2;  // d=2, alpha0=-3/2, kernel gain 2

Symbol parse2(const std::string& text) { return sym::parse_symbol(text, kP2); }

bool has_extraction(const std::vector<model::RootExtraction>& xs, const Symbol& sigma,
                    const Symbol& rem, long long mult) {
  for (const auto& x : xs)
    if (x.sigma == sigma && x.remainder == rem && x.multiplicity == mult) return true;
  return false;
}

}  // namespace

TEST_CASE("white noise sample has the advertised site statistics") {
  const int N = 128;
  const double L = 2.0;
  noise::NoiseSample s = noise::sample_white_noise(2, N, L, 77);
  CHECK(s.xi.d == 2);
  CHECK(s.xi.N == N);

  // field mean is Gaussian with sd L^{-d/2} = 0.5
  CHECK(std::fabs(grid::mean(s.xi)) < 2.5);

  // site variance 1/h^2; relative error of the sample variance ~ sqrt(2)/N
  const double h = s.xi.h();
  double v = 0;
  for (double x : s.xi.v) v += x * x;
  v /= static_cast<double>(s.xi.v.size());
  CHECK(std::fabs(v * h * h - 1.0) < 0.055);

  // determinism and stream separation
  noise::NoiseSample again = noise::sample_white_noise(2, N, L, 77);
  CHECK(linf_diff(s.xi, again.xi) == 0.0);
  noise::NoiseSample other = noise::sample_white_noise(2, N, L, 77, 1);
  CHECK(linf_diff(s.xi, other.xi) > 0.1);
}

TEST_CASE("pairings against a fixed bump have white-noise mean and variance") {
  const int N = 64, n_seeds = 1000;
  const double L = 2.0;
  GridField phi = model::sample_test_function(2, N, L, {1.0, 1.0}, 0.4);
  const double norm2 = noise::pair_fields(phi, phi);
  double sum = 0, sum2 = 0;
  for (int i = 0; i < n_seeds; ++i) {
    noise::NoiseSample s = noise::sample_white_noise(2, N, L, 1000 + i);
    const double v = noise::pair_fields(s.xi, phi);
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / n_seeds;
  const double var = sum2 / n_seeds - mean * mean;
  // sd of the pairing is sqrt(norm2); mean estimate has se sqrt(norm2/n)
  CHECK(std::fabs(mean) < 5.0 * std::sqrt(norm2 / n_seeds));
  // sample variance has relative se ~ sqrt(2/n) = 4.5%
  CHECK(std::fabs(var - norm2) < 0.2 * norm2);
}

TEST_CASE("counter-based gaussians are reproducible with sane moments") {
  CHECK(noise::gauss_at(42, 7) == noise::gauss_at(42, 7));
  CHECK(noise::gauss_at(42, 7) != noise::gauss_at(42, 8));
  const int n = 100000;
  double m1 = 0, m2 = 0, m4 = 0;
  for (int i = 0; i < n; ++i) {
    const double g = noise::gauss_at(9001, i);
    m1 += g;
    m2 += g * g;
    m4 += g * g * g * g;
  }
  m1 /= n;
  m2 /= n;
  m4 /= n;
  CHECK(std::fabs(m1) < 0.02);
  CHECK(std::fabs(m2 - 1.0) < 0.02);
  CHECK(std::fabs(m4 / (m2 * m2) - 3.0) < 0.2);
}

TEST_CASE("naive interpretation realizes leaves, edges and products") {
  const int N = 32;
  const double L = 2.0;
  noise::NoiseSample s = noise::sample_white_noise(2, N, L, 5);
  ModelContext ctx{kernels::mollify(s.xi, 0.25), std::nullopt, kernels::green_spec(2)};

  GridField one_field = model::interpret_naive(sym::one(), ctx);
  for (double x : one_field.v) CHECK(x == 1.0);

  CHECK(linf_diff(model::interpret_naive(sym::xi(), ctx), ctx.xi_eps) == 0.0);

  // X^{(2,1)} is the coordinate monomial on [0,L)^2
  GridField mono = model::interpret_naive(parse2("X^[2,1]"), ctx);
  const double h = mono.h();
  CHECK(mono.at({3, 5}) == doctest::Approx(3 * h * 3 * h * 5 * h).epsilon(1e-14));
  CHECK(mono.at({0, 9}) == 0.0);

  // cherry: xi_eps * (K * xi_eps), same discrete operations
  GridField cherry = model::interpret_naive(parse2("Xi*I(Xi)"), ctx);
  GridField manual = ctx.xi_eps;
  manual *= kernels::periodic_convolution(ctx.xi_eps, ctx.kernel);
  CHECK(linf_diff(cherry, manual) == 0.0);

  // noise-derivative needs a bound field
  CHECK_THROWS_AS(model::interpret_naive(parse2("XiD"), ctx), ModelError);
  ModelContext bound = ctx;
  bound.h_eps = kernels::mollify(s.xi, 0.5);
  CHECK(linf_diff(model::interpret_naive(parse2("XiD"), bound), *bound.h_eps) == 0.0);

  // mismatched kernel dimension is rejected
  ModelContext bad = ctx;
  bad.kernel = kernels::green_spec(3);
  CHECK_THROWS_AS(model::interpret_naive(sym::xi(), bad), ModelError);
}

TEST_CASE("naive interpretation of a two-level tree matches the iterated integral") {
  const int N = 32;
  const double L = 2.0;
  noise::NoiseSample s = noise::sample_white_noise(2, N, L, 11);
  ModelContext ctx{kernels::mollify(s.xi, 0.25), std::nullopt, kernels::green_spec(2)};

  Symbol tau = parse2("Xi*I(X^[1,0]*I_[0,1](Xi)*I(Xi))");
  GridField got = model::interpret_naive(tau, ctx);

  GridField inner = model::interpret_naive(parse2("X^[1,0]"), ctx);
  inner *= kernels::periodic_convolution(ctx.xi_eps, ctx.kernel, MultiIndex{0, 1});
  inner *= kernels::periodic_convolution(ctx.xi_eps, ctx.kernel);
  GridField manual = ctx.xi_eps;
  manual *= kernels::periodic_convolution(inner, ctx.kernel);

  CHECK(linf_diff(got, manual) < 1e-10 * grid::max_abs(manual));
}

TEST_CASE("naive interpretation is multiplicative") {
  const int N = 32;
  const double L = 2.0;
  noise::NoiseSample s = noise::sample_white_noise(2, N, L, 13);
  ModelContext ctx{kernels::mollify(s.xi, 0.25), std::nullopt, kernels::green_spec(2)};
  const char* items[] = {"Xi", "I(Xi)", "X^[1,1]", "Xi*I(Xi)", "I(I(Xi))"};
  for (const char* a : items) {
    for (const char* b : items) {
      Symbol pa = parse2(a), pb = parse2(b);
      GridField lhs = model::interpret_naive(sym::product({pa, pb}), ctx);
      GridField rhs = model::interpret_naive(pa, ctx);
      rhs *= model::interpret_naive(pb, ctx);
      CHECK(linf_diff(lhs, rhs) <= 1e-9 * (1.0 + grid::max_abs(rhs)));
    }
  }
}

TEST_CASE("recentered monomials vanish at the base point and use min-image offsets") {
  const int N = 32;
  const double L = 2.0;
  noise::NoiseSample s = noise::sample_white_noise(2, N, L, 17);
  ModelContext ctx{kernels::mollify(s.xi, 0.25), std::nullopt, kernels::green_spec(2)};
  const std::vector<int> x{5, 20};

  GridField f = model::recenter(parse2("X^[2,1]"), x, ctx, kP2);
  CHECK(f.at(x) == 0.0);
  const double h = f.h();
  // site {7, 24}: offsets (2h, 4h); site {1, 2}: offsets (-4h, wrap -18 -> +14h)
  CHECK(f.at({7, 24}) == doctest::Approx(4 * h * h * 4 * h).epsilon(1e-13));
  CHECK(f.at({1, 2}) == doctest::Approx(16 * h * h * 14 * h).epsilon(1e-13));

  // axis-1 displacement 2 - 20 = -18 wraps to +14 inside (-N/2, N/2]
  GridField g = model::recenter(parse2("X^[0,1]"), x, ctx, kP2);
  CHECK(g.at({1, 2}) == doctest::Approx(14 * h).epsilon(1e-13));
}

TEST_CASE("recentered planted symbols lose their Taylor jet at the base point") {
  const int N = 32;
  const double L = 2.0;
  noise::NoiseSample s = noise::sample_white_noise(2, N, L, 19);
  ModelContext ctx{kernels::mollify(s.xi, 0.25), std::nullopt, kernels::green_spec(2)};
  const std::vector<int> x{9, 9};

  // r(I(Xi)) = 1/2: only the value is subtracted
  GridField f = model::recenter(parse2("I(Xi)"), x, ctx, kP2);
  CHECK(std::fabs(f.at(x)) < 1e-12 * grid::max_abs(f));
  GridField manual = kernels::periodic_convolution(ctx.xi_eps, ctx.kernel);
  const double v0 = manual.at(x);
  for (double& y : manual.v) y -= v0;
  CHECK(linf_diff(f, manual) == 0.0);

  // cherry: product of noise and the recentered edge
  GridField cherry = model::recenter(parse2("Xi*I(Xi)"), x, ctx, kP2);
  GridField manual2 = ctx.xi_eps;
  manual2 *= manual;
  CHECK(linf_diff(cherry, manual2) == 0.0);

  // r(I(X^[2,0])) = 4: jet orders 0..3 all vanish at x, so the recentered
  // field is flat to third order there; check the value exactly
  GridField p = model::recenter(parse2("I(X^[2,0])"), x, ctx, kP2);
  CHECK(std::fabs(p.at(x)) < 1e-10 * (1.0 + grid::max_abs(p)));
}

TEST_CASE("recentering the noise-derivative follows its degree") {
  const int N = 32;
  const double L = 2.0;
  noise::NoiseSample s = noise::sample_white_noise(2, N, L, 23);
  ModelContext ctx{kernels::mollify(s.xi, 0.25), kernels::mollify(s.xi, 0.5),
                   kernels::green_spec(2)};
  const std::vector<int> x{4, 4};

  // Classic mode: degree alpha0 < 0, no subtraction
  GridField f = model::recenter(parse2("XiD"), x, ctx, kP2);
  CHECK(linf_diff(f, *ctx.h_eps) == 0.0);

  // Holder mode: degree theta in (0,1), value at x removed
  sym::DegreeParams hp = kP2;
  hp.xidot_mode = sym::XiDotMode::HolderTheta;
  GridField g = model::recenter(parse2("XiD"), x, ctx, hp);
  CHECK(g.at(x) == 0.0);
  GridField manual = *ctx.h_eps;
  const double v0 = manual.at(x);
  for (double& y : manual.v) y -= v0;
  CHECK(linf_diff(g, manual) == 0.0);
}

TEST_CASE("root extractions enumerate negative subtrees with multiplicity") {
  Symbol xi = parse2("Xi");
  Symbol cherry = parse2("Xi*I(Xi)");
  Symbol dcherry = parse2("Xi*I(Xi)*I(Xi)");

  auto xs = model::extract_root_negative(xi, kP2);
  CHECK(xs.size() == 2);
  CHECK(has_extraction(xs, xi, sym::one(), 1));
  CHECK(has_extraction(xs, sym::one(), xi, 1));

  xs = model::extract_root_negative(cherry, kP2);
  CHECK(xs.size() == 3);
  CHECK(has_extraction(xs, cherry, sym::one(), 1));
  CHECK(has_extraction(xs, xi, parse2("I(Xi)"), 1));
  CHECK(has_extraction(xs, sym::one(), cherry, 1));

  xs = model::extract_root_negative(dcherry, kP2);
  CHECK(xs.size() == 4);
  CHECK(has_extraction(xs, dcherry, sym::one(), 1));
  CHECK(has_extraction(xs, cherry, parse2("I(Xi)"), 2));
  CHECK(has_extraction(xs, xi, parse2("I(Xi)*I(Xi)"), 1));
  CHECK(has_extraction(xs, sym::one(), dcherry, 1));

  // polynomial symbols have no negative root subtree
  xs = model::extract_root_negative(parse2("X^[1,0]"), kP2);
  CHECK(xs.size() == 1);
  CHECK(xs[0].sigma == sym::one());

  // positive-degree candidates are filtered
  xs = model::extract_root_negative(parse2("X^[3,0]*I(Xi)"), kP2);
  CHECK(xs.size() == 1);

  // subtrees containing the noise-derivative are not extracted
  xs = model::extract_root_negative(parse2("XiD*I(Xi)"), kP2);
  CHECK(xs.size() == 1);
  CHECK(xs[0].sigma == sym::one());
}

TEST_CASE("extraction strictly shrinks the tree, so preparation terminates") {
  for (const char* t : {"Xi", "Xi*I(Xi)", "Xi*I(Xi)*I(Xi)", "Xi*I(I_[0,1](Xi)*I_[0,1](Xi))",
                        "X^[1,0]*I(Xi*I(Xi))"}) {
    Symbol tau = parse2(t);
    for (const auto& x : model::extract_root_negative(tau, kP2)) {
      if (x.sigma == sym::one()) continue;
      // the remainder either shrinks or collapses to the unit, the base case
      if (x.remainder != sym::one())
        CHECK(x.remainder->node_count < tau->node_count);
      if (sym::statistics(x.sigma).n_xi > 0)
        CHECK(sym::statistics(x.remainder).n_xi < sym::statistics(tau).n_xi);
    }
  }
}

TEST_CASE("renormalized interpretation reduces to the naive one and subtracts characters") {
  const int N = 32;
  const double L = 2.0;
  noise::NoiseSample s = noise::sample_white_noise(2, N, L, 29);
  ModelContext ctx{kernels::mollify(s.xi, 0.25), std::nullopt, kernels::green_spec(2)};
  Symbol cherry = parse2("Xi*I(Xi)");

  model::Character zero;
  CHECK(linf_diff(model::renormalize_interpretation(cherry, zero, ctx, kP2),
                  model::interpret_naive(cherry, ctx)) == 0.0);

  // the renormalized noise xi - 0.3 propagates through the edge before the
  // root-level subtractions 0.3 * K(xi - 0.3) and 0.7 are taken off
  model::Character ell;
  ell.set(cherry, 0.7);
  ell.set(parse2("Xi"), 0.3);
  GridField got = model::renormalize_interpretation(cherry, ell, ctx, kP2);
  GridField xim = ctx.xi_eps;
  for (double& v : xim.v) v -= 0.3;
  GridField q = kernels::periodic_convolution(xim, ctx.kernel);
  GridField expect = ctx.xi_eps;
  expect *= q;
  for (std::size_t i = 0; i < expect.v.size(); ++i)
    expect.v[i] -= 0.7 + 0.3 * q.v[i];
  CHECK(linf_diff(got, expect) < 1e-12 * (1.0 + grid::max_abs(expect)));

  model::Character strict;
  strict.strict = true;
  CHECK_THROWS_AS(model::renormalize_interpretation(cherry, strict, ctx, kP2), ModelError);
}

TEST_CASE("BPHZ character of the cherry matches the deterministic tadpole") {
  const int N = 64;
  const double L = 2.0;
  const double eps = 0.25;
  const kernels::KernelSpec green = kernels::green_spec(2);
  Symbol cherry = parse2("Xi*I(Xi)");

  model::MCSpec mc;
  mc.n_seeds = 60;
  model::MCValue got = model::bphz_character(cherry, {}, N, L, eps, green, kP2, mc);

  // E[xi_eps (K*xi_eps)](y) = (K * rho * rho)(0) on the grid, exactly
  GridField rho = kernels::sample_kernel(kernels::mollifier(eps, 2), N, L);
  GridField cov = kernels::convolve_fields(rho, rho);
  const double oracle = kernels::periodic_convolution(cov, green).at({0, 0});
  CHECK(got.stderr_ > 0.0);
  CHECK(std::fabs(got.value - oracle) < 3.5 * got.stderr_);

  // character of the centered noise is zero within error
  model::MCValue xi_char = model::bphz_character(parse2("Xi"), {}, N, L, eps, green, kP2, mc);
  CHECK(std::fabs(xi_char.value) < 3.5 * xi_char.stderr_);

  // odd-noise trees have vanishing characters
  model::MCValue odd =
      model::bphz_character(parse2("Xi*I(Xi)*I(Xi)"), {}, N, L, eps, green, kP2, mc);
  CHECK(std::fabs(odd.value) < 3.5 * odd.stderr_);

  CHECK_THROWS_AS(model::bphz_character(parse2("X^[1,0]"), {}, N, L, eps, green, kP2, mc),
                  ModelError);
  CHECK_THROWS_AS(model::bphz_character(parse2("XiD"), {}, N, L, eps, green, kP2, mc),
                  ModelError);
}

TEST_CASE("BPHZ characters center the whole catalogue") {
  const int N = 64;
  const double L = 2.0;
  const double eps = 0.25;
  const kernels::KernelSpec green = kernels::green_spec(2);
  std::vector<Symbol> catalogue = {parse2("Xi"), parse2("Xi*I(Xi)"), parse2("Xi*I(Xi)*I(Xi)")};

  model::MCSpec mc;
  mc.n_seeds = 60;
  model::Character ell = model::bphz_characters(catalogue, N, L, eps, green, kP2, mc);
  for (const Symbol& t : catalogue) CHECK(ell.has(t));

  // fresh seeds: the renormalized interpretation has mean zero within error
  for (const Symbol& t : catalogue) {
    std::vector<double> means;
    for (int i = 0; i < 60; ++i) {
      noise::NoiseSample s = noise::sample_white_noise(2, N, L, 50000 + i);
      ModelContext ctx{kernels::mollify(s.xi, eps), std::nullopt, green};
      means.push_back(grid::mean(model::renormalize_interpretation(t, ell, ctx, kP2)));
    }
    model::MCValue m = model::mc_mean(means);
    CHECK(std::fabs(m.value) < 3.5 * m.stderr_);
  }
}

TEST_CASE("lambda grids are validated") {
  CHECK_THROWS_AS(model::check_lambda_grid({0.4, 0.2, 0.1}), ModelError);
  CHECK_THROWS_AS(model::check_lambda_grid({0.4, 0.3, 0.2, 0.1}), ModelError);
  CHECK_NOTHROW(model::check_lambda_grid({0.8, 0.4, 0.2, 0.1, 0.05, 0.025}));
  CHECK_THROWS_AS(model::fit_loglog({1.0, 2.0}, {1.0, -1.0}), ModelError);
}

TEST_CASE("monomial scaling slope is the polynomial order") {
  std::vector<double> lambdas{0.8, 0.4, 0.2, 0.1, 0.05, 0.025};
  model::ScalingReport rep = model::scaling_fit_poly(MultiIndex{2, 1}, 2, lambdas);
  CHECK(rep.fit.slope == doctest::Approx(3.0).epsilon(1e-9));
  rep = model::scaling_fit_poly(MultiIndex{0, 0}, 2, lambdas);
  CHECK(rep.fit.slope == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
}

TEST_CASE("white-noise pairing scales like minus half the dimension") {
  std::vector<double> lambdas{0.8, 0.4, 0.2, 0.1, 0.05, 0.025};
  model::MCSpec mc;
  mc.n_seeds = 40;
  model::ScalingReport rep = model::scaling_fit_noise(2, 256, 2.0, lambdas, mc);
  CHECK(rep.fit.slope >= -1.15);
  CHECK(rep.fit.slope <= -0.85);
}

TEST_CASE("renormalized cherry scaling respects its degree") {
  std::vector<double> lambdas{0.8, 0.4, 0.2, 0.1, 0.05, 0.025};
  model::MCSpec mc;
  mc.n_seeds = 30;
  const double beta = 1.5;
  model::ScalingReport rep = model::scaling_fit_renormalized_cherry(beta, 128, 2.0, lambdas, mc);
  // degree 2*alpha0 + (d - beta) with alpha0 = -d/2: here -1.5
  sym::DegreeParams bp;
  bp.d = 2;
  bp.alpha0 = Rational(-1);
  bp.kernel_gain = Rational(1, 2);  // d - beta = 2 - 3/2
  const double target = to_double(sym::degree_value(parse2("Xi*I(Xi)"), bp));
  CHECK(target == doctest::Approx(-1.5));
  CHECK(rep.fit.slope >= target - 0.2);
  CHECK(rep.fit.slope <= -1.0);
  CHECK_THROWS_AS(model::scaling_fit_renormalized_cherry(0.5, 64, 2.0, lambdas, mc),
                  ModelError);
}

TEST_CASE("polarization matches the formal Malliavin derivative") {
  const int N = 64;
  const double L = 2.0;
  const double eps = 0.1;
  const kernels::KernelSpec green = kernels::green_spec(2);
  noise::NoiseSample s = noise::sample_white_noise(2, N, L, 31);
  GridField h = noise::sample_white_noise(2, N, L, 37).xi;

  CHECK(model::malliavin_identity_check(parse2("Xi"), s.xi, h, eps, green) < 1e-10);
  CHECK(model::malliavin_identity_check(parse2("Xi*I(Xi)"), s.xi, h, eps, green) < 1e-10);
  CHECK(model::malliavin_identity_check(parse2("Xi*I(Xi)*I(Xi)"), s.xi, h, eps, green) < 1e-8);

  for (const char* t : {"I(Xi)", "X^[1,0]*I(Xi)", "Xi*I(I_[0,1](Xi)*I_[0,1](Xi))",
                        "I(Xi*I(Xi))", "X^[2,0]"}) {
    for (std::uint64_t hs = 0; hs < 2; ++hs) {
      GridField dir = noise::sample_white_noise(2, N, L, 400 + hs).xi;
      CHECK(model::malliavin_identity_check(parse2(t), s.xi, dir, eps, green) < 1e-8);
    }
  }

  CHECK_THROWS_AS(model::malliavin_identity_check(parse2("XiD"), s.xi, h, eps, green),
                  ModelError);
  CHECK_THROWS_AS(
      model::malliavin_identity_check(parse2("Xi*I(Xi)*I(Xi)*I(Xi)"), s.xi, h, eps, green),
      ModelError);
}

TEST_CASE("chaos catalogue classification") {
  auto c = chaos::classify_chaos_symbol(parse2("Xi"));
  REQUIRE(c.has_value());
  CHECK(c->tree == chaos::ChaosTree::Noise);

  c = chaos::classify_chaos_symbol(parse2("Xi*I(Xi)"));
  REQUIRE(c.has_value());
  CHECK(c->tree == chaos::ChaosTree::Cherry);

  c = chaos::classify_chaos_symbol(parse2("Xi*I(I_[0,1](Xi)*I_[0,1](Xi))"));
  REQUIRE(c.has_value());
  CHECK(c->tree == chaos::ChaosTree::Triple);
  CHECK(c->inner_derivative == MultiIndex{0, 1});

  CHECK(!chaos::classify_chaos_symbol(parse2("X^[1,0]*I(Xi)")).has_value());
  CHECK(!chaos::classify_chaos_symbol(parse2("Xi*I(Xi)*I(Xi)")).has_value());
  CHECK(!chaos::classify_chaos_symbol(parse2("Xi*I_[1,0](Xi)")).has_value());
  CHECK_THROWS_AS(chaos::chaos_pairing(parse2("Xi*I(Xi)*I(Xi)"), 0.2, 0.1, 0.3, 2, 32, 2.0),
                  ModelError);
}

TEST_CASE("chaos kernel bookkeeping matches the displayed terms") {
  auto terms = chaos::chaos_kernel_terms(parse2("Xi*I(I_[0,1](Xi)*I_[0,1](Xi))"));
  int order1 = 0, order2 = 0, order3 = 0;
  bool factor2_seen = false, factor1_seen = false;
  for (const auto& t : terms) {
    if (t.order == 1) {
      ++order1;
      if (t.factor == 2) factor2_seen = true;
      if (t.factor == 1) factor1_seen = true;
    }
    if (t.order == 2) ++order2;
    if (t.order == 3) ++order3;
  }
  CHECK(order2 == 0);  // the order-2 kernel vanishes
  CHECK(order1 == 2);  // exactly two terms, factors 2 and 1
  CHECK(factor2_seen);
  CHECK(factor1_seen);
  CHECK(order3 == 1);
}

TEST_CASE("noise chaos pairing equals its Monte Carlo value") {
  const double e1 = 0.3, e2 = 0.15, lam = 0.3;
  const int N = 64;
  const double L = 2.0;
  chaos::ChaosPairing quad = chaos::chaos_pairing(parse2("Xi"), e1, e2, lam, 2, N, L);
  CHECK(quad.per_order.size() == 1);
  CHECK(quad.per_order.count(1) == 1);
  CHECK(quad.total > 0.0);

  model::MCSpec mc;
  mc.n_seeds = 400;
  model::MCValue sim = chaos::chaos_mc(parse2("Xi"), e1, e2, lam, 2, N, L, mc);
  CHECK(std::fabs(sim.value - quad.total) < 3.5 * sim.stderr_);
}

TEST_CASE("cherry chaos pairing equals its Monte Carlo value") {
  const double e1 = 0.3, e2 = 0.15, lam = 0.3;
  const int N = 64;
  const double L = 2.0;
  Symbol cherry = parse2("Xi*I(Xi)");
  chaos::ChaosPairing quad = chaos::chaos_pairing(cherry, e1, e2, lam, 2, N, L);
  CHECK(quad.per_order.count(0) == 1);
  CHECK(quad.per_order.count(2) == 1);
  CHECK(quad.per_order.at(0) >= 0.0);
  CHECK(quad.per_order.at(2) >= -1e-12);

  model::MCSpec mc;
  mc.n_seeds = 400;
  model::MCValue sim = chaos::chaos_mc(cherry, e1, e2, lam, 2, N, L, mc);
  CHECK(std::fabs(sim.value - quad.total) < 3.5 * sim.stderr_);
}

TEST_CASE("three-noise chaos pairing equals its Monte Carlo value") {
  const double e1 = 0.3, e2 = 0.15, lam = 0.3;
  const int N = 64;
  const double L = 2.0;
  Symbol triple = parse2("Xi*I(I_[0,1](Xi)*I_[0,1](Xi))");
  chaos::ChaosPairing quad = chaos::chaos_pairing(triple, e1, e2, lam, 2, N, L);
  CHECK(quad.per_order.count(1) == 1);
  CHECK(quad.per_order.count(3) == 1);
  CHECK(quad.per_order.count(2) == 0);
  CHECK(quad.per_order.at(1) >= -1e-12);
  CHECK(quad.per_order.at(3) >= -1e-12);

  model::MCSpec mc;
  mc.n_seeds = 500;
  model::MCValue sim = chaos::chaos_mc(triple, e1, e2, lam, 2, N, L, mc);
  CHECK(std::fabs(sim.value - quad.total) < 3.5 * sim.stderr_);
}

TEST_CASE("different chaos orders are empirically orthogonal") {
  const int N = 64, n_seeds = 400;
  const double L = 2.0, eps = 0.25;
  const kernels::KernelSpec green = kernels::green_spec(2);
  GridField phi = model::sample_test_function(2, N, L, {1.0, 1.0}, 0.3);
  std::vector<double> a(n_seeds), b(n_seeds);
  for (int i = 0; i < n_seeds; ++i) {
    noise::NoiseSample s = noise::sample_white_noise(2, N, L, 7000 + i);
    GridField xe = kernels::mollify(s.xi, eps);
    GridField cherry = xe;
    cherry *= kernels::periodic_convolution(xe, green);
    a[i] = noise::pair_fields(xe, phi);
    b[i] = noise::pair_fields(cherry, phi);
  }
  const double ma = model::mc_mean(a).value, mb = model::mc_mean(b).value;
  std::vector<double> prod(n_seeds);
  for (int i = 0; i < n_seeds; ++i) prod[i] = (a[i] - ma) * (b[i] - mb);
  model::MCValue cov = model::mc_mean(prod);
  CHECK(std::fabs(cov.value) < 3.5 * cov.stderr_);
}

TEST_CASE("poincare inequality for cylinder functionals") {
  const int N = 32;
  const double L = 2.0;
  GridField phi = model::sample_test_function(2, N, L, {1.0, 1.0}, 0.4);
  const double n2 = noise::pair_fields(phi, phi);

  demos::CylinderFunctional lin;
  lin.probes = {phi};
  lin.f = [](const std::vector<double>& a) { return a[0]; };
  lin.grad = [](const std::vector<double>&) { return std::vector<double>{1.0}; };
  demos::PoincareReport r = demos::poincare_check(lin, 4000, 101);
  CHECK(r.energy == doctest::Approx(n2).epsilon(1e-12));
  CHECK(r.energy_se == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(std::fabs(r.variance - n2) < 4.0 * r.variance_se);
  CHECK(r.variance <= r.energy + 3.0 * (r.variance_se + r.energy_se));

  demos::CylinderFunctional sq;
  sq.probes = {phi};
  sq.f = [](const std::vector<double>& a) { return a[0] * a[0]; };
  sq.grad = [](const std::vector<double>& a) { return std::vector<double>{2.0 * a[0]}; };
  r = demos::poincare_check(sq, 10000, 103);
  CHECK(std::fabs(r.variance - 2.0 * n2 * n2) < 0.05 * 2.0 * n2 * n2);
  CHECK(std::fabs(r.energy - 4.0 * n2 * n2) < 0.05 * 4.0 * n2 * n2);
  CHECK(r.variance <= r.energy + 3.0 * (r.variance_se + r.energy_se));

  demos::CylinderFunctional cosf;
  cosf.probes = {phi};
  cosf.f = [](const std::vector<double>& a) { return std::cos(a[0]); };
  cosf.grad = [](const std::vector<double>& a) { return std::vector<double>{-std::sin(a[0])}; };
  r = demos::poincare_check(cosf, 4000, 107);
  CHECK(r.variance <= r.energy + 3.0 * (r.variance_se + r.energy_se));

  demos::CylinderFunctional bad;
  CHECK_THROWS_AS(demos::poincare_check(bad, 100, 1), ModelError);
}

TEST_CASE("tadpole divergence and its renormalized pairing") {
  std::vector<double> eps{0.4, 0.2828, 0.2, 0.1414, 0.1, 0.0707, 0.05};
  demos::DivergenceReport rep = demos::divergence_demo(1.0, eps, 256, 2.0);
  CHECK(rep.tadpole_slope.slope >= 0.9);
  CHECK(rep.tadpole_slope.slope <= 1.1);
  REQUIRE(rep.cauchy_gaps.size() >= 3);
  for (std::size_t i = 0; i + 1 < rep.cauchy_gaps.size(); ++i)
    CHECK(rep.cauchy_gaps[i + 1] < 0.8 * rep.cauchy_gaps[i]);

  demos::DivergenceReport flat = demos::divergence_demo(0.05, eps, 256, 2.0);
  CHECK(std::fabs(flat.tadpole_slope.slope) < 0.15);

  CHECK_THROWS_AS(demos::divergence_demo(2.5, eps, 64, 2.0), ModelError);
  CHECK_THROWS_AS(demos::divergence_demo(1.0, {0.2, 0.1}, 64, 2.0), ModelError);
}

TEST_CASE("derivative decomposition germs scale as displayed") {
  const int N = 64;
  const double L = 2.0;
  GridField h = model::sample_test_function(3, N, L, {1.0, 1.0, 1.0}, 0.5);
  const double norm = std::sqrt(noise::pair_fields(h, h));
  for (double& x : h.v) x /= norm;

  // sub-grid mollifier width: the lattice alone regularizes, so the rough
  // germ keeps its exponent down to the smallest offset
  demos::DerivativeDecompositionReport rep =
      demos::derivative_decomposition_demo(h, 0.5 * h.h(), 211);
  CHECK(rep.a_germ.fit.slope >= 0.3);
  CHECK(rep.a_germ.fit.slope <= 0.5);
  CHECK(rep.b_naive.fit.slope >= 0.8);
  CHECK(rep.b_naive.fit.slope <= 1.2);
  CHECK(rep.b_plus.fit.slope >= 1.7);
  CHECK(rep.b_plus.fit.slope <= 2.3);
  CHECK(rep.c_term.fit.slope >= -0.7);
  CHECK(rep.c_term.fit.slope <= -0.3);

  GridField bad = h;
  for (double& x : bad.v) x *= 2.0;
  CHECK_THROWS_AS(demos::derivative_decomposition_demo(bad, h.h(), 211), ModelError);
}

namespace {

// derivative jets of sin(a y1 + b y2): each d/dy_i advances the phase
double sin_jet(const MultiIndex& k, const std::vector<double>& y, double a, double b) {
  const double u = a * y[0] + b * y[1] + k.order() * (std::numbers::pi / 2.0);
  double c = 1.0;
  for (int p = 0; p < k[0]; ++p) c *= a;
  for (int p = 0; p < k[1]; ++p) c *= b;
  return c * std::sin(u);
}

}  // namespace

TEST_CASE("pointed norm archetype: polynomials are exact, sine improves locally") {
  const int d = 2, N = 64;
  const double L = 2.0;
  const std::vector<int> x{N / 2, N / 2};
  // smallest ball still spans several grid steps so its pair sup is resolved
  std::vector<double> lambdas{0.8, 0.4, 0.2, 0.1};

  // cubic polynomial, nu = 4: the bundle vanishes up to rounding
  demos::DerivCallable poly = [](const MultiIndex& k, const std::vector<double>& y) {
    // f = y1^2 y2 and its nonzero derivatives, all others zero
    const double y1 = y[0], y2 = y[1];
    switch (k[0] * 10 + k[1]) {
      case 0: return y1 * y1 * y2;
      case 10: return 2.0 * y1 * y2;
      case 20: return 2.0 * y2;
      case 1: return y1 * y1;
      case 11: return 2.0 * y1;
      case 21: return 2.0;
      default: return 0.0;
    }
  };
  demos::PointedNormReport rep =
      demos::pointed_norm_archetype(poly, x, 2, 4, 2.0, d, N, L, lambdas);
  CHECK(rep.rest_norm < 1e-9);
  for (double s : rep.local_sups) CHECK(s < 1e-9);
  CHECK(rep.sup_norm < 1e-9);
  CHECK(rep.p_norm < 1e-9);

  // smooth non-polynomial input: local improvement exponent nu - gamma = 2
  demos::DerivCallable sine = [](const MultiIndex& k, const std::vector<double>& y) {
    return sin_jet(k, y, 1.0, 0.7);
  };
  rep = demos::pointed_norm_archetype(sine, x, 2, 4, 2.0, d, N, L, lambdas);
  CHECK(rep.rest_norm > 0.0);
  CHECK(rep.improvement.slope >= 1.7);
  CHECK(rep.improvement.slope <= 2.3);
  CHECK(rep.p_norm <= std::sqrt(rep.ball_volume) * rep.sup_norm * (1.0 + 1e-12));

  CHECK_THROWS_AS(demos::pointed_norm_archetype(sine, x, 4, 4, 2.0, d, N, L, lambdas),
                  ModelError);
}
