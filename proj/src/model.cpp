#include "renorm/model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <utility>

#include "renorm/parallel.hpp"

namespace renorm::model {

namespace {

using grid::GridField;
using sym::Kind;
using sym::Symbol;

void check_context(const ModelContext& ctx) {
  if (ctx.xi_eps.d != ctx.kernel.d)
    throw ModelError("kernel dimension differs from the field dimension");
  if (ctx.h_eps) grid::require_same_shape(ctx.xi_eps, *ctx.h_eps);
}

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

// representative of delta mod N in (-N/2, N/2]
int min_image_steps(int delta, int N) {
  int m = ((delta % N) + N) % N;
  if (m > N / 2) m -= N;
  return m;
}

GridField monomial_field(int d, int N, double L, const MultiIndex& k) {
  GridField f(d, N, L);
  const double h = f.h();
  for_sites(d, N, [&](const std::vector<int>& idx) {
    double v = 1.0;
    for (int i = 0; i < d; ++i)
      for (int p = 0; p < k[i]; ++p) v *= idx[i] * h;
    f.at(idx) = v;
  });
  return f;
}

GridField centered_monomial_field(int d, int N, double L, const std::vector<int>& x,
                                  const MultiIndex& k) {
  GridField f(d, N, L);
  const double h = f.h();
  for_sites(d, N, [&](const std::vector<int>& idx) {
    double v = 1.0;
    for (int i = 0; i < d; ++i) {
      const double dx = min_image_steps(idx[i] - x[i], N) * h;
      for (int p = 0; p < k[i]; ++p) v *= dx;
    }
    f.at(idx) = v;
  });
  return f;
}

// multiplies the leaf or edge interpretation of every root factor; the child
// interpretation is supplied by the caller so naive and renormalized
// recursions share the identical root structure
GridField product_over_root(const Symbol& s, const ModelContext& ctx,
                            const std::function<GridField(const Symbol&)>& child_interp) {
  const GridField& xi = ctx.xi_eps;
  GridField out = grid::constant_field(xi.d, xi.N, xi.L, 1.0);
  for (const Symbol& f : sym::root_factors(s)) {
    switch (f->kind) {
      case Kind::Xi:
        out *= ctx.xi_eps;
        break;
      case Kind::XiDot:
        if (!ctx.h_eps)
          throw ModelError("the noise-derivative symbol has no bound field in this context");
        out *= *ctx.h_eps;
        break;
      case Kind::Poly:
        out *= monomial_field(xi.d, xi.N, xi.L, f->mi);
        break;
      case Kind::Planted:
        out *= kernels::periodic_convolution(child_interp(f->child), ctx.kernel, f->mi);
        break;
      default:
        throw ModelError("root factor of unexpected kind");
    }
  }
  return out;
}

GridField naive_rec(const Symbol& s, const ModelContext& ctx,
                    std::map<const sym::Node*, GridField>& memo) {
  auto it = memo.find(&*s);
  if (it != memo.end()) return it->second;
  GridField f = product_over_root(
      s, ctx, [&](const Symbol& c) { return naive_rec(c, ctx, memo); });
  memo.emplace(&*s, f);
  return f;
}

int taylor_cutoff(const Rational& r) {
  int m = 0;
  while (Rational(m) < r) {
    ++m;
    if (m > 16) throw ModelError("Taylor order out of range");
  }
  return m;  // jet orders are 0 .. m-1
}

GridField recenter_rec(const Symbol& s, const std::vector<int>& x, const ModelContext& ctx,
                       const sym::DegreeParams& params,
                       std::map<const sym::Node*, GridField>& memo) {
  auto it = memo.find(&*s);
  if (it != memo.end()) return it->second;
  const GridField& xi = ctx.xi_eps;
  GridField out = grid::constant_field(xi.d, xi.N, xi.L, 1.0);
  for (const Symbol& f : sym::root_factors(s)) {
    switch (f->kind) {
      case Kind::Xi:
        out *= ctx.xi_eps;
        break;
      case Kind::XiDot: {
        if (!ctx.h_eps)
          throw ModelError("the noise-derivative symbol has no bound field in this context");
        GridField g = *ctx.h_eps;
        if (sym::degree_value(sym::xidot(), params) > 0) {
          const double v = g.at(x);
          for (double& y : g.v) y -= v;
        }
        out *= g;
        break;
      }
      case Kind::Poly:
        out *= centered_monomial_field(xi.d, xi.N, xi.L, x, f->mi);
        break;
      case Kind::Planted: {
        GridField child = recenter_rec(f->child, x, ctx, params, memo);
        GridField g = kernels::periodic_convolution(child, ctx.kernel, f->mi);
        const int cut = taylor_cutoff(sym::degree_value(f, params));
        for (int m = 0; m < cut; ++m) {
          for (const MultiIndex& ell : multiindices_of_order(xi.d, m)) {
            GridField deriv = kernels::periodic_convolution(child, ctx.kernel, f->mi + ell);
            const double c = deriv.at(x) / multi_factorial(ell);
            g -= c * centered_monomial_field(xi.d, xi.N, xi.L, x, ell);
          }
        }
        out *= g;
        break;
      }
      default:
        throw ModelError("root factor of unexpected kind");
    }
  }
  memo.emplace(&*s, out);
  return out;
}

Symbol make_product(std::vector<Symbol> factors) {
  if (factors.empty()) return sym::one();
  if (factors.size() == 1) return factors.front();
  return sym::product(std::move(factors));
}

// partial split of the tree rooted at the current node: sig holds the kept
// primitive factors, rem the branches cut somewhere below
struct Split {
  std::vector<Symbol> sig;
  std::vector<Symbol> rem;
  long long mult = 1;
};

std::vector<Split> merge_splits(std::vector<Split> in) {
  std::map<std::pair<std::string, std::string>, Split> seen;
  for (Split& s : in) {
    std::sort(s.sig.begin(), s.sig.end(), sym::SymbolTextLess{});
    std::sort(s.rem.begin(), s.rem.end(), sym::SymbolTextLess{});
    std::string ks, kr;
    for (const Symbol& f : s.sig) ks += f->text + "|";
    for (const Symbol& f : s.rem) kr += f->text + "|";
    auto key = std::make_pair(std::move(ks), std::move(kr));
    auto it = seen.find(key);
    if (it == seen.end())
      seen.emplace(std::move(key), std::move(s));
    else
      it->second.mult += s.mult;
  }
  std::vector<Split> out;
  out.reserve(seen.size());
  for (auto& [k, v] : seen) out.push_back(std::move(v));
  return out;
}

std::vector<Split> splits_of(const Symbol& s) {
  std::vector<Split> acc{Split{}};
  for (const Symbol& f : sym::root_factors(s)) {
    std::vector<Split> opts;
    if (f->kind == Kind::Planted) {
      opts.push_back(Split{{}, {f}, 1});
      for (Split in : splits_of(f->child)) {
        Symbol kept = sym::planted(f->mi, make_product(std::move(in.sig)));
        opts.push_back(Split{{kept}, std::move(in.rem), in.mult});
      }
    } else {
      opts.push_back(Split{{f}, {}, 1});
    }
    std::vector<Split> next;
    next.reserve(acc.size() * opts.size());
    for (const Split& a : acc) {
      for (const Split& o : opts) {
        Split c = a;
        c.sig.insert(c.sig.end(), o.sig.begin(), o.sig.end());
        c.rem.insert(c.rem.end(), o.rem.begin(), o.rem.end());
        c.mult *= o.mult;
        next.push_back(std::move(c));
      }
    }
    acc = merge_splits(std::move(next));
  }
  return acc;
}

GridField renorm_rec(const Symbol& s, const Character& ell, const ModelContext& ctx,
                     const sym::DegreeParams& params,
                     std::map<const sym::Node*, GridField>& memo) {
  auto it = memo.find(&*s);
  if (it != memo.end()) return it->second;
  GridField f = product_over_root(
      s, ctx, [&](const Symbol& c) { return renorm_rec(c, ell, ctx, params, memo); });
  for (const RootExtraction& ex : extract_root_negative(s, params)) {
    if (ex.sigma == sym::one()) continue;
    const double c = ell.get(ex.sigma);
    if (c == 0.0) continue;
    f -= (static_cast<double>(ex.multiplicity) * c) *
         renorm_rec(ex.remainder, ell, ctx, params, memo);
  }
  memo.emplace(&*s, f);
  return f;
}

double mean_of(const std::vector<double>& v) {
  double s = 0, c = 0;
  for (double x : v) {
    double y = x - c;
    double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  return s / static_cast<double>(v.size());
}

}  // namespace

MCValue mc_mean(const std::vector<double>& samples) {
  if (samples.empty()) throw ModelError("mean of an empty sample");
  MCValue r;
  r.value = mean_of(samples);
  if (samples.size() < 2) return r;
  double s2 = 0;
  for (double x : samples) s2 += (x - r.value) * (x - r.value);
  const auto n = static_cast<double>(samples.size());
  r.stderr_ = std::sqrt(s2 / (n * (n - 1.0)));
  return r;
}

GridField interpret_naive(const Symbol& tau, const ModelContext& ctx) {
  check_context(ctx);
  std::map<const sym::Node*, GridField> memo;
  return naive_rec(tau, ctx, memo);
}

GridField recenter(const Symbol& tau, const std::vector<int>& x_site, const ModelContext& ctx,
                   const sym::DegreeParams& params) {
  check_context(ctx);
  if (static_cast<int>(x_site.size()) != ctx.xi_eps.d)
    throw ModelError("base point dimension differs from the grid dimension");
  for (int c : x_site)
    if (c < 0 || c >= ctx.xi_eps.N) throw ModelError("base point outside the grid");
  std::map<const sym::Node*, GridField> memo;
  return recenter_rec(tau, x_site, ctx, params, memo);
}

ModelData make_model_data(const Symbol& tau, const std::vector<int>& x_site,
                          const ModelContext& ctx, const sym::DegreeParams& params) {
  return ModelData{tau, x_site, recenter(tau, x_site, ctx, params)};
}

std::vector<RootExtraction> extract_root_negative(const Symbol& tau,
                                                  const sym::DegreeParams& params) {
  std::vector<RootExtraction> out;
  for (Split& s : splits_of(tau)) {
    Symbol sigma = make_product(std::move(s.sig));
    if (sigma == sym::one()) continue;
    if (sym::statistics(sigma).n_xidot != 0) continue;
    if (!(sym::degree_value(sigma, params) < 0)) continue;
    out.push_back(RootExtraction{sigma, make_product(std::move(s.rem)), s.mult});
  }
  out.push_back(RootExtraction{sym::one(), tau, 1});
  std::sort(out.begin(), out.end(), [](const RootExtraction& a, const RootExtraction& b) {
    if (a.sigma->text != b.sigma->text) return a.sigma->text < b.sigma->text;
    return a.remainder->text < b.remainder->text;
  });
  return out;
}

double Character::get(const Symbol& s) const {
  auto it = values.find(s->text);
  if (it != values.end()) return it->second;
  if (strict) throw ModelError("character value missing for " + s->text);
  return 0.0;
}

void Character::set(const Symbol& s, double v) { values[s->text] = v; }

bool Character::has(const Symbol& s) const { return values.count(s->text) != 0; }

GridField renormalize_interpretation(const Symbol& tau, const Character& ell,
                                     const ModelContext& ctx, const sym::DegreeParams& params) {
  check_context(ctx);
  std::map<const sym::Node*, GridField> memo;
  return renorm_rec(tau, ell, ctx, params, memo);
}

MCValue bphz_character(const Symbol& tau, const Character& known, int N, double L, double eps,
                       const kernels::KernelSpec& kernel, const sym::DegreeParams& params,
                       const MCSpec& mc) {
  if (!(sym::degree_value(tau, params) < 0))
    throw ModelError("character requires negative degree");
  if (sym::statistics(tau).n_xidot != 0)
    throw ModelError("character requires a symbol free of the noise-derivative");
  if (mc.n_seeds < 1) throw ModelError("character estimate needs at least one seed");
  Character ell = known;
  ell.values.erase(tau->text);
  std::vector<double> means(mc.n_seeds, 0.0);
  par::for_each_index(mc.n_seeds, [&](int i) {
    noise::NoiseSample xi = noise::sample_white_noise(kernel.d, N, L, mc.seed0 + i);
    ModelContext ctx{kernels::mollify(xi.xi, eps), std::nullopt, kernel};
    means[i] = grid::mean(renormalize_interpretation(tau, ell, ctx, params));
  });
  return mc_mean(means);
}

Character bphz_characters(const std::vector<Symbol>& catalogue, int N, double L, double eps,
                          const kernels::KernelSpec& kernel, const sym::DegreeParams& params,
                          const MCSpec& mc) {
  std::vector<Symbol> order = catalogue;
  std::sort(order.begin(), order.end(), [&](const Symbol& a, const Symbol& b) {
    return sym::preorder_cmp(a, b, params) == std::strong_ordering::less;
  });
  Character out;
  for (const Symbol& s : order) {
    if (out.has(s)) continue;
    if (sym::statistics(s).n_xidot != 0) continue;
    if (!(sym::degree_value(s, params) < 0)) continue;
    out.set(s, bphz_character(s, out, N, L, eps, kernel, params, mc).value);
  }
  return out;
}

double test_profile(const std::vector<double>& u) {
  double r2 = 0;
  for (double x : u) r2 += x * x;
  if (r2 >= 1.0) return 0.0;
  double v = std::exp(-1.0 / (1.0 - r2));
  for (double x : u) v *= 1.0 + x;
  return v;
}

GridField sample_test_function(int d, int N, double L, const std::vector<double>& center,
                               double lambda) {
  if (static_cast<int>(center.size()) != d)
    throw ModelError("center dimension differs from the grid dimension");
  GridField f(d, N, L);
  if (!(lambda > 0) || lambda > L / 2)
    throw ModelError("test function scale must lie in (0, L/2]");
  const double h = f.h();
  double norm = 1.0;
  for (int i = 0; i < d; ++i) norm /= lambda;
  std::vector<double> u(d);
  for_sites(d, N, [&](const std::vector<int>& idx) {
    for (int i = 0; i < d; ++i) {
      double delta = idx[i] * h - center[i];
      delta -= L * std::round(delta / L);
      u[i] = delta / lambda;
    }
    f.at(idx) = norm * test_profile(u);
  });
  return f;
}

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ModelError("log fit needs at least two points");
  const int n = static_cast<int>(x.size());
  std::vector<double> lx(n), ly(n);
  for (int i = 0; i < n; ++i) {
    if (!(x[i] > 0) || !(y[i] > 0)) throw ModelError("log fit needs positive data");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  const double mx = mean_of(lx), my = mean_of(ly);
  double sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0) throw ModelError("log fit needs distinct abscissae");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (n > 2) {
    double ss = 0;
    for (int i = 0; i < n; ++i) {
      const double r = ly[i] - fit.intercept - fit.slope * lx[i];
      ss += r * r;
    }
    fit.stderr_ = std::sqrt(ss / (n - 2) / sxx);
  }
  return fit;
}

void check_lambda_grid(const std::vector<double>& lambdas) {
  if (lambdas.size() < 4) throw ModelError("scale grid needs at least four points");
  double lo = lambdas.front(), hi = lambdas.front();
  for (double l : lambdas) {
    if (!(l > 0)) throw ModelError("scales must be positive");
    lo = std::min(lo, l);
    hi = std::max(hi, l);
  }
  if (std::log10(hi / lo) < 1.5 - 1e-9)
    throw ModelError("scale grid must span 1.5 decades");
}

ScalingReport scaling_fit_poly(const MultiIndex& k, int d, const std::vector<double>& lambdas) {
  check_lambda_grid(lambdas);
  // lambda-independent quadrature of int u^k phi(u) du over [-1,1]^d
  const int M = 64;
  const double du = 2.0 / M;
  double cell = 1.0;
  for (int i = 0; i < d; ++i) cell *= du;
  double moment = 0;
  std::vector<int> idx(d, 0);
  std::vector<double> u(d);
  while (true) {
    double w = 1.0;
    for (int i = 0; i < d; ++i) {
      u[i] = -1.0 + (idx[i] + 0.5) * du;
      for (int p = 0; p < k[i]; ++p) w *= u[i];
    }
    moment += w * test_profile(u) * cell;
    int ax = d - 1;
    while (ax >= 0 && ++idx[ax] == M) idx[ax--] = 0;
    if (ax < 0) break;
  }
  ScalingReport rep;
  rep.lambdas = lambdas;
  for (double l : lambdas) rep.values.push_back(std::pow(l, k.order()) * std::fabs(moment));
  rep.fit = fit_loglog(rep.lambdas, rep.values);
  return rep;
}

ScalingReport scaling_fit_noise(int d, int N, double L, const std::vector<double>& lambdas,
                                const MCSpec& mc) {
  check_lambda_grid(lambdas);
  const int nl = static_cast<int>(lambdas.size());
  std::vector<GridField> phi;
  phi.reserve(nl);
  for (double l : lambdas)
    phi.push_back(sample_test_function(d, N, L, std::vector<double>(d, L / 2), l));
  std::vector<std::vector<double>> sq(mc.n_seeds, std::vector<double>(nl, 0.0));
  par::for_each_index(mc.n_seeds, [&](int i) {
    noise::NoiseSample xi = noise::sample_white_noise(d, N, L, mc.seed0 + i);
    for (int j = 0; j < nl; ++j) {
      const double v = noise::pair_fields(xi.xi, phi[j]);
      sq[i][j] = v * v;
    }
  });
  ScalingReport rep;
  rep.lambdas = lambdas;
  for (int j = 0; j < nl; ++j) {
    double s = 0;
    for (int i = 0; i < mc.n_seeds; ++i) s += sq[i][j];
    rep.values.push_back(std::sqrt(s / mc.n_seeds));
  }
  rep.fit = fit_loglog(rep.lambdas, rep.values);
  return rep;
}

ScalingReport scaling_fit_renormalized_cherry(double beta, int N, double L,
                                              const std::vector<double>& lambdas,
                                              const MCSpec& mc) {
  const int d = 2;
  if (!(beta > d / 2.0 && beta < d))
    throw ModelError("power kernel exponent must lie in (d/2, d)");
  check_lambda_grid(lambdas);
  const kernels::KernelSpec pk = kernels::power_spec(beta, d);
  const GridField ker = kernels::sample_kernel(pk, N, L);
  const std::vector<int> origin(d, 0);
  const double tadpole = ker.at(origin);
  const int nl = static_cast<int>(lambdas.size());
  std::vector<GridField> phi;
  phi.reserve(nl);
  for (double l : lambdas)
    phi.push_back(sample_test_function(d, N, L, std::vector<double>(d, 0.0), l));
  std::vector<std::vector<double>> sq(mc.n_seeds, std::vector<double>(nl, 0.0));
  par::for_each_index(mc.n_seeds, [&](int i) {
    noise::NoiseSample xi = noise::sample_white_noise(d, N, L, mc.seed0 + i);
    GridField a = kernels::periodic_convolution(xi.xi, pk);
    const double a0 = a.at(origin);
    GridField f = xi.xi;
    for (std::size_t m = 0; m < f.v.size(); ++m) f.v[m] *= a.v[m] - a0;
    for (double& x : f.v) x -= tadpole;
    for (int j = 0; j < nl; ++j) {
      const double v = noise::pair_fields(f, phi[j]);
      sq[i][j] = v * v;
    }
  });
  ScalingReport rep;
  rep.lambdas = lambdas;
  for (int j = 0; j < nl; ++j) {
    double s = 0;
    for (int i = 0; i < mc.n_seeds; ++i) s += sq[i][j];
    rep.values.push_back(std::sqrt(s / mc.n_seeds));
  }
  rep.fit = fit_loglog(rep.lambdas, rep.values);
  return rep;
}

double malliavin_identity_check(const Symbol& tau, const GridField& xi, const GridField& h,
                                double eps, const kernels::KernelSpec& kernel) {
  grid::require_same_shape(xi, h);
  if (xi.d != kernel.d) throw ModelError("kernel dimension differs from the field dimension");
  const sym::Stats st = sym::statistics(tau);
  if (st.n_xidot != 0)
    throw ModelError("the symbol already contains the noise-derivative");
  if (st.n_xi > 3) throw ModelError("polarization stencil covers at most three noises");
  const sym::SymLin dtau = sym::malliavin_D(tau);

  auto shifted = [&](double s) {
    GridField g = xi;
    for (std::size_t i = 0; i < g.v.size(); ++i) g.v[i] += s * h.v[i];
    ModelContext ctx{kernels::mollify(g, eps), std::nullopt, kernel};
    return interpret_naive(tau, ctx);
  };

  GridField lhs(xi.d, xi.N, xi.L);
  if (st.n_xi <= 2) {
    lhs = 0.5 * (shifted(1.0) - shifted(-1.0));
  } else {
    lhs = (1.0 / 12.0) *
          (8.0 * (shifted(1.0) - shifted(-1.0)) - (shifted(2.0) - shifted(-2.0)));
  }

  ModelContext ctx0{kernels::mollify(xi, eps), kernels::mollify(h, eps), kernel};
  GridField rhs(xi.d, xi.N, xi.L);
  for (const auto& [term, coeff] : dtau.terms)
    rhs += static_cast<double>(coeff) * interpret_naive(term, ctx0);

  return grid::max_abs(lhs - rhs);
}

}  // namespace renorm::model
