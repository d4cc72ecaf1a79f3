#include "renorm/integrand.hpp"

#include <algorithm>
#include <bit>
#include <map>

namespace renorm::integrand {

std::vector<int> taylor_vars(const graphs::SubGraph& g) {
  std::vector<int> out;
  for (int v : g.vertices()) {
    if (g.G->is_external(v)) continue;
    for (size_t e = 0; e < g.G->edges.size(); ++e) {
      if ((g.edges >> e) & 1) continue;
      if (g.G->edges[e].u == v || g.G->edges[e].v == v) {
        out.push_back(v);
        break;
      }
    }
  }
  return out;
}

std::optional<int> taylor_base(const graphs::SubGraph& g) {
  auto Y = taylor_vars(g);
  if (Y.empty()) return std::nullopt;
  return Y.front();
}

namespace {

using WeightedFactors = std::vector<std::pair<Rational, std::vector<Factor>>>;

// single Leibniz step: d/dx_{y,axis} applied to a sum of factor products
WeightedFactors derive(const WeightedFactors& in, int y, int axis, int dim) {
  MultiIndex unit;
  unit.dim = dim;
  unit.k[axis] = 1;
  WeightedFactors out;
  for (const auto& [c, fs] : in) {
    for (size_t i = 0; i < fs.size(); ++i) {
      const Factor& f = fs[i];
      switch (f.kind) {
        case FactorKind::Kernel: {
          if (f.a == f.b) break;
          int sgn = f.a == y ? 1 : (f.b == y ? -1 : 0);
          if (sgn == 0) break;
          auto nfs = fs;
          nfs[i].deriv = f.deriv + unit;
          out.emplace_back(c * sgn, std::move(nfs));
          break;
        }
        case FactorKind::Mono: {
          int sgn = f.a == y ? 1 : (f.b == y ? -1 : 0);
          if (sgn == 0 || f.deriv[axis] == 0) break;
          auto nfs = fs;
          Rational nc = c * sgn * f.deriv[axis];
          nfs[i].deriv.k[axis] -= 1;
          if (nfs[i].deriv.order() == 0) nfs.erase(nfs.begin() + i);
          out.emplace_back(nc, std::move(nfs));
          break;
        }
        case FactorKind::Test: {
          if (f.a != y) break;
          auto nfs = fs;
          nfs[i].deriv = f.deriv + unit;
          out.emplace_back(c, std::move(nfs));
          break;
        }
      }
    }
  }
  return out;
}

long long factorial_ll(int n) {
  long long r = 1;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

long long multi_factorial_ll(const MultiIndex& k) {
  long long r = 1;
  for (int i = 0; i < k.dim; ++i) r *= factorial_ll(k[i]);
  return r;
}

void enum_assignments(int pos, int n_pos, int remaining, int dim, std::vector<MultiIndex>& cur,
                      const std::function<void(const std::vector<MultiIndex>&)>& emit) {
  if (pos == n_pos) {
    emit(cur);
    return;
  }
  for (const MultiIndex& k : multiindices_up_to(dim, remaining)) {
    cur[pos] = k;
    enum_assignments(pos + 1, n_pos, remaining - k.order(), dim, cur, emit);
  }
}

}  // namespace

Integrand taylor_subtract(const Integrand& I0, const graphs::SubGraph& g, int d,
                          bool strict_order) {
  Integrand I = I0;
  canonicalize(I);
  Integrand zero{I.n_ext, I.n_vars, {}};
  graphs::Omega om = graphs::omega(g, d);
  if (om.omega > Rational(0)) return zero;
  long long cap =
      strict_order ? rational_ceil(om.omega_plus) - 1 : rational_floor(om.omega_plus);
  if (cap < 0) return zero;

  std::vector<int> Y = taylor_vars(g);
  // no vertex of g meets the co-graph: nothing to expand, the projector is the identity
  if (Y.empty()) return I;
  int base = Y.front();
  std::vector<int> ys(Y.begin() + 1, Y.end());

  Integrand out{I.n_ext, I.n_vars, {}};
  for (const Term& t : I.terms) {
    std::vector<Factor> inside;
    std::vector<Factor> co;
    for (const Factor& f : t.factors) {
      if (f.kind == FactorKind::Kernel && f.edge >= 0 && ((g.edges >> f.edge) & 1))
        inside.push_back(f);
      else
        co.push_back(f);
    }
    std::vector<MultiIndex> assign(ys.size());
    auto emit = [&](const std::vector<MultiIndex>& ks) {
      WeightedFactors wf{{Rational(1), co}};
      Rational weight{1};
      for (size_t p = 0; p < ys.size(); ++p) {
        weight /= multi_factorial_ll(ks[p]);
        for (int axis = 0; axis < d; ++axis)
          for (int rep = 0; rep < ks[p][axis]; ++rep) wf = derive(wf, ys[p], axis, d);
      }
      for (const auto& [c, fs] : wf) {
        Term nt;
        nt.coeff = t.coeff * weight * c;
        nt.factors = inside;
        bool dead = false;
        for (size_t p = 0; p < ys.size() && !dead; ++p) {
          if (ks[p].order() == 0) continue;
          auto [mf, sgn] = make_mono(ks[p], ys[p], base);
          nt.coeff *= sgn;
          nt.factors.push_back(mf);
        }
        for (const Factor& f : fs) {
          if (dead) break;
          int a = f.a, b = f.b;
          for (int y : ys) {
            if (a == y) a = base;
            if (b == y && f.kind != FactorKind::Test) b = base;
          }
          switch (f.kind) {
            case FactorKind::Kernel: {
              auto [nf, sgn] = make_kernel(f.name, f.edge, f.deriv, a, b, f.slice);
              nt.coeff *= sgn;
              nt.factors.push_back(nf);
              break;
            }
            case FactorKind::Mono: {
              if (a == b) {
                dead = true;
                break;
              }
              auto [nf, sgn] = make_mono(f.deriv, a, b);
              nt.coeff *= sgn;
              nt.factors.push_back(nf);
              break;
            }
            case FactorKind::Test: {
              Factor nf = f;
              nf.a = a;
              nt.factors.push_back(nf);
              break;
            }
          }
        }
        if (!dead) out.terms.push_back(std::move(nt));
      }
    };
    if (ys.empty()) {
      emit(assign);
    } else {
      enum_assignments(0, static_cast<int>(ys.size()), static_cast<int>(cap), d, assign, emit);
    }
  }
  canonicalize(out);
  return out;
}

void order_members(std::vector<graphs::EdgeMask>& ms) {
  std::sort(ms.begin(), ms.end(), [](graphs::EdgeMask x, graphs::EdgeMask y) {
    int px = std::popcount(x), py = std::popcount(y);
    if (px != py) return px < py;
    return graphs::mask_edges(x) < graphs::mask_edges(y);
  });
}

Integrand apply_forest_product(const Integrand& base,
                               const std::vector<graphs::SubGraph>& ordered, int d,
                               ProductMode mode, bool strict_order) {
  Integrand I = base;
  for (const graphs::SubGraph& g : ordered) {
    Integrand T = taylor_subtract(I, g, d, strict_order);
    I = mode == ProductMode::IdMinusT ? I - T : Rational(-1) * T;
  }
  return I;
}

Integrand zimmermann_product(const Integrand& base, const graphs::Forest& F, int d,
                             bool strict_order) {
  std::vector<graphs::EdgeMask> ms = F.members;
  order_members(ms);
  std::vector<graphs::SubGraph> ops;
  for (graphs::EdgeMask m : ms) ops.push_back({F.G, m});
  return apply_forest_product(base, ops, d, ProductMode::IdMinusT, strict_order);
}

Integrand zimmermann_product(const graphs::FeynGraph& G, const graphs::Forest& F, int d,
                             bool strict_order) {
  return zimmermann_product(graph_integrand(G), F, d, strict_order);
}

Integrand bphz_renormalize(const graphs::FeynGraph& G, int d, int forest_budget,
                           bool strict_order) {
  Integrand base = graph_integrand(G);
  std::vector<graphs::Forest> forests = graphs::forests_of(G, d, forest_budget);
  // prefixes in the fixed operator order are shared across forests and memoised
  std::map<std::vector<graphs::EdgeMask>, Integrand> memo;
  memo[{}] = base;
  Integrand sum{base.n_ext, base.n_vars, {}};
  for (const graphs::Forest& F : forests) {
    std::vector<graphs::EdgeMask> ms = F.members;
    order_members(ms);
    std::vector<graphs::EdgeMask> prefix;
    size_t done = ms.size();
    while (done > 0 &&
           memo.find(std::vector<graphs::EdgeMask>(ms.begin(), ms.begin() + done)) == memo.end())
      --done;
    Integrand cur = memo[std::vector<graphs::EdgeMask>(ms.begin(), ms.begin() + done)];
    for (size_t i = done; i < ms.size(); ++i) {
      cur = Rational(-1) * taylor_subtract(cur, {&G, ms[i]}, d, strict_order);
      memo[std::vector<graphs::EdgeMask>(ms.begin(), ms.begin() + i + 1)] = cur;
    }
    sum = sum + cur;
  }
  return sum;
}

}  // namespace renorm::integrand
