#include "renorm/rules.hpp"

#include <algorithm>
#include <set>

#include "json.hpp"

namespace renorm::sym {

Rule pam_rule() {
  Rule r;
  r.node_types.push_back({1, {}});
  r.node_types.push_back({1, {MultiIndex(2)}});
  r.gamma_max = Rational(2);
  return r;
}

Rule phi4_rule() {
  Rule r;
  MultiIndex z(3);
  r.node_types.push_back({1, {}});
  r.node_types.push_back({0, {z}});
  r.node_types.push_back({0, {z, z}});
  r.node_types.push_back({0, {z, z, z}});
  r.gamma_max = Rational(5, 2);
  return r;
}

namespace {

struct RootShape {
  int n_xi = 0;
  int poly_order = 0;
  std::vector<MultiIndex> decorations;
  std::vector<Symbol> children;
};

RootShape root_shape(const Symbol& s) {
  RootShape sh;
  for (const Symbol& f : root_factors(s)) {
    switch (f->kind) {
      case Kind::Xi:
      case Kind::XiDot:
        ++sh.n_xi;
        break;
      case Kind::Poly:
        sh.poly_order += f->mi.order();
        break;
      case Kind::Planted:
        sh.decorations.push_back(f->mi);
        sh.children.push_back(f->child);
        break;
      default:
        sh.n_xi = -1;
        return sh;
    }
  }
  std::sort(sh.decorations.begin(), sh.decorations.end());
  return sh;
}

bool shape_allowed(const RootShape& sh, const Rule& rule) {
  if (sh.n_xi < 0) return false;
  if (sh.poly_order > 0 && (!rule.allow_poly || sh.poly_order > rule.poly_max_order))
    return false;
  for (const NodeType& nt : rule.node_types) {
    if (nt.n_xi != sh.n_xi) continue;
    std::vector<MultiIndex> want = nt.edge_decorations;
    std::sort(want.begin(), want.end());
    if (want == sh.decorations) return true;
  }
  return false;
}

}  // namespace

bool conforms(const Symbol& s, const Rule& rule) {
  RootShape sh = root_shape(s);
  if (!shape_allowed(sh, rule)) return false;
  for (const Symbol& c : sh.children)
    if (!conforms(c, rule)) return false;
  return true;
}

std::vector<Symbol> generate_basis(const Rule& rule, const DegreeParams& params) {
  std::set<Symbol, SymbolTextLess> gen;
  auto try_add = [&](const Symbol& cand) -> bool {
    if (degree_value(cand, params) >= rule.gamma_max) return false;
    if (gen.count(cand)) return false;
    if (static_cast<int>(gen.size()) >= rule.symbol_budget)
      throw RuleBudgetError("basis generation exceeded symbol budget; rule not subcritical");
    gen.insert(cand);
    return true;
  };

  std::vector<Symbol> poly_variants{one()};
  if (rule.allow_poly)
    for (const MultiIndex& j : multiindices_up_to(params.d, rule.poly_max_order))
      if (!j.is_zero()) poly_variants.push_back(poly(j));

  for (const NodeType& nt : rule.node_types) {
    if (!nt.edge_decorations.empty()) continue;
    for (const Symbol& pv : poly_variants) try_add(product({power(xi(), nt.n_xi), pv}));
  }

  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<Symbol> cur(gen.begin(), gen.end());
    if (cur.empty()) break;
    for (const NodeType& nt : rule.node_types) {
      int m = static_cast<int>(nt.edge_decorations.size());
      if (m == 0) continue;
      std::vector<int> idx(m, 0);
      while (true) {
        std::vector<Symbol> fs{power(xi(), nt.n_xi)};
        for (int e = 0; e < m; ++e)
          fs.push_back(planted(nt.edge_decorations[e], cur[idx[e]]));
        for (const Symbol& pv : poly_variants) {
          std::vector<Symbol> fs2 = fs;
          fs2.push_back(pv);
          if (try_add(product(std::move(fs2)))) changed = true;
        }
        int e = m - 1;
        while (e >= 0 && ++idx[e] == static_cast<int>(cur.size())) idx[e--] = 0;
        if (e < 0) break;
      }
    }
  }

  std::vector<Symbol> out(gen.begin(), gen.end());
  std::sort(out.begin(), out.end(), [&](const Symbol& a, const Symbol& b) {
    return preorder_cmp(a, b, params) == std::strong_ordering::less;
  });
  return out;
}

std::string basis_to_json(const std::vector<Symbol>& basis, const DegreeParams& params) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Symbol& s : basis) {
    arr.push_back({{"symbol", s->text},
                   {"degree", to_double(degree_value(s, params))},
                   {"n_xi", s->n_xi},
                   {"n_edges", s->n_edges}});
  }
  return arr.dump(2);
}

}  // namespace renorm::sym
