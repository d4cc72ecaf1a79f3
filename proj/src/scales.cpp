#include "renorm/scales.hpp"

#include <algorithm>
#include <bit>
#include <climits>
#include <random>
#include <set>

namespace renorm::scales {

int ScaleAssignment::operator()(int e) const {
  auto it = mu.find(e);
  if (it == mu.end()) throw ScaleError("edge has no scale: " + std::to_string(e));
  return it->second;
}

int ScaleAssignment::lowest() const {
  if (mu.empty()) throw ScaleError("empty scale assignment");
  int v = INT_MAX;
  for (auto& [e, i] : mu) v = std::min(v, i);
  return v;
}

int ScaleAssignment::highest() const {
  if (mu.empty()) throw ScaleError("empty scale assignment");
  int v = INT_MIN;
  for (auto& [e, i] : mu) v = std::max(v, i);
  return v;
}

ScaleAssignment random_scales(const graphs::FeynGraph& G, std::uint64_t seed, int lo, int hi) {
  ScaleAssignment mu;
  mu.window_lo = lo;
  mu.window_hi = hi;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(lo, hi);
  for (size_t e = 0; e < G.edges.size(); ++e) mu.mu[static_cast<int>(e)] = u(rng);
  return mu;
}

integrand::Integrand slice(const integrand::Integrand& I, const ScaleAssignment& mu) {
  integrand::Integrand out = I;
  for (auto& t : out.terms)
    for (auto& f : t.factors)
      if (f.kind == integrand::FactorKind::Kernel && f.edge >= 0) f.slice = mu(f.edge);
  integrand::canonicalize(out);
  return out;
}

namespace {

struct UnionFind {
  std::vector<int> p;
  explicit UnionFind(int n) : p(n) {
    for (int i = 0; i < n; ++i) p[i] = i;
  }
  int find(int x) { return p[x] == x ? x : p[x] = find(p[x]); }
  void unite(int a, int b) { p[find(a)] = find(b); }
};

}  // namespace

GNTree gn_tree(const graphs::FeynGraph& G, const ScaleAssignment& mu) {
  if (G.edges.empty()) throw ScaleError("gn_tree needs at least one edge");
  graphs::SubGraph whole{&G, graphs::full_mask(G)};
  if (!whole.connected()) throw ScaleError("gn_tree requires a connected graph");
  GNTree t;
  t.i_lo = mu.lowest();
  t.i_hi = mu.highest();
  for (int i = t.i_lo; i <= t.i_hi; ++i) {
    UnionFind uf(G.n_vertices());
    graphs::EdgeMask live = 0;
    for (size_t e = 0; e < G.edges.size(); ++e)
      if (mu(static_cast<int>(e)) >= i) {
        live |= graphs::EdgeMask(1) << e;
        uf.unite(G.edges[e].u, G.edges[e].v);
      }
    std::map<int, graphs::EdgeMask> comp;
    for (size_t e = 0; e < G.edges.size(); ++e)
      if ((live >> e) & 1) comp[uf.find(G.edges[e].u)] |= graphs::EdgeMask(1) << e;
    std::vector<graphs::EdgeMask> level;
    for (auto& [root, m] : comp) level.push_back(m);
    std::sort(level.begin(), level.end(), [](graphs::EdgeMask a, graphs::EdgeMask b) {
      return graphs::mask_edges(a) < graphs::mask_edges(b);
    });
    t.levels.push_back(std::move(level));
  }
  return t;
}

bool quasi_local(const graphs::SubGraph& g1, const graphs::SubGraph& g2,
                 const ScaleAssignment& mu) {
  if (g1.G != g2.G) throw ScaleError("quasi_local over different graphs");
  if ((g1.edges & g2.edges) != g1.edges || g1.edges == g2.edges)
    throw ScaleError("quasi_local requires g1 strictly inside g2");
  if (g1.edges == 0) throw ScaleError("quasi_local requires nonempty g1");
  int lo1 = INT_MAX;
  for (int e : g1.edge_list()) lo1 = std::min(lo1, mu(e));
  int hi2 = INT_MIN;
  for (int e : graphs::mask_edges(g2.edges & ~g1.edges)) hi2 = std::max(hi2, mu(e));
  return lo1 > hi2;
}

int m_scale(const graphs::Forest& F, const ScaleAssignment& mu, graphs::EdgeMask g) {
  graphs::EdgeMask own = g & ~graphs::g_plus(F, g);
  int v = INT_MAX;
  for (int e : graphs::mask_edges(own)) v = std::min(v, mu(e));
  return v;
}

int M_scale(const graphs::Forest& F, const ScaleAssignment& mu, graphs::EdgeMask g) {
  graphs::EdgeMask parent = graphs::g_minus(F, g);
  graphs::SubGraph gs{F.G, g};
  std::vector<int> verts = gs.vertices();
  auto in_g = [&](int v) { return std::binary_search(verts.begin(), verts.end(), v); };
  int best = INT_MIN;
  for (int e : graphs::mask_edges(parent & ~g)) {
    const graphs::Edge& ed = F.G->edges[e];
    if (in_g(ed.u) || in_g(ed.v)) best = std::max(best, mu(e));
  }
  return best;
}

SafeDangerous safe_dangerous(const graphs::Forest& F, const ScaleAssignment& mu, int d,
                             int edge_budget) {
  if (!graphs::is_forest(*F.G, F.members)) throw ScaleError("safe_dangerous needs a forest");
  SafeDangerous out;
  out.safe.G = F.G;
  for (graphs::EdgeMask g : F.members) {
    if (m_scale(F, mu, g) > M_scale(F, mu, g))
      out.dangerous.push_back(g);
    else
      out.safe.members.push_back(g);
  }
  std::set<graphs::EdgeMask> safe_set(out.safe.members.begin(), out.safe.members.end());
  for (const graphs::SubGraph& h : graphs::enumerate_divergent(*F.G, d, edge_budget)) {
    bool compat = true;
    for (graphs::EdgeMask m : F.members)
      if (m != h.edges && !graphs::compatible_members(*F.G, m, h.edges)) {
        compat = false;
        break;
      }
    if (!compat) continue;
    graphs::Forest S = out.safe;
    if (!safe_set.count(h.edges)) {
      S.members.push_back(h.edges);
      integrand::order_members(S.members);
    }
    if (m_scale(S, mu, h.edges) > M_scale(S, mu, h.edges)) out.safe_plus.push_back(h.edges);
  }
  std::sort(out.safe_plus.begin(), out.safe_plus.end(),
            [](graphs::EdgeMask a, graphs::EdgeMask b) {
              return graphs::mask_edges(a) < graphs::mask_edges(b);
            });
  return out;
}

Classification classify_forests(const graphs::FeynGraph& G, const ScaleAssignment& mu, int d,
                                int forest_budget, int edge_budget) {
  Classification cls;
  std::vector<graphs::Forest> all = graphs::forests_of(G, d, forest_budget, edge_budget);
  std::map<std::vector<graphs::EdgeMask>, std::vector<graphs::Forest>> by_safe;
  for (const graphs::Forest& F : all) {
    SafeDangerous sd = safe_dangerous(F, mu, d, edge_budget);
    std::vector<graphs::EdgeMask> key = sd.safe.members;
    std::sort(key.begin(), key.end());
    by_safe[key].push_back(F);
  }
  cls.lemma_holds = true;
  for (auto& [key, members] : by_safe) {
    ClassificationBlock blk;
    blk.safe_part.G = &G;
    blk.safe_part.members = key;
    integrand::order_members(blk.safe_part.members);
    SafeDangerous sd = safe_dangerous(blk.safe_part, mu, d, edge_budget);
    blk.safe_part_is_safe = sd.dangerous.empty();
    blk.safe_plus = sd.safe_plus;
    blk.members = members;

    std::vector<graphs::EdgeMask> upper = blk.safe_part.members;
    for (graphs::EdgeMask m : blk.safe_plus)
      if (std::find(upper.begin(), upper.end(), m) == upper.end()) upper.push_back(m);
    blk.union_is_forest = graphs::is_forest(G, upper);

    std::set<graphs::EdgeMask> lower_set(blk.safe_part.members.begin(),
                                         blk.safe_part.members.end());
    std::set<graphs::EdgeMask> upper_set(upper.begin(), upper.end());
    std::set<std::vector<graphs::EdgeMask>> member_keys;
    bool fit = true;
    for (const graphs::Forest& F : members) {
      std::vector<graphs::EdgeMask> k = F.members;
      std::sort(k.begin(), k.end());
      member_keys.insert(k);
      for (graphs::EdgeMask m : F.members)
        if (!upper_set.count(m)) fit = false;
      for (graphs::EdgeMask m : blk.safe_part.members)
        if (std::find(F.members.begin(), F.members.end(), m) == F.members.end()) fit = false;
    }
    // completeness: every forest between the bounds shows up in the block
    std::vector<graphs::EdgeMask> optional_ms;
    for (graphs::EdgeMask m : upper)
      if (!lower_set.count(m)) optional_ms.push_back(m);
    size_t expect = size_t(1) << optional_ms.size();
    bool complete = blk.union_is_forest && member_keys.size() == expect;
    blk.sandwich_exact = fit && complete;
    if (!(blk.safe_part_is_safe && blk.union_is_forest && blk.sandwich_exact))
      cls.lemma_holds = false;
    cls.blocks.push_back(std::move(blk));
  }
  return cls;
}

ParcimoniousResult parcimonious(const graphs::FeynGraph& G, const ScaleAssignment& mu, int d,
                                bool strict_order) {
  GNTree tree = gn_tree(G, mu);
  ParcimoniousResult out;
  out.value = slice(integrand::graph_integrand(G), mu);
  std::set<graphs::EdgeMask> seen;
  for (int i = tree.i_hi; i >= tree.i_lo; --i) {
    for (graphs::EdgeMask m : tree.at(i)) {
      if (!seen.insert(m).second) continue;
      graphs::SubGraph g{&G, m};
      if (!graphs::omega(g, d).divergent()) continue;
      out.applied.push_back(m);
      out.value = out.value - integrand::taylor_subtract(out.value, g, d, strict_order);
    }
  }
  return out;
}

}  // namespace renorm::scales
