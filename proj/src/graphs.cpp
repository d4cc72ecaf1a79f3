#include "renorm/graphs.hpp"

#include <algorithm>
#include <bit>
#include <set>

#include "json.hpp"

namespace renorm::graphs {

std::vector<int> mask_edges(EdgeMask m) {
  std::vector<int> out;
  for (int i = 0; m != 0; ++i, m >>= 1)
    if (m & 1) out.push_back(i);
  return out;
}

std::vector<int> SubGraph::vertices() const {
  std::set<int> vs;
  for (int e : edge_list()) {
    vs.insert(G->edges[e].u);
    vs.insert(G->edges[e].v);
  }
  return {vs.begin(), vs.end()};
}

std::vector<int> SubGraph::internal_vertices() const {
  std::vector<int> out;
  for (int v : vertices()) {
    if (G->is_external(v)) continue;
    bool all_inside = true;
    for (size_t e = 0; e < G->edges.size(); ++e) {
      if (G->edges[e].u != v && G->edges[e].v != v) continue;
      if (!(edges >> e & 1)) {
        all_inside = false;
        break;
      }
    }
    if (all_inside) out.push_back(v);
  }
  return out;
}

bool SubGraph::connected() const {
  std::vector<int> es = edge_list();
  if (es.empty()) return false;
  std::set<int> seen{G->edges[es[0]].u};
  bool grew = true;
  while (grew) {
    grew = false;
    for (int e : es) {
      bool hu = seen.count(G->edges[e].u), hv = seen.count(G->edges[e].v);
      if (hu != hv) {
        seen.insert(hu ? G->edges[e].v : G->edges[e].u);
        grew = true;
      }
    }
  }
  for (int e : es)
    if (!seen.count(G->edges[e].u) || !seen.count(G->edges[e].v)) return false;
  return true;
}

bool subgraph_less(const SubGraph& a, const SubGraph& b) {
  return a.edge_list() < b.edge_list();
}

Omega omega(const SubGraph& g, int d) {
  Rational w = Rational(d) * Rational(static_cast<long long>(g.internal_vertices().size()) - 1);
  for (int e : g.edge_list()) w -= g.G->edges[e].a + Rational(g.G->edges[e].deriv.order());
  Omega out;
  out.omega = w;
  out.omega_plus = w < 0 ? -w : Rational(0);
  return out;
}

std::vector<SubGraph> enumerate_divergent(const FeynGraph& G, int d, int edge_budget) {
  int m = static_cast<int>(G.edges.size());
  if (m > edge_budget) throw GraphError("edge budget exceeded in subgraph enumeration");
  std::vector<SubGraph> out;
  for (EdgeMask mask = 1; mask <= full_mask(G); ++mask) {
    SubGraph g{&G, mask};
    if (!g.connected()) continue;
    if (g.internal_vertices().empty()) continue;
    if (omega(g, d).divergent()) out.push_back(g);
  }
  std::sort(out.begin(), out.end(), subgraph_less);
  return out;
}

bool weinberg_check(const FeynGraph& G, int d, int edge_budget) {
  return enumerate_divergent(G, d, edge_budget).empty();
}

// members are compatible when nested or when their supports share no vertex;
// edge-disjoint subgraphs hanging on a common vertex overlap as graphs
bool compatible_members(const FeynGraph& G, EdgeMask a, EdgeMask b) {
  EdgeMask c = a & b;
  if (c == a || c == b) return a != b;
  if (c != 0) return false;
  std::set<int> va;
  for (int e : mask_edges(a)) {
    va.insert(G.edges[e].u);
    va.insert(G.edges[e].v);
  }
  for (int e : mask_edges(b))
    if (va.count(G.edges[e].u) || va.count(G.edges[e].v)) return false;
  return true;
}

bool is_forest(const FeynGraph& G, const std::vector<EdgeMask>& members) {
  for (size_t i = 0; i < members.size(); ++i)
    for (size_t j = i + 1; j < members.size(); ++j)
      if (!compatible_members(G, members[i], members[j])) return false;
  return true;
}

bool Forest::contains(EdgeMask g) const {
  return std::find(members.begin(), members.end(), g) != members.end();
}

EdgeMask g_minus(const Forest& F, EdgeMask g) {
  EdgeMask best = full_mask(*F.G);
  for (EdgeMask h : F.members)
    if (h != g && (h & g) == g && std::popcount(h) < std::popcount(best)) best = h;
  return best;
}

EdgeMask g_plus(const Forest& F, EdgeMask g) {
  EdgeMask u = 0;
  for (EdgeMask h : F.members)
    if (h != g && (h & g) == h) u |= h;
  return u;
}

namespace {

void extend_forests(const FeynGraph& G, const std::vector<SubGraph>& div,
                    const std::vector<std::vector<bool>>& compat, size_t next,
                    std::vector<EdgeMask>& cur, std::vector<Forest>& out, int budget) {
  if (static_cast<int>(out.size()) > budget) throw GraphError("forest budget exceeded");
  out.push_back(Forest{&G, cur});
  for (size_t i = next; i < div.size(); ++i) {
    bool ok = true;
    for (size_t j = 0; j < cur.size() && ok; ++j) {
      size_t jj = 0;
      while (div[jj].edges != cur[j]) ++jj;
      ok = compat[i][jj];
    }
    if (!ok) continue;
    cur.push_back(div[i].edges);
    extend_forests(G, div, compat, i + 1, cur, out, budget);
    cur.pop_back();
  }
}

}  // namespace

std::vector<Forest> forests_of(const FeynGraph& G, int d, int forest_budget, int edge_budget) {
  std::vector<SubGraph> div = enumerate_divergent(G, d, edge_budget);
  std::vector<std::vector<bool>> compat(div.size(), std::vector<bool>(div.size()));
  for (size_t i = 0; i < div.size(); ++i)
    for (size_t j = 0; j < div.size(); ++j)
      compat[i][j] = compatible_members(G, div[i].edges, div[j].edges);
  std::vector<Forest> out;
  std::vector<EdgeMask> cur;
  extend_forests(G, div, compat, 0, cur, out, forest_budget);
  return out;
}

double PowerProduct::eval(const std::vector<double>& r) const {
  double v = 1.0;
  for (const auto& [e, q] : exponents) v *= std::pow(r.at(e), to_double(q));
  return v;
}

PowerProduct covering_tree_bound(const FeynGraph& G, const std::vector<int>& tree_edges, int d) {
  std::set<int> tset(tree_edges.begin(), tree_edges.end());
  if (tset.size() != tree_edges.size()) throw GraphError("covering tree repeats an edge");
  for (int e : tree_edges)
    if (e < 0 || e >= static_cast<int>(G.edges.size()))
      throw GraphError("covering tree uses an unknown edge");
  // Acyclic: |vertices touched| must exceed |tree edges| by the component
  // count; a spanning tree is connected, so by exactly one.
  std::set<int> tverts;
  for (int e : tree_edges) {
    tverts.insert(G.edges[e].u);
    tverts.insert(G.edges[e].v);
  }
  EdgeMask tmask = 0;
  for (int e : tree_edges) tmask |= EdgeMask(1) << e;
  SubGraph t{&G, tmask};
  if (!tree_edges.empty() &&
      (!t.connected() || tverts.size() != tree_edges.size() + 1))
    throw GraphError("covering tree is not a tree");
  for (int v = G.n_ext(); v < G.n_vertices(); ++v)
    if (!tverts.count(v)) throw GraphError("covering tree misses an internal vertex");

  PowerProduct out;
  Rational half_d(d, 2);
  for (size_t e = 0; e < G.edges.size(); ++e) out.exponents[static_cast<int>(e)] = -half_d;
  for (int e : tree_edges) out.exponents[e] += half_d;
  return out;
}

namespace {

int vertex_id(const FeynGraph& G, const std::string& name) {
  for (int v = 0; v < G.n_vertices(); ++v)
    if (G.vertex_name(v) == name) return v;
  throw GraphError("unknown vertex name: " + name);
}

Rational rational_from_json(const nlohmann::json& j) {
  if (j.is_number_integer()) return Rational(j.get<long long>());
  if (j.is_string()) {
    auto r = parse_rational(j.get<std::string>());
    if (!r) throw GraphError("malformed rational: " + j.get<std::string>());
    return *r;
  }
  throw GraphError("edge exponent must be an integer or a rational string");
}

}  // namespace

FeynGraph graph_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  FeynGraph G;
  for (const auto& n : j.at("ext")) G.ext_names.push_back(n.get<std::string>());
  for (const auto& n : j.at("int")) G.int_names.push_back(n.get<std::string>());
  std::set<std::string> names(G.ext_names.begin(), G.ext_names.end());
  for (const auto& n : G.int_names)
    if (!names.insert(n).second) throw GraphError("duplicate vertex name: " + n);
  if (names.size() != G.ext_names.size() + G.int_names.size())
    throw GraphError("duplicate vertex name");
  for (const auto& je : j.at("edges")) {
    Edge e;
    e.u = vertex_id(G, je.at("u").get<std::string>());
    e.v = vertex_id(G, je.at("v").get<std::string>());
    if (e.u == e.v) throw GraphError("self-loop edges are not supported");
    e.a = rational_from_json(je.at("a"));
    if (e.a <= 0) throw GraphError("edge exponent must be positive");
    if (je.contains("kernel")) e.kernel = je.at("kernel").get<std::string>();
    if (je.contains("k")) {
      auto ks = je.at("k").get<std::vector<int>>();
      if (ks.size() > static_cast<size_t>(kMaxDim)) throw GraphError("derivative order too long");
      e.deriv = MultiIndex(static_cast<int>(ks.size()));
      for (size_t i = 0; i < ks.size(); ++i) e.deriv[static_cast<int>(i)] = ks[i];
    }
    G.edges.push_back(e);
  }
  return G;
}

std::string graph_to_json(const FeynGraph& G) {
  nlohmann::json j;
  j["ext"] = G.ext_names;
  j["int"] = G.int_names;
  j["edges"] = nlohmann::json::array();
  for (const Edge& e : G.edges) {
    nlohmann::json je;
    je["u"] = G.vertex_name(e.u);
    je["v"] = G.vertex_name(e.v);
    je["a"] = rational_to_string(e.a);
    je["kernel"] = e.kernel;
    std::vector<int> ks(e.deriv.k.begin(), e.deriv.k.begin() + e.deriv.dim);
    je["k"] = ks;
    j["edges"].push_back(je);
  }
  return j.dump(2);
}

namespace {

nlohmann::json forest_node_json(const Forest& F, EdgeMask g) {
  nlohmann::json node;
  node["edges"] = mask_edges(g);
  node["children"] = nlohmann::json::array();
  for (EdgeMask h : F.members)
    if (h != g && (h & g) == h && g_minus(F, h) == g) node["children"].push_back(forest_node_json(F, h));
  return node;
}

}  // namespace

std::string forest_to_json(const Forest& F) {
  nlohmann::json roots = nlohmann::json::array();
  EdgeMask whole = full_mask(*F.G);
  for (EdgeMask g : F.members)
    if (g_minus(F, g) == whole && !F.contains(whole)) roots.push_back(forest_node_json(F, g));
  if (F.contains(whole)) roots.push_back(forest_node_json(F, whole));
  nlohmann::json j;
  j["members"] = F.members.size();
  j["trees"] = roots;
  return j.dump(2);
}

}  // namespace renorm::graphs
