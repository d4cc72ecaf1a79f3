#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "renorm/multiindex.hpp"
#include "renorm/rational.hpp"

namespace renorm::graphs {

struct Edge {
  int u = 0;
  int v = 0;
  std::string kernel = "K";
  Rational a{1};
  MultiIndex deriv{0};
};

// Vertices 0..n_ext-1 are external, n_ext..n_ext+n_int-1 internal.
struct FeynGraph {
  std::vector<std::string> ext_names;
  std::vector<std::string> int_names;
  std::vector<Edge> edges;

  int n_ext() const { return static_cast<int>(ext_names.size()); }
  int n_vertices() const { return n_ext() + static_cast<int>(int_names.size()); }
  bool is_external(int v) const { return v < n_ext(); }
  const std::string& vertex_name(int v) const {
    return is_external(v) ? ext_names[v] : int_names[v - n_ext()];
  }
};

struct GraphError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using EdgeMask = std::uint64_t;

inline EdgeMask full_mask(const FeynGraph& G) {
  return G.edges.empty() ? 0 : (EdgeMask(1) << G.edges.size()) - 1;
}

std::vector<int> mask_edges(EdgeMask m);

// Edge-subset subgraph with induced vertex set.
struct SubGraph {
  const FeynGraph* G = nullptr;
  EdgeMask edges = 0;

  std::vector<int> edge_list() const { return mask_edges(edges); }
  std::vector<int> vertices() const;
  // Vertices of V(g) that are graph-internal and meet no edge outside g.
  std::vector<int> internal_vertices() const;
  bool connected() const;
  bool operator==(const SubGraph& o) const { return G == o.G && edges == o.edges; }
};

// Deterministic order: lexicographic on sorted edge-index tuples.
bool subgraph_less(const SubGraph& a, const SubGraph& b);

struct Omega {
  Rational omega;
  Rational omega_plus;
  bool divergent() const { return omega <= 0; }
};

// d(|V_int(g)|-1) - sum over edges of (a_e + |deriv_e|).
Omega omega(const SubGraph& g, int d);

// Connected edge subsets with at least one internal vertex and omega <= 0.
std::vector<SubGraph> enumerate_divergent(const FeynGraph& G, int d, int edge_budget = 16);

bool weinberg_check(const FeynGraph& G, int d, int edge_budget = 16);

// Members kept in the deterministic subgraph order.
struct Forest {
  const FeynGraph* G = nullptr;
  std::vector<EdgeMask> members;

  bool contains(EdgeMask g) const;
};

bool compatible_members(const FeynGraph& G, EdgeMask a, EdgeMask b);
bool is_forest(const FeynGraph& G, const std::vector<EdgeMask>& members);
// Minimal strict superset of g among members, else the full edge set.
EdgeMask g_minus(const Forest& F, EdgeMask g);
// Union of members strictly contained in g.
EdgeMask g_plus(const Forest& F, EdgeMask g);

std::vector<Forest> forests_of(const FeynGraph& G, int d, int forest_budget = 1 << 14,
                               int edge_budget = 16);

// Formal product of per-edge powers of scale parameters r_e.
struct PowerProduct {
  std::map<int, Rational> exponents;
  double eval(const std::vector<double>& r) const;
  bool operator==(const PowerProduct&) const = default;
};

// (prod over all edges r_e)^{-d/2} * (prod over tree edges r_e)^{d/2}.
// tree_edges must form a spanning tree over the internal vertices.
PowerProduct covering_tree_bound(const FeynGraph& G, const std::vector<int>& tree_edges, int d);

FeynGraph graph_from_json(const std::string& text);
std::string graph_to_json(const FeynGraph& G);
std::string forest_to_json(const Forest& F);

}  // namespace renorm::graphs
