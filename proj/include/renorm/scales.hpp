#pragma once

#include <map>
#include <stdexcept>
#include <vector>

#include "renorm/graphs.hpp"
#include "renorm/integrand.hpp"

namespace renorm::scales {

struct ScaleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dyadic scale label per edge, clamped to the working window.
struct ScaleAssignment {
  std::map<int, int> mu;  // edge index -> scale
  int window_lo = -2;
  int window_hi = 10;

  int operator()(int e) const;
  int lowest() const;   // min assigned scale
  int highest() const;  // max assigned scale
};

ScaleAssignment random_scales(const graphs::FeynGraph& G, std::uint64_t seed, int lo = -2,
                              int hi = 10);

// Tags every kernel factor carrying an edge id with that edge's scale.
integrand::Integrand slice(const integrand::Integrand& I, const ScaleAssignment& mu);

// Level i holds the connected components of the edges at scale >= i, for i
// from highest() down to lowest(); the bottom level is the whole graph, which
// must be connected.
struct GNTree {
  int i_lo = 0;
  int i_hi = 0;
  std::vector<std::vector<graphs::EdgeMask>> levels;  // levels[i - i_lo], each sorted

  const std::vector<graphs::EdgeMask>& at(int i) const { return levels.at(i - i_lo); }
};

GNTree gn_tree(const graphs::FeynGraph& G, const ScaleAssignment& mu);

// g1 strictly inside g2 and every g1 scale strictly above every g2\g1 scale.
bool quasi_local(const graphs::SubGraph& g1, const graphs::SubGraph& g2,
                 const ScaleAssignment& mu);

// min scale over E(g) \ E(g_plus_F(g)); INT_MAX when that set is empty.
int m_scale(const graphs::Forest& F, const ScaleAssignment& mu, graphs::EdgeMask g);
// max scale over edges of E(g_minus_F(g)) \ E(g) meeting V(g); INT_MIN when empty.
int M_scale(const graphs::Forest& F, const ScaleAssignment& mu, graphs::EdgeMask g);

struct SafeDangerous {
  std::vector<graphs::EdgeMask> dangerous;  // members with m > M
  graphs::Forest safe;                      // the rest, member order preserved
  std::vector<graphs::EdgeMask> safe_plus;  // compatible divergent g dangerous for safe+g
};

SafeDangerous safe_dangerous(const graphs::Forest& F, const ScaleAssignment& mu, int d,
                             int edge_budget = 16);

// Partition of all forests by their safe part, with the sandwich
// G_safe <= F' <= G_safe + safe_plus(G_safe) checked per block.
struct ClassificationBlock {
  graphs::Forest safe_part;
  std::vector<graphs::Forest> members;
  std::vector<graphs::EdgeMask> safe_plus;
  bool safe_part_is_safe = false;  // idempotence: classifying the safe part moves nothing
  bool union_is_forest = false;
  bool sandwich_exact = false;  // members == every forest between the bounds
};

struct Classification {
  std::vector<ClassificationBlock> blocks;
  bool lemma_holds = false;
};

Classification classify_forests(const graphs::FeynGraph& G, const ScaleAssignment& mu, int d,
                                int forest_budget = 1 << 14, int edge_budget = 16);

// Scale-ordered product of (Id - T_g) over the distinct divergent components
// of the tree, each applied once at its highest appearance, top scale first.
struct ParcimoniousResult {
  integrand::Integrand value;
  std::vector<graphs::EdgeMask> applied;  // application order
};

ParcimoniousResult parcimonious(const graphs::FeynGraph& G, const ScaleAssignment& mu, int d,
                                bool strict_order = false);

}  // namespace renorm::scales
