#include <algorithm>
#include <climits>
#include <random>
#include <set>

#include "doctest.h"
#include "renorm/scales.hpp"

using namespace renorm;
using graphs::EdgeMask;
using scales::ScaleAssignment;

namespace {

graphs::FeynGraph make_graph(int n_ext, int n_int, std::vector<graphs::Edge> edges) {
  graphs::FeynGraph G;
  for (int i = 0; i < n_ext; ++i) G.ext_names.push_back("z" + std::to_string(i));
  for (int i = 0; i < n_int; ++i) G.int_names.push_back("u" + std::to_string(i));
  G.edges = std::move(edges);
  return G;
}

MultiIndex mi2(int a, int b) { return MultiIndex({a, b}); }

// chain with two covered centers, degree zero for the middle block
graphs::FeynGraph chain_graph() {
  return make_graph(2, 4,
                    {{0, 2, "A", Rational(1), mi2(0, 0)},
                     {2, 4, "B", {2, 3}, mi2(0, 0)},
                     {4, 5, "C", {2, 3}, mi2(0, 0)},
                     {5, 3, "D", {2, 3}, mi2(0, 0)},
                     {3, 1, "E", Rational(1), mi2(0, 0)}});
}

graphs::FeynGraph star_graph() {
  return make_graph(2, 3,
                    {{0, 2, "A", Rational(1), mi2(0, 0)},
                     {2, 4, "B", {1, 2}, mi2(0, 0)},
                     {3, 4, "C", {1, 2}, mi2(0, 0)},
                     {3, 1, "D", Rational(1), mi2(0, 0)}});
}

ScaleAssignment scales_of(std::vector<int> per_edge) {
  ScaleAssignment mu;
  for (size_t e = 0; e < per_edge.size(); ++e) mu.mu[static_cast<int>(e)] = per_edge[e];
  return mu;
}

graphs::FeynGraph random_connected(std::mt19937_64& rng) {
  int n_ext = 1 + static_cast<int>(rng() % 2);
  int n_int = 2 + static_cast<int>(rng() % 3);
  int n_v = n_ext + n_int;
  std::vector<Rational> pool = {{1, 3}, {1, 2}, {2, 3}, {1, 1}};
  std::vector<graphs::Edge> edges;
  for (int v = 1; v < n_v; ++v)
    edges.push_back({static_cast<int>(rng() % v), v, "K", pool[rng() % pool.size()], mi2(0, 0)});
  int extra = static_cast<int>(rng() % 3);
  for (int e = 0; e < extra && edges.size() < 6; ++e) {
    int u = static_cast<int>(rng() % n_v);
    int v = static_cast<int>(rng() % n_v);
    if (u == v) continue;
    edges.push_back({u, v, "K", pool[rng() % pool.size()], mi2(0, 0)});
  }
  return make_graph(n_ext, n_int, edges);
}

// independent connected-components oracle over edges at scale >= i
std::set<EdgeMask> brute_components(const graphs::FeynGraph& G, const ScaleAssignment& mu,
                                    int i) {
  std::vector<int> live;
  for (size_t e = 0; e < G.edges.size(); ++e)
    if (mu(static_cast<int>(e)) >= i) live.push_back(static_cast<int>(e));
  std::set<EdgeMask> out;
  std::set<int> used;
  for (int seed : live) {
    if (used.count(seed)) continue;
    std::vector<int> stack = {seed};
    EdgeMask comp = 0;
    std::set<int> verts;
    used.insert(seed);
    while (!stack.empty()) {
      int e = stack.back();
      stack.pop_back();
      comp |= EdgeMask(1) << e;
      verts.insert(G.edges[e].u);
      verts.insert(G.edges[e].v);
      for (int f : live)
        if (!used.count(f) &&
            (verts.count(G.edges[f].u) || verts.count(G.edges[f].v))) {
          used.insert(f);
          stack.push_back(f);
          verts.insert(G.edges[f].u);
          verts.insert(G.edges[f].v);
        }
    }
    out.insert(comp);
  }
  return out;
}

}  // namespace

TEST_CASE("slice tags kernel factors with their edge scales") {
  graphs::FeynGraph G = star_graph();
  ScaleAssignment mu = scales_of({7, 3, 3, -1});
  integrand::Integrand I = scales::slice(integrand::graph_integrand(G), mu);
  REQUIRE(I.terms.size() == 1);
  for (const auto& f : I.terms[0].factors) CHECK(f.slice == mu(f.edge));
  CHECK_THROWS_AS(scales_of({7})(3), scales::ScaleError);
}

TEST_CASE("gn tree levels match brute-force components") {
  graphs::FeynGraph G = chain_graph();
  ScaleAssignment mu = scales_of({2, 5, 4, 3, 1});
  scales::GNTree t = scales::gn_tree(G, mu);
  CHECK(t.i_lo == 1);
  CHECK(t.i_hi == 5);
  CHECK(t.at(5) == std::vector<EdgeMask>{0b00010});
  CHECK(t.at(4) == std::vector<EdgeMask>{0b00110});
  CHECK(t.at(3) == std::vector<EdgeMask>{0b01110});
  CHECK(t.at(2) == std::vector<EdgeMask>{0b01111});
  CHECK(t.at(1) == std::vector<EdgeMask>{0b11111});

  // constant scales: a single level equal to the whole graph
  ScaleAssignment cst = scales_of({4, 4, 4, 4, 4});
  scales::GNTree tc = scales::gn_tree(G, cst);
  CHECK(tc.i_lo == 4);
  CHECK(tc.i_hi == 4);
  CHECK(tc.at(4) == std::vector<EdgeMask>{graphs::full_mask(G)});

  // two high clusters inside a low shell
  ScaleAssignment two = scales_of({1, 6, 1, 6, 1});
  scales::GNTree t2 = scales::gn_tree(G, two);
  CHECK(t2.at(6) == std::vector<EdgeMask>{0b00010, 0b01000});
  CHECK(t2.at(1) == std::vector<EdgeMask>{graphs::full_mask(G)});

  std::mt19937_64 rng(42);
  for (int it = 0; it < 30; ++it) {
    graphs::FeynGraph R = random_connected(rng);
    ScaleAssignment rm = scales::random_scales(R, rng(), -2, 6);
    scales::GNTree rt = scales::gn_tree(R, rm);
    for (int i = rt.i_lo; i <= rt.i_hi; ++i) {
      std::set<EdgeMask> got(rt.at(i).begin(), rt.at(i).end());
      CHECK(got == brute_components(R, rm, i));
      if (i > rt.i_lo) {
        // refinement: each component sits inside one component a level below
        for (EdgeMask m : rt.at(i)) {
          int parents = 0;
          for (EdgeMask p : rt.at(i - 1))
            if ((m & p) == m) ++parents;
          CHECK(parents == 1);
        }
      }
    }
    CHECK(rt.at(rt.i_lo) == std::vector<EdgeMask>{graphs::full_mask(R)});
  }

  graphs::FeynGraph split = make_graph(2, 2, {{0, 2, "K", Rational(1), mi2(0, 0)},
                                              {1, 3, "K", Rational(1), mi2(0, 0)}});
  CHECK_THROWS_AS(scales::gn_tree(split, scales_of({0, 0})), scales::ScaleError);
}

TEST_CASE("quasi locality compares inner and outer scale bands") {
  graphs::FeynGraph G = chain_graph();
  graphs::SubGraph inner{&G, 0b00110};
  graphs::SubGraph outer{&G, 0b01110};
  CHECK(scales::quasi_local(inner, outer, scales_of({0, 5, 6, 3, 0})));
  // boundary scale equal to the inner minimum: strict comparison fails
  CHECK(!scales::quasi_local(inner, outer, scales_of({0, 5, 6, 5, 0})));
  CHECK(!scales::quasi_local(inner, outer, scales_of({2, 2, 2, 2, 2})));
  CHECK_THROWS_AS(scales::quasi_local(outer, inner, scales_of({0, 5, 6, 3, 0})),
                  scales::ScaleError);

  // nested gn components at adjacent levels with a unique child are quasi-local
  ScaleAssignment mu = scales_of({2, 5, 4, 3, 1});
  scales::GNTree t = scales::gn_tree(G, mu);
  for (int i = t.i_lo + 1; i <= t.i_hi; ++i)
    for (EdgeMask m : t.at(i))
      for (EdgeMask p : t.at(i - 1)) {
        if ((m & p) != m || m == p) continue;
        int children = 0;
        for (EdgeMask s : t.at(i))
          if ((s & p) == s) ++children;
        if (children == 1)
          CHECK(scales::quasi_local({&G, m}, {&G, p}, mu));
      }
}

TEST_CASE("m and M scales follow the forest structure") {
  graphs::FeynGraph G = chain_graph();
  graphs::Forest F{&G, {0b00110, 0b01110}};
  ScaleAssignment mu = scales_of({2, 5, 4, 3, 1});

  CHECK(scales::m_scale(F, mu, 0b00110) == 4);   // own edges e1,e2
  CHECK(scales::M_scale(F, mu, 0b00110) == 3);   // parent edge e3 meets vertex 5
  CHECK(scales::m_scale(F, mu, 0b01110) == 3);   // own edge e3 after removing the child
  CHECK(scales::M_scale(F, mu, 0b01110) == 2);   // ambient edges e0,e4 meet the block

  scales::SafeDangerous sd = scales::safe_dangerous(F, mu, 2);
  CHECK(sd.dangerous == std::vector<EdgeMask>{0b00110, 0b01110});
  CHECK(sd.safe.members.empty());

  // lifting the boundary scale above the inner minimum makes the child safe
  ScaleAssignment mu2 = scales_of({2, 5, 4, 5, 1});
  scales::SafeDangerous sd2 = scales::safe_dangerous(F, mu2, 2);
  CHECK(sd2.dangerous == std::vector<EdgeMask>{0b01110});
  CHECK(sd2.safe.members == std::vector<EdgeMask>{0b00110});

  graphs::Forest bad{&G, {0b00011, 0b00110}};
  CHECK_THROWS_AS(scales::safe_dangerous(bad, mu, 2), scales::ScaleError);
}

TEST_CASE("constant scales make every proper member safe") {
  graphs::FeynGraph G = star_graph();
  ScaleAssignment cst = scales_of({3, 3, 3, 3});
  for (const graphs::Forest& F : graphs::forests_of(G, 2)) {
    scales::SafeDangerous sd = scales::safe_dangerous(F, cst, 2);
    for (EdgeMask g : F.members) {
      bool is_root = g == graphs::full_mask(G);
      bool dangerous = std::find(sd.dangerous.begin(), sd.dangerous.end(), g) !=
                       sd.dangerous.end();
      CHECK(dangerous == is_root);
    }
  }
}

TEST_CASE("safe part is idempotent under the classification") {
  std::mt19937_64 rng(777);
  int checked = 0;
  for (int it = 0; it < 25; ++it) {
    graphs::FeynGraph G = random_connected(rng);
    std::vector<graphs::Forest> forests;
    try {
      forests = graphs::forests_of(G, 2);
    } catch (const graphs::GraphError&) {
      continue;
    }
    if (forests.size() < 2) continue;
    ScaleAssignment mu = scales::random_scales(G, rng(), -2, 8);
    const graphs::Forest& F = forests[rng() % forests.size()];
    scales::SafeDangerous sd = scales::safe_dangerous(F, mu, 2);
    scales::SafeDangerous again = scales::safe_dangerous(sd.safe, mu, 2);
    CHECK(again.dangerous.empty());
    CHECK(again.safe.members == sd.safe.members);
    ++checked;
  }
  CHECK(checked >= 15);
}

TEST_CASE("forests partition into sandwiches around their safe parts") {
  graphs::FeynGraph G = star_graph();
  std::mt19937_64 rng(2026);
  for (int it = 0; it < 50; ++it) {
    ScaleAssignment mu = scales::random_scales(G, rng(), -2, 10);
    scales::Classification cls = scales::classify_forests(G, mu, 2);
    CHECK(cls.lemma_holds);
    size_t total = 0;
    for (const auto& blk : cls.blocks) total += blk.members.size();
    CHECK(total == graphs::forests_of(G, 2).size());
  }

  graphs::FeynGraph C = chain_graph();
  for (int it = 0; it < 15; ++it) {
    ScaleAssignment mu = scales::random_scales(C, rng(), -2, 10);
    CHECK(scales::classify_forests(C, mu, 2).lemma_holds);
  }

  // no internal vertices: no divergent subgraphs, one block holding the
  // empty forest
  graphs::FeynGraph E = make_graph(3, 0, {{0, 1, "K", Rational(1), mi2(0, 0)},
                                          {1, 2, "K", Rational(1), mi2(0, 0)}});
  scales::Classification cls = scales::classify_forests(E, scales_of({1, 4}), 2);
  REQUIRE(cls.blocks.size() == 1);
  CHECK(cls.blocks[0].members.size() == 1);
  CHECK(cls.blocks[0].members[0].members.empty());
  CHECK(cls.lemma_holds);
}

TEST_CASE("parcimonious subtracts each distinct divergent component once") {
  graphs::FeynGraph G = chain_graph();
  ScaleAssignment mu = scales_of({2, 5, 4, 3, 1});
  scales::ParcimoniousResult pr = scales::parcimonious(G, mu, 2);
  CHECK(pr.applied == std::vector<EdgeMask>{0b00010, 0b00110, 0b01110});
  CHECK(!pr.value.is_zero());

  // expansion over the forest family generated by the applied components
  integrand::Integrand base = scales::slice(integrand::graph_integrand(G), mu);
  integrand::Integrand total{base.n_ext, base.n_vars, {}};
  for (std::uint32_t s = 0; s < (1u << pr.applied.size()); ++s) {
    std::vector<graphs::SubGraph> ops;
    for (size_t i = 0; i < pr.applied.size(); ++i)
      if ((s >> i) & 1) ops.push_back({&G, pr.applied[i]});
    total = total + integrand::apply_forest_product(base, ops, 2,
                                                    integrand::ProductMode::MinusT);
  }
  CHECK(pr.value == total);

  // convergent graph under constant scales: nothing is subtracted
  ScaleAssignment cst = scales_of({3, 3, 3, 3, 3});
  scales::ParcimoniousResult none = scales::parcimonious(G, cst, 2);
  CHECK(none.applied.empty());
  CHECK(none.value == scales::slice(integrand::graph_integrand(G), cst));
}

TEST_CASE("window sum over scale assignments reorders by forest family") {
  graphs::FeynGraph G = make_graph(1, 2,
                                   {{0, 1, "K", Rational(1), mi2(0, 0)},
                                    {1, 2, "K", Rational(1), mi2(0, 0)},
                                    {1, 2, "K", Rational(1), mi2(0, 0)}});
  integrand::Integrand lhs{1, 3, {}};
  std::map<std::vector<EdgeMask>, integrand::Integrand> buckets;
  for (int m0 = 0; m0 <= 1; ++m0)
    for (int m1 = 0; m1 <= 1; ++m1)
      for (int m2 = 0; m2 <= 1; ++m2) {
        ScaleAssignment mu = scales_of({m0, m1, m2});
        scales::ParcimoniousResult pr = scales::parcimonious(G, mu, 2);
        lhs = lhs + pr.value;
        integrand::Integrand base = scales::slice(integrand::graph_integrand(G), mu);
        for (std::uint32_t s = 0; s < (1u << pr.applied.size()); ++s) {
          std::vector<graphs::SubGraph> ops;
          std::vector<EdgeMask> key;
          for (size_t i = 0; i < pr.applied.size(); ++i)
            if ((s >> i) & 1) {
              ops.push_back({&G, pr.applied[i]});
              key.push_back(pr.applied[i]);
            }
          std::sort(key.begin(), key.end());
          integrand::Integrand piece = integrand::apply_forest_product(
              base, ops, 2, integrand::ProductMode::MinusT);
          auto it = buckets.find(key);
          if (it == buckets.end())
            buckets.emplace(key, piece);
          else
            it->second = it->second + piece;
        }
      }
  integrand::Integrand rhs{1, 3, {}};
  for (auto& [key, piece] : buckets) rhs = rhs + piece;
  CHECK(lhs == rhs);
  CHECK(buckets.size() > 1);
}
