#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "renorm/graphs.hpp"
#include "renorm/multiindex.hpp"
#include "renorm/rational.hpp"

namespace renorm::integrand {

constexpr int kNoSlice = INT32_MIN;

enum class FactorKind { Kernel, Mono, Test };

// One multiplicative factor of a term. Kernel: (d^deriv K)(x_a - x_b) for an
// even kernel, so orientation is normalized to a <= b with a sign flip of
// (-1)^{|deriv|}. Mono: (x_a - x_b)^deriv, sign flip (-1)^{|deriv|}.
// Test: (d^deriv phi_lambda)(x_a).
struct Factor {
  FactorKind kind = FactorKind::Kernel;
  std::string name = "K";  // kernel id or test-function id
  int slice = kNoSlice;    // dyadic slice tag for Kernel factors
  int edge = -1;           // originating graph edge for Kernel factors
  MultiIndex deriv;        // derivative order, or Mono exponent
  int a = 0;
  int b = 0;               // unused for Test
  double lambda = 1.0;     // Test scale

  auto key() const {
    return std::tuple(static_cast<int>(kind), name, slice, edge, deriv.k, a, b, lambda);
  }
  bool operator==(const Factor& o) const { return key() == o.key(); }
  bool operator<(const Factor& o) const { return key() < o.key(); }
};

// Returns the orientation-normalized factor and the sign it contributes.
std::pair<Factor, int> make_kernel(const std::string& name, int edge, const MultiIndex& deriv,
                                   int a, int b, int slice = kNoSlice);
std::pair<Factor, int> make_mono(const MultiIndex& expo, int a, int b);
Factor make_test(const std::string& name, int a, double lambda, const MultiIndex& deriv);

struct Term {
  Rational coeff{1};
  std::vector<Factor> factors;  // sorted

  bool operator==(const Term& o) const = default;
};

// Canonical sum of terms over a shared variable table. Variables
// 0..n_ext-1 are free (the z's); n_ext..n_vars-1 are integrated.
struct Integrand {
  int n_ext = 0;
  int n_vars = 0;
  std::vector<Term> terms;

  bool is_zero() const { return terms.empty(); }
  bool operator==(const Integrand& o) const = default;
};

// Sorts factors per term, merges equal factor lists, drops zero coefficients
// and vanishing factors ((x_a - x_a)^k for |k| > 0, odd-derivative kernels at
// coinciding arguments).
void canonicalize(Integrand& I);

Integrand operator+(const Integrand& x, const Integrand& y);
Integrand operator-(const Integrand& x, const Integrand& y);
Integrand operator*(const Rational& c, const Integrand& x);

// The raw iterated integral of a graph: one term, one kernel factor per edge.
// Variable ids follow vertex ids; internal vertices are integrated.
Integrand graph_integrand(const graphs::FeynGraph& G);

// Serialization in the documented S-expression form; integrated variables are
// renamed deterministically, so equal integrands print identically.
std::string to_sexpr(const Integrand& I);

struct IntegrandError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Taylor subtraction operator of a divergent subgraph. Expands every factor
// outside g (kernels on co-graph edges, previously created monomials, test
// factors) in the integrated external variables of g around the base vertex,
// to total order omega_plus(g), then pins those variables to the base.
// Returns the zero integrand when omega(g) > 0. The strict variant sums
// |k| < omega_plus only.
Integrand taylor_subtract(const Integrand& I, const graphs::SubGraph& g, int d,
                          bool strict_order = false);

// Smallest-index integrated external variable of g; empty when g has none.
std::optional<int> taylor_base(const graphs::SubGraph& g);
std::vector<int> taylor_vars(const graphs::SubGraph& g);

// Fixed global operator order: popcount ascending, then edge-list lexicographic.
// A linear extension of inclusion, so restriction to any subset keeps nested
// members innermost first.
void order_members(std::vector<graphs::EdgeMask>& ms);

enum class ProductMode { IdMinusT, MinusT };

// Applies the operators left to right in the order given.
Integrand apply_forest_product(const Integrand& base,
                               const std::vector<graphs::SubGraph>& ordered, int d,
                               ProductMode mode, bool strict_order = false);

// Product over F of (Id - T_g), innermost first, applied to graph_integrand.
Integrand zimmermann_product(const graphs::FeynGraph& G, const graphs::Forest& F, int d,
                             bool strict_order = false);
Integrand zimmermann_product(const Integrand& base, const graphs::Forest& F, int d,
                             bool strict_order = false);

// Sum over all forests of prod (-T_g) applied to the graph integrand.
Integrand bphz_renormalize(const graphs::FeynGraph& G, int d, int forest_budget = 1 << 14,
                           bool strict_order = false);

// Numeric evaluation.
struct EvalMethod {
  enum class Kind { Grid, MonteCarlo } kind = Kind::Grid;
  int d = 2;
  double box = 1.0;        // torus side length
  int n = 32;              // grid points per axis, or MC sample count
  bool periodic = true;    // wrap displacements to the nearest image
  bool midpoint = true;    // sample cell centers instead of lattice nodes
  std::uint64_t seed = 1;
  std::vector<std::array<double, 4>> ext_positions;
};

// slice tag (kNoSlice when untagged), deriv, displacement (or position for
// tests), lambda (tests only)
using Callable =
    std::function<double(int, const MultiIndex&, const std::array<double, 4>&, double)>;

struct EvalResult {
  double value = 0.0;
  double stderr_ = 0.0;
};

struct SingularityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

EvalResult evaluate(const Integrand& I, const std::map<std::string, Callable>& bindings,
                    const EvalMethod& method);

// Runs evaluate at n, 2n, 4n points per axis; flags divergence when values
// keep growing by more than the given ratio.
EvalResult evaluate_refined(const Integrand& I, const std::map<std::string, Callable>& bindings,
                            const EvalMethod& method, double growth_ratio = 1.5);

}  // namespace renorm::integrand
