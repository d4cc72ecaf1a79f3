#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "renorm/multiindex.hpp"
#include "renorm/rational.hpp"

namespace renorm::sym {

enum class Kind { One, Xi, XiDot, Poly, Planted, Product };

enum class XiDotMode { Classic, HolderTheta };

struct DegreeParams {
  int d = 2;
  Rational alpha0{-3, 2};
  Rational kernel_gain{2};
  XiDotMode xidot_mode = XiDotMode::Classic;
  // Degree assigned to XiDot in HolderTheta mode; must lie in (0,1).
  Rational theta{1, 2};
};

struct Node;

// Immutable interned handle. Pointer equality is structural equality because
// every construction path canonicalizes before interning.
class Symbol {
 public:
  Symbol() = default;
  explicit Symbol(const Node* p) : p_(p) {}
  bool valid() const { return p_ != nullptr; }
  const Node& operator*() const;
  const Node* operator->() const;
  bool operator==(const Symbol& o) const = default;
 private:
  const Node* p_ = nullptr;
};

struct Node {
  Kind kind = Kind::One;
  MultiIndex mi;                 // Poly exponent or Planted decoration
  Symbol child;                  // Planted argument
  std::vector<Symbol> factors;   // Product factors: primitive, text-sorted
  std::string text;              // canonical grammar string
  int n_xi = 0;
  int n_xidot = 0;
  int n_edges = 0;
  int poly_order_total = 0;      // sum of |k| over Poly nodes
  int deco_order_total = 0;      // sum of |k| over Planted decorations
  int node_count = 1;
};

inline const Node& Symbol::operator*() const { return *p_; }
inline const Node* Symbol::operator->() const { return p_; }

struct SymbolTextLess {
  bool operator()(const Symbol& a, const Symbol& b) const { return a->text < b->text; }
};

struct ParseError : std::runtime_error {
  size_t position;
  ParseError(const std::string& msg, size_t pos)
      : std::runtime_error(msg + " at position " + std::to_string(pos)), position(pos) {}
};

// Factory functions; every returned handle is canonical and interned.
Symbol one();
Symbol xi();
Symbol xidot();
Symbol poly(const MultiIndex& k);
Symbol planted(const MultiIndex& k, const Symbol& child);
Symbol product(std::vector<Symbol> factors);
Symbol power(const Symbol& s, int n);

// Primitive factors of the root product: {} for One, {s} for a primitive s.
std::vector<Symbol> root_factors(const Symbol& s);

Symbol parse_symbol(const std::string& text, int dim);
Symbol parse_symbol(const std::string& text, const DegreeParams& params);

struct Stats {
  int n_xi = 0;
  int n_xidot = 0;
  int n_edges = 0;
  bool operator==(const Stats&) const = default;
};
Stats statistics(const Symbol& s);

// Degree in Q(alpha0); XiDot contributes xidot_deg (caller-chosen).
Degree degree_with_xidot(const Symbol& s, const DegreeParams& params, const Degree& xidot_deg);
// XiDot degree taken from params.xidot_mode.
Degree degree_exact(const Symbol& s, const DegreeParams& params);
Rational degree_value(const Symbol& s, const DegreeParams& params);

// Lexicographic (n_xi, n_edges, degree) with canonical-string tie-break.
std::strong_ordering preorder_cmp(const Symbol& a, const Symbol& b, const DegreeParams& params);

// Integer-coefficient linear combination, text-sorted, zero terms dropped.
struct SymLin {
  std::vector<std::pair<Symbol, long long>> terms;
  void add(const Symbol& s, long long c);
  SymLin& operator+=(const SymLin& o);
  bool operator==(const SymLin&) const = default;
};

// Formal derivative: Xi -> XiDot, Poly -> 0, through Planted, Leibniz on
// products. Rejects input that already contains XiDot.
SymLin malliavin_D(const Symbol& s);

// All symbols obtained by replacing exactly one Xi occurrence by XiDot,
// deduplicated and text-sorted.
std::vector<Symbol> extended_basis(const std::vector<Symbol>& basis);

}  // namespace renorm::sym
