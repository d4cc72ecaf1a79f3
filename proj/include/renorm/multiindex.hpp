#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace renorm {

constexpr int kMaxDim = 4;

// Spatial multi-index over at most kMaxDim coordinates. Entries beyond dim are
// zero by construction so comparisons over mixed-origin indices stay valid.
struct MultiIndex {
  std::array<int, kMaxDim> k{0, 0, 0, 0};
  int dim = 1;

  MultiIndex() = default;
  explicit MultiIndex(int d) : dim(d) {}
  MultiIndex(std::initializer_list<int> xs) {
    dim = static_cast<int>(xs.size());
    int i = 0;
    for (int x : xs) k[i++] = x;
  }

  int order() const {
    int s = 0;
    for (int i = 0; i < dim; ++i) s += k[i];
    return s;
  }
  bool is_zero() const { return order() == 0; }

  int operator[](int i) const { return k[i]; }
  int& operator[](int i) { return k[i]; }

  bool operator==(const MultiIndex& o) const { return k == o.k; }
  // Lexicographic on entries; dim-agnostic because trailing entries are 0.
  std::strong_ordering operator<=>(const MultiIndex& o) const { return k <=> o.k; }

  MultiIndex operator+(const MultiIndex& o) const {
    MultiIndex r(std::max(dim, o.dim));
    for (int i = 0; i < kMaxDim; ++i) r.k[i] = k[i] + o.k[i];
    return r;
  }
  // Componentwise difference; caller guarantees o <= *this componentwise.
  MultiIndex operator-(const MultiIndex& o) const {
    MultiIndex r(std::max(dim, o.dim));
    for (int i = 0; i < kMaxDim; ++i) r.k[i] = k[i] - o.k[i];
    return r;
  }
  bool dominates(const MultiIndex& o) const {
    for (int i = 0; i < kMaxDim; ++i)
      if (k[i] < o.k[i]) return false;
    return true;
  }
};

double factorial(int n);
// k! = k1! k2! ... kd!
double multi_factorial(const MultiIndex& k);
// Product of componentwise binomials; zero when j does not dominate i.
double multi_binomial(const MultiIndex& j, const MultiIndex& i);

// All k with |k| <= max_order, dim coordinates, sorted lexicographically.
std::vector<MultiIndex> multiindices_up_to(int dim, int max_order);
// All k with |k| == order exactly.
std::vector<MultiIndex> multiindices_of_order(int dim, int order);

// Text form "[k1,...,kd]".
std::string multiindex_to_string(const MultiIndex& k);
std::optional<MultiIndex> parse_multiindex(const std::string& text);

}  // namespace renorm
