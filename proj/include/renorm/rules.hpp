#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "renorm/symbols.hpp"

namespace renorm::sym {

// Admissible shape of one tree node: how many Xi leaves sit at the node and
// which decorated integration edges leave it. XiDot counts as Xi here; the
// extended basis is obtained by replacement, not by separate node types.
struct NodeType {
  int n_xi = 0;
  std::vector<MultiIndex> edge_decorations;  // kept sorted
};

struct Rule {
  std::vector<NodeType> node_types;
  bool allow_poly = false;
  int poly_max_order = 0;
  Rational gamma_max{2};
  // Guard against non-subcritical rules: generation aborts past this many
  // distinct symbols.
  int symbol_budget = 20000;
};

struct RuleBudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Node with one Xi, optionally one undecorated edge; the parabolic Anderson
// pattern in d=2.
Rule pam_rule();
// Nodes carrying up to three undecorated edges or a single Xi; the cubic
// nonlinearity pattern in d=3.
Rule phi4_rule();

// Every node of s (root product and recursively each planted argument)
// matches a whitelisted node type, with polynomial factors within allowance.
bool conforms(const Symbol& s, const Rule& rule);

// All rule-conforming symbols with degree < gamma_max whose planted arguments
// are themselves generated, sorted by preorder_cmp.
std::vector<Symbol> generate_basis(const Rule& rule, const DegreeParams& params);

std::string basis_to_json(const std::vector<Symbol>& basis, const DegreeParams& params);

}  // namespace renorm::sym
