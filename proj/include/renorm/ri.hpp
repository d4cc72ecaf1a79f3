#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "renorm/rational.hpp"
#include "renorm/symbols.hpp"

namespace renorm::ri {

struct RIError : std::runtime_error {
  explicit RIError(const std::string& msg) : std::runtime_error(msg) {}
};

// Integrability exponent in [1, infinity], stored through its exact
// reciprocal; inv == 0 encodes infinity, so differences of reciprocals stay
// in rational arithmetic with no special casing.
struct Exponent {
  Rational inv{0};

  static Exponent infinite() { return {}; }
  // From the exponent value; requires i >= 1.
  static Exponent from_value(const Rational& i);
  // From the reciprocal; requires inv in [0, 1].
  static Exponent from_reciprocal(const Rational& inv);
  bool is_infinite() const { return inv.numerator() == 0; }
  // Throws RIError when infinite.
  Rational value() const;
  bool operator==(const Exponent& o) const = default;
};

std::string exponent_to_string(const Exponent& e);

// Regularity-integrability pair (r, i).
struct RIPair {
  Rational r{0};
  Exponent i{};
  bool operator==(const RIPair& o) const = default;
};

std::string ripair_to_string(const RIPair& a);

struct RIOrder {
  bool preceq = false;
  bool prec = false;
};

// b preceq a iff r(b) <= r(a) and i(b) >= i(a); b prec a additionally needs
// r(b) < r(a), while the integrabilities may stay equal.
RIOrder ri_compare(const RIPair& b, const RIPair& a);

// (r(a) - r(b), 1/(1/i(a) - 1/i(b))), with 1/0 read as infinity. Requires
// b preceq a; the identities r(a) = r(a ominus b) + r(b) and
// 1/i(a) = 1/i(a ominus b) + 1/i(b) hold exactly.
RIPair ri_ominus(const RIPair& a, const RIPair& b);

// Degree with the noise derivative weighted alpha0 + d/p instead of its
// mode-dependent weight; p ranges over [2, infinity] in the Exponent
// encoding. Rejects symbols carrying two or more noise derivatives.
Rational degree_rp(const sym::Symbol& tau, const Exponent& p, const sym::DegreeParams& params);

// infinity for derivative-free symbols, p itself otherwise.
Exponent integrability_ip(const sym::Symbol& tau, const Exponent& p);

// Sector floor gamma = alpha + d/2 for tau inside the basis. alpha is the
// smallest classic degree over non-polynomial basis symbols whose noise and
// edge counts fit inside tau's; that containment test approximates the
// sector, so every report carries the approximation note.
struct GammaReport {
  Rational alpha_tau{0};
  Rational gamma{0};
  sym::Symbol achiever;
  bool negative = false;
  std::string note;
};

GammaReport gamma_tau(const sym::Symbol& tau, const std::vector<sym::Symbol>& basis,
                      const sym::DegreeParams& params);

// The unique q in (2, infinity] with r_q(sigma) = 0, namely -d / r_inf(sigma).
// Requires exactly one noise derivative and r_inf(sigma) <= 0 < r_2(sigma).
Exponent p_star(const sym::Symbol& sigma, const sym::DegreeParams& params);

// Verifies exactly that r_inf(eta) - d (1/p(sigma) - 1/p) = r_p(tau).
// Requires the split identity r_p(tau) = r_p(sigma) + r_inf(eta); a violation
// throws rather than returning false.
bool embedding_numerology_check(const sym::Symbol& tau, const sym::Symbol& sigma, const sym::Symbol& eta,
                                const Exponent& p, const sym::DegreeParams& params);

// One correction term of the integrability upgrade: the planted factor whose
// truncation order moves with p, the derivative-free cofactor, and a named
// slot for the coefficient, whose value is not determined here.
struct DecompositionPair {
  sym::Symbol sigma;
  sym::Symbol eta;
  std::string lambda_slot;
};

// Correction pairs for a symbol with exactly one noise derivative sitting at
// most one planting deep, at most three noises in total. A root-level
// derivative yields no pairs; every emitted sigma satisfies the p_star
// preconditions and every pair satisfies r_p(tau) = r_p(sigma) + r_inf(eta).
std::vector<DecompositionPair> decomposition_l2_lp(const sym::Symbol& tau,
                                                   const sym::DegreeParams& params);

// Scan of the standing degree assumption: every basis symbol other than the
// bare noise must have degree above -d/2.
struct AssumptionReport {
  bool passed = false;
  Rational threshold{0};
  std::vector<sym::Symbol> violators;
};

AssumptionReport assumption_check(const std::vector<sym::Symbol>& basis,
                                  const sym::DegreeParams& params);

enum class StepKind { Base, Deterministic, Probabilistic, Analytic, Algebraic };

std::string step_kind_to_string(StepKind k);

// One schedule node. The needs/produces strings are statement labels such as
// "bd(B_2)" or "bd(Bdot_3, 2)"; prerequisites are ids of earlier obligations
// producing the needed statements.
struct Obligation {
  int id = 0;
  StepKind kind = StepKind::Base;
  std::string subject;
  int level = 0;
  std::vector<std::string> needs;
  std::string produces;
  std::vector<std::string> side_conditions;
  std::vector<int> prerequisites;
  std::string method;
  std::vector<DecompositionPair> pairs;
};

struct InductionPlan {
  std::vector<sym::Symbol> order;
  std::vector<Obligation> obligations;
};

// Schedule over the noise-carrying basis symbols in preorder. Per level i:
// a probabilistic step when r_inf(tau_i) <= 0 and a deterministic one
// otherwise, then (below the top level) an analytic step for the new
// derivative symbols at exponent two and an algebraic step upgrading them to
// all exponents with their correction pairs attached. The slack, subtracted
// from alpha0 when evaluating obligation outputs, makes the usual epsilon
// room explicit; it defaults to zero.
InductionPlan induction_plan(const std::vector<sym::Symbol>& basis, const sym::DegreeParams& params,
                             const Rational& slack = Rational(0));

std::string plan_to_json(const InductionPlan& plan, const sym::DegreeParams& params);
std::string plan_to_dot(const InductionPlan& plan);

}  // namespace renorm::ri
