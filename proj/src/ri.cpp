#include "renorm/ri.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <sstream>

#include "json.hpp"
#include "renorm/multiindex.hpp"

namespace renorm::ri {

namespace {

const Rational kZero(0);
const Rational kHalf(1, 2);

void require_p_range(const Exponent& p) {
  if (p.inv < kZero || p.inv > kHalf) {
    throw RIError("exponent p must lie in [2, infinity], got reciprocal " +
                  rational_to_string(p.inv));
  }
}

int noise_derivatives(const sym::Symbol& s) { return s->n_xidot; }

bool is_polynomial(const sym::Symbol& s) {
  return s->n_xi == 0 && s->n_xidot == 0 && s->n_edges == 0;
}

Rational r_at(const sym::Symbol& s, const Rational& inv_p, const sym::DegreeParams& params) {
  Degree dot{Rational(1), Rational(params.d) * inv_p};
  return sym::degree_with_xidot(s, params, dot).value(params.alpha0);
}

Rational r_inf(const sym::Symbol& s, const sym::DegreeParams& params) {
  return r_at(s, kZero, params);
}

Rational r_two(const sym::Symbol& s, const sym::DegreeParams& params) {
  return r_at(s, kHalf, params);
}

void require_plain_basis(const std::vector<sym::Symbol>& basis, const char* who) {
  for (const sym::Symbol& s : basis) {
    if (noise_derivatives(s) > 0) {
      throw RIError(std::string(who) + ": basis must be free of noise derivatives, got " +
                    s->text);
    }
  }
}

struct DecompResult {
  std::vector<DecompositionPair> pairs;
  std::string rejection;  // nonempty when tau falls outside the catalogue
};

DecompResult try_decomposition(const sym::Symbol& tau, const sym::DegreeParams& params) {
  DecompResult out;
  if (noise_derivatives(tau) != 1) {
    throw RIError("decomposition needs exactly one noise derivative, got " + tau->text);
  }
  if (tau->n_xi + tau->n_xidot > 3) {
    out.rejection = "more than three noises";
    return out;
  }
  std::vector<sym::Symbol> factors = sym::root_factors(tau);
  sym::Symbol dotted;
  std::vector<sym::Symbol> rest;
  for (const sym::Symbol& f : factors) {
    if (f->n_xidot > 0) {
      dotted = f;
    } else {
      rest.push_back(f);
    }
  }
  // A root-level derivative needs no truncation corrections: its model is the
  // same germ at every exponent.
  if (dotted->kind == sym::Kind::XiDot) return out;
  bool at_surface = false;
  for (const sym::Symbol& g : sym::root_factors(dotted->child)) {
    if (g->kind == sym::Kind::XiDot) at_surface = true;
  }
  if (!at_surface) {
    out.rejection = "noise derivative nested below one planting";
    return out;
  }
  // The truncation order of the dotted planted factor is the only one that
  // moves with p; each dropped jet term contributes one pair. Raising the
  // decoration by l lowers both degrees by |l|, so orders at or above the
  // base r_2 cannot enter the window.
  Rational base_r2 = r_two(dotted, params);
  int emitted = 0;
  for (int m = 0; base_r2 - Rational(m) > kZero; ++m) {
    for (const MultiIndex& l : multiindices_of_order(params.d, m)) {
      sym::Symbol sigma = sym::planted(dotted->mi + l, dotted->child);
      Rational s_inf = r_inf(sigma, params);
      Rational s_two = r_two(sigma, params);
      if (!(s_inf <= kZero && s_two > kZero)) continue;
      std::vector<sym::Symbol> eta_factors = rest;
      if (m > 0) eta_factors.push_back(sym::poly(l));
      sym::Symbol eta = sym::product(eta_factors);
      ++emitted;
      out.pairs.push_back({sigma, eta, "lambda_" + std::to_string(emitted)});
    }
  }
  return out;
}

std::string set_to_string(const std::vector<sym::Symbol>& xs) {
  std::string out = "{";
  for (size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    out += xs[i]->text;
  }
  return out + "}";
}

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

}  // namespace

Exponent Exponent::from_value(const Rational& i) {
  if (i < Rational(1)) {
    throw RIError("integrability exponent must be at least 1, got " + rational_to_string(i));
  }
  return {Rational(1) / i};
}

Exponent Exponent::from_reciprocal(const Rational& inv) {
  if (inv < kZero || inv > Rational(1)) {
    throw RIError("exponent reciprocal must lie in [0, 1], got " + rational_to_string(inv));
  }
  return {inv};
}

Rational Exponent::value() const {
  if (is_infinite()) throw RIError("infinite exponent has no finite value");
  return Rational(1) / inv;
}

std::string exponent_to_string(const Exponent& e) {
  return e.is_infinite() ? "inf" : rational_to_string(e.value());
}

std::string ripair_to_string(const RIPair& a) {
  return "(" + rational_to_string(a.r) + ", " + exponent_to_string(a.i) + ")";
}

RIOrder ri_compare(const RIPair& b, const RIPair& a) {
  bool integ = b.i.inv <= a.i.inv;  // i(b) >= i(a)
  return {b.r <= a.r && integ, b.r < a.r && integ};
}

RIPair ri_ominus(const RIPair& a, const RIPair& b) {
  if (!ri_compare(b, a).preceq) {
    throw RIError("ominus requires " + ripair_to_string(b) + " preceq " + ripair_to_string(a));
  }
  return {a.r - b.r, Exponent{a.i.inv - b.i.inv}};
}

Rational degree_rp(const sym::Symbol& tau, const Exponent& p, const sym::DegreeParams& params) {
  require_p_range(p);
  if (noise_derivatives(tau) > 1) {
    throw RIError("degree_rp handles at most one noise derivative, got " + tau->text);
  }
  return r_at(tau, p.inv, params);
}

Exponent integrability_ip(const sym::Symbol& tau, const Exponent& p) {
  require_p_range(p);
  int n = noise_derivatives(tau);
  if (n > 1) {
    throw RIError("integrability_ip handles at most one noise derivative, got " + tau->text);
  }
  return n == 0 ? Exponent::infinite() : p;
}

GammaReport gamma_tau(const sym::Symbol& tau, const std::vector<sym::Symbol>& basis,
                      const sym::DegreeParams& params) {
  require_plain_basis(basis, "gamma_tau");
  if (std::find(basis.begin(), basis.end(), tau) == basis.end()) {
    throw RIError("gamma_tau: symbol " + tau->text + " is not in the basis");
  }
  GammaReport report;
  bool found = false;
  for (const sym::Symbol& s : basis) {
    if (is_polynomial(s)) continue;
    if (s->n_xi > tau->n_xi || s->n_edges > tau->n_edges) continue;
    Rational deg = sym::degree_value(s, params);
    if (!found || deg < report.alpha_tau ||
        (deg == report.alpha_tau && s->text < report.achiever->text)) {
      report.alpha_tau = deg;
      report.achiever = s;
      found = true;
    }
  }
  if (!found) {
    throw RIError("gamma_tau: no non-polynomial basis symbol fits inside " + tau->text);
  }
  report.gamma = report.alpha_tau + Rational(params.d, 2);
  report.negative = report.gamma < kZero;
  report.note =
      "sector approximated by noise and edge count containment; the floor may "
      "over- or under-shoot the true sector minimum";
  return report;
}

Exponent p_star(const sym::Symbol& sigma, const sym::DegreeParams& params) {
  if (noise_derivatives(sigma) != 1) {
    throw RIError("p_star needs exactly one noise derivative, got " + sigma->text);
  }
  Rational ri = r_inf(sigma, params);
  Rational r2 = r_two(sigma, params);
  if (!(ri <= kZero && r2 > kZero)) {
    throw RIError("p_star window violated for " + sigma->text + ": r_inf = " +
                  rational_to_string(ri) + ", r_2 = " + rational_to_string(r2));
  }
  if (ri == kZero) return Exponent::infinite();
  return Exponent::from_value(-Rational(params.d) / ri);
}

bool embedding_numerology_check(const sym::Symbol& tau, const sym::Symbol& sigma, const sym::Symbol& eta,
                                const Exponent& p, const sym::DegreeParams& params) {
  require_p_range(p);
  if (noise_derivatives(eta) != 0) {
    throw RIError("embedding check needs a derivative-free cofactor, got " + eta->text);
  }
  Exponent ps = p_star(sigma, params);
  Rational rp_tau = degree_rp(tau, p, params);
  Rational rp_sigma = degree_rp(sigma, p, params);
  Rational ri_eta = r_inf(eta, params);
  if (rp_tau != rp_sigma + ri_eta) {
    throw RIError("degree identity violated: r_p(" + tau->text + ") != r_p(" + sigma->text +
                  ") + r_inf(" + eta->text + ")");
  }
  return ri_eta - Rational(params.d) * (ps.inv - p.inv) == rp_tau;
}

std::vector<DecompositionPair> decomposition_l2_lp(const sym::Symbol& tau,
                                                   const sym::DegreeParams& params) {
  DecompResult res = try_decomposition(tau, params);
  if (!res.rejection.empty()) {
    throw RIError("decomposition outside catalogue for " + tau->text + ": " + res.rejection);
  }
  return res.pairs;
}

AssumptionReport assumption_check(const std::vector<sym::Symbol>& basis,
                                  const sym::DegreeParams& params) {
  require_plain_basis(basis, "assumption_check");
  AssumptionReport report;
  report.threshold = -Rational(params.d, 2);
  for (const sym::Symbol& s : basis) {
    if (s == sym::xi()) continue;
    if (sym::degree_value(s, params) <= report.threshold) report.violators.push_back(s);
  }
  report.passed = report.violators.empty();
  return report;
}

std::string step_kind_to_string(StepKind k) {
  switch (k) {
    case StepKind::Base: return "base";
    case StepKind::Deterministic: return "deterministic";
    case StepKind::Probabilistic: return "probabilistic";
    case StepKind::Analytic: return "analytic";
    case StepKind::Algebraic: return "algebraic";
  }
  return "unknown";
}

InductionPlan induction_plan(const std::vector<sym::Symbol>& basis, const sym::DegreeParams& params,
                             const Rational& slack) {
  require_plain_basis(basis, "induction_plan");
  if (slack < kZero) throw RIError("slack must be nonnegative");
  AssumptionReport gate = assumption_check(basis, params);
  if (!gate.passed) {
    throw RIError("degree assumption fails for " + set_to_string(gate.violators));
  }
  // Ordering uses the raw degrees; the slack only shifts the reported
  // conditions and the branch decisions on the obligations themselves.
  sym::DegreeParams eff = params;
  eff.alpha0 -= slack;

  InductionPlan plan;
  for (const sym::Symbol& s : basis) {
    if (s->n_xi > 0 && std::find(plan.order.begin(), plan.order.end(), s) == plan.order.end()) {
      plan.order.push_back(s);
    }
  }
  std::stable_sort(plan.order.begin(), plan.order.end(), [&](const sym::Symbol& a, const sym::Symbol& b) {
    return sym::preorder_cmp(a, b, params) == std::strong_ordering::less;
  });
  int n = static_cast<int>(plan.order.size());
  if (n == 0) return plan;

  auto lab_b = [](int i) { return "bd(B_" + std::to_string(i) + ")"; };
  auto lab_dot = [](int i) { return "bd(Bdot_" + std::to_string(i) + ")"; };
  auto lab_dot2 = [](int i) { return "bd(Bdot_" + std::to_string(i) + ", 2)"; };

  std::map<std::string, int> producer;
  auto push = [&](Obligation ob) {
    ob.id = static_cast<int>(plan.obligations.size());
    for (const std::string& need : ob.needs) {
      auto it = producer.find(need);
      if (it == producer.end() || it->second >= ob.id) {
        throw RIError("schedule order broken at " + need);
      }
      ob.prerequisites.push_back(it->second);
    }
    producer[ob.produces] = ob.id;
    plan.obligations.push_back(std::move(ob));
  };

  std::vector<sym::Symbol> dotted_prev;
  {
    std::vector<sym::Symbol> first(plan.order.begin(), plan.order.begin() + 1);
    dotted_prev = sym::extended_basis(first);
    Obligation base;
    base.kind = StepKind::Base;
    base.subject = "Bdot_1";
    base.level = 1;
    base.produces = lab_dot(1);
    base.side_conditions.push_back("Bdot_1 = " + set_to_string(dotted_prev));
    base.method = "elementary deterministic estimates";
    push(std::move(base));
  }

  for (int i = 1; i <= n; ++i) {
    const sym::Symbol& tau = plan.order[i - 1];
    Rational ri = r_inf(tau, eff);
    Obligation step;
    step.kind = ri <= kZero ? StepKind::Probabilistic : StepKind::Deterministic;
    step.subject = tau->text;
    step.level = i;
    if (i > 1) step.needs.push_back(lab_b(i - 1));
    step.needs.push_back(lab_dot(i));
    step.produces = lab_b(i);
    step.side_conditions.push_back("r_inf(" + tau->text + ") = " + rational_to_string(ri) +
                                   (ri <= kZero ? " <= 0" : " > 0"));
    step.method = step.kind == StepKind::Probabilistic ? "spectral gap inequality"
                                                       : "reconstruction of a smooth germ";
    push(std::move(step));

    if (i == n) break;
    std::vector<sym::Symbol> next(plan.order.begin(), plan.order.begin() + i + 1);
    std::vector<sym::Symbol> dotted_next = sym::extended_basis(next);
    std::vector<sym::Symbol> fresh;
    std::set_difference(dotted_next.begin(), dotted_next.end(), dotted_prev.begin(),
                        dotted_prev.end(), std::back_inserter(fresh), sym::SymbolTextLess{});

    Obligation analytic;
    analytic.kind = StepKind::Analytic;
    analytic.subject = "Bdot_" + std::to_string(i + 1);
    analytic.level = i;
    analytic.needs = {lab_b(i), lab_dot(i)};
    analytic.produces = lab_dot2(i + 1);
    for (const sym::Symbol& s : fresh) {
      Rational r2 = r_two(s, eff);
      analytic.side_conditions.push_back("r_2(" + s->text + ") = " + rational_to_string(r2) +
                                         (r2 > kZero ? " > 0" : " <= 0 outside the window"));
    }
    analytic.method = "pathwise product and integration bounds";
    push(std::move(analytic));

    Obligation algebraic;
    algebraic.kind = StepKind::Algebraic;
    algebraic.subject = "Bdot_" + std::to_string(i + 1);
    algebraic.level = i;
    algebraic.needs = {lab_b(i), lab_dot(i), lab_dot2(i + 1)};
    algebraic.produces = lab_dot(i + 1);
    for (const sym::Symbol& s : fresh) {
      DecompResult res = try_decomposition(s, eff);
      if (!res.rejection.empty()) {
        algebraic.side_conditions.push_back("decomposition outside catalogue for " + s->text +
                                            ": " + res.rejection);
        continue;
      }
      algebraic.side_conditions.push_back("decomposition of " + s->text + ": " +
                                          std::to_string(res.pairs.size()) + " pairs");
      for (DecompositionPair& pr : res.pairs) {
        pr.lambda_slot = "lambda_" + std::to_string(algebraic.pairs.size() + 1);
        algebraic.pairs.push_back(std::move(pr));
      }
    }
    algebraic.method = "integrability upgrade by truncation corrections";
    push(std::move(algebraic));

    dotted_prev = std::move(dotted_next);
  }
  return plan;
}

std::string plan_to_json(const InductionPlan& plan, const sym::DegreeParams& params) {
  nlohmann::json j;
  j["order"] = nlohmann::json::array();
  for (const sym::Symbol& s : plan.order) {
    j["order"].push_back({{"symbol", s->text},
                          {"degree", rational_to_string(sym::degree_value(s, params))}});
  }
  j["obligations"] = nlohmann::json::array();
  for (const Obligation& ob : plan.obligations) {
    nlohmann::json o;
    o["id"] = ob.id;
    o["kind"] = step_kind_to_string(ob.kind);
    o["subject"] = ob.subject;
    o["level"] = ob.level;
    o["needs"] = ob.needs;
    o["produces"] = ob.produces;
    o["side_conditions"] = ob.side_conditions;
    o["prerequisites"] = ob.prerequisites;
    o["method"] = ob.method;
    o["pairs"] = nlohmann::json::array();
    for (const DecompositionPair& pr : ob.pairs) {
      o["pairs"].push_back({{"sigma", pr.sigma->text},
                            {"eta", pr.eta->text},
                            {"lambda_slot", pr.lambda_slot}});
    }
    j["obligations"].push_back(std::move(o));
  }
  return j.dump(2);
}

std::string plan_to_dot(const InductionPlan& plan) {
  std::ostringstream out;
  out << "digraph plan {\n  rankdir=LR;\n  node [shape=box];\n";
  for (const Obligation& ob : plan.obligations) {
    out << "  n" << ob.id << " [label=\""
        << dot_escape(step_kind_to_string(ob.kind) + ": " + ob.subject) << "\"];\n";
  }
  for (const Obligation& ob : plan.obligations) {
    for (int p : ob.prerequisites) {
      out << "  n" << p << " -> n" << ob.id << ";\n";
    }
  }
  out << "}\n";
  return out.str();
}

}  // namespace renorm::ri
