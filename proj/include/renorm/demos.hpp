#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "renorm/grid.hpp"
#include "renorm/model.hpp"
#include "renorm/multiindex.hpp"

namespace renorm::demos {

// Tadpole divergence against the |z|^{-beta} kernel on the 2d torus: the
// naive value (K*C^eps)(0) across mollifier widths together with the
// distributional pairing <K*C^eps, phi> that stays Cauchy as eps shrinks.
struct DivergenceReport {
  std::vector<double> eps;
  std::vector<double> tadpole;      // naive (K*C^eps)(0)
  std::vector<double> paired;       // <K*C^eps, phi>, phi fixed near the origin
  model::SlopeFit tadpole_slope;    // log tadpole vs log(1/eps)
  std::vector<double> cauchy_gaps;  // |paired[i+1] - paired[i]|
};
DivergenceReport divergence_demo(double beta, const std::vector<double>& eps_list, int N,
                                 double L);

// Cylinder functional F = f(xi(phi_1), ..., xi(phi_n)) with its gradient.
struct CylinderFunctional {
  std::vector<grid::GridField> probes;
  std::function<double(const std::vector<double>&)> f;
  std::function<std::vector<double>(const std::vector<double>&)> grad;
};

// Monte Carlo check of Var F <= E||grad F||^2 where the derivative in
// direction h is sum_i d_i f <h, phi_i>, so the energy is the Gram-weighted
// gradient square.
struct PoincareReport {
  double variance = 0;
  double variance_se = 0;
  double energy = 0;
  double energy_se = 0;
};
PoincareReport poincare_check(const CylinderFunctional& F, int n_samples,
                              std::uint64_t seed);

// One fitted scaling law: values against offsets, log-log slope.
struct GermScaling {
  std::vector<double> offsets;
  std::vector<double> values;
  model::SlopeFit fit;
};

// Decomposition of the derivative model on the 3d torus for the cherry:
// A_x = {K*xi^eps - K*xi^eps(x)} h^eps has germ increments ~ |y|^{1/2-};
// the zeroth-order germ {K*h^eps - K*h^eps(x)} xi^eps only reaches ~ |y|;
// its second-order Taylor correction reaches ~ |y|^2; the first-order
// counterterm (.-x)_1 d_1 K*h^eps(x) xi^eps has L^6-in-x pairings ~
// lambda^{-1/2}.
struct DerivativeDecompositionReport {
  GermScaling a_germ;
  GermScaling b_naive;
  GermScaling b_plus;
  GermScaling c_term;
};
DerivativeDecompositionReport derivative_decomposition_demo(const grid::GridField& h,
                                                            double eps, std::uint64_t seed);

// Smooth input by its derivative jets: deriv(k, y) = d^k f(y).
using DerivCallable = std::function<double(const MultiIndex&, const std::vector<double>&)>;

// Pointed Taylor-remainder bundle F_x(y), |k| < gamma coefficients
// Q_k(y) = d^k f(y) - sum_{|l| < nu-|k|} d^{k+l} f(x) (y-x)^l / l!,
// with transport defect Q_k(z) - sum_{|l| < gamma-|k|} Q_{k+l}(y)(z-y)^l / l!.
// The defect normalized by ||z-y||^{gamma-|k|} is bounded globally and gains
// a factor lambda^{nu-gamma} when both points lie in B(x, lambda).
struct PointedNormReport {
  double rest_norm = 0;            // sup of normalized defect over sampled pairs
  std::vector<double> lambdas;
  std::vector<double> local_sups;  // same sup restricted to B(x, lambda)
  model::SlopeFit improvement;     // expected slope nu - gamma
  double sup_norm = 0;             // sup_y max_k |Q_k(y)| / ||y-x||^{nu-|k|}
  double p_norm = 0;               // discrete L^p average of the same ratio
  double ball_volume = 0;          // volume of the ball carrying the norms
};
PointedNormReport pointed_norm_archetype(const DerivCallable& deriv,
                                         const std::vector<int>& x_site, int gamma, int nu,
                                         double p, int d, int N, double L,
                                         const std::vector<double>& lambdas);

}  // namespace renorm::demos
