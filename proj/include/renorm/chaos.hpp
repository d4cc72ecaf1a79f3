#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "renorm/grid.hpp"
#include "renorm/model.hpp"
#include "renorm/symbols.hpp"

namespace renorm::chaos {

// Built-in catalogue: the pure noise, the cherry with an undecorated edge,
// and the three-noise tree whose outer edge is undecorated and whose two
// inner edges to the noises carry a common derivative decoration.
enum class ChaosTree { Noise, Cherry, Triple };

struct ChaosShape {
  ChaosTree tree = ChaosTree::Noise;
  MultiIndex inner_derivative;  // decoration of the noise-bearing inner edges
};

// Xi -> Noise; Xi*I_0(Xi) -> Cherry; Xi*I_0(I_k(Xi)^2) -> Triple.
std::optional<ChaosShape> classify_chaos_symbol(const sym::Symbol& tau);
ChaosShape classify_or_throw(const sym::Symbol& tau);

// One displayed term of a chaos kernel: the chaos order it contributes to,
// its combinatorial prefactor, and the iterated integral in text form with
// q = d^k K * rho^eps.
struct ChaosTermInfo {
  int order = 0;
  long long factor = 1;
  std::string integrand;
};

// All nonzero kernel terms; orders absent from the list have a vanishing
// kernel. The three-noise tree has no order-2 term and exactly two order-1
// terms, one carrying the factor 2.
std::vector<ChaosTermInfo> chaos_kernel_terms(const sym::Symbol& tau);

struct ChaosPairing {
  std::map<int, double> per_order;  // Ito-isometry pairing per chaos order
  double total = 0;                 // sum over orders = E[(X_1 - X_2)(phi)]^2-pairing
};

// Quadrature value of E[((X^{eps1} - X^{eps2})(phi_lambda))^2] decomposed by
// chaos order, where X^eps is the naive interpretation of tau with mollifier
// width eps and phi_lambda is the built-in bump at scale lambda centered at
// L/2. Every convolution is the discrete periodic one, so the result is the
// exact finite-grid expectation.
ChaosPairing chaos_pairing(const sym::Symbol& tau, double eps1, double eps2, double lambda,
                           int d, int N, double L);

// Direct Monte Carlo of the same squared pairing; one white-noise sample
// drives both mollifier widths per seed.
model::MCValue chaos_mc(const sym::Symbol& tau, double eps1, double eps2, double lambda,
                        int d, int N, double L, const model::MCSpec& mc);

}  // namespace renorm::chaos
