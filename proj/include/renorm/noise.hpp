#pragma once

#include <cstdint>

#include "renorm/grid.hpp"

namespace renorm::noise {

// splitmix64 finalizer; bijective on 64-bit words.
std::uint64_t mix64(std::uint64_t z);

// Standard normal draw addressed by (key, counter); pure and order-free, so
// ensembles can split work across threads without changing the stream.
double gauss_at(std::uint64_t key, std::uint64_t counter);

struct NoiseSample {
  grid::GridField xi;
  std::uint64_t seed = 0;
};

// Discrete white noise: i.i.d. centered Gaussians of variance 1/h^d per site,
// so that h^d * sum_x xi(x) phi(x) has variance ||phi||_{L2}^2 in the limit.
NoiseSample sample_white_noise(int d, int N, double L, std::uint64_t seed,
                               std::uint64_t stream = 0);

// h^d sum over sites of f*g, compensated summation.
double pair_fields(const grid::GridField& f, const grid::GridField& g);

// h^d sum over sites of f.
double field_integral(const grid::GridField& f);

}  // namespace renorm::noise
