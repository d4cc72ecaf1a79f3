#include "renorm/noise.hpp"

#include <cmath>

namespace renorm::noise {

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

namespace {

double uniform01(std::uint64_t bits) {
  // 53 mantissa bits mapped into (0,1]; never returns 0, so log is safe.
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace

double gauss_at(std::uint64_t key, std::uint64_t counter) {
  std::uint64_t u1 = mix64(key + 2 * counter * 0x9e3779b97f4a7c15ull);
  std::uint64_t u2 = mix64(key + (2 * counter + 1) * 0x9e3779b97f4a7c15ull);
  double r = std::sqrt(-2.0 * std::log(uniform01(u1)));
  return r * std::cos(2.0 * M_PI * uniform01(u2));
}

NoiseSample sample_white_noise(int d, int N, double L, std::uint64_t seed,
                               std::uint64_t stream) {
  grid::GridField xi(d, N, L);
  std::uint64_t key = mix64(mix64(seed) ^ (stream * 0xbf58476d1ce4e5b9ull + 1));
  double sd = std::pow(xi.h(), -0.5 * d);
  for (std::size_t i = 0; i < xi.v.size(); ++i)
    xi.v[i] = sd * gauss_at(key, static_cast<std::uint64_t>(i));
  return {std::move(xi), seed};
}

double pair_fields(const grid::GridField& f, const grid::GridField& g) {
  if (f.d != g.d || f.N != g.N || f.L != g.L)
    throw grid::GridError("pairing needs fields on the same grid");
  double sum = 0, comp = 0;
  for (std::size_t i = 0; i < f.v.size(); ++i) {
    double term = f.v[i] * g.v[i] - comp;
    double next = sum + term;
    comp = (next - sum) - term;
    sum = next;
  }
  return sum * std::pow(f.h(), f.d);
}

double field_integral(const grid::GridField& f) {
  double sum = 0, comp = 0;
  for (double x : f.v) {
    double term = x - comp;
    double next = sum + term;
    comp = (next - sum) - term;
    sum = next;
  }
  return sum * std::pow(f.h(), f.d);
}

}  // namespace renorm::noise
