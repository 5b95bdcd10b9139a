#ifndef HJBFLOW_RNG_HPP
#define HJBFLOW_RNG_HPP

#include <cmath>
#include <cstdint>
#include <string_view>

#include "hjbflow/common.hpp"

namespace hjbflow {

// Deterministic, platform-independent random source. std::mt19937_64 is
// portable but the standard distributions are not, so both the generator and
// the double mappings are implemented here.
//
// Stream splitting rule: a named child stream is seeded with
//   splitmix64(master ^ fnv1a64(name))
// and a per-index stream (one per initial condition, trajectory, ...) with
//   splitmix64(parent ^ (0x9e3779b97f4a7c15 * (index + 1))).
// Every table and simulation in the toolkit can be reproduced from the one
// master seed via this rule.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    // xoshiro256** state, expanded from the seed via splitmix64.
    std::uint64_t sm = seed;
    for (auto& word : state_) {
      sm = splitmix64(sm);
      word = sm;
    }
  }

  static Rng stream(std::uint64_t master, std::string_view name) {
    return Rng(splitmix64(master ^ fnv1a64(name)));
  }
  static Rng substream(std::uint64_t parent, std::uint64_t index) {
    return Rng(splitmix64(parent ^ (0x9e3779b97f4a7c15ULL * (index + 1))));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; one value per call, cached pair member discarded for
  // simplicity of the stream-splitting contract.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  VectorXd uniform_in_box(const Box& box) {
    VectorXd x(box.dim());
    for (int i = 0; i < box.dim(); ++i) x[i] = uniform(box.lo[i], box.hi[i]);
    return x;
  }

  VectorXd normal_vector(int n, double sigma) {
    VectorXd x(n);
    for (int i = 0; i < n; ++i) x[i] = sigma * normal();
    return x;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t state_[4];
};

}  // namespace hjbflow

#endif  // HJBFLOW_RNG_HPP
