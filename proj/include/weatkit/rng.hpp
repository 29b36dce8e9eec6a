#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string_view>
#include <vector>

#include "weatkit/error.hpp"

// Self-contained pseudo-random machinery. The standard <random> engines are
// portable but the distributions are not (their algorithms are
// implementation-defined), and the pipeline promises byte-identical outputs
// for a fixed seed. Everything random in this project flows through Rng.

namespace weatkit {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-style seed derivation: a master seed fans out to independent
// sub-seeds keyed by (purpose, repetition, group). Adding or removing groups
// never perturbs the randomness of other groups.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose,
                                 std::uint64_t rep = 0,
                                 std::string_view group = {}) {
  std::uint64_t h = 0x6a09e667f3bcc909ULL ^ master;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h = splitmix64(h);
  };
  for (unsigned char c : purpose) mix(c + 0x100ULL);
  mix(0xfeedULL);
  mix(rep);
  mix(0xbeefULL);
  for (unsigned char c : group) mix(c + 0x200ULL);
  mix(0xcafeULL);
  return h;
}

// xoshiro256** (Blackman & Vigna), seeded via splitmix64.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64(sm);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Unbiased integer in [0, bound) via rejection (Lemire).
  std::uint64_t below(std::uint64_t bound) {
    using u128 = unsigned __int128;
    std::uint64_t x = next_u64();
    u128 m = u128(x) * u128(bound);
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < bound) {
      std::uint64_t threshold = (0 - bound) % bound;
      while (lo < threshold) {
        x = next_u64();
        m = u128(x) * u128(bound);
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform double in (0, 1]; safe as a log() argument.
  double uniform_pos() { return double((next_u64() >> 11) + 1) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller (no cached spare, so the stream is a pure
  // function of the number of calls).
  double normal() {
    double u1 = uniform_pos();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Poisson via Knuth's multiplication method; fine for the small means used
  // by the corpus generator.
  std::uint64_t poisson(double mean) {
    double limit = std::exp(-mean);
    double prod = uniform();
    std::uint64_t n = 0;
    while (prod > limit) {
      ++n;
      prod *= uniform();
    }
    return n;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4];
};

// First k entries of a seeded permutation of [0, n): uniform sampling without
// replacement, in shuffled order (partial Fisher-Yates).
inline std::vector<std::uint32_t> sample_without_replacement(std::uint64_t n,
                                                             std::uint64_t k,
                                                             Rng& rng) {
  if (k > n)
    throw DataError("sample_without_replacement: requested " +
                    std::to_string(k) + " from population of " +
                    std::to_string(n));
  std::vector<std::uint32_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0u);
  for (std::uint64_t i = 0; i < k; ++i) {
    std::uint64_t j = i + rng.below(n - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

// Walker/Vose alias sampler over a fixed discrete distribution. Exact (no
// quantization of the probabilities), O(1) per draw.
class AliasSampler {
 public:
  AliasSampler() = default;

  explicit AliasSampler(const std::vector<double>& weights) {
    std::size_t n = weights.size();
    if (n == 0) throw NumericError("alias sampler: empty weight vector");
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw NumericError("alias sampler: negative weight");
      total += w;
    }
    if (!(total > 0.0)) throw NumericError("alias sampler: zero total weight");

    prob_.assign(n, 0.0);
    alias_.assign(n, 0);
    std::vector<double> scaled(n);
    for (std::size_t i = 0; i < n; ++i) scaled[i] = weights[i] * n / total;

    std::vector<std::uint32_t> small, large;
    for (std::size_t i = 0; i < n; ++i)
      (scaled[i] < 1.0 ? small : large).push_back(std::uint32_t(i));

    while (!small.empty() && !large.empty()) {
      std::uint32_t s = small.back();
      small.pop_back();
      std::uint32_t l = large.back();
      large.pop_back();
      prob_[s] = scaled[s];
      alias_[s] = l;
      scaled[l] = (scaled[l] + scaled[s]) - 1.0;
      (scaled[l] < 1.0 ? small : large).push_back(l);
    }
    for (std::uint32_t i : large) prob_[i] = 1.0;
    for (std::uint32_t i : small) prob_[i] = 1.0;
  }

  std::uint32_t sample(Rng& rng) const {
    std::uint32_t i = std::uint32_t(rng.below(prob_.size()));
    return rng.uniform() < prob_[i] ? i : alias_[i];
  }

  std::size_t size() const { return prob_.size(); }

 private:
  std::vector<double> prob_;
  std::vector<std::uint32_t> alias_;
};

}  // namespace weatkit
