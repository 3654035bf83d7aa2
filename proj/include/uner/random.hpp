#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>
#include <string_view>

namespace uner {

// SplitMix64 (Steele, Lea & Flood 2014). A 64-bit splittable generator whose
// whole state is a single counter; new streams are obtained by hashing a
// parent seed with stream keys (see derive_seed), never by sharing state.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed = 0) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

inline constexpr std::string_view kRngAlgorithm =
    "splitmix64; stream seed = fold(mix(base ^ golden), mix(key + golden)) over keys";

// Stream-split rule: seed_k = mix(seed_{k-1} ^ mix(key_k + golden)), starting
// from mix(base ^ golden). Order of keys matters; distinct key tuples give
// statistically independent streams.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys) noexcept;

// FNV-1a, used to turn textual tags ("S2", "uner") into stream keys.
std::uint64_t hash_tag(std::string_view tag) noexcept;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double normal() { return std_normal_(engine_); }
  double normal(double mean, double sd) { return mean + sd * std_normal_(engine_); }
  bool bernoulli(double p) { return uniform() < p; }

  // Gamma with the given shape and unit scale.
  double gamma(double shape) { return std::gamma_distribution<double>(shape, 1.0)(engine_); }
  // Inverse gamma IG(shape, rate): density proportional to x^{-shape-1} exp(-rate/x).
  double inv_gamma(double shape, double rate) { return rate / gamma(shape); }
  double beta(double a, double b) {
    const double x = gamma(a);
    const double y = gamma(b);
    return x / (x + y);
  }

  SplitMix64& engine() noexcept { return engine_; }

 private:
  SplitMix64 engine_;
  std::normal_distribution<double> std_normal_{0.0, 1.0};
};

}  // namespace uner
