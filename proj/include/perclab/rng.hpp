#pragma once

#include <cstdint>
#include <limits>

namespace perclab {

/// A (master seed, stream index) pair. Every random quantity in the library is
/// a pure function of a Seed and an item index, so samples can be regenerated
/// independently of evaluation order or thread assignment.
struct Seed {
  std::uint64_t master = 0;
  std::uint64_t stream = 0;

  friend bool operator==(const Seed&, const Seed&) = default;
};

namespace rng {

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Domain tags keep draws for different purposes (edges, ghost vertices,
/// tree offspring, ...) on disjoint counter sequences.
enum class Domain : std::uint64_t {
  edge = 1,
  ghost = 2,
  tree = 3,
  shuffle = 4,
};

constexpr std::uint64_t key(const Seed& seed, Domain domain) noexcept {
  std::uint64_t k = mix64(seed.master ^ 0x6a09e667f3bcc908ULL);
  k = mix64(k ^ seed.stream);
  return mix64(k ^ static_cast<std::uint64_t>(domain));
}

constexpr std::uint64_t bits(std::uint64_t stream_key, std::uint64_t index) noexcept {
  return mix64(stream_key ^ mix64(index + 0x3c6ef372fe94f82bULL));
}

/// Uniform double in [0, 1) with 53 random bits.
constexpr double to_unit(std::uint64_t b) noexcept {
  return static_cast<double>(b >> 11) * 0x1.0p-53;
}

constexpr double uniform(std::uint64_t stream_key, std::uint64_t index) noexcept {
  return to_unit(bits(stream_key, index));
}

}  // namespace rng

/// Counter-based generator: the i-th draw is bits(key, i). Satisfies
/// UniformRandomBitGenerator so it can drive <random> distributions, but the
/// library only uses it through uniform().
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(const Seed& seed, rng::Domain domain) noexcept
      : key_(rng::key(seed, domain)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept { return rng::bits(key_, counter_++); }
  double uniform() noexcept { return rng::to_unit((*this)()); }
  bool bernoulli(double p) noexcept { return uniform() < p; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace perclab
