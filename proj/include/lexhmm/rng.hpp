#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <sstream>
#include <string>

#include "lexhmm/types.hpp"

namespace lexhmm {

// All randomness flows through this wrapper so that runs are reproducible
// across platforms: we avoid std::uniform_*_distribution, whose output is
// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 1) : engine_(seed) {}

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    LEXHMM_CHECK(n > 0, "below(0)");
    // Rejection sampling to avoid modulo bias.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - (std::numeric_limits<std::uint64_t>::max() % n);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  // Index sampled proportional to non-negative weights; weights must not all be zero.
  std::size_t categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    LEXHMM_CHECK(total > 0.0, "categorical with zero total mass");
    double u = uniform() * total;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] <= 0.0) continue;
      last_positive = i;
      u -= weights[i];
      if (u <= 0.0) return i;
    }
    return last_positive;  // guards against round-off
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

  std::string serialize() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
  }

  void deserialize(const std::string& s) {
    std::istringstream is(s);
    is >> engine_;
    LEXHMM_CHECK(!is.fail(), "bad rng state");
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

// splitmix64 finalizer; used to derive independent per-particle streams
// from (seed, iteration, word type, particle).
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t iteration,
                                   std::uint64_t type, std::uint64_t particle) {
  return mix_seed(mix_seed(mix_seed(seed, iteration), type), particle);
}

}  // namespace lexhmm
