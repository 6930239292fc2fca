// Deterministic RNG: one master seed per run, substreams derived per task so
// parallel fan-out cannot perturb the sampled corpora.
#pragma once

#include <cstdint>
#include <random>

namespace proplab {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Independent substream for task `index` under the same master seed.
  static Rng substream(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t s = seed ^ (0xa076'1d64'78bd'642fULL * (index + 1));
    std::uint64_t mixed = splitmix64(s);
    return Rng(mixed);
  }

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double normal(double mean = 0.0, double sd = 1.0) {
    return std::normal_distribution<double>(mean, sd)(engine_);
  }
  std::uint64_t integer(std::uint64_t n) {  // [0, n)
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
  }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace proplab
