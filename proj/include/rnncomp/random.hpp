#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace rnncomp {

// mt19937_64 plus hand-rolled real/bernoulli draws: the standard engine is
// bit-specified, the standard distributions are not, and archives and metric
// files must reproduce across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  bool bernoulli(double p) { return uniform() < p; }
  // Uniform integer in [lo, hi] (inclusive), rejection-sampled.
  std::int64_t integer(std::int64_t lo, std::int64_t hi);
  // Standard normal via Box-Muller.
  double normal();

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

// Independent stream seed for a named purpose ("init", "dropout", "task", ...).
std::uint64_t derive_seed(std::uint64_t root, std::string_view purpose, std::uint64_t index = 0);

}  // namespace rnncomp
