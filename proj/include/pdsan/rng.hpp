#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace pdsan {

/// Seeded mt19937_64 wrapper. `split` derives statistically independent
/// child streams, so separate consumers (coding, exploration, replay
/// sampling, environments) never share draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  Rng split(std::uint64_t stream) const;

  double uniform();                     // [0, 1)
  double uniform(double lo, double hi); // [lo, hi)
  double normal(double mean, double stddev);
  bool bernoulli(double p);
  std::size_t index(std::size_t n);     // uniform in [0, n)

  std::uint64_t seed() const { return seed_; }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

// Named stream ids, so call sites do not invent magic numbers.
namespace stream {
inline constexpr std::uint64_t init = 1;
inline constexpr std::uint64_t coding = 2;
inline constexpr std::uint64_t exploration = 3;
inline constexpr std::uint64_t replay = 4;
inline constexpr std::uint64_t target_noise = 5;
inline constexpr std::uint64_t env = 6;
inline constexpr std::uint64_t eval_env = 7;
inline constexpr std::uint64_t eval_coding = 8;
inline constexpr std::uint64_t warmup = 9;
}  // namespace stream

}  // namespace pdsan
