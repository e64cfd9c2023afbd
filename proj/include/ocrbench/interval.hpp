#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace ocrbench {

struct Interval {
  double lo = 0;
  double hi = 0;

  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Linear interpolation between closest ranks; `sorted` must be ascending.
double percentile(const std::vector<double>& sorted, double q);

/// splitmix64 as a UniformRandomBitGenerator; free to seed, for the many
/// short-lived streams of the rating shuffles.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Uniform index in [0, n) from one 64-bit draw. Same sequence on every
/// platform, unlike std::uniform_int_distribution.
template <class Rng>
std::size_t draw_index(Rng& rng, std::size_t n) {
  __extension__ using wide = unsigned __int128;
  return static_cast<std::size_t>((static_cast<wide>(rng()) * n) >> 64);
}

/// Independent stream seed for item `index` of a run seeded with `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace ocrbench
