#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace msim {

// All stochastic draws go through this wrapper instead of <random>
// distributions, whose output is implementation-defined. Bit-for-bit
// reproducibility for a given seed only depends on mt19937_64, which the
// standard pins exactly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  void reseed(std::uint64_t seed) { gen_.seed(seed); }

  std::uint64_t raw() { return gen_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // One draw per call (Box-Muller, cosine branch); no cached state.
  double normal(double mean, double stddev) {
    double u1 = uniform01();
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1 + 1e-300));
    return mean + stddev * r * std::cos(6.283185307179586 * u2);
  }

  // Index drawn proportionally to the weights encoded as a cumulative sum
  // (strictly positive weights; cdf.back() is the total mass).
  std::size_t pick_cdf(const std::vector<double>& cdf) {
    double x = uniform01() * cdf.back();
    return static_cast<std::size_t>(
        std::upper_bound(cdf.begin(), cdf.end(), x) - cdf.begin());
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace msim
