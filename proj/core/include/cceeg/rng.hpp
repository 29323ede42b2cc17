#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace cceeg {

// Deterministic random stream. mt19937_64 plus a hand-rolled Box-Muller and
// an explicit uniform construction so sequences are reproducible bit-for-bit
// across standard libraries (std::normal_distribution is not portable).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1): 53 random mantissa bits.
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection sampling removes modulo bias.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = eng_();
    } while (v >= limit);
    return v % n;
  }

  // Standard normal via Box-Muller (one value per pair; the second is cached).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    // Avoid log(0).
    while (u1 <= 0.0) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Stable sub-seed derivation: mixes a master seed with a purpose tag and an
// index so independent streams (init, masking, dropout, shuffling, ...) never
// collide and resuming a run can reconstruct any stream from scratch.
std::uint64_t derive_seed(std::uint64_t master, const std::string& tag, std::uint64_t index);

}  // namespace cceeg
