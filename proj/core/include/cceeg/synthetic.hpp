#pragma once

#include "cceeg/sampleset.hpp"

#include <cstdint>
#include <vector>

namespace cceeg {

// One class's signal recipe: the listed channels carry a zero-phase sinusoid
// a*sin(2*pi*f*t/fs) with f drawn uniformly from [freq_lo, freq_hi] per
// sample; every channel additionally receives white Gaussian noise.
struct BandAssignment {
  std::vector<std::int64_t> channels;
  double freq_lo = 0.0;
  double freq_hi = 0.0;
  double amplitude = 0.0;
};

struct SyntheticSpec {
  std::int64_t n_samples = 0;
  std::int64_t n_channels = 0;
  double duration_s = 0.0;
  double sample_rate = 0.0;
  std::int64_t class_count = 1;  // 1 => unlabeled corpus, >= 2 => integer labels
  std::vector<BandAssignment> bands;  // one per class
  double noise_std = 0.0;            // in stored units
  std::uint64_t seed = 0;
};

// Deterministic in `seed`; sample i belongs to class (i mod class_count), so
// classes stay balanced. Labels are omitted when class_count == 1.
SampleSet generate_synthetic(const SyntheticSpec& spec);

}  // namespace cceeg
