#pragma once

#include <cstdint>
#include <vector>

namespace cceeg {

// Shuffled minibatch index lists for one epoch: a seeded Fisher-Yates
// permutation of [0, n) cut into ceil(n/batch_size) slices (last one may be
// short). Same (n, batch_size, seed) always yields the same batches.
std::vector<std::vector<std::int64_t>> make_batches(std::int64_t n, std::int64_t batch_size,
                                                    std::uint64_t seed);

}  // namespace cceeg
