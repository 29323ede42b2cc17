#include "cceeg/batching.hpp"

#include "cceeg/errors.hpp"
#include "cceeg/rng.hpp"

#include <numeric>

namespace cceeg {

std::vector<std::vector<std::int64_t>> make_batches(std::int64_t n, std::int64_t batch_size,
                                                    std::uint64_t seed) {
  if (n < 1) throw ConfigError("make_batches: empty sample set");
  if (batch_size < 1) throw ConfigError("make_batches: batch_size must be >= 1");
  std::vector<std::int64_t> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  for (std::int64_t i = n - 1; i > 0; --i) {
    const auto j = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(i + 1)));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  std::vector<std::vector<std::int64_t>> batches;
  for (std::int64_t start = 0; start < n; start += batch_size) {
    const std::int64_t end = std::min(n, start + batch_size);
    batches.emplace_back(perm.begin() + start, perm.begin() + end);
  }
  return batches;
}

}  // namespace cceeg
