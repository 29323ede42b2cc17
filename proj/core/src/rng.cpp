#include "cceeg/rng.hpp"

namespace cceeg {

namespace {

// splitmix64 finalizer; good avalanche, stable across platforms.
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a over the tag bytes.
std::uint64_t hash_tag(const std::string& tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, const std::string& tag, std::uint64_t index) {
  return mix64(mix64(master ^ hash_tag(tag)) ^ index);
}

}  // namespace cceeg
