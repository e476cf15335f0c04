#include "regretforge/rng.hpp"

namespace regretforge {

namespace {

// splitmix64, the usual seed expander.
uint64_t mix(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t fnv1a(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

uint64_t stream_seed(uint64_t master, std::string_view name, uint64_t index) {
  uint64_t h = mix(master);
  h = mix(h ^ fnv1a(name));
  h = mix(h ^ index);
  return h;
}

std::mt19937_64 make_stream(uint64_t master, std::string_view name, uint64_t index) {
  return std::mt19937_64(stream_seed(master, name, index));
}

}  // namespace regretforge
