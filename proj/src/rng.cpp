#include "vfedsim/rng.hpp"

namespace vfedsim {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                          std::uint64_t a, std::uint64_t b) {
  // FNV-1a over the stream name, then fold in master and indices.
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : stream) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  h = mix64(h ^ master);
  h = mix64(h ^ a);
  h = mix64(h ^ b);
  return h;
}

std::mt19937_64 make_rng(std::uint64_t master, std::string_view stream,
                         std::uint64_t a, std::uint64_t b) {
  return std::mt19937_64(derive_seed(master, stream, a, b));
}

}  // namespace vfedsim
