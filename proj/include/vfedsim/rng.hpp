#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace vfedsim {

// splitmix64 finalizer, used to decorrelate derived seeds.
std::uint64_t mix64(std::uint64_t x);

// Stable seed for a named substream of the master seed. Streams are keyed by
// (name, a, b) so every module draws from its own generator; adding a new
// stream never shifts the draws of an existing one, and per-entity streams
// (e.g. one per vehicle per round) make results independent of thread
// scheduling.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                          std::uint64_t a = 0, std::uint64_t b = 0);

std::mt19937_64 make_rng(std::uint64_t master, std::string_view stream,
                         std::uint64_t a = 0, std::uint64_t b = 0);

}  // namespace vfedsim
