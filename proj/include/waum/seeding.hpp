#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace waum {

using Rng = std::mt19937_64;

// Independent stream seed for one (stage, repetition) of a seeded run.
std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view stage, std::uint64_t index);

// Uniform draw in [0, n); n must be positive.
std::size_t uniform_index(Rng& rng, std::size_t n);

}  // namespace waum
