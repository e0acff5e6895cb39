#pragma once

// Top-1 accuracy and expected calibration error. Both take one probability
// row per sample; argmax ties are broken by a seeded uniform draw.

#include "waum/types.hpp"

#include <cstdint>
#include <vector>

namespace waum {

struct EceConfig {
    std::size_t n_bins = 15;
    std::uint64_t seed = 0;  // argmax tie-break, shared with accuracy
};

// Argmax of every row; ties drawn uniformly from a stream seeded with `seed`.
std::vector<std::size_t> seeded_argmax(const Matrix& pred, std::uint64_t seed);

double accuracy(const Matrix& pred, const std::vector<HardLabel>& truth, std::uint64_t seed = 0);

// Bins ((m-1)/M, m/M] on the top confidence; confidences <= 1/M go to bin 1.
double ece(const Matrix& pred, const std::vector<HardLabel>& truth, const EceConfig& cfg = {});

}  // namespace waum
