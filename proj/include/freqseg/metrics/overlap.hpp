#pragma once

#include <cstdint>

#include "freqseg/data/volume.hpp"

namespace freqseg {

/// 2|A n B| / (|A| + |B|) for the voxels carrying `label` in each mask.
/// Two empty sets score 1.
double dice_coefficient(const Mask& pred, const Mask& target, std::uint8_t label = 1);

/// Binary mask of voxels with probability >= threshold.
Mask threshold_mask(const Volume& prob, double threshold = 0.5, std::uint8_t label = 1);

}  // namespace freqseg
