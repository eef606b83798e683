#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "freqseg/data/volume.hpp"

namespace freqseg {

using Voxel = std::array<std::size_t, 3>;

/// Voxels of `label` with at least one of their 6 face neighbours outside
/// the label, or lying on the volume border.
std::vector<Voxel> boundary_voxels(const Mask& m, std::uint8_t label = 1);

/// Squared Euclidean distance (in spacing units) from every voxel to the
/// nearest voxel where `seed` is true; +inf everywhere if there is none.
std::vector<double> squared_distance_transform(const Extents& e, const std::vector<bool>& seed,
                                               const Spacing& spacing);

/// Symmetric 95th-percentile surface distance between the boundaries of
/// `pred` and `target`. Both empty gives 0; exactly one empty gives the
/// volume diagonal sqrt(sum (N_i s_i)^2).
double hausdorff95(const Mask& pred, const Mask& target, const Spacing& spacing = {1.0, 1.0, 1.0},
                   std::uint8_t label = 1);

double volume_diagonal(const Extents& e, const Spacing& spacing);

}  // namespace freqseg
