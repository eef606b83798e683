#pragma once

#include "freqseg/data/volume.hpp"

namespace freqseg {

/// (v - min) / (max - min); a constant volume maps to all zeros.
Volume minmax_normalize(const Volume& v);

/// Trilinear resampling with corner alignment (voxel 0 and voxel N-1 map to
/// the same physical positions in both grids). Returns a copy when the
/// extents already match.
Volume resize(const Volume& v, const Extents& target);

/// Nearest-neighbour resampling with the same corner alignment; never
/// introduces a label absent from the input.
Mask resize(const Mask& m, const Extents& target);

/// resize followed by minmax_normalize.
Volume preprocess(const Volume& v, const Extents& target);

}  // namespace freqseg
