#pragma once

#include <cstdint>
#include <utility>

#include "freqseg/data/volume.hpp"

namespace freqseg {

/// Synthetic stand-in for small nuclei on a smooth tissue background.
///
/// The background is a Gaussian random field low-passed in the Fourier
/// domain (bins whose radius relative to Nyquist exceeds `background_cutoff`
/// are zeroed; see normalized_radius). Structures are
/// axis-aligned ellipsoids whose boundary profile is a logistic of the
/// signed distance with slope `edge_sharpness` (per voxel). Labels cycle
/// through 1..num_labels.
struct PhantomSpec {
    Extents extents{32, 32, 16};
    double background_cutoff = 0.12;
    double background_amplitude = 0.2;
    std::size_t structure_count = 5;
    double radius_min = 1.5;
    double radius_max = 3.0;
    double edge_sharpness = 8.0;
    double structure_intensity = 1.0;
    double noise_std = 0.01;
    std::uint8_t num_labels = 1;
    std::uint64_t seed = 0;
    std::size_t max_placement_attempts = 500;

    void validate() const;
};

/// Returns the intensity volume and its label mask.
std::pair<Volume, Mask> generate_phantom(const PhantomSpec& spec);

}  // namespace freqseg
