#include "freqseg/data/volume.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "freqseg/error.hpp"

namespace freqseg {

std::size_t voxel_count(const Extents& e) { return e[0] * e[1] * e[2]; }

std::string extents_to_string(const Extents& e) {
    std::ostringstream os;
    os << e[0] << 'x' << e[1] << 'x' << e[2];
    return os.str();
}

static void check_extents(const Extents& e) {
    for (int a = 0; a < 3; ++a)
        if (e[a] < 2)
            throw ShapeError("volume extent on axis " + std::to_string(a) + " must be >= 2, got " +
                                 std::to_string(e[a]),
                             a);
}

Volume::Volume(Extents extents, double fill, Spacing spacing)
    : extents_(extents), data_(voxel_count(extents), fill) {
    check_extents(extents_);
    if (!std::isfinite(fill)) throw ValueError("volume fill value is not finite");
    set_spacing(spacing);
}

Volume::Volume(Extents extents, std::vector<double> data, Spacing spacing)
    : extents_(extents), data_(std::move(data)) {
    check_extents(extents_);
    if (data_.size() != voxel_count(extents_))
        throw ShapeError("volume buffer holds " + std::to_string(data_.size()) +
                         " voxels, extents " + extents_to_string(extents_) + " need " +
                         std::to_string(voxel_count(extents_)));
    for (double v : data_)
        if (!std::isfinite(v)) throw ValueError("volume contains a non-finite value");
    set_spacing(spacing);
}

void Volume::set_spacing(Spacing s) {
    for (double v : s)
        if (!(v > 0.0) || !std::isfinite(v)) throw ValueError("voxel spacing must be positive");
    spacing_ = s;
}

Mask::Mask(Extents extents, std::uint8_t fill) : extents_(extents), labels_(voxel_count(extents), fill) {
    check_extents(extents_);
}

Mask::Mask(Extents extents, std::vector<std::uint8_t> labels)
    : extents_(extents), labels_(std::move(labels)) {
    check_extents(extents_);
    if (labels_.size() != voxel_count(extents_))
        throw ShapeError("mask buffer holds " + std::to_string(labels_.size()) +
                         " voxels, extents " + extents_to_string(extents_) + " need " +
                         std::to_string(voxel_count(extents_)));
}

std::uint8_t Mask::max_label() const {
    return labels_.empty() ? 0 : *std::max_element(labels_.begin(), labels_.end());
}

std::size_t Mask::count(std::uint8_t label) const {
    return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), label));
}

std::size_t Mask::foreground_count() const { return labels_.size() - count(0); }

}  // namespace freqseg
