#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace freqseg {

using Extents = std::array<std::size_t, 3>;
using Spacing = std::array<double, 3>;

std::size_t voxel_count(const Extents& e);
std::string extents_to_string(const Extents& e);

/// Dense 3D scalar field, row-major with z fastest. Extents are at least 2
/// on every axis and all values are finite.
class Volume {
public:
    Volume() = default;
    explicit Volume(Extents extents, double fill = 0.0, Spacing spacing = {1.0, 1.0, 1.0});
    Volume(Extents extents, std::vector<double> data, Spacing spacing = {1.0, 1.0, 1.0});

    const Extents& extents() const noexcept { return extents_; }
    const Spacing& spacing() const noexcept { return spacing_; }
    void set_spacing(Spacing s);
    std::size_t size() const noexcept { return data_.size(); }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    std::size_t index(std::size_t x, std::size_t y, std::size_t z) const noexcept {
        return (x * extents_[1] + y) * extents_[2] + z;
    }
    double& at(std::size_t x, std::size_t y, std::size_t z) { return data_[index(x, y, z)]; }
    double at(std::size_t x, std::size_t y, std::size_t z) const { return data_[index(x, y, z)]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

private:
    Extents extents_{};
    std::vector<double> data_;
    Spacing spacing_{1.0, 1.0, 1.0};
};

/// Label field paired with a Volume; 0 is background.
class Mask {
public:
    Mask() = default;
    explicit Mask(Extents extents, std::uint8_t fill = 0);
    Mask(Extents extents, std::vector<std::uint8_t> labels);

    const Extents& extents() const noexcept { return extents_; }
    std::size_t size() const noexcept { return labels_.size(); }
    std::span<std::uint8_t> labels() noexcept { return labels_; }
    std::span<const std::uint8_t> labels() const noexcept { return labels_; }

    std::size_t index(std::size_t x, std::size_t y, std::size_t z) const noexcept {
        return (x * extents_[1] + y) * extents_[2] + z;
    }
    std::uint8_t& at(std::size_t x, std::size_t y, std::size_t z) { return labels_[index(x, y, z)]; }
    std::uint8_t at(std::size_t x, std::size_t y, std::size_t z) const {
        return labels_[index(x, y, z)];
    }
    std::uint8_t operator[](std::size_t i) const { return labels_[i]; }

    std::uint8_t max_label() const;
    std::size_t count(std::uint8_t label) const;
    std::size_t foreground_count() const;

private:
    Extents extents_{};
    std::vector<std::uint8_t> labels_;
};

}  // namespace freqseg
