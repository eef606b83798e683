#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "freqseg/random.hpp"
#include "freqseg/tensor/ops.hpp"

namespace freqseg {

inline constexpr double kLeakySlope = 0.01;

struct UNetConfig {
    std::size_t in_channels = 1;
    std::size_t num_classes = 1;
    std::size_t depth = 3;
    std::size_t base_channels = 8;

    void validate() const;
    /// Every spatial extent of the input must be a multiple of 2^depth.
    std::size_t required_multiple() const { return std::size_t{1} << depth; }
};

/// 3D U-Net: per level two 3^3 convolutions with leaky ReLU, 2^3 max
/// pooling on the way down, stride-2 transposed convolutions and skip
/// concatenation on the way up, and a 1^3 head producing logits. Level l has
/// base_channels * 2^l channels; the bottleneck sits at level `depth`.
class UNet {
public:
    UNet(const UNetConfig& cfg, Rng& rng, const std::string& prefix = "unet");

    /// [B, in_channels, X, Y, Z] -> [B, num_classes, X, Y, Z] logits.
    Tensor forward(const Tensor& x) const;

    /// Throws ShapeError naming the offending axis and the multiple needed.
    void check_input(const Shape& s) const;

    std::vector<Tensor> parameters() const;
    const UNetConfig& config() const noexcept { return cfg_; }

private:
    struct Block {
        ConvParams conv1;
        ConvParams conv2;
    };
    static Block make_block(const std::string& name, std::size_t out, std::size_t in, Rng& rng);
    static Tensor run_block(const Block& b, const Tensor& x);

    UNetConfig cfg_;
    std::vector<Block> down_;
    Block bottom_;
    std::vector<ConvParams> up_;
    std::vector<Block> dec_;
    ConvParams head_;
};

}  // namespace freqseg
