#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "freqseg/data/volume.hpp"
#include "freqseg/frequency/disentangle.hpp"
#include "freqseg/models/unet.hpp"

namespace freqseg {

enum class FusionMode { None, Early, Late };
enum class Activation { Sigmoid, Softmax };

std::string to_string(FusionMode m);
FusionMode parse_fusion_mode(const std::string& s);
std::string to_string(Activation a);
Activation parse_activation(const std::string& s);

struct FusionConfig {
    FusionMode mode = FusionMode::None;
    double theta = kDefaultTheta;
    std::size_t branch_channels = 8;

    void validate() const;
};

/// Whole-model configuration. `foreground_classes` counts the non-zero mask
/// labels; sigmoid heads emit one channel per label, softmax heads add a
/// background channel 0.
struct ModelConfig {
    FusionConfig fusion;
    std::size_t foreground_classes = 1;
    std::size_t depth = 3;
    std::size_t base_channels = 8;
    Activation activation = Activation::Sigmoid;

    std::size_t output_channels() const;
    /// Backbone input width implied by the fusion mode: 1 for None,
    /// 2 * branch_channels for Early, branch_channels for Late.
    UNetConfig backbone() const;
    void validate() const;
};

/// Network inputs, each [B, 1, X, Y, Z]. `high` and `low` are only read by
/// the frequency-disentangled topologies.
struct ModelInput {
    Tensor image;
    Tensor high;
    Tensor low;
};

/// Stacks a batch. `pairs` is either empty (no high/low inputs) or parallel
/// to `images`.
ModelInput make_input(const std::vector<const Volume*>& images,
                      const std::vector<const FreqPair*>& pairs = {});
/// Single-sample input; disentangles `v` when the mode needs it.
ModelInput make_input(const Volume& v, FusionMode mode, double theta);

/// One of the three topologies:
///   None:  p = act(U(v))
///   Early: p = act(U([conv_H(high) | conv_L(low)]))
///   Late:  p = act(U(conv_H(high)) + proj(conv_L(low)))
/// where conv_H and conv_L are single 3^3 convolutions without activation
/// and proj is a 1^3 convolution onto the class channels.
class SegmentationModel {
public:
    SegmentationModel(const ModelConfig& cfg, std::uint64_t seed);

    Tensor logits(const ModelInput& in) const;
    Tensor forward(const ModelInput& in) const;
    Tensor activate(const Tensor& logits) const;

    /// Early: the backbone input [O_H | O_L].
    Tensor early_features(const ModelInput& in) const;
    /// Late: S_H = U(conv_H(high)), the backbone logits before fusion.
    Tensor high_logits(const ModelInput& in) const;

    void check_input(const ModelInput& in) const;

    std::vector<Tensor> parameters() const;
    /// Parameters grouped as "unet", "branch_high", "branch_low" and
    /// "low_projection"; groups absent from the topology are omitted.
    std::vector<std::pair<std::string, std::vector<Tensor>>> parameter_groups() const;
    std::size_t parameter_count() const;

    const ModelConfig& config() const noexcept { return cfg_; }
    const UNet& unet() const noexcept { return unet_; }
    const ConvParams& branch_high() const noexcept { return branch_high_; }
    const ConvParams& branch_low() const noexcept { return branch_low_; }
    const ConvParams& low_projection() const noexcept { return low_projection_; }

private:
    ModelConfig cfg_;
    ConvParams branch_high_;
    ConvParams branch_low_;
    ConvParams low_projection_;
    UNet unet_;
};

/// Target tensor [1, C, X, Y, Z] for the Dice loss: one-hot foreground
/// channels for sigmoid heads, one-hot including background for softmax.
NdArray encode_target(const Mask& m, const ModelConfig& cfg);

/// Label map from probabilities of sample `b`. Sigmoid: the most probable
/// class among those with p >= 0.5, else background. Softmax: argmax.
Mask decode_prediction(const NdArray& prob, std::size_t b, const ModelConfig& cfg);

/// Probability volume of label `label` for sample `b`.
Volume class_probability(const NdArray& prob, std::size_t b, std::uint8_t label,
                         const ModelConfig& cfg);

}  // namespace freqseg
