#include "freqseg/models/unet.hpp"

#include "freqseg/error.hpp"

namespace freqseg {

void UNetConfig::validate() const {
    if (in_channels == 0) throw ValueError("unet in_channels must be >= 1");
    if (num_classes == 0) throw ValueError("unet num_classes must be >= 1");
    if (depth == 0) throw ValueError("unet depth must be >= 1");
    if (depth > 6) throw ValueError("unet depth " + std::to_string(depth) + " is too large");
    if (base_channels == 0) throw ValueError("unet base_channels must be >= 1");
}

UNet::Block UNet::make_block(const std::string& name, std::size_t out, std::size_t in, Rng& rng) {
    return {ConvParams::same(name + ".conv1", out, in, 3, rng),
            ConvParams::same(name + ".conv2", out, out, 3, rng)};
}

Tensor UNet::run_block(const Block& b, const Tensor& x) {
    return leaky_relu(conv3d(leaky_relu(conv3d(x, b.conv1), kLeakySlope), b.conv2), kLeakySlope);
}

UNet::UNet(const UNetConfig& cfg, Rng& rng, const std::string& prefix) : cfg_(cfg) {
    cfg_.validate();
    auto width = [&](std::size_t level) { return cfg_.base_channels << level; };
    std::size_t in = cfg_.in_channels;
    for (std::size_t l = 0; l < cfg_.depth; ++l) {
        down_.push_back(make_block(prefix + ".enc" + std::to_string(l), width(l), in, rng));
        in = width(l);
    }
    bottom_ = make_block(prefix + ".bottleneck", width(cfg_.depth), in, rng);
    for (std::size_t l = cfg_.depth; l-- > 0;) {
        up_.push_back(ConvParams::kaiming(prefix + ".up" + std::to_string(l), width(l), width(l + 1),
                                          {2, 2, 2}, rng, {2, 2, 2}, {0, 0, 0}, true));
        dec_.push_back(make_block(prefix + ".dec" + std::to_string(l), width(l), 2 * width(l), rng));
    }
    head_ = ConvParams::kaiming(prefix + ".head", cfg_.num_classes, width(0), {1, 1, 1}, rng);
}

void UNet::check_input(const Shape& s) const {
    static const char* names[] = {"batch", "channel", "x", "y", "z"};
    if (s.size() != 5)
        throw ShapeError("unet expects [B, C, X, Y, Z] input, got " + shape_to_string(s));
    if (s[1] != cfg_.in_channels)
        throw ShapeError("unet expects " + std::to_string(cfg_.in_channels) +
                             " input channels on axis channel, got " + std::to_string(s[1]),
                         1);
    const std::size_t m = cfg_.required_multiple();
    for (int a = 2; a < 5; ++a)
        if (s[a] % m != 0)
            throw ShapeError("unet input extent " + std::to_string(s[a]) + " on axis " + names[a] +
                                 " is not a multiple of " + std::to_string(m) + " (2^depth, depth " +
                                 std::to_string(cfg_.depth) + ")",
                             a);
}

Tensor UNet::forward(const Tensor& x) const {
    check_input(x.shape());
    std::vector<Tensor> skips;
    Tensor h = x;
    for (const auto& b : down_) {
        h = run_block(b, h);
        skips.push_back(h);
        h = maxpool3d(h, {2, 2, 2});
    }
    h = run_block(bottom_, h);
    for (std::size_t i = 0; i < up_.size(); ++i) {
        h = conv3d_transpose(h, up_[i]);
        h = run_block(dec_[i], concat_channels(skips[skips.size() - 1 - i], h));
    }
    return conv3d(h, head_);
}

std::vector<Tensor> UNet::parameters() const {
    std::vector<Tensor> out;
    auto conv = [&](const ConvParams& p) {
        out.push_back(p.weight);
        out.push_back(p.bias);
    };
    auto block = [&](const Block& b) {
        conv(b.conv1);
        conv(b.conv2);
    };
    for (const auto& b : down_) block(b);
    block(bottom_);
    for (std::size_t i = 0; i < up_.size(); ++i) {
        conv(up_[i]);
        block(dec_[i]);
    }
    conv(head_);
    return out;
}

}  // namespace freqseg
