#include "freqseg/models/fusion.hpp"

#include <algorithm>

#include "freqseg/error.hpp"

namespace freqseg {

std::string to_string(FusionMode m) {
    switch (m) {
        case FusionMode::None: return "none";
        case FusionMode::Early: return "early";
        case FusionMode::Late: return "late";
    }
    return "?";
}

FusionMode parse_fusion_mode(const std::string& s) {
    std::string l = s;
    std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return std::tolower(c); });
    if (l == "none") return FusionMode::None;
    if (l == "early") return FusionMode::Early;
    if (l == "late") return FusionMode::Late;
    throw ValueError("unknown fusion mode '" + s + "' (expected none, early or late)");
}

std::string to_string(Activation a) { return a == Activation::Sigmoid ? "sigmoid" : "softmax"; }

Activation parse_activation(const std::string& s) {
    if (s == "sigmoid") return Activation::Sigmoid;
    if (s == "softmax") return Activation::Softmax;
    throw ValueError("unknown activation '" + s + "' (expected sigmoid or softmax)");
}

void FusionConfig::validate() const {
    if (!(theta > 0.0 && theta < 1.0))
        throw ValueError("theta must lie in (0, 1), got " + std::to_string(theta));
    if (branch_channels == 0) throw ValueError("branch_channels must be >= 1");
}

std::size_t ModelConfig::output_channels() const {
    return foreground_classes + (activation == Activation::Softmax ? 1 : 0);
}

UNetConfig ModelConfig::backbone() const {
    UNetConfig u;
    u.num_classes = output_channels();
    u.depth = depth;
    u.base_channels = base_channels;
    switch (fusion.mode) {
        case FusionMode::None: u.in_channels = 1; break;
        case FusionMode::Early: u.in_channels = 2 * fusion.branch_channels; break;
        case FusionMode::Late: u.in_channels = fusion.branch_channels; break;
    }
    return u;
}

void ModelConfig::validate() const {
    fusion.validate();
    if (foreground_classes == 0) throw ValueError("foreground_classes must be >= 1");
    if (foreground_classes > 254) throw ValueError("too many classes for u8 labels");
    backbone().validate();
}

namespace {

Tensor stack(const std::vector<const Volume*>& vs) {
    if (vs.empty()) throw ValueError("make_input: empty batch");
    const Extents e = vs[0]->extents();
    NdArray a({vs.size(), 1, e[0], e[1], e[2]});
    auto d = a.data();
    const std::size_t n = voxel_count(e);
    for (std::size_t b = 0; b < vs.size(); ++b) {
        if (vs[b]->extents() != e)
            throw ShapeError("make_input: batch mixes extents " + extents_to_string(e) + " and " +
                             extents_to_string(vs[b]->extents()));
        std::copy(vs[b]->data().begin(), vs[b]->data().end(), d.begin() + b * n);
    }
    return Tensor::constant(std::move(a));
}

}  // namespace

ModelInput make_input(const std::vector<const Volume*>& images,
                      const std::vector<const FreqPair*>& pairs) {
    ModelInput in;
    in.image = stack(images);
    if (pairs.empty()) return in;
    if (pairs.size() != images.size())
        throw ValueError("make_input: " + std::to_string(pairs.size()) + " frequency pairs for " +
                         std::to_string(images.size()) + " images");
    std::vector<const Volume*> hi, lo;
    for (const auto* p : pairs) {
        hi.push_back(&p->high);
        lo.push_back(&p->low);
    }
    in.high = stack(hi);
    in.low = stack(lo);
    return in;
}

ModelInput make_input(const Volume& v, FusionMode mode, double theta) {
    if (mode == FusionMode::None) return make_input({&v});
    const FreqPair p = disentangle(v, theta);
    return make_input({&v}, {&p});
}

SegmentationModel::SegmentationModel(const ModelConfig& cfg, std::uint64_t seed)
    : cfg_((cfg.validate(), cfg)), unet_([&] {
          Rng rng(derive_seed(seed, 1));
          return UNet(cfg.backbone(), rng);
      }()) {
    Rng rng(derive_seed(seed, 2));
    const std::size_t bc = cfg_.fusion.branch_channels;
    if (cfg_.fusion.mode != FusionMode::None) {
        branch_high_ = ConvParams::same("branch_high", bc, 1, 3, rng);
        branch_low_ = ConvParams::same("branch_low", bc, 1, 3, rng);
    }
    if (cfg_.fusion.mode == FusionMode::Late)
        low_projection_ =
            ConvParams::kaiming("low_projection", cfg_.output_channels(), bc, {1, 1, 1}, rng);
}

void SegmentationModel::check_input(const ModelInput& in) const {
    if (!in.image.defined()) throw ValueError("model input has no image");
    const Shape& s = in.image.shape();
    if (s.size() != 5 || s[1] != 1)
        throw ShapeError("model input image must be [B, 1, X, Y, Z], got " + shape_to_string(s));
    if (cfg_.fusion.mode == FusionMode::None) {
        unet_.check_input(s);
        return;
    }
    if (!in.high.defined() || !in.low.defined())
        throw ValueError("fusion mode " + to_string(cfg_.fusion.mode) +
                         " needs high and low frequency inputs");
    if (in.high.shape() != s || in.low.shape() != s)
        throw ShapeError("high/low inputs must match the image shape " + shape_to_string(s));
    Shape backbone_in = s;
    backbone_in[1] = unet_.config().in_channels;
    unet_.check_input(backbone_in);
}

Tensor SegmentationModel::early_features(const ModelInput& in) const {
    if (cfg_.fusion.mode != FusionMode::Early)
        throw ValueError("early_features needs fusion mode early");
    return concat_channels(conv3d(in.high, branch_high_), conv3d(in.low, branch_low_));
}

Tensor SegmentationModel::high_logits(const ModelInput& in) const {
    if (cfg_.fusion.mode != FusionMode::Late) throw ValueError("high_logits needs fusion mode late");
    return unet_.forward(conv3d(in.high, branch_high_));
}

Tensor SegmentationModel::logits(const ModelInput& in) const {
    check_input(in);
    switch (cfg_.fusion.mode) {
        case FusionMode::None: return unet_.forward(in.image);
        case FusionMode::Early: return unet_.forward(early_features(in));
        case FusionMode::Late:
            return add(high_logits(in), conv3d(conv3d(in.low, branch_low_), low_projection_));
    }
    throw Error("unreachable fusion mode");
}

Tensor SegmentationModel::activate(const Tensor& l) const {
    return cfg_.activation == Activation::Sigmoid ? sigmoid(l) : softmax_channels(l);
}

Tensor SegmentationModel::forward(const ModelInput& in) const { return activate(logits(in)); }

std::vector<std::pair<std::string, std::vector<Tensor>>> SegmentationModel::parameter_groups() const {
    std::vector<std::pair<std::string, std::vector<Tensor>>> g;
    if (cfg_.fusion.mode != FusionMode::None) {
        g.push_back({"branch_high", {branch_high_.weight, branch_high_.bias}});
        g.push_back({"branch_low", {branch_low_.weight, branch_low_.bias}});
    }
    if (cfg_.fusion.mode == FusionMode::Late)
        g.push_back({"low_projection", {low_projection_.weight, low_projection_.bias}});
    g.push_back({"unet", unet_.parameters()});
    return g;
}

std::vector<Tensor> SegmentationModel::parameters() const {
    std::vector<Tensor> out;
    for (auto& [name, ps] : parameter_groups()) out.insert(out.end(), ps.begin(), ps.end());
    return out;
}

std::size_t SegmentationModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : parameters()) n += p.value().size();
    return n;
}

NdArray encode_target(const Mask& m, const ModelConfig& cfg) {
    const auto& e = m.extents();
    const std::size_t channels = cfg.output_channels();
    const std::size_t n = voxel_count(e);
    const std::size_t offset = cfg.activation == Activation::Softmax ? 0 : 1;
    NdArray t({1, channels, e[0], e[1], e[2]});
    auto d = t.data();
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t label = m[i];
        if (label > cfg.foreground_classes)
            throw ValueError("mask label " + std::to_string(label) + " exceeds foreground_classes " +
                             std::to_string(cfg.foreground_classes));
        if (label < offset) continue;
        d[(label - offset) * n + i] = 1.0;
    }
    return t;
}

Mask decode_prediction(const NdArray& prob, std::size_t b, const ModelConfig& cfg) {
    const Shape& s = prob.shape();
    if (s.size() != 5 || s[1] != cfg.output_channels() || b >= s[0])
        throw ShapeError("decode_prediction: unexpected probability shape " + shape_to_string(s));
    const Extents e{s[2], s[3], s[4]};
    const std::size_t n = voxel_count(e), c = s[1];
    const auto d = prob.data().subspan(b * c * n, c * n);
    Mask m(e);
    for (std::size_t i = 0; i < n; ++i) {
        if (cfg.activation == Activation::Softmax) {
            std::size_t best = 0;
            for (std::size_t k = 1; k < c; ++k)
                if (d[k * n + i] > d[best * n + i]) best = k;
            m.labels()[i] = static_cast<std::uint8_t>(best);
        } else {
            double best = 0.5;
            std::uint8_t label = 0;
            for (std::size_t k = 0; k < c; ++k)
                if (d[k * n + i] >= best && (label == 0 || d[k * n + i] > best)) {
                    best = d[k * n + i];
                    label = static_cast<std::uint8_t>(k + 1);
                }
            m.labels()[i] = label;
        }
    }
    return m;
}

Volume class_probability(const NdArray& prob, std::size_t b, std::uint8_t label,
                         const ModelConfig& cfg) {
    const Shape& s = prob.shape();
    if (s.size() != 5 || s[1] != cfg.output_channels() || b >= s[0])
        throw ShapeError("class_probability: unexpected probability shape " + shape_to_string(s));
    const std::size_t channel = cfg.activation == Activation::Softmax ? label : label - 1u;
    if (label == 0 && cfg.activation == Activation::Sigmoid)
        throw ValueError("class_probability: sigmoid heads have no background channel");
    if (channel >= s[1]) throw ValueError("class_probability: label out of range");
    const Extents e{s[2], s[3], s[4]};
    const std::size_t n = voxel_count(e);
    const auto d = prob.data().subspan((b * s[1] + channel) * n, n);
    return Volume(e, std::vector<double>(d.begin(), d.end()));
}

}  // namespace freqseg
