#include "freqseg/tensor/ops.hpp"

#include <algorithm>
#include <cmath>

#include "conv_kernels.hpp"
#include "freqseg/error.hpp"

namespace freqseg {

namespace {

const char* kAxisNames[] = {"batch", "channel", "x", "y", "z"};

void require_5d(const Tensor& t, const char* what) {
    if (t.shape().size() != 5)
        throw ShapeError(std::string(what) + " expects a [B, C, X, Y, Z] tensor, got " +
                         shape_to_string(t.shape()));
}

Triple spatial(const Shape& s) { return {s[2], s[3], s[4]}; }

ConvGeometry conv_geometry(const Tensor& input, const ConvParams& p, bool transposed) {
    require_5d(input, transposed ? "conv3d_transpose" : "conv3d");
    const Shape& ws = p.weight.shape();
    if (ws.size() != 5)
        throw ShapeError("conv weight must be [out, in, kx, ky, kz], got " + shape_to_string(ws));
    if (p.bias.shape() != Shape{ws[0]})
        throw ShapeError("conv bias must be [" + std::to_string(ws[0]) + "], got " +
                         shape_to_string(p.bias.shape()));
    const Shape& is = input.shape();
    if (is[1] != ws[1])
        throw ShapeError("conv input has " + std::to_string(is[1]) +
                             " channels on axis channel, weights expect " + std::to_string(ws[1]),
                         1);
    ConvGeometry g;
    g.batch = is[0];
    g.in_ch = is[1];
    g.out_ch = ws[0];
    g.in_ext = spatial(is);
    g.kernel = {ws[2], ws[3], ws[4]};
    g.stride = p.stride;
    g.padding = p.padding;
    for (int a = 0; a < 3; ++a) {
        if (g.stride[a] == 0) throw ValueError("conv stride must be positive");
        if (transposed) {
            const long ext = (static_cast<long>(g.in_ext[a]) - 1) * static_cast<long>(g.stride[a]) -
                             2 * static_cast<long>(g.padding[a]) + static_cast<long>(g.kernel[a]);
            if (ext < 1)
                throw ShapeError(std::string("conv3d_transpose output empty on axis ") +
                                     kAxisNames[a + 2],
                                 a + 2);
            g.out_ext[a] = static_cast<std::size_t>(ext);
        } else {
            const std::size_t padded = g.in_ext[a] + 2 * g.padding[a];
            if (padded < g.kernel[a])
                throw ShapeError(std::string("conv3d input extent on axis ") + kAxisNames[a + 2] +
                                     " (" + std::to_string(g.in_ext[a]) + " + padding) is smaller "
                                     "than the kernel extent " + std::to_string(g.kernel[a]),
                                 a + 2);
            g.out_ext[a] = (padded - g.kernel[a]) / g.stride[a] + 1;
        }
    }
    return g;
}

Shape out_shape(const ConvGeometry& g) {
    return {g.batch, g.out_ch, g.out_ext[0], g.out_ext[1], g.out_ext[2]};
}

template <typename Fwd, typename Bwd>
Tensor unary(const Tensor& x, Fwd&& fwd, Bwd&& bwd) {
    NdArray out(x.shape());
    const auto in = x.value().data();
    auto o = out.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = fwd(in[i]);
    return Tensor::make_result(std::move(out), {x}, [bwd](detail::Node& self) {
        auto& px = *self.parents[0];
        if (!px.requires_grad) return;
        auto gx = px.grad_buffer().data();
        const auto go = self.grad->data();
        const auto xv = px.value.data();
        const auto yv = self.value.data();
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i] * bwd(xv[i], yv[i]);
    });
}

}  // namespace

Triple ConvParams::kernel() const {
    const Shape& s = weight.shape();
    return {s.at(2), s.at(3), s.at(4)};
}

ConvParams ConvParams::kaiming(const std::string& name, std::size_t out_ch, std::size_t in_ch,
                               Triple kernel, Rng& rng, Triple stride, Triple padding,
                               bool transposed) {
    if (out_ch == 0 || in_ch == 0) throw ValueError("conv channel counts must be >= 1");
    const std::size_t kvol = kernel[0] * kernel[1] * kernel[2];
    std::size_t fan_in = in_ch * kvol;
    if (transposed) {
        const std::size_t svol = stride[0] * stride[1] * stride[2];
        fan_in = std::max<std::size_t>(in_ch, fan_in / svol);
    }
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    NdArray w({out_ch, in_ch, kernel[0], kernel[1], kernel[2]});
    for (double& v : w.data()) v = rng.uniform(-bound, bound);
    ConvParams p;
    p.weight = Tensor::parameter(std::move(w), name + ".weight");
    p.bias = Tensor::parameter(NdArray({out_ch}, 0.0), name + ".bias");
    p.stride = stride;
    p.padding = padding;
    return p;
}

ConvParams ConvParams::same(const std::string& name, std::size_t out_ch, std::size_t in_ch,
                            std::size_t k, Rng& rng) {
    if (k % 2 == 0) throw ValueError("'same' convolution needs an odd kernel, got " + std::to_string(k));
    const std::size_t p = (k - 1) / 2;
    return kaiming(name, out_ch, in_ch, {k, k, k}, rng, {1, 1, 1}, {p, p, p});
}

Tensor conv3d(const Tensor& input, const ConvParams& params) {
    const ConvGeometry g = conv_geometry(input, params, false);
    NdArray out(out_shape(g));
    kernels::conv3d_forward(g, input.value().data().data(), params.weight.value().data().data(),
                            params.bias.value().data().data(), out.data().data());
    return Tensor::make_result(
        std::move(out), {input, params.weight, params.bias}, [g](detail::Node& self) {
            auto& x = *self.parents[0];
            auto& w = *self.parents[1];
            auto& b = *self.parents[2];
            kernels::conv3d_backward(
                g, x.value.data().data(), w.value.data().data(), self.grad->data().data(),
                x.requires_grad ? x.grad_buffer().data().data() : nullptr,
                w.requires_grad ? w.grad_buffer().data().data() : nullptr,
                b.requires_grad ? b.grad_buffer().data().data() : nullptr);
        });
}

Tensor conv3d_transpose(const Tensor& input, const ConvParams& params) {
    for (std::size_t s : params.stride)
        if (s != 1 && s != 2)
            throw ValueError("conv3d_transpose supports strides 1 and 2, got " + std::to_string(s));
    const ConvGeometry g = conv_geometry(input, params, true);
    NdArray out(out_shape(g));
    kernels::conv3d_transpose_forward(g, input.value().data().data(),
                                      params.weight.value().data().data(),
                                      params.bias.value().data().data(), out.data().data());
    return Tensor::make_result(
        std::move(out), {input, params.weight, params.bias}, [g](detail::Node& self) {
            auto& x = *self.parents[0];
            auto& w = *self.parents[1];
            auto& b = *self.parents[2];
            kernels::conv3d_transpose_backward(
                g, x.value.data().data(), w.value.data().data(), self.grad->data().data(),
                x.requires_grad ? x.grad_buffer().data().data() : nullptr,
                w.requires_grad ? w.grad_buffer().data().data() : nullptr,
                b.requires_grad ? b.grad_buffer().data().data() : nullptr);
        });
}

Tensor maxpool3d(const Tensor& input, Triple window) {
    require_5d(input, "maxpool3d");
    const Shape& s = input.shape();
    for (int a = 0; a < 3; ++a) {
        if (window[a] == 0 || s[a + 2] % window[a] != 0)
            throw ShapeError(std::string("maxpool3d: extent ") + std::to_string(s[a + 2]) +
                                 " on axis " + kAxisNames[a + 2] + " is not divisible by window " +
                                 std::to_string(window[a]),
                             a + 2);
    }
    const std::size_t X = s[2], Y = s[3], Z = s[4];
    const std::size_t OX = X / window[0], OY = Y / window[1], OZ = Z / window[2];
    const std::size_t planes = s[0] * s[1];
    NdArray out({s[0], s[1], OX, OY, OZ});
    std::vector<std::size_t> argmax(out.size());
    const auto in = input.value().data();
    auto o = out.data();
    std::size_t oi = 0;
    for (std::size_t p = 0; p < planes; ++p) {
        const std::size_t base = p * X * Y * Z;
        for (std::size_t ox = 0; ox < OX; ++ox)
            for (std::size_t oy = 0; oy < OY; ++oy)
                for (std::size_t oz = 0; oz < OZ; ++oz, ++oi) {
                    std::size_t best = base + ((ox * window[0]) * Y + oy * window[1]) * Z +
                                       oz * window[2];
                    // Scan in increasing linear index; strict '>' keeps the first max.
                    for (std::size_t dx = 0; dx < window[0]; ++dx)
                        for (std::size_t dy = 0; dy < window[1]; ++dy)
                            for (std::size_t dz = 0; dz < window[2]; ++dz) {
                                const std::size_t idx =
                                    base + ((ox * window[0] + dx) * Y + oy * window[1] + dy) * Z +
                                    oz * window[2] + dz;
                                if (in[idx] > in[best]) best = idx;
                            }
                    argmax[oi] = best;
                    o[oi] = in[best];
                }
    }
    return Tensor::make_result(std::move(out), {input},
                               [argmax = std::move(argmax)](detail::Node& self) {
                                   auto& x = *self.parents[0];
                                   if (!x.requires_grad) return;
                                   auto gx = x.grad_buffer().data();
                                   const auto go = self.grad->data();
                                   for (std::size_t i = 0; i < go.size(); ++i)
                                       gx[argmax[i]] += go[i];
                               });
}

Tensor leaky_relu(const Tensor& input, double slope) {
    return unary(
        input, [slope](double x) { return x > 0.0 ? x : slope * x; },
        [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

Tensor sigmoid(const Tensor& input) {
    return unary(
        input,
        [](double x) {
            if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
            const double e = std::exp(x);
            return e / (1.0 + e);
        },
        [](double, double y) { return y * (1.0 - y); });
}

Tensor softmax_channels(const Tensor& input) {
    const Shape& s = input.shape();
    if (s.size() < 2) throw ShapeError("softmax_channels expects [B, C, ...]");
    const std::size_t B = s[0], C = s[1];
    const std::size_t V = input.value().size() / (B * C);
    NdArray out(s);
    const auto in = input.value().data();
    auto o = out.data();
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t v = 0; v < V; ++v) {
            const std::size_t base = b * C * V + v;
            double m = in[base];
            for (std::size_t c = 1; c < C; ++c) m = std::max(m, in[base + c * V]);
            double z = 0.0;
            for (std::size_t c = 0; c < C; ++c) z += (o[base + c * V] = std::exp(in[base + c * V] - m));
            for (std::size_t c = 0; c < C; ++c) o[base + c * V] /= z;
        }
    return Tensor::make_result(std::move(out), {input}, [B, C, V](detail::Node& self) {
        auto& x = *self.parents[0];
        if (!x.requires_grad) return;
        auto gx = x.grad_buffer().data();
        const auto go = self.grad->data();
        const auto y = self.value.data();
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t v = 0; v < V; ++v) {
                const std::size_t base = b * C * V + v;
                double dot = 0.0;
                for (std::size_t c = 0; c < C; ++c) dot += go[base + c * V] * y[base + c * V];
                for (std::size_t c = 0; c < C; ++c)
                    gx[base + c * V] += y[base + c * V] * (go[base + c * V] - dot);
            }
    });
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    const Shape& sa = a.shape();
    const Shape& sb = b.shape();
    if (sa.size() < 2 || sa.size() != sb.size())
        throw ShapeError("concat_channels: rank mismatch " + shape_to_string(sa) + " vs " +
                         shape_to_string(sb));
    for (std::size_t ax = 0; ax < sa.size(); ++ax) {
        if (ax == 1) continue;
        if (sa[ax] != sb[ax])
            throw ShapeError("concat_channels: extent mismatch on axis " + std::to_string(ax) +
                                 " (" + std::to_string(sa[ax]) + " vs " + std::to_string(sb[ax]) + ")",
                             static_cast<int>(ax));
    }
    const std::size_t B = sa[0], Ca = sa[1], Cb = sb[1];
    const std::size_t V = a.value().size() / (B * Ca);
    Shape os = sa;
    os[1] = Ca + Cb;
    NdArray out(os);
    auto o = out.data();
    const auto va = a.value().data();
    const auto vb = b.value().data();
    for (std::size_t n = 0; n < B; ++n) {
        std::copy_n(va.begin() + n * Ca * V, Ca * V, o.begin() + n * (Ca + Cb) * V);
        std::copy_n(vb.begin() + n * Cb * V, Cb * V, o.begin() + (n * (Ca + Cb) + Ca) * V);
    }
    return Tensor::make_result(std::move(out), {a, b}, [B, Ca, Cb, V](detail::Node& self) {
        const auto go = self.grad->data();
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        for (std::size_t n = 0; n < B; ++n) {
            if (pa.requires_grad) {
                auto g = pa.grad_buffer().data();
                for (std::size_t i = 0; i < Ca * V; ++i) g[n * Ca * V + i] += go[n * (Ca + Cb) * V + i];
            }
            if (pb.requires_grad) {
                auto g = pb.grad_buffer().data();
                for (std::size_t i = 0; i < Cb * V; ++i)
                    g[n * Cb * V + i] += go[(n * (Ca + Cb) + Ca) * V + i];
            }
        }
    });
}

Tensor slice_channels(const Tensor& input, std::size_t begin, std::size_t count) {
    const Shape& s = input.shape();
    if (s.size() < 2 || count == 0 || begin + count > s[1])
        throw ShapeError("slice_channels: range [" + std::to_string(begin) + ", " +
                             std::to_string(begin + count) + ") outside " + std::to_string(s.size() < 2 ? 0 : s[1]) +
                             " channels",
                         1);
    const std::size_t B = s[0], C = s[1];
    const std::size_t V = input.value().size() / (B * C);
    Shape os = s;
    os[1] = count;
    NdArray out(os);
    const auto in = input.value().data();
    auto o = out.data();
    for (std::size_t n = 0; n < B; ++n)
        std::copy_n(in.begin() + (n * C + begin) * V, count * V, o.begin() + n * count * V);
    return Tensor::make_result(std::move(out), {input}, [B, C, V, begin, count](detail::Node& self) {
        auto& x = *self.parents[0];
        if (!x.requires_grad) return;
        auto g = x.grad_buffer().data();
        const auto go = self.grad->data();
        for (std::size_t n = 0; n < B; ++n)
            for (std::size_t i = 0; i < count * V; ++i) g[(n * C + begin) * V + i] += go[n * count * V + i];
    });
}

Tensor add(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw ShapeError("add: shape mismatch " + shape_to_string(a.shape()) + " vs " +
                         shape_to_string(b.shape()));
    NdArray out(a.shape());
    auto o = out.data();
    const auto va = a.value().data();
    const auto vb = b.value().data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = va[i] + vb[i];
    return Tensor::make_result(std::move(out), {a, b}, [](detail::Node& self) {
        const auto go = self.grad->data();
        for (auto& p : self.parents) {
            if (!p->requires_grad) continue;
            auto g = p->grad_buffer().data();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += go[i];
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw ShapeError("mul: shape mismatch " + shape_to_string(a.shape()) + " vs " +
                         shape_to_string(b.shape()));
    NdArray out(a.shape());
    auto o = out.data();
    const auto va = a.value().data();
    const auto vb = b.value().data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = va[i] * vb[i];
    return Tensor::make_result(std::move(out), {a, b}, [](detail::Node& self) {
        const auto go = self.grad->data();
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        const auto va = pa.value.data();
        const auto vb = pb.value.data();
        if (pa.requires_grad) {
            auto g = pa.grad_buffer().data();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += go[i] * vb[i];
        }
        if (pb.requires_grad) {
            auto g = pb.grad_buffer().data();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += go[i] * va[i];
        }
    });
}

Tensor sum(const Tensor& input) {
    NdArray out = NdArray::scalar(input.value().sum());
    return Tensor::make_result(std::move(out), {input}, [](detail::Node& self) {
        auto& x = *self.parents[0];
        if (!x.requires_grad) return;
        const double go = (*self.grad)[0];
        for (double& g : x.grad_buffer().data()) g += go;
    });
}

}  // namespace freqseg
