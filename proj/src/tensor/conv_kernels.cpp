#include "conv_kernels.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <vector>

namespace freqseg::kernels {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using StridedMap = Eigen::Map<RowMat, 0, Eigen::OuterStride<>>;
using ConstStridedMap = Eigen::Map<const RowMat, 0, Eigen::OuterStride<>>;

// Columns per im2col chunk; keeps the chunk resident in L2.
constexpr std::size_t kChunkVoxels = 256;

// Output positions along one axis whose input tap `d` lands inside [0, n).
struct TapRange {
    std::size_t lo, hi;  // [lo, hi) in output coordinates
};

TapRange tap_range(std::size_t n_in, std::size_t n_out, std::size_t stride,
                   std::size_t tap, std::size_t pad) {
    // in = out * stride + tap - pad
    const long t = static_cast<long>(tap) - static_cast<long>(pad);
    const long s = static_cast<long>(stride);
    long lo = 0;
    if (t < 0) lo = (-t + s - 1) / s;
    long hi_incl = (static_cast<long>(n_in) - 1 - t);
    if (hi_incl < 0) return {0, 0};
    hi_incl /= s;
    long hi = std::min<long>(hi_incl + 1, static_cast<long>(n_out));
    if (lo >= hi) return {0, 0};
    return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

struct Chunk {
    std::size_t row_begin, row_end;  // rows are (x, y) pairs of the output
    std::size_t cols() const { return row_end - row_begin; }
};

// Gathers input patches for output rows [row_begin, row_end) into `col`
// laid out as [K, rows * OZ].
void im2col(const ConvGeometry& g, const double* in_b, const Chunk& c, double* col) {
    const auto [IX, IY, IZ] = g.in_ext;
    const auto [OX, OY, OZ] = g.out_ext;
    (void)OX;
    const std::size_t ncols = c.cols() * OZ;
    std::size_t k = 0;
    for (std::size_t ci = 0; ci < g.in_ch; ++ci) {
        const double* in_c = in_b + ci * IX * IY * IZ;
        for (std::size_t dx = 0; dx < g.kernel[0]; ++dx)
            for (std::size_t dy = 0; dy < g.kernel[1]; ++dy)
                for (std::size_t dz = 0; dz < g.kernel[2]; ++dz, ++k) {
                    const TapRange zr = tap_range(IZ, OZ, g.stride[2], dz, g.padding[2]);
                    double* dst_k = col + k * ncols;
                    for (std::size_t r = c.row_begin; r < c.row_end; ++r) {
                        double* dst = dst_k + (r - c.row_begin) * OZ;
                        const long ix = static_cast<long>((r / OY) * g.stride[0] + dx) -
                                        static_cast<long>(g.padding[0]);
                        const long iy = static_cast<long>((r % OY) * g.stride[1] + dy) -
                                        static_cast<long>(g.padding[1]);
                        if (ix < 0 || iy < 0 || ix >= static_cast<long>(IX) ||
                            iy >= static_cast<long>(IY) || zr.lo >= zr.hi) {
                            std::fill(dst, dst + OZ, 0.0);
                            continue;
                        }
                        const double* src = in_c + (static_cast<std::size_t>(ix) * IY +
                                                    static_cast<std::size_t>(iy)) * IZ;
                        std::fill(dst, dst + zr.lo, 0.0);
                        for (std::size_t oz = zr.lo; oz < zr.hi; ++oz)
                            dst[oz] = src[oz * g.stride[2] + dz - g.padding[2]];
                        std::fill(dst + zr.hi, dst + OZ, 0.0);
                    }
                }
    }
}

// Adjoint of im2col: scatter-adds `col` back into the input gradient.
void col2im(const ConvGeometry& g, const double* col, const Chunk& c, double* gin_b) {
    const auto [IX, IY, IZ] = g.in_ext;
    const auto OY = g.out_ext[1];
    const auto OZ = g.out_ext[2];
    const std::size_t ncols = c.cols() * OZ;
    std::size_t k = 0;
    for (std::size_t ci = 0; ci < g.in_ch; ++ci) {
        double* gin_c = gin_b + ci * IX * IY * IZ;
        for (std::size_t dx = 0; dx < g.kernel[0]; ++dx)
            for (std::size_t dy = 0; dy < g.kernel[1]; ++dy)
                for (std::size_t dz = 0; dz < g.kernel[2]; ++dz, ++k) {
                    const TapRange zr = tap_range(IZ, OZ, g.stride[2], dz, g.padding[2]);
                    if (zr.lo >= zr.hi) continue;
                    const double* src_k = col + k * ncols;
                    for (std::size_t r = c.row_begin; r < c.row_end; ++r) {
                        const long ix = static_cast<long>((r / OY) * g.stride[0] + dx) -
                                        static_cast<long>(g.padding[0]);
                        const long iy = static_cast<long>((r % OY) * g.stride[1] + dy) -
                                        static_cast<long>(g.padding[1]);
                        if (ix < 0 || iy < 0 || ix >= static_cast<long>(IX) ||
                            iy >= static_cast<long>(IY))
                            continue;
                        const double* src = src_k + (r - c.row_begin) * OZ;
                        double* dst = gin_c + (static_cast<std::size_t>(ix) * IY +
                                               static_cast<std::size_t>(iy)) * IZ;
                        for (std::size_t oz = zr.lo; oz < zr.hi; ++oz)
                            dst[oz * g.stride[2] + dz - g.padding[2]] += src[oz];
                    }
                }
    }
}

template <typename Fn>
void for_each_chunk(const ConvGeometry& g, Fn&& fn) {
    const std::size_t rows = g.out_ext[0] * g.out_ext[1];
    const std::size_t per = std::max<std::size_t>(1, kChunkVoxels / g.out_ext[2]);
    for (std::size_t r = 0; r < rows; r += per) fn(Chunk{r, std::min(rows, r + per)});
}


// Stride-1 convolutions skip im2col: with the input zero-padded to P, the
// tap (dx, dy, dz) of output (ox, oy, oz) reads padded offset q + off(tap),
// where q = (ox * PY + oy) * PZ + oz. Each tap is then a plain GEMM over a
// shifted view. Positions q with oy >= OY or oz >= OZ are computed and
// discarded.
struct ShiftLayout {
    std::size_t PX, PY, PZ;
    std::size_t padded;  // PX * PY * PZ
    std::size_t q_count;
    std::vector<std::size_t> offsets;  // per tap, in weight order

    explicit ShiftLayout(const ConvGeometry& g)
        : PX(g.in_ext[0] + 2 * g.padding[0]),
          PY(g.in_ext[1] + 2 * g.padding[1]),
          PZ(g.in_ext[2] + 2 * g.padding[2]),
          padded(PX * PY * PZ),
          q_count(((g.out_ext[0] - 1) * PY + (g.out_ext[1] - 1)) * PZ + g.out_ext[2]) {
        for (std::size_t dx = 0; dx < g.kernel[0]; ++dx)
            for (std::size_t dy = 0; dy < g.kernel[1]; ++dy)
                for (std::size_t dz = 0; dz < g.kernel[2]; ++dz)
                    offsets.push_back((dx * PY + dy) * PZ + dz);
    }
    std::size_t q(std::size_t ox, std::size_t oy, std::size_t oz) const {
        return (ox * PY + oy) * PZ + oz;
    }
};

constexpr std::size_t kShiftChunk = 512;

bool unit_stride(const ConvGeometry& g) { return g.stride == Triple{1, 1, 1}; }

// [ci][padded] copy of one batch item.
void pad_input(const ConvGeometry& g, const ShiftLayout& L, const double* in_b, double* pad) {
    const auto [IX, IY, IZ] = g.in_ext;
    std::fill(pad, pad + g.in_ch * L.padded, 0.0);
    for (std::size_t c = 0; c < g.in_ch; ++c)
        for (std::size_t x = 0; x < IX; ++x)
            for (std::size_t y = 0; y < IY; ++y) {
                const double* src = in_b + ((c * IX + x) * IY + y) * IZ;
                double* dst = pad + c * L.padded +
                              ((x + g.padding[0]) * L.PY + y + g.padding[1]) * L.PZ + g.padding[2];
                std::copy(src, src + IZ, dst);
            }
}

// Weights regrouped as [tap][co][ci].
std::vector<double> weights_by_tap(const ConvGeometry& g, const double* w) {
    const std::size_t KV = g.kernel_volume();
    std::vector<double> out(KV * g.out_ch * g.in_ch);
    for (std::size_t co = 0; co < g.out_ch; ++co)
        for (std::size_t ci = 0; ci < g.in_ch; ++ci)
            for (std::size_t t = 0; t < KV; ++t)
                out[(t * g.out_ch + co) * g.in_ch + ci] = w[(co * g.in_ch + ci) * KV + t];
    return out;
}

void shift_forward(const ConvGeometry& g, const double* in, const double* w, const double* bias,
                   double* out) {
    const ShiftLayout L(g);
    const auto [OX, OY, OZ] = g.out_ext;
    const std::size_t V = g.out_voxels();
    const auto co = static_cast<Eigen::Index>(g.out_ch);
    const auto ci = static_cast<Eigen::Index>(g.in_ch);
    const std::vector<double> wt = weights_by_tap(g, w);
    std::vector<double> pad(g.in_ch * L.padded), res(g.out_ch * L.q_count);
    for (std::size_t b = 0; b < g.batch; ++b) {
        pad_input(g, L, in + b * g.in_ch * g.in_voxels(), pad.data());
        for (std::size_t q0 = 0; q0 < L.q_count; q0 += kShiftChunk) {
            const auto n = static_cast<Eigen::Index>(std::min(kShiftChunk, L.q_count - q0));
            StridedMap R(res.data() + q0, co, n, Eigen::OuterStride<>(L.q_count));
            R.setZero();
            for (std::size_t t = 0; t < L.offsets.size(); ++t) {
                Eigen::Map<const RowMat> W(wt.data() + t * g.out_ch * g.in_ch, co, ci);
                ConstStridedMap X(pad.data() + q0 + L.offsets[t], ci, n,
                                  Eigen::OuterStride<>(L.padded));
                R.noalias() += W * X;
            }
        }
        double* out_b = out + b * g.out_ch * V;
        for (std::size_t c = 0; c < g.out_ch; ++c)
            for (std::size_t x = 0; x < OX; ++x)
                for (std::size_t y = 0; y < OY; ++y) {
                    const double* src = res.data() + c * L.q_count + L.q(x, y, 0);
                    double* dst = out_b + c * V + (x * OY + y) * OZ;
                    for (std::size_t z = 0; z < OZ; ++z) dst[z] = src[z] + bias[c];
                }
    }
}

void shift_backward(const ConvGeometry& g, const double* in, const double* w,
                    const double* grad_out, double* grad_in, double* grad_w) {
    const ShiftLayout L(g);
    const auto [IX, IY, IZ] = g.in_ext;
    const auto [OX, OY, OZ] = g.out_ext;
    const std::size_t V = g.out_voxels();
    const std::size_t KV = g.kernel_volume();
    const auto co = static_cast<Eigen::Index>(g.out_ch);
    const auto ci = static_cast<Eigen::Index>(g.in_ch);
    const std::vector<double> wt = weights_by_tap(g, w);
    std::vector<double> pad, gpad, go(g.out_ch * L.q_count, 0.0), gw;
    if (grad_w) {
        pad.resize(g.in_ch * L.padded);
        gw.assign(KV * g.out_ch * g.in_ch, 0.0);
    }
    if (grad_in) gpad.resize(g.in_ch * L.padded);
    for (std::size_t b = 0; b < g.batch; ++b) {
        const double* go_b = grad_out + b * g.out_ch * V;
        for (std::size_t c = 0; c < g.out_ch; ++c)
            for (std::size_t x = 0; x < OX; ++x)
                for (std::size_t y = 0; y < OY; ++y) {
                    const double* src = go_b + c * V + (x * OY + y) * OZ;
                    std::copy(src, src + OZ, go.data() + c * L.q_count + L.q(x, y, 0));
                }
        if (grad_w) pad_input(g, L, in + b * g.in_ch * g.in_voxels(), pad.data());
        if (grad_in) std::fill(gpad.begin(), gpad.end(), 0.0);
        for (std::size_t q0 = 0; q0 < L.q_count; q0 += kShiftChunk) {
            const auto n = static_cast<Eigen::Index>(std::min(kShiftChunk, L.q_count - q0));
            ConstStridedMap GO(go.data() + q0, co, n, Eigen::OuterStride<>(L.q_count));
            for (std::size_t t = 0; t < KV; ++t) {
                if (grad_w) {
                    ConstStridedMap X(pad.data() + q0 + L.offsets[t], ci, n,
                                      Eigen::OuterStride<>(L.padded));
                    Eigen::Map<RowMat> GW(gw.data() + t * g.out_ch * g.in_ch, co, ci);
                    GW.noalias() += GO * X.transpose();
                }
                if (grad_in) {
                    Eigen::Map<const RowMat> W(wt.data() + t * g.out_ch * g.in_ch, co, ci);
                    StridedMap GX(gpad.data() + q0 + L.offsets[t], ci, n,
                                  Eigen::OuterStride<>(L.padded));
                    GX.noalias() += W.transpose() * GO;
                }
            }
        }
        if (grad_in) {
            double* gi_b = grad_in + b * g.in_ch * g.in_voxels();
            for (std::size_t c = 0; c < g.in_ch; ++c)
                for (std::size_t x = 0; x < IX; ++x)
                    for (std::size_t y = 0; y < IY; ++y) {
                        const double* src = gpad.data() + c * L.padded +
                                            ((x + g.padding[0]) * L.PY + y + g.padding[1]) * L.PZ +
                                            g.padding[2];
                        double* dst = gi_b + ((c * IX + x) * IY + y) * IZ;
                        for (std::size_t z = 0; z < IZ; ++z) dst[z] += src[z];
                    }
        }
    }
    if (grad_w)
        for (std::size_t c = 0; c < g.out_ch; ++c)
            for (std::size_t i = 0; i < g.in_ch; ++i)
                for (std::size_t t = 0; t < KV; ++t)
                    grad_w[(c * g.in_ch + i) * KV + t] += gw[(t * g.out_ch + c) * g.in_ch + i];
}

}  // namespace

void conv3d_forward(const ConvGeometry& g, const double* in, const double* w,
                    const double* bias, double* out) {
    if (unit_stride(g)) return shift_forward(g, in, w, bias, out);
    const std::size_t K = g.in_ch * g.kernel_volume();
    const std::size_t V = g.out_voxels();
    const std::size_t OZ = g.out_ext[2];
    Eigen::Map<const RowMat> W(w, static_cast<Eigen::Index>(g.out_ch), static_cast<Eigen::Index>(K));
    std::vector<double> col;
    for (std::size_t b = 0; b < g.batch; ++b) {
        const double* in_b = in + b * g.in_ch * g.in_voxels();
        double* out_b = out + b * g.out_ch * V;
        for_each_chunk(g, [&](const Chunk& c) {
            const std::size_t ncols = c.cols() * OZ;
            col.resize(K * ncols);
            im2col(g, in_b, c, col.data());
            Eigen::Map<const RowMat> C(col.data(), static_cast<Eigen::Index>(K),
                                       static_cast<Eigen::Index>(ncols));
            StridedMap O(out_b + c.row_begin * OZ, static_cast<Eigen::Index>(g.out_ch),
                         static_cast<Eigen::Index>(ncols), Eigen::OuterStride<>(V));
            O.noalias() = W * C;
        });
        for (std::size_t co = 0; co < g.out_ch; ++co) {
            double* o = out_b + co * V;
            for (std::size_t v = 0; v < V; ++v) o[v] += bias[co];
        }
    }
}

void conv3d_backward(const ConvGeometry& g, const double* in, const double* w,
                     const double* grad_out, double* grad_in, double* grad_w,
                     double* grad_bias) {
    const std::size_t K = g.in_ch * g.kernel_volume();
    const std::size_t V = g.out_voxels();
    const std::size_t OZ = g.out_ext[2];
    const auto cout = static_cast<Eigen::Index>(g.out_ch);
    Eigen::Map<const RowMat> W(w, cout, static_cast<Eigen::Index>(K));
    std::vector<double> col, dcol;
    for (std::size_t b = 0; b < g.batch; ++b) {
        const double* in_b = in + b * g.in_ch * g.in_voxels();
        const double* go_b = grad_out + b * g.out_ch * V;
        if (grad_bias) {
            for (std::size_t co = 0; co < g.out_ch; ++co) {
                const double* go = go_b + co * V;
                double s = 0.0;
                for (std::size_t v = 0; v < V; ++v) s += go[v];
                grad_bias[co] += s;
            }
        }
        if (!grad_in && !grad_w) continue;
        if (unit_stride(g)) continue;
        for_each_chunk(g, [&](const Chunk& c) {
            const std::size_t ncols = c.cols() * OZ;
            ConstStridedMap GO(go_b + c.row_begin * OZ, cout, static_cast<Eigen::Index>(ncols),
                               Eigen::OuterStride<>(V));
            if (grad_w) {
                col.resize(K * ncols);
                im2col(g, in_b, c, col.data());
                Eigen::Map<const RowMat> C(col.data(), static_cast<Eigen::Index>(K),
                                           static_cast<Eigen::Index>(ncols));
                Eigen::Map<RowMat> GW(grad_w, cout, static_cast<Eigen::Index>(K));
                GW.noalias() += GO * C.transpose();
            }
            if (grad_in) {
                dcol.resize(K * ncols);
                Eigen::Map<RowMat> DC(dcol.data(), static_cast<Eigen::Index>(K),
                                      static_cast<Eigen::Index>(ncols));
                DC.noalias() = W.transpose() * GO;
                col2im(g, dcol.data(), c, grad_in + b * g.in_ch * g.in_voxels());
            }
        });
    }
    if (unit_stride(g) && (grad_in || grad_w)) shift_backward(g, in, w, grad_out, grad_in, grad_w);
}

namespace {

// Visits every (input voxel, tap) pair of a transposed convolution that
// lands inside the output: fn(in_offset, out_offset) for each spatial
// pair, given fixed (kx, ky, kz).
template <typename Fn>
void transpose_taps(const ConvGeometry& g, std::size_t kx, std::size_t ky, std::size_t kz,
                    Fn&& fn) {
    const auto [IX, IY, IZ] = g.in_ext;
    const auto [OX, OY, OZ] = g.out_ext;
    for (std::size_t ix = 0; ix < IX; ++ix) {
        const long ox = static_cast<long>(ix * g.stride[0] + kx) - static_cast<long>(g.padding[0]);
        if (ox < 0 || ox >= static_cast<long>(OX)) continue;
        for (std::size_t iy = 0; iy < IY; ++iy) {
            const long oy =
                static_cast<long>(iy * g.stride[1] + ky) - static_cast<long>(g.padding[1]);
            if (oy < 0 || oy >= static_cast<long>(OY)) continue;
            const std::size_t in_row = (ix * IY + iy) * IZ;
            const std::size_t out_row =
                (static_cast<std::size_t>(ox) * OY + static_cast<std::size_t>(oy)) * OZ;
            for (std::size_t iz = 0; iz < IZ; ++iz) {
                const long oz =
                    static_cast<long>(iz * g.stride[2] + kz) - static_cast<long>(g.padding[2]);
                if (oz < 0 || oz >= static_cast<long>(OZ)) continue;
                fn(in_row + iz, out_row + static_cast<std::size_t>(oz));
            }
        }
    }
}

}  // namespace

void conv3d_transpose_forward(const ConvGeometry& g, const double* in, const double* w,
                              const double* bias, double* out) {
    const std::size_t IV = g.in_voxels();
    const std::size_t OV = g.out_voxels();
    const std::size_t KV = g.kernel_volume();
    for (std::size_t b = 0; b < g.batch; ++b) {
        for (std::size_t co = 0; co < g.out_ch; ++co) {
            double* o = out + (b * g.out_ch + co) * OV;
            std::fill(o, o + OV, bias[co]);
            for (std::size_t ci = 0; ci < g.in_ch; ++ci) {
                const double* x = in + (b * g.in_ch + ci) * IV;
                const double* wk = w + (co * g.in_ch + ci) * KV;
                std::size_t t = 0;
                for (std::size_t kx = 0; kx < g.kernel[0]; ++kx)
                    for (std::size_t ky = 0; ky < g.kernel[1]; ++ky)
                        for (std::size_t kz = 0; kz < g.kernel[2]; ++kz, ++t) {
                            const double wv = wk[t];
                            transpose_taps(g, kx, ky, kz, [&](std::size_t i, std::size_t j) {
                                o[j] += x[i] * wv;
                            });
                        }
            }
        }
    }
}

void conv3d_transpose_backward(const ConvGeometry& g, const double* in, const double* w,
                               const double* grad_out, double* grad_in, double* grad_w,
                               double* grad_bias) {
    const std::size_t IV = g.in_voxels();
    const std::size_t OV = g.out_voxels();
    const std::size_t KV = g.kernel_volume();
    for (std::size_t b = 0; b < g.batch; ++b) {
        for (std::size_t co = 0; co < g.out_ch; ++co) {
            const double* go = grad_out + (b * g.out_ch + co) * OV;
            if (grad_bias) {
                double s = 0.0;
                for (std::size_t v = 0; v < OV; ++v) s += go[v];
                grad_bias[co] += s;
            }
            for (std::size_t ci = 0; ci < g.in_ch; ++ci) {
                const double* x = in + (b * g.in_ch + ci) * IV;
                double* gx = grad_in ? grad_in + (b * g.in_ch + ci) * IV : nullptr;
                const double* wk = w + (co * g.in_ch + ci) * KV;
                double* gwk = grad_w ? grad_w + (co * g.in_ch + ci) * KV : nullptr;
                std::size_t t = 0;
                for (std::size_t kx = 0; kx < g.kernel[0]; ++kx)
                    for (std::size_t ky = 0; ky < g.kernel[1]; ++ky)
                        for (std::size_t kz = 0; kz < g.kernel[2]; ++kz, ++t) {
                            const double wv = wk[t];
                            double acc = 0.0;
                            transpose_taps(g, kx, ky, kz, [&](std::size_t i, std::size_t j) {
                                if (gx) gx[i] += go[j] * wv;
                                acc += go[j] * x[i];
                            });
                            if (gwk) gwk[t] += acc;
                        }
            }
        }
    }
}

}  // namespace freqseg::kernels
