#include "freqseg/tensor/loss.hpp"

#include <vector>

#include "freqseg/error.hpp"

namespace freqseg {

Tensor soft_dice_loss(const Tensor& pred, const NdArray& target, double eps) {
    const Shape& s = pred.shape();
    if (s != target.shape())
        throw ShapeError("soft_dice_loss: prediction " + shape_to_string(s) +
                         " and target " + shape_to_string(target.shape()) + " differ");
    if (s.size() < 2) throw ShapeError("soft_dice_loss expects [B, C, ...]");
    const std::size_t groups = s[0] * s[1];
    const std::size_t V = pred.value().size() / groups;
    const auto p = pred.value().data();
    const auto g = target.data();

    std::vector<double> num(groups), den(groups);
    double dice_sum = 0.0;
    for (std::size_t k = 0; k < groups; ++k) {
        double pg = 0.0, pp = 0.0, gg = 0.0;
        for (std::size_t i = k * V; i < (k + 1) * V; ++i) {
            pg += p[i] * g[i];
            pp += p[i] * p[i];
            gg += g[i] * g[i];
        }
        num[k] = 2.0 * pg + eps;
        den[k] = pp + gg + eps;
        dice_sum += num[k] / den[k];
    }
    NdArray out = NdArray::scalar(1.0 - dice_sum / static_cast<double>(groups));

    return Tensor::make_result(
        std::move(out), {pred},
        [target, num = std::move(num), den = std::move(den), groups, V](detail::Node& self) {
            auto& x = *self.parents[0];
            if (!x.requires_grad) return;
            const double go = (*self.grad)[0];
            const auto pv = x.value.data();
            const auto gv = target.data();
            auto gx = x.grad_buffer().data();
            const double scale = -go / static_cast<double>(groups);
            for (std::size_t k = 0; k < groups; ++k) {
                // d(num/den)/dp = (2g * den - num * 2p) / den^2
                const double inv = 1.0 / (den[k] * den[k]);
                for (std::size_t i = k * V; i < (k + 1) * V; ++i)
                    gx[i] += scale * (2.0 * gv[i] * den[k] - 2.0 * num[k] * pv[i]) * inv;
            }
        });
}

}  // namespace freqseg
