#include "freqseg/tensor/adam.hpp"

#include <cmath>

#include "freqseg/error.hpp"

namespace freqseg {

void adam_step(const std::vector<Tensor>& params, AdamState& state) {
    for (const auto& p : params)
        if (!p.has_grad())
            throw Error("adam_step: parameter '" + p.name() + "' has no gradient");
    if (state.m.empty()) {
        state.m.reserve(params.size());
        state.v.reserve(params.size());
        for (const auto& p : params) {
            state.m.emplace_back(p.shape(), 0.0);
            state.v.emplace_back(p.shape(), 0.0);
        }
    }
    if (state.m.size() != params.size())
        throw Error("adam_step: parameter list changed between steps");

    ++state.step_count;
    const double t = static_cast<double>(state.step_count);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor p = params[k];
        if (state.m[k].shape() != p.shape())
            throw ShapeError("adam_step: moment shape mismatch for '" + p.name() + "'");
        auto w = p.mutable_value().data();
        const auto g = p.grad().data();
        auto m = state.m[k].data();
        auto v = state.v[k].data();
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
            const double mhat = m[i] / c1;
            const double vhat = v[i] / c2;
            w[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
        }
        p.zero_grad();
    }
}

}  // namespace freqseg
