#include "doctest.h"

#include <cmath>
#include <numeric>

#include "freqseg/error.hpp"
#include "freqseg/tensor/adam.hpp"
#include "freqseg/tensor/loss.hpp"
#include "freqseg/tensor/ops.hpp"
#include "support/gradcheck.hpp"

using namespace freqseg;
using freqseg::testing::gradcheck;
using freqseg::testing::random_array;

namespace {

ConvParams make_params(NdArray w, NdArray b, Triple stride = {1, 1, 1}, Triple pad = {0, 0, 0}) {
    ConvParams p;
    p.weight = Tensor::parameter(std::move(w), "w");
    p.bias = Tensor::parameter(std::move(b), "b");
    p.stride = stride;
    p.padding = pad;
    return p;
}

// Direct six-fold loop convolution, independent of the im2col path.
NdArray conv_oracle(const NdArray& x, const NdArray& w, const NdArray& b, Triple s, Triple p) {
    const auto& xs = x.shape();
    const auto& ws = w.shape();
    std::size_t out[3];
    for (int a = 0; a < 3; ++a) out[a] = (xs[a + 2] + 2 * p[a] - ws[a + 2]) / s[a] + 1;
    NdArray y({xs[0], ws[0], out[0], out[1], out[2]});
    for (std::size_t n = 0; n < xs[0]; ++n)
        for (std::size_t co = 0; co < ws[0]; ++co)
            for (std::size_t i = 0; i < out[0]; ++i)
                for (std::size_t j = 0; j < out[1]; ++j)
                    for (std::size_t k = 0; k < out[2]; ++k) {
                        double acc = b[co];
                        for (std::size_t ci = 0; ci < ws[1]; ++ci)
                            for (std::size_t a = 0; a < ws[2]; ++a)
                                for (std::size_t bb = 0; bb < ws[3]; ++bb)
                                    for (std::size_t c = 0; c < ws[4]; ++c) {
                                        const long xi = long(i * s[0] + a) - long(p[0]);
                                        const long yi = long(j * s[1] + bb) - long(p[1]);
                                        const long zi = long(k * s[2] + c) - long(p[2]);
                                        if (xi < 0 || yi < 0 || zi < 0 || xi >= long(xs[2]) ||
                                            yi >= long(xs[3]) || zi >= long(xs[4]))
                                            continue;
                                        acc += w.at({co, ci, a, bb, c}) *
                                               x.at({n, ci, std::size_t(xi), std::size_t(yi),
                                                     std::size_t(zi)});
                                    }
                        y.at({n, co, i, j, k}) = acc;
                    }
    return y;
}

double dot(const NdArray& a, const NdArray& b) {
    return std::inner_product(a.data().begin(), a.data().end(), b.data().begin(), 0.0);
}

}  // namespace

TEST_SUITE("conv3d") {
    TEST_CASE("identity kernel reproduces the input") {
        Rng rng(1);
        NdArray x = random_array({1, 1, 4, 4, 4}, rng);
        NdArray w({1, 1, 3, 3, 3}, 0.0);
        w.at({0, 0, 1, 1, 1}) = 1.0;
        auto y = conv3d(Tensor::constant(x), make_params(w, NdArray({1}, 0.0), {1, 1, 1}, {1, 1, 1}));
        CHECK(y.shape() == x.shape());
        CHECK(max_abs_diff(y.value(), x) == 0.0);
    }

    TEST_CASE("zero kernel yields the bias per channel") {
        Rng rng(2);
        NdArray x = random_array({2, 3, 4, 5, 6}, rng);
        NdArray b({2}, 0.0);
        b[0] = 0.25;
        b[1] = -3.0;
        auto y = conv3d(Tensor::constant(x),
                        make_params(NdArray({2, 3, 3, 3, 3}, 0.0), b, {1, 1, 1}, {1, 1, 1}));
        const std::size_t V = 4 * 5 * 6;
        for (std::size_t n = 0; n < 2; ++n)
            for (std::size_t c = 0; c < 2; ++c)
                for (std::size_t v = 0; v < V; ++v) CHECK(y.value()[(n * 2 + c) * V + v] == b[c]);
    }

    TEST_CASE("matches the direct loop oracle") {
        Rng rng(3);
        NdArray x = random_array({1, 2, 5, 5, 5}, rng);
        NdArray w = random_array({3, 2, 3, 3, 3}, rng);
        NdArray b = random_array({3}, rng);
        for (auto [s, p] : {std::pair{Triple{1, 1, 1}, Triple{1, 1, 1}},
                            std::pair{Triple{1, 1, 1}, Triple{0, 0, 0}},
                            std::pair{Triple{2, 1, 2}, Triple{1, 0, 1}}}) {
            auto y = conv3d(Tensor::constant(x), make_params(w, b, s, p));
            CHECK(max_abs_diff(y.value(), conv_oracle(x, w, b, s, p)) < 1e-10);
        }
    }

    TEST_CASE("large volumes span several work chunks") {
        Rng rng(4);
        NdArray x = random_array({2, 2, 12, 10, 9}, rng);
        NdArray w = random_array({3, 2, 3, 3, 3}, rng);
        NdArray b = random_array({3}, rng);
        auto y = conv3d(Tensor::constant(x), make_params(w, b, {1, 1, 1}, {1, 1, 1}));
        CHECK(max_abs_diff(y.value(), conv_oracle(x, w, b, {1, 1, 1}, {1, 1, 1})) < 1e-10);
    }

    TEST_CASE("channel mismatch names the channel axis") {
        Rng rng(5);
        auto x = Tensor::constant(random_array({1, 2, 4, 4, 4}, rng));
        auto p = make_params(NdArray({1, 3, 3, 3, 3}), NdArray({1}));
        try {
            conv3d(x, p);
            FAIL("expected ShapeError");
        } catch (const ShapeError& e) {
            CHECK(e.axis() == 1);
        }
    }

    TEST_CASE("kernel larger than padded input names the spatial axis") {
        auto x = Tensor::constant(NdArray({1, 1, 4, 2, 4}));
        auto p = make_params(NdArray({1, 1, 3, 3, 3}), NdArray({1}));
        try {
            conv3d(x, p);
            FAIL("expected ShapeError");
        } catch (const ShapeError& e) {
            CHECK(e.axis() == 3);
        }
    }

    TEST_CASE("gradients match finite differences") {
        Rng rng(6);
        for (auto [s, p] : {std::pair{Triple{1, 1, 1}, Triple{1, 1, 1}},
                            std::pair{Triple{2, 2, 1}, Triple{1, 0, 1}}}) {
            auto fn = [s, p](const std::vector<Tensor>& in) {
                ConvParams cp{in[1], in[2], s, p};
                return conv3d(in[0], cp);
            };
            CHECK(gradcheck(fn, {random_array({1, 2, 5, 5, 5}, rng), random_array({2, 2, 3, 3, 3}, rng),
                                 random_array({2}, rng)}) < 1e-4);
        }
    }

    TEST_CASE("uneven kernels, padding and batches") {
        Rng rng(7);
        NdArray x = random_array({2, 3, 5, 4, 5}, rng);
        NdArray w = random_array({2, 3, 3, 1, 2}, rng);
        NdArray b = random_array({2}, rng);
        const Triple s{1, 1, 1}, p{1, 0, 0};
        auto y = conv3d(Tensor::constant(x), make_params(w, b, s, p));
        CHECK(max_abs_diff(y.value(), conv_oracle(x, w, b, s, p)) < 1e-10);
        auto fn = [s, p](const std::vector<Tensor>& in) {
            ConvParams cp{in[1], in[2], s, p};
            return conv3d(in[0], cp);
        };
        CHECK(gradcheck(fn, {x, w, b}) < 1e-4);
    }
}

TEST_SUITE("conv3d_transpose") {
    TEST_CASE("stride-2 scatter of ones") {
        auto y = conv3d_transpose(Tensor::constant(NdArray({1, 1, 2, 2, 2}, 1.0)),
                                  make_params(NdArray({1, 1, 2, 2, 2}, 1.0), NdArray({1}, 0.0),
                                              {2, 2, 2}));
        CHECK(y.shape() == Shape{1, 1, 4, 4, 4});
        for (double v : y.value().data()) CHECK(v == 1.0);
    }

    TEST_CASE("zero input gives the bias") {
        Rng rng(8);
        NdArray b({2}, 0.0);
        b[1] = 0.5;
        auto y = conv3d_transpose(Tensor::constant(NdArray({1, 3, 2, 3, 2}, 0.0)),
                                  make_params(random_array({2, 3, 2, 2, 2}, rng), b, {2, 2, 2}));
        CHECK(y.shape() == Shape{1, 2, 4, 6, 4});
        const std::size_t V = 4 * 6 * 4;
        for (std::size_t v = 0; v < V; ++v) {
            CHECK(y.value()[v] == 0.0);
            CHECK(y.value()[V + v] == 0.5);
        }
    }

    TEST_CASE("is the adjoint of conv3d with swapped channel axes") {
        Rng rng(9);
        for (auto [k, s, p] : {std::tuple{Triple{2, 2, 2}, Triple{2, 2, 2}, Triple{0, 0, 0}},
                               std::tuple{Triple{3, 3, 3}, Triple{2, 2, 2}, Triple{1, 1, 1}},
                               std::tuple{Triple{3, 3, 3}, Triple{1, 1, 1}, Triple{1, 1, 1}}}) {
            NdArray w = random_array({2, 3, k[0], k[1], k[2]}, rng);  // 3 -> 2 transpose
            NdArray wt({3, 2, k[0], k[1], k[2]});
            for (std::size_t co = 0; co < 2; ++co)
                for (std::size_t ci = 0; ci < 3; ++ci)
                    for (std::size_t t = 0; t < k[0] * k[1] * k[2]; ++t)
                        wt[(ci * 2 + co) * k[0] * k[1] * k[2] + t] = w[(co * 3 + ci) * k[0] * k[1] * k[2] + t];
            NdArray x = random_array({1, 3, 3, 4, 3}, rng);
            auto y = conv3d_transpose(Tensor::constant(x), make_params(w, NdArray({2}, 0.0), s, p));
            NdArray r = random_array(y.shape(), rng);
            auto back = conv3d(Tensor::constant(r), make_params(wt, NdArray({3}, 0.0), s, p));
            REQUIRE(back.shape() == x.shape());
            CHECK(std::abs(dot(y.value(), r) - dot(x, back.value())) < 1e-10);
        }
    }

    TEST_CASE("gradients match finite differences") {
        Rng rng(10);
        auto fn = [](const std::vector<Tensor>& in) {
            return conv3d_transpose(in[0], ConvParams{in[1], in[2], {2, 2, 2}, {0, 0, 0}});
        };
        CHECK(gradcheck(fn, {random_array({1, 1, 3, 3, 3}, rng), random_array({2, 1, 2, 2, 2}, rng),
                             random_array({2}, rng)}) < 1e-4);
    }

    TEST_CASE("unsupported stride") {
        auto p = make_params(NdArray({1, 1, 3, 3, 3}), NdArray({1}), {3, 3, 3});
        CHECK_THROWS_AS(conv3d_transpose(Tensor::constant(NdArray({1, 1, 2, 2, 2})), p), ValueError);
    }
}

TEST_SUITE("maxpool3d") {
    TEST_CASE("constant volume halves extents") {
        auto y = maxpool3d(Tensor::constant(NdArray({1, 2, 4, 4, 6}, 3.5)), {2, 2, 2});
        CHECK(y.shape() == Shape{1, 2, 2, 2, 3});
        for (double v : y.value().data()) CHECK(v == 3.5);
    }

    TEST_CASE("maximum of 1..8") {
        NdArray x({1, 1, 2, 2, 2});
        std::iota(x.data().begin(), x.data().end(), 1.0);
        auto y = maxpool3d(Tensor::constant(x), {2, 2, 2});
        CHECK(y.value().size() == 1);
        CHECK(y.value()[0] == 8.0);
    }

    TEST_CASE("backward routes to the argmax, ties to the lowest index") {
        NdArray x({1, 1, 2, 2, 2}, 1.0);
        x[3] = 5.0;
        x[6] = 5.0;
        auto p = Tensor::parameter(x, "x");
        backward(sum(maxpool3d(p, {2, 2, 2})));
        for (std::size_t i = 0; i < 8; ++i) CHECK(p.grad()[i] == (i == 3 ? 1.0 : 0.0));
    }

    TEST_CASE("gradients match finite differences at non-tied points") {
        Rng rng(11);
        auto fn = [](const std::vector<Tensor>& in) { return maxpool3d(in[0], {2, 2, 2}); };
        CHECK(gradcheck(fn, {random_array({1, 2, 4, 4, 4}, rng)}) < 1e-4);
    }

    TEST_CASE("non-divisible extent") {
        try {
            maxpool3d(Tensor::constant(NdArray({1, 1, 4, 3, 4})), {2, 2, 2});
            FAIL("expected ShapeError");
        } catch (const ShapeError& e) {
            CHECK(e.axis() == 3);
        }
    }
}

TEST_SUITE("elementwise and channel ops") {
    TEST_CASE("scalar values") {
        CHECK(sigmoid(Tensor::constant(NdArray::scalar(0.0))).value()[0] == 0.5);
        CHECK(leaky_relu(Tensor::constant(NdArray::scalar(-1.0)), 0.01).value()[0] ==
              doctest::Approx(-0.01).epsilon(1e-15));
        CHECK(leaky_relu(Tensor::constant(NdArray::scalar(2.0)), 0.01).value()[0] == 2.0);
    }

    TEST_CASE("sigmoid stays finite at extreme logits") {
        NdArray x({3});
        x[0] = -800.0;
        x[1] = 800.0;
        x[2] = 0.0;
        auto y = sigmoid(Tensor::constant(x));
        CHECK(y.value()[0] >= 0.0);
        CHECK(y.value()[1] == 1.0);
        CHECK(std::isfinite(y.value()[0]));
    }

    TEST_CASE("concat then slice recovers operands") {
        Rng rng(12);
        NdArray a = random_array({2, 3, 2, 2, 2}, rng);
        NdArray b = random_array({2, 5, 2, 2, 2}, rng);
        auto c = concat_channels(Tensor::constant(a), Tensor::constant(b));
        CHECK(c.shape() == Shape{2, 8, 2, 2, 2});
        CHECK(max_abs_diff(slice_channels(c, 0, 3).value(), a) == 0.0);
        CHECK(max_abs_diff(slice_channels(c, 3, 5).value(), b) == 0.0);
    }

    TEST_CASE("concat shape mismatch") {
        CHECK_THROWS_AS(concat_channels(Tensor::constant(NdArray({1, 1, 2, 2, 2})),
                                        Tensor::constant(NdArray({1, 1, 2, 2, 4}))),
                        ShapeError);
        CHECK_THROWS_AS(concat_channels(Tensor::constant(NdArray({1, 1, 2, 2, 2})),
                                        Tensor::constant(NdArray({2, 1, 2, 2, 2}))),
                        ShapeError);
    }

    TEST_CASE("softmax sums to one per voxel") {
        Rng rng(13);
        auto y = softmax_channels(Tensor::constant(random_array({2, 3, 2, 3, 2}, rng, -5, 5)));
        const std::size_t V = 12;
        for (std::size_t n = 0; n < 2; ++n)
            for (std::size_t v = 0; v < V; ++v) {
                double s = 0.0;
                for (std::size_t c = 0; c < 3; ++c) s += y.value()[(n * 3 + c) * V + v];
                CHECK(std::abs(s - 1.0) < 1e-12);
            }
    }

    TEST_CASE("gradients match finite differences") {
        Rng rng(14);
        // Keep leaky-ReLU inputs away from the kink at zero.
        NdArray x = random_array({1, 2, 3, 3, 3}, rng, 0.1, 1.0);
        for (std::size_t i = 0; i < x.size(); i += 2) x[i] = -x[i];
        CHECK(gradcheck([](const auto& in) { return leaky_relu(in[0], 0.01); }, {x}) < 1e-4);
        CHECK(gradcheck([](const auto& in) { return sigmoid(in[0]); },
                        {random_array({1, 2, 3, 3, 3}, rng, -4, 4)}) < 1e-4);
        CHECK(gradcheck([](const auto& in) { return softmax_channels(in[0]); },
                        {random_array({1, 3, 2, 2, 3}, rng, -2, 2)}) < 1e-4);
        CHECK(gradcheck([](const auto& in) { return concat_channels(in[0], in[1]); },
                        {random_array({2, 1, 2, 2, 2}, rng), random_array({2, 2, 2, 2, 2}, rng)}) <
              1e-4);
        CHECK(gradcheck([](const auto& in) { return slice_channels(in[0], 1, 2); },
                        {random_array({2, 4, 2, 2, 2}, rng)}) < 1e-4);
        CHECK(gradcheck([](const auto& in) { return add(in[0], in[1]); },
                        {random_array({1, 1, 3, 3, 3}, rng), random_array({1, 1, 3, 3, 3}, rng)}) <
              1e-4);
        CHECK(gradcheck([](const auto& in) { return mul(in[0], in[1]); },
                        {random_array({1, 1, 3, 3, 3}, rng), random_array({1, 1, 3, 3, 3}, rng)}) <
              1e-4);
    }
}

TEST_SUITE("soft_dice_loss") {
    TEST_CASE("perfect overlap") {
        NdArray g({1, 1, 2, 2, 2}, 0.0);
        g[1] = g[4] = g[7] = 1.0;
        auto loss = soft_dice_loss(Tensor::constant(g), g);
        CHECK(loss.value()[0] <= 1e-5);
        CHECK(loss.value()[0] >= 0.0);
    }

    TEST_CASE("no overlap") {
        NdArray g({1, 1, 2, 2, 2}, 0.0);
        g[0] = g[5] = 1.0;
        auto loss = soft_dice_loss(Tensor::constant(NdArray(g.shape(), 0.0)), g);
        CHECK(loss.value()[0] == doctest::Approx(1.0).epsilon(1e-5));
    }

    TEST_CASE("half-probability hand computation") {
        NdArray g({1, 1, 2, 2, 2}, 0.0);
        g[0] = g[2] = g[4] = g[6] = 1.0;
        auto p = Tensor::constant(NdArray(g.shape(), 0.5));
        // D = (2 * 2) / (2 + 4)
        CHECK(soft_dice_loss(p, g, 0.0).value()[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
        CHECK(soft_dice_loss(p, g).value()[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-5));
    }

    TEST_CASE("averages over batch and classes") {
        NdArray g({2, 2, 1, 1, 2}, 0.0);
        g[0] = 1.0;  // group 0: perfect prediction below
        NdArray p(g.shape(), 0.0);
        p[0] = 1.0;
        // other three groups: target empty, prediction empty -> D = eps/eps = 1
        CHECK(soft_dice_loss(Tensor::constant(p), g).value()[0] == doctest::Approx(0.0).epsilon(1e-9));
        p[2] = 1.0;  // group 1 now predicts a voxel that is absent
        const double d1 = 1e-5 / (1.0 + 1e-5);
        CHECK(soft_dice_loss(Tensor::constant(p), g).value()[0] ==
              doctest::Approx((1.0 - d1) / 4.0).epsilon(1e-12));
    }

    TEST_CASE("range and permutation invariance") {
        Rng rng(15);
        for (int trial = 0; trial < 20; ++trial) {
            NdArray p = random_array({1, 1, 3, 3, 3}, rng, 0.0, 1.0);
            NdArray g(p.shape());
            for (double& v : g.data()) v = rng.uniform() < 0.3 ? 1.0 : 0.0;
            const double l = soft_dice_loss(Tensor::constant(p), g).value()[0];
            CHECK(l >= -1e-12);
            CHECK(l <= 1.0 + 1e-12);
            std::vector<std::size_t> perm(p.size());
            std::iota(perm.begin(), perm.end(), 0);
            rng.shuffle(perm);
            NdArray pp(p.shape()), gp(g.shape());
            for (std::size_t i = 0; i < perm.size(); ++i) {
                pp[i] = p[perm[i]];
                gp[i] = g[perm[i]];
            }
            CHECK(soft_dice_loss(Tensor::constant(pp), gp).value()[0] ==
                  doctest::Approx(l).epsilon(1e-12));
        }
    }

    TEST_CASE("gradient matches finite differences") {
        Rng rng(16);
        NdArray g({2, 2, 2, 2, 2});
        for (double& v : g.data()) v = rng.uniform() < 0.4 ? 1.0 : 0.0;
        CHECK(gradcheck([&](const auto& in) { return soft_dice_loss(in[0], g); },
                        {random_array(g.shape(), rng, 0.0, 1.0)}) < 1e-4);
    }
}

TEST_SUITE("adam") {
    TEST_CASE("zero gradient is a fixed point") {
        Rng rng(17);
        NdArray w0 = random_array({3, 4}, rng);
        auto w = Tensor::parameter(w0, "w");
        AdamState st;
        for (int i = 0; i < 5; ++i) {
            backward(sum(mul(w, Tensor::constant(NdArray({3, 4}, 0.0)))));
            adam_step({w}, st);
        }
        CHECK(max_abs_diff(w.value(), w0) == 0.0);
        CHECK(st.step_count == 5);
    }

    TEST_CASE("first step moves by lr") {
        auto x = Tensor::parameter(NdArray::scalar(0.3), "x");
        backward(x);  // d x / d x = 1
        CHECK(x.grad()[0] == 1.0);
        AdamState st;
        adam_step({x}, st);
        CHECK(x.value()[0] - 0.3 == doctest::Approx(-1e-3).epsilon(1e-6));
        CHECK_FALSE(x.has_grad());
        CHECK(st.step_count == 1);
        CHECK(st.m[0].shape() == x.shape());
    }

    TEST_CASE("minimises x^2") {
        auto x = Tensor::parameter(NdArray::scalar(1.0), "x");
        AdamState st;
        st.lr = 1e-2;
        double prev = 1.0;
        bool monotone = true;
        for (int i = 0; i < 200; ++i) {
            auto f = mul(x, x);
            const double fv = f.value()[0];
            if (i > 5 && fv > prev) monotone = false;
            prev = fv;
            backward(f);
            adam_step({x}, st);
        }
        CHECK(monotone);
        CHECK(std::abs(x.value()[0]) < 0.5);
    }

    TEST_CASE("missing gradient names the parameter") {
        auto a = Tensor::parameter(NdArray::scalar(1.0), "encoder.weight");
        AdamState st;
        try {
            adam_step({a}, st);
            FAIL("expected error");
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find("encoder.weight") != std::string::npos);
        }
    }
}

TEST_SUITE("backward") {
    TEST_CASE("identity graph") {
        auto x = Tensor::parameter(NdArray::scalar(4.0), "x");
        backward(x);
        CHECK(x.grad()[0] == 1.0);
    }

    TEST_CASE("second sweep of the same loss is an error") {
        auto x = Tensor::parameter(NdArray::scalar(2.0), "x");
        auto loss = mul(x, x);
        backward(loss);
        CHECK(x.grad()[0] == 4.0);
        CHECK_THROWS_AS(backward(loss), Error);
    }

    TEST_CASE("non-scalar loss") {
        auto x = Tensor::parameter(NdArray({2}, 1.0), "x");
        CHECK_THROWS_AS(backward(x), ShapeError);
    }

    TEST_CASE("gradients accumulate across losses until cleared") {
        auto x = Tensor::parameter(NdArray::scalar(3.0), "x");
        backward(mul(x, x));
        backward(mul(x, x));
        CHECK(x.grad()[0] == 12.0);
        x.zero_grad();
        CHECK_FALSE(x.has_grad());
    }

    TEST_CASE("no-grad guard records nothing") {
        auto x = Tensor::parameter(NdArray::scalar(3.0), "x");
        Tensor y;
        {
            NoGradGuard guard;
            y = mul(x, x);
        }
        CHECK_FALSE(y.requires_grad());
        CHECK(grad_enabled());
    }

    TEST_CASE("forward passes are bitwise deterministic") {
        Rng rng(18);
        NdArray x = random_array({1, 2, 6, 6, 4}, rng);
        Rng init(99);
        auto p = ConvParams::same("c", 3, 2, 3, init);
        auto run = [&] {
            return sigmoid(leaky_relu(conv3d(Tensor::constant(x), p), 0.01)).value();
        };
        const NdArray a = run();
        const NdArray b = run();
        CHECK(std::equal(a.data().begin(), a.data().end(), b.data().begin()));
    }
}
