#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "freqseg/tensor/ndarray.hpp"

namespace freqseg {

namespace detail {

/// One vertex of the reverse-mode graph. `backward` reads `grad` and
/// accumulates into the grads of `parents`.
struct Node {
    NdArray value;
    std::optional<NdArray> grad;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward;
    bool requires_grad = false;
    bool consumed = false;
    std::string name;

    /// Gradient buffer, zero-initialised on first use.
    NdArray& grad_buffer();
};

}  // namespace detail

/// Handle to a differentiable array. Copies share the same node.
class Tensor {
public:
    Tensor() = default;

    static Tensor constant(NdArray value);
    static Tensor parameter(NdArray value, std::string name);

    bool defined() const noexcept { return static_cast<bool>(node_); }

    const NdArray& value() const;
    NdArray& mutable_value();
    const Shape& shape() const { return value().shape(); }

    bool requires_grad() const;
    void set_requires_grad(bool on);
    const std::string& name() const;

    bool has_grad() const;
    const NdArray& grad() const;
    /// Drops the gradient buffer; the next backward pass reallocates it.
    void zero_grad();

    /// Result node of an operation. `backward` may be empty when no parent
    /// requires a gradient, or when gradient recording is disabled.
    static Tensor make_result(NdArray value, std::vector<Tensor> parents,
                              std::function<void(detail::Node&)> backward);

    detail::Node& node() const;

private:
    explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
    std::shared_ptr<detail::Node> node_;
};

/// Reverse sweep from a scalar loss. Gradients accumulate into every
/// ancestor that requires one. A loss can only be swept once.
void backward(const Tensor& loss);

/// Disables graph recording on the current thread while alive.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

bool grad_enabled() noexcept;

}  // namespace freqseg
