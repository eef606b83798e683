#include "freqseg/tensor/tensor.hpp"

#include <unordered_set>

#include "freqseg/error.hpp"

namespace freqseg {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() noexcept { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

NdArray& detail::Node::grad_buffer() {
    if (!grad) grad.emplace(value.shape(), 0.0);
    return *grad;
}

Tensor Tensor::constant(NdArray value) {
    auto node = std::make_shared<detail::Node>();
    node->value = std::move(value);
    return Tensor(std::move(node));
}

Tensor Tensor::parameter(NdArray value, std::string name) {
    auto node = std::make_shared<detail::Node>();
    node->value = std::move(value);
    node->requires_grad = true;
    node->name = std::move(name);
    return Tensor(std::move(node));
}

detail::Node& Tensor::node() const {
    if (!node_) throw Error("use of an undefined tensor");
    return *node_;
}

const NdArray& Tensor::value() const { return node().value; }
NdArray& Tensor::mutable_value() { return node().value; }
bool Tensor::requires_grad() const { return node().requires_grad; }
void Tensor::set_requires_grad(bool on) { node().requires_grad = on; }
const std::string& Tensor::name() const { return node().name; }
bool Tensor::has_grad() const { return node().grad.has_value(); }

const NdArray& Tensor::grad() const {
    const auto& n = node();
    if (!n.grad) throw Error("tensor '" + n.name + "' has no gradient");
    return *n.grad;
}

void Tensor::zero_grad() { node().grad.reset(); }

Tensor Tensor::make_result(NdArray value, std::vector<Tensor> parents,
                           std::function<void(detail::Node&)> backward) {
    auto node = std::make_shared<detail::Node>();
    node->value = std::move(value);
    bool needs = false;
    for (const auto& p : parents) needs = needs || p.requires_grad();
    if (needs && g_grad_enabled && backward) {
        node->requires_grad = true;
        node->parents.reserve(parents.size());
        for (auto& p : parents) node->parents.push_back(p.node_);
        node->backward = std::move(backward);
    }
    return Tensor(std::move(node));
}

void backward(const Tensor& loss) {
    auto& root = loss.node();
    if (root.value.size() != 1)
        throw ShapeError("backward requires a scalar loss, got shape " +
                         shape_to_string(root.value.shape()));
    if (root.consumed) throw Error("backward called twice on the same loss");
    root.consumed = true;
    if (!root.requires_grad) return;

    // Iterative post-order DFS gives a topological order.
    std::vector<detail::Node*> order;
    std::unordered_set<detail::Node*> visited;
    std::vector<std::pair<detail::Node*, std::size_t>> stack{{&root, 0}};
    visited.insert(&root);
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            detail::Node* p = node->parents[next++].get();
            if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    root.grad_buffer().fill(1.0);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        detail::Node* n = *it;
        if (n->backward && n->grad) n->backward(*n);
    }
    // Release interior activations and gradients; leaves keep theirs.
    for (detail::Node* n : order) {
        if (n->backward) {
            n->backward = nullptr;
            n->parents.clear();
            if (n != &root) n->grad.reset();
        }
    }
}

}  // namespace freqseg
