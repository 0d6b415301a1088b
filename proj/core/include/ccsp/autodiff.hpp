#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "ccsp/tensor.hpp"

namespace ccsp {

struct Node;
using NodePtr = std::shared_ptr<Node>;

/// One vertex of the dynamically built compute graph. `backward` reads
/// this node's grad and accumulates into the parents' grads.
struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::vector<NodePtr> parents;
    std::function<void(Node&)> backward;

    Tensor& ensure_grad() {
        if (!grad.defined()) grad = Tensor::zeros(value.shape());
        return grad;
    }
};

/// Value handle into the graph. Copies share the underlying node.
class Variable {
public:
    Variable() = default;
    explicit Variable(NodePtr n) : node_(std::move(n)) {}

    /// Leaf that does not receive gradients (inputs, targets).
    static Variable constant(Tensor value);
    /// Trainable leaf.
    static Variable param(Tensor value);

    bool defined() const { return node_ != nullptr; }
    const Tensor& value() const { return node_->value; }
    Tensor& value() { return node_->value; }
    Tensor& grad() { return node_->ensure_grad(); }
    bool has_grad() const { return node_->grad.defined(); }
    bool requires_grad() const { return node_->requires_grad; }
    double scalar() const { return node_->value[0]; }
    const NodePtr& node() const { return node_; }

    void zero_grad() {
        if (node_ && node_->grad.defined()) node_->grad.zero();
    }

private:
    NodePtr node_;
};

/// Builds an op node; requires_grad is inherited from the parents.
Variable make_op(Tensor value, std::vector<Variable> parents, std::function<void(Node&)> backward);

/// Reverse-mode sweep from a scalar root (seeds d(root)/d(root) = 1).
void backward(const Variable& root);

}  // namespace ccsp
