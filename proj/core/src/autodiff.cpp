#include "ccsp/autodiff.hpp"

#include <unordered_set>

namespace ccsp {

Variable Variable::constant(Tensor value) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = false;
    return Variable(std::move(n));
}

Variable Variable::param(Tensor value) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = true;
    return Variable(std::move(n));
}

Variable make_op(Tensor value, std::vector<Variable> parents, std::function<void(Node&)> backward) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->parents.reserve(parents.size());
    for (const Variable& p : parents) {
        n->parents.push_back(p.node());
        if (p.node() && p.node()->requires_grad) n->requires_grad = true;
    }
    if (n->requires_grad) n->backward = std::move(backward);
    return Variable(std::move(n));
}

void backward(const Variable& root) {
    assert(root.defined() && root.value().numel() == 1);

    // Iterative post-order DFS; nodes come out in topological order.
    std::vector<Node*> topo;
    std::unordered_set<Node*> visited;
    struct Frame {
        Node* node;
        size_t next_parent;
    };
    std::vector<Frame> stack;
    stack.push_back({root.node().get(), 0});
    visited.insert(root.node().get());
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_parent < f.node->parents.size()) {
            Node* p = f.node->parents[f.next_parent++].get();
            if (p && p->requires_grad && !visited.count(p)) {
                visited.insert(p);
                stack.push_back({p, 0});
            }
        } else {
            topo.push_back(f.node);
            stack.pop_back();
        }
    }

    root.node()->ensure_grad().fill(1.0);
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        Node* n = *it;
        if (n->backward && n->grad.defined()) n->backward(*n);
    }
}

}  // namespace ccsp
