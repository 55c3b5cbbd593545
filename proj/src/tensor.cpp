#include "fare/tensor.hpp"

#include <algorithm>
#include <unordered_set>

namespace fare {

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    auto node = std::make_shared<TensorNode>();
    node->value.assign(shape_numel(shape), 0.0);
    node->shape = std::move(shape);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data, bool requires_grad) {
    require(shape_numel(shape) == data.size(), ErrorCategory::data,
            strfmt("tensor data length %zu does not match shape %s", data.size(),
                   shape_str(shape).c_str()));
    auto node = std::make_shared<TensorNode>();
    node->shape = std::move(shape);
    node->value = std::move(data);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
}

Tensor Tensor::scalar(double v) { return from_data({1}, {v}); }

std::vector<double>& Tensor::grad() {
    require(node_->requires_grad, ErrorCategory::data,
            "gradient requested on a tensor that does not require grad");
    node_->ensure_grad();
    return node_->grad;
}

const std::vector<double>& Tensor::grad() const {
    require(node_->requires_grad, ErrorCategory::data,
            "gradient requested on a tensor that does not require grad");
    node_->ensure_grad();
    return node_->grad;
}

void Tensor::zero_grad() {
    if (node_->requires_grad) node_->grad.assign(node_->value.size(), 0.0);
}

double Tensor::value() const {
    require(node_->value.size() == 1, ErrorCategory::data,
            strfmt("scalar value requested on tensor of shape %s", shape_str(node_->shape).c_str()));
    return node_->value[0];
}

void Tensor::backward() const {
    require(node_->value.size() == 1, ErrorCategory::data, "backward requires a scalar tensor");
    require(node_->requires_grad, ErrorCategory::data,
            "backward on a tensor with no gradient path");

    // Iterative post-order DFS; reverse gives a valid topological order.
    std::vector<TensorNode*> order;
    std::unordered_set<TensorNode*> visited;
    std::vector<std::pair<TensorNode*, std::size_t>> stack;
    stack.emplace_back(node_.get(), 0);
    visited.insert(node_.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            TensorNode* parent = node->parents[next++].get();
            if (parent->requires_grad && visited.insert(parent).second)
                stack.emplace_back(parent, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    node_->ensure_grad();
    node_->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        TensorNode* node = *it;
        if (node->backward_fn) node->backward_fn(*node);
    }
}

Tensor make_op_output(Shape shape, std::vector<std::shared_ptr<TensorNode>> parents,
                      std::function<void(TensorNode&)> backward_fn) {
    auto node = std::make_shared<TensorNode>();
    node->value.assign(shape_numel(shape), 0.0);
    node->shape = std::move(shape);
    bool needs = false;
    for (const auto& p : parents)
        if (p->requires_grad) needs = true;
    node->requires_grad = needs;
    if (needs) {
        node->parents = std::move(parents);
        node->backward_fn = std::move(backward_fn);
    }
    return Tensor(std::move(node));
}

}  // namespace fare
