#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fare/common.hpp"

namespace fare {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct TensorNode {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // allocated lazily, same length as value
    bool requires_grad = false;
    std::string name;
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::function<void(TensorNode&)> backward_fn;

    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    }
};

// Value-semantics handle onto a graph node. Copies alias the same storage;
// a graph is kept alive by the tensors that reference its downstream nodes.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor from_data(Shape shape, std::vector<double> data, bool requires_grad = false);
    static Tensor scalar(double v);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t numel() const { return node_->value.size(); }
    std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
    std::size_t rank() const { return node_->shape.size(); }

    std::vector<double>& data() { return node_->value; }
    const std::vector<double>& data() const { return node_->value; }

    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool v) { node_->requires_grad = v; }

    std::vector<double>& grad();
    const std::vector<double>& grad() const;
    void zero_grad();

    const std::string& name() const { return node_->name; }
    void set_name(std::string n) { node_->name = std::move(n); }

    // Scalar accessor; throws unless numel() == 1.
    double value() const;

    // Reverse-mode sweep from a scalar: seeds d(self)/d(self) = 1 and
    // accumulates into the grad of every reachable node that requires it.
    void backward() const;

    std::shared_ptr<TensorNode>& node() { return node_; }
    const std::shared_ptr<TensorNode>& node() const { return node_; }
    bool same_node(const Tensor& other) const { return node_ == other.node_; }

private:
    explicit Tensor(std::shared_ptr<TensorNode> node) : node_(std::move(node)) {}
    std::shared_ptr<TensorNode> node_;

    friend Tensor make_op_output(Shape shape, std::vector<std::shared_ptr<TensorNode>> parents,
                                 std::function<void(TensorNode&)> backward_fn);
};

// Shared by all ops: output requires grad iff any parent does; constant
// subgraphs record no parents so they free as soon as handles drop.
Tensor make_op_output(Shape shape, std::vector<std::shared_ptr<TensorNode>> parents,
                      std::function<void(TensorNode&)> backward_fn);

}  // namespace fare
