#ifndef FLEXIFILM_TENSOR_HPP
#define FLEXIFILM_TENSOR_HPP

#include <algorithm>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "flexifilm/error.hpp"

namespace flexifilm {

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string to_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        os << (i ? "," : "") << shape[i];
    }
    os << ']';
    return os.str();
}

inline void require_positive_extents(const Shape& shape) {
    for (auto e : shape) {
        if (e == 0) throw ShapeError("zero extent in shape " + to_string(shape));
    }
}

// Graph recording is on by default; NoGradGuard switches it off for the
// lifetime of the guard (sampling, evaluation).
inline bool& grad_mode_flag() {
    thread_local bool enabled = true;
    return enabled;
}

inline bool grad_enabled() { return grad_mode_flag(); }

class NoGradGuard {
public:
    NoGradGuard() : previous_(grad_mode_flag()) { grad_mode_flag() = false; }
    ~NoGradGuard() { grad_mode_flag() = previous_; }
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

namespace detail {

template <class T>
struct Node {
    Shape shape;
    std::vector<T> data;
    std::vector<T> grad;  // empty until something is accumulated
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    // Reads this node's grad and accumulates into the parents that require it.
    std::function<void(Node&)> backward;

    T* grad_buffer() {
        if (grad.empty()) grad.assign(data.size(), T{0});
        return grad.data();
    }
};

}  // namespace detail

/// Dense row-major tensor with an optional reverse-mode tape.
///
/// Copies share storage (handle semantics); use clone() for a deep copy.
/// Data is treated as immutable once the tensor participates in a graph;
/// mutable_data() exists for initialisation and optimizer updates.
template <class T>
class BasicTensor {
public:
    using value_type = T;
    using NodeType = detail::Node<T>;

    BasicTensor() = default;

    explicit BasicTensor(Shape shape, T fill = T{0}) : node_(std::make_shared<NodeType>()) {
        node_->data.assign(flexifilm::numel(shape), fill);
        node_->shape = std::move(shape);
    }

    BasicTensor(Shape shape, std::vector<T> values) : node_(std::make_shared<NodeType>()) {
        if (flexifilm::numel(shape) != values.size()) {
            throw ShapeError("data length " + std::to_string(values.size()) + " does not match shape " +
                             to_string(shape));
        }
        node_->shape = std::move(shape);
        node_->data = std::move(values);
    }

    static BasicTensor scalar(T value) { return BasicTensor(Shape{}, std::vector<T>{value}); }

    bool defined() const { return static_cast<bool>(node_); }
    const Shape& shape() const { return node_->shape; }
    std::size_t rank() const { return node_->shape.size(); }
    std::size_t extent(std::size_t axis) const { return node_->shape.at(axis); }
    std::size_t numel() const { return node_->data.size(); }

    std::span<const T> data() const { return node_->data; }
    std::span<T> mutable_data() { return node_->data; }
    const T* raw() const { return node_->data.data(); }
    T at(std::size_t i) const { return node_->data.at(i); }

    T item() const {
        if (numel() != 1) throw ContractError("item() on tensor of shape " + to_string(shape()));
        return node_->data[0];
    }

    bool requires_grad() const { return node_->requires_grad; }
    BasicTensor& set_requires_grad(bool on) {
        node_->requires_grad = on;
        return *this;
    }

    bool has_grad() const { return !node_->grad.empty(); }
    std::span<const T> grad() const { return node_->grad; }
    std::span<T> mutable_grad() { return {node_->grad_buffer(), node_->data.size()}; }
    void zero_grad() { node_->grad.clear(); }

    // Deep copy without graph history.
    BasicTensor clone() const { return BasicTensor(shape(), node_->data); }
    BasicTensor detach() const { return clone(); }

    NodeType* node() const { return node_.get(); }
    const std::shared_ptr<NodeType>& node_ptr() const { return node_; }

    bool same_storage(const BasicTensor& other) const { return node_ == other.node_; }

private:
    std::shared_ptr<NodeType> node_;
};

using Tensor = BasicTensor<float>;

template <class T>
void require_same_shape(const BasicTensor<T>& a, const BasicTensor<T>& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
    }
}

namespace detail {

// Builds the result of a differentiable op. The backward closure is attached
// only when grad mode is on and at least one input requires a gradient.
template <class T>
BasicTensor<T> make_result(Shape shape, std::vector<T> values, std::initializer_list<BasicTensor<T>> inputs,
                           std::function<void(Node<T>&)> backward) {
    BasicTensor<T> out(std::move(shape), std::move(values));
    if (!grad_enabled()) return out;
    bool any = false;
    for (const auto& in : inputs) any = any || in.requires_grad();
    if (!any) return out;
    auto* node = out.node();
    node->requires_grad = true;
    for (const auto& in : inputs) node->parents.push_back(in.node_ptr());
    node->backward = std::move(backward);
    return out;
}

}  // namespace detail

/// Populates grad buffers of every tensor reachable from `loss` that requires
/// a gradient, then frees the recorded graph.
template <class T>
void backward(const BasicTensor<T>& loss) {
    if (loss.numel() != 1) {
        throw ContractError("backward() needs a scalar loss, got shape " + to_string(loss.shape()));
    }
    using NodeT = detail::Node<T>;
    std::vector<NodeT*> order;
    std::unordered_set<NodeT*> seen;
    // iterative post-order DFS
    std::vector<std::pair<NodeT*, std::size_t>> stack{{loss.node(), 0}};
    seen.insert(loss.node());
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < n->parents.size()) {
            NodeT* p = n->parents[next++].get();
            if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }
    loss.node()->grad_buffer()[0] += T{1};
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        NodeT* n = *it;
        if (n->backward && !n->grad.empty()) n->backward(*n);
    }
    for (NodeT* n : order) {
        n->backward = nullptr;
        n->parents.clear();
    }
}

}  // namespace flexifilm

#endif
