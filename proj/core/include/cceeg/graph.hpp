#pragma once

#include "cceeg/tensor.hpp"

#include <functional>
#include <stdexcept>
#include <vector>

namespace cceeg {

// Reverse-mode tape. Nodes are appended in topological order as the forward
// pass runs; backward walks the tape once in reverse. Gradients are allocated
// lazily so untouched subgraphs cost nothing.
template <typename S>
class Graph {
 public:
  using BackFn = std::function<void(Graph<S>&)>;

  struct Node {
    Tensor<S> value;
    Tensor<S> grad;       // allocated on first accumulation
    BackFn back;          // empty for leaves / constants
    bool grad_touched = false;
  };

  // Constant: no gradient flows out of it (but grad may be accumulated and ignored).
  int constant(Tensor<S> v) { return push(std::move(v), nullptr); }

  // Leaf: gradient is accumulated; caller reads it after backward().
  int leaf(Tensor<S> v) { return push(std::move(v), nullptr); }

  // Interior op node with a backward closure.
  int op(Tensor<S> v, BackFn back) { return push(std::move(v), std::move(back)); }

  Tensor<S>& val(int id) { return nodes_[static_cast<std::size_t>(id)].value; }
  const Tensor<S>& val(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }

  // Gradient buffer, allocated (zeros) on demand.
  Tensor<S>& grad(int id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.grad_touched) {
      n.grad = Tensor<S>::zeros(n.value.shape());
      n.grad_touched = true;
    }
    return n.grad;
  }

  bool grad_touched(int id) const { return nodes_[static_cast<std::size_t>(id)].grad_touched; }

  // Gradient if touched, else zeros of the value's shape.
  Tensor<S> grad_or_zero(int id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad_touched) return n.grad;
    return Tensor<S>::zeros(n.value.shape());
  }

  std::size_t size() const { return nodes_.size(); }

  // Seeds d(root)/d(root) = 1 (root must be a single-element tensor) and runs
  // every touched node's backward closure in reverse insertion order.
  void backward(int root) {
    Node& r = nodes_[static_cast<std::size_t>(root)];
    if (r.value.numel() != 1) throw std::logic_error("backward: root must be scalar");
    grad(root)[0] = S(1);
    for (int i = root; i >= 0; --i) {
      Node& n = nodes_[static_cast<std::size_t>(i)];
      if (n.grad_touched && n.back) n.back(*this);
    }
  }

  void clear() { nodes_.clear(); }

 private:
  int push(Tensor<S> v, BackFn back) {
    nodes_.push_back(Node{std::move(v), Tensor<S>(), std::move(back), false});
    return static_cast<int>(nodes_.size()) - 1;
  }

  std::vector<Node> nodes_;
};

}  // namespace cceeg
