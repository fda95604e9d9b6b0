#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "polyglot/linalg.hpp"

namespace polyglot {

// Index of a value recorded on a Tape.
struct NodeId {
  std::uint32_t index = 0;
};

// Reverse-mode differentiation record. A forward pass appends primitive
// operations in topological order; backward() replays them once in reverse,
// accumulating d(loss)/d(node) additively into per-node gradient buffers.
//
// Matrix-valued nodes are stored flattened row-major, so vec() of an outer
// product is the outer node itself. One backward pass per tape; a tape is
// confined to a single thread and discarded after use.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaves. Constants are not differentiated through; parameters are.
  NodeId constant(Vector v);
  NodeId parameter(std::span<const double> values);

  // Column j of a rows x cols matrix node.
  NodeId column(NodeId m, std::size_t rows, std::size_t cols, std::size_t j);
  NodeId concat(std::span<const NodeId> parts);
  // W x (+ b); w is a rows x cols matrix node.
  NodeId linear(NodeId w, std::size_t rows, std::size_t cols, NodeId x);
  NodeId affine(NodeId w, std::size_t rows, std::size_t cols, NodeId x, NodeId b);
  // W x + U h + b, the preactivation of a recurrent gate.
  NodeId gate(NodeId w, NodeId u, NodeId b, NodeId x, NodeId h, std::size_t rows,
              std::size_t x_len, std::size_t h_len);
  NodeId add(NodeId a, NodeId b);
  NodeId hadamard(NodeId a, NodeId b);
  NodeId sigmoid(NodeId a);
  NodeId tanh(NodeId a);
  // Flattened u (x) v^T: value[i * len(v) + j] = u[i] * v[j].
  NodeId outer(NodeId u, NodeId v);
  NodeId sum(NodeId a);
  NodeId mean(std::span<const NodeId> scalars);
  // log-sum-exp(logits) - logits[target]; gradient is softmax(logits) - onehot.
  NodeId cross_entropy(NodeId logits, std::size_t target);

  const Vector& value(NodeId id) const;
  std::size_t size() const { return nodes_.size(); }

  // Seeds d(loss) = 1 and replays the tape in reverse. The loss must be a
  // scalar node on this tape; a tape can run backward exactly once.
  void backward(NodeId loss);
  // Gradient of the last backward()'s loss w.r.t. this node; exactly zero for
  // nodes the loss does not depend on.
  const Vector& grad(NodeId id);

 private:
  struct Node {
    Vector value;
    Vector grad;  // allocated on first touch during backward
    bool tracked = false;
    std::function<void(Tape&)> back;  // empty for leaves and constants
  };

  NodeId push(Vector value, bool tracked);
  Vector& grad_buf(NodeId id);
  bool tracked(NodeId id) const { return nodes_[id.index].tracked; }
  void check(NodeId id) const;
  void check_len(NodeId id, std::size_t len, const char* what) const;

  std::vector<Node> nodes_;
  bool ran_backward_ = false;
};

}  // namespace polyglot
