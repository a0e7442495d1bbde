#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace hrgc {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

template <typename Real>
struct TensorNode {
  Shape shape;
  std::vector<Real> value;
  std::vector<Real> grad;
  bool requires_grad = false;
  // Recorded only when the node was produced while gradients are enabled.
  std::vector<std::shared_ptr<TensorNode>> parents;
  // Adds this node's grad, pushed through the local Jacobian, into the
  // parents' grads.
  std::function<void(TensorNode&)> backward;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), Real(0));
  }
};

/// Dense rank 1-3 array with an attached gradient buffer. Copies share the
/// underlying node, so a Tensor behaves like a handle into the graph.
///
/// Precision is fixed per instantiation: Tensor<double> for gradient checks,
/// Tensor<float> where training speed matters. Graphs never mix the two.
template <typename Real>
class Tensor {
 public:
  using Node = TensorNode<Real>;
  using value_type = Real;

  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, Real fill, bool requires_grad = false);
  static Tensor from_values(Shape shape, std::vector<Real> values, bool requires_grad = false);
  static Tensor scalar(Real value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t numel() const { return node_->value.size(); }
  // Rank-2 extents. A rank-1 tensor of length n reads as 1 x n.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const Real> values() const { return node_->value; }
  std::span<Real> mutable_values() { return node_->value; }
  std::span<const Real> grad() const;
  std::span<Real> mutable_grad();
  Real item() const;
  Real at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool flag);
  void zero_grad();

  // Fresh leaf holding a copy of the values; no history, no shared storage.
  Tensor detach_copy() const;

  Node& node() const { return *node_; }
  const std::shared_ptr<Node>& node_ptr() const { return node_; }

  // Builds an op result. Parents and the backward closure are recorded only
  // if gradients are enabled and some parent requires them.
  static Tensor make_result(Shape shape, std::vector<Real> values, std::vector<Tensor> parents,
                            std::function<void(Node&)> backward);

 private:
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  std::shared_ptr<Node> node_;
};

/// Reverse-mode sweep from a scalar loss. Every reachable node is visited once
/// in reverse topological order; leaf grads accumulate, interior grads are
/// reset first so repeated sweeps over one graph are reproducible.
template <typename Real>
void backward(const Tensor<Real>& loss);

// True unless a NoGradGuard is alive on this thread.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

}  // namespace hrgc
