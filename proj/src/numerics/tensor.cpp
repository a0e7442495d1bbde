#include "hrgc/numerics/tensor.hpp"

#include <unordered_set>
#include <utility>

#include "hrgc/errors.hpp"

namespace hrgc {

namespace {

thread_local bool g_grad_enabled = true;

void check_shape(const Shape& shape) {
  if (shape.empty() || shape.size() > 3) {
    throw ShapeError("tensor rank must be 1-3, got shape " + shape_to_string(shape));
  }
  for (std::size_t extent : shape) {
    if (extent == 0) throw ShapeError("tensor extents must be positive, got " + shape_to_string(shape));
  }
}

}  // namespace

std::string shape_to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t extent : shape) n *= extent;
  return n;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

template <typename Real>
Tensor<Real> Tensor<Real>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), Real(0), requires_grad);
}

template <typename Real>
Tensor<Real> Tensor<Real>::full(Shape shape, Real fill, bool requires_grad) {
  check_shape(shape);
  const std::size_t n = shape_numel(shape);
  return from_values(std::move(shape), std::vector<Real>(n, fill), requires_grad);
}

template <typename Real>
Tensor<Real> Tensor<Real>::from_values(Shape shape, std::vector<Real> values, bool requires_grad) {
  check_shape(shape);
  if (shape_numel(shape) != values.size()) {
    throw ShapeError("tensor shape " + shape_to_string(shape) + " does not hold " +
                     std::to_string(values.size()) + " values");
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  node->grad.assign(node->value.size(), Real(0));
  return Tensor(std::move(node));
}

template <typename Real>
Tensor<Real> Tensor<Real>::scalar(Real value, bool requires_grad) {
  return from_values({1}, {value}, requires_grad);
}

template <typename Real>
std::size_t Tensor<Real>::rows() const {
  const Shape& s = node_->shape;
  if (s.size() == 1) return 1;
  if (s.size() == 2) return s[0];
  throw ShapeError("rows(): expected rank 1 or 2, got " + shape_to_string(s));
}

template <typename Real>
std::size_t Tensor<Real>::cols() const {
  const Shape& s = node_->shape;
  if (s.size() == 1) return s[0];
  if (s.size() == 2) return s[1];
  throw ShapeError("cols(): expected rank 1 or 2, got " + shape_to_string(s));
}

template <typename Real>
std::span<const Real> Tensor<Real>::grad() const {
  node_->ensure_grad();
  return node_->grad;
}

template <typename Real>
std::span<Real> Tensor<Real>::mutable_grad() {
  node_->ensure_grad();
  return node_->grad;
}

template <typename Real>
Real Tensor<Real>::item() const {
  if (numel() != 1) throw ContractError("item(): tensor " + shape_to_string(shape()) + " is not a scalar");
  return node_->value[0];
}

template <typename Real>
void Tensor<Real>::set_requires_grad(bool flag) {
  node_->requires_grad = flag;
  if (flag) node_->ensure_grad();
}

template <typename Real>
void Tensor<Real>::zero_grad() {
  node_->grad.assign(node_->value.size(), Real(0));
}

template <typename Real>
Tensor<Real> Tensor<Real>::detach_copy() const {
  return from_values(node_->shape, node_->value, false);
}

template <typename Real>
Tensor<Real> Tensor<Real>::make_result(Shape shape, std::vector<Real> values, std::vector<Tensor> parents,
                                       std::function<void(Node&)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  bool track = false;
  if (g_grad_enabled) {
    for (const Tensor& p : parents) track = track || p.requires_grad();
  }
  if (track) {
    node->requires_grad = true;
    node->grad.assign(node->value.size(), Real(0));
    node->parents.reserve(parents.size());
    for (Tensor& p : parents) node->parents.push_back(std::move(p.node_));
    node->backward = std::move(backward_fn);
  }
  return Tensor(std::move(node));
}

template <typename Real>
void backward(const Tensor<Real>& loss) {
  using Node = TensorNode<Real>;
  if (!loss.defined() || loss.numel() != 1) {
    throw ContractError("backward(): loss must be a scalar, got " +
                        (loss.defined() ? shape_to_string(loss.shape()) : std::string("undefined")));
  }
  Node* root = &loss.node();
  if (!root->requires_grad) return;

  // Iterative post-order DFS; `order` ends up parents-before-children.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* node : order) {
    if (!node->parents.empty()) node->grad.assign(node->value.size(), Real(0));
  }
  root->ensure_grad();
  root->grad[0] = Real(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward) node->backward(*node);
  }
}

template class Tensor<float>;
template class Tensor<double>;
template void backward<float>(const Tensor<float>&);
template void backward<double>(const Tensor<double>&);

}  // namespace hrgc
