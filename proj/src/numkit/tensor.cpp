#include "veal/numkit/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>
#include <utility>

#include "veal/errors.hpp"

namespace veal::numkit {

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;
  bool has_grad = false;
  bool requires_grad = false;
  bool leaf = true;
  std::vector<std::shared_ptr<Node>> inputs;
  BackwardFn backward;
};

}  // namespace detail

using detail::Node;

namespace {
thread_local bool g_grad_enabled = true;
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool NoGradGuard::grad_enabled() { return g_grad_enabled; }

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor() : Tensor(Shape{}, std::vector<double>{0.0}) {}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad)
    : node_(std::make_shared<Node>()) {
  if (shape_size(shape) != data.size()) {
    throw DimensionError("tensor shape " + shape_string(shape) + " does not match " +
                         std::to_string(data.size()) + " values");
  }
  node_->shape = std::move(shape);
  node_->data = std::move(data);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return filled(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::filled(Shape shape, double value, bool requires_grad) {
  std::vector<double> data(shape_size(shape), value);
  return Tensor(std::move(shape), std::move(data), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor(Shape{}, {value}, requires_grad);
}

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor(Shape{values.size()}, std::vector<double>(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t m = rows.size();
  const std::size_t n = m ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(m * n);
  for (const auto& row : rows) {
    if (row.size() != n) throw DimensionError("ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor(Shape{m, n}, std::move(data));
}

Tensor Tensor::make_result(Shape shape, std::vector<double> data,
                           std::vector<Tensor> inputs, BackwardFn backward) {
  Tensor out(std::move(shape), std::move(data));
  const bool any = g_grad_enabled && std::any_of(inputs.begin(), inputs.end(),
                               [](const Tensor& t) { return t.requires_grad(); });
  if (any) {
    out.node_->requires_grad = true;
    out.node_->leaf = false;
    out.node_->backward = std::move(backward);
    out.node_->inputs.reserve(inputs.size());
    for (auto& t : inputs) out.node_->inputs.push_back(std::move(t.node_));
  }
  return out;
}

const Shape& Tensor::shape() const { return node_->shape; }
std::size_t Tensor::size() const { return node_->data.size(); }

std::size_t Tensor::rows() const {
  switch (rank()) {
    case 0:
    case 1:
      return 1;
    case 2:
      return node_->shape[0];
    default:
      throw DimensionError("rows() on tensor of shape " + shape_string(shape()));
  }
}

std::size_t Tensor::cols() const {
  switch (rank()) {
    case 0:
      return 1;
    case 1:
      return node_->shape[0];
    case 2:
      return node_->shape[1];
    default:
      throw DimensionError("cols() on tensor of shape " + shape_string(shape()));
  }
}

std::span<const double> Tensor::data() const { return node_->data; }

std::span<double> Tensor::mutable_data() {
  if (!node_->leaf) throw Error("mutable_data() on a recorded op result");
  return node_->data;
}

double Tensor::item() const {
  if (size() != 1) {
    throw DimensionError("item() on tensor of shape " + shape_string(shape()));
  }
  return node_->data[0];
}

double Tensor::at(std::size_t r, std::size_t c) const { return node_->data[r * cols() + c]; }

bool Tensor::requires_grad() const { return node_->requires_grad; }

void Tensor::set_requires_grad(bool value) {
  if (!node_->leaf) throw Error("set_requires_grad() on a recorded op result");
  node_->requires_grad = value;
}

bool Tensor::is_leaf() const { return node_->leaf; }
bool Tensor::has_grad() const { return node_->has_grad; }

std::span<const double> Tensor::grad() const {
  if (!node_->has_grad) throw Error("tensor has no gradient");
  return node_->grad;
}

void Tensor::zero_grad() {
  node_->grad.clear();
  node_->grad.shrink_to_fit();
  node_->has_grad = false;
}

Tensor Tensor::detach() const { return Tensor(shape(), node_->data); }

void Tensor::backward(BackwardMode mode) const {
  if (size() != 1) {
    throw DimensionError("backward() needs a scalar loss, got shape " +
                         shape_string(shape()));
  }
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order with inputs first.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.push_back({child, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* n : order) {
    if (n->leaf) {
      if (n->has_grad) {
        if (mode == BackwardMode::kStrict) {
          throw GradientAccumulationError(
              "leaf of shape " + shape_string(n->shape) +
              " still holds a gradient; call zero_grad() between steps");
        }
      } else {
        n->grad.assign(n->data.size(), 0.0);
        n->has_grad = true;
      }
    } else {
      n->grad.assign(n->data.size(), 0.0);
    }
  }

  node_->grad[0] += 1.0;

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->leaf) continue;
    BackwardContext ctx;
    ctx.out_grad = n->grad;
    ctx.in_grads.reserve(n->inputs.size());
    for (auto& in : n->inputs) {
      ctx.in_grads.push_back(in->requires_grad ? std::span<double>(in->grad)
                                               : std::span<double>());
    }
    n->backward(ctx);
  }

  for (Node* n : order) {
    if (!n->leaf) {
      n->grad.clear();
      n->grad.shrink_to_fit();
    }
  }
}

}  // namespace veal::numkit
