#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace veal::numkit {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

// kStrict rejects a backward pass that would add into a leaf gradient left
// over from an earlier pass; kAccumulate sums into it.
enum class BackwardMode { kStrict, kAccumulate };

// Passed to an op's gradient rule during backward. in_grads[i] is empty when
// input i does not require a gradient; otherwise the rule adds into it.
struct BackwardContext {
  std::span<const double> out_grad;
  std::vector<std::span<double>> in_grads;

  bool needs(std::size_t i) const { return !in_grads[i].empty(); }
};

using BackwardFn = std::function<void(const BackwardContext&)>;

namespace detail {
struct Node;
}

// Dense row-major float64 array with reverse-mode autodiff.
//
// Copies are shallow handles onto the same node, like torch tensors. Values
// produced by ops are immutable; leaves (tensors built from data) may be
// mutated through mutable_data() between steps, which is how optimizers and
// gradient checks update parameters. An op records its gradient rule only
// when at least one input requires grad, so inference builds no graph.
class Tensor {
 public:
  Tensor();
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor filled(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor vector(std::initializer_list<double> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

  // Records an op result. `inputs` are the tensors the rule differentiates
  // against, in the order of BackwardContext::in_grads.
  static Tensor make_result(Shape shape, std::vector<double> data,
                            std::vector<Tensor> inputs, BackwardFn backward);

  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;
  // Rank-2 view helpers; a rank-1 tensor reads as a single row.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const;
  std::span<double> mutable_data();
  double item() const;
  double at(std::size_t r, std::size_t c) const;

  bool requires_grad() const;
  void set_requires_grad(bool value);
  bool is_leaf() const;

  bool has_grad() const;
  std::span<const double> grad() const;
  void zero_grad();

  // Populates grads of every requires_grad leaf reachable from this scalar.
  void backward(BackwardMode mode = BackwardMode::kStrict) const;

  // Same values, no history, no grad.
  Tensor detach() const;

  bool same_node(const Tensor& other) const { return node_ == other.node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

  std::shared_ptr<detail::Node> node_;
};

// While alive on a thread, ops on that thread record no gradient rules.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

  static bool grad_enabled();

 private:
  bool previous_;
};

}  // namespace veal::numkit
