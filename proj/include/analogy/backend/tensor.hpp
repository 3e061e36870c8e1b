#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace analogy::ad {

using Shape = std::vector<int>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

class Tensor;

namespace detail {

// Backward closures receive the upstream gradient, the op's own output and its
// inputs. They must not capture graph tensors themselves, otherwise a node would
// keep itself alive through its closure.
using BackwardFn = std::function<std::vector<Tensor>(
    const Tensor& grad, const Tensor& out, const std::vector<Tensor>& inputs)>;

/// Inside a backward closure: whether input `i` needs a gradient for the
/// current grad() call. Closures may return an undefined tensor otherwise.
bool input_needed(std::size_t i);

struct Node {
  Shape shape;
  std::vector<double> value;
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<Tensor> inputs;
  BackwardFn backward;
};

}  // namespace detail

/// Handle to a node of the computation graph. Copies share the node.
///
/// Values are immutable once an op has produced them; only leaf tensors (the
/// parameters) may be written through `mutable_values()`.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_values(Shape shape, std::vector<double> values,
                            bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  int dim(std::size_t i) const;
  std::size_t rank() const { return shape().size(); }
  std::size_t numel() const;
  std::span<const double> values() const;
  std::span<double> mutable_values();
  double item() const;

  bool requires_grad() const;
  bool is_leaf() const;
  void set_requires_grad(bool flag);
  const char* op_name() const;

  /// New leaf with a copy of the value and no history.
  Tensor detach() const;
  /// New leaf with a copy of the value, keeping the requires_grad flag.
  Tensor clone() const;

  const detail::Node* id() const { return node_.get(); }

  /// Op construction hook. History is recorded only when grad mode is on and
  /// at least one input requires a gradient.
  static Tensor make_result(Shape shape, std::vector<double> value,
                            const char* op, std::vector<Tensor> inputs,
                            detail::BackwardFn backward);

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  detail::Node& node() const;

  std::shared_ptr<detail::Node> node_;
};

bool grad_enabled();

/// Keeps freed tensor buffers in the heap instead of returning them to the OS,
/// which otherwise dominates the cost of recording large graphs. Idempotent.
void tune_allocator();

class GradModeGuard {
 public:
  explicit GradModeGuard(bool enabled);
  ~GradModeGuard();
  GradModeGuard(const GradModeGuard&) = delete;
  GradModeGuard& operator=(const GradModeGuard&) = delete;

 private:
  bool previous_;
};

class NoGradGuard : public GradModeGuard {
 public:
  NoGradGuard() : GradModeGuard(false) {}
};

/// Reverse-mode gradient of a one-element tensor.
///
/// With `create_graph` the returned gradients carry history of their own and can
/// be differentiated again (needed by the gradient penalty). A `wrt` tensor the
/// output does not depend on is an error unless `allow_unused` is set, in which
/// case its gradient is zeros.
std::vector<Tensor> grad(const Tensor& output, const std::vector<Tensor>& wrt,
                         bool create_graph = false, bool allow_unused = false);

}  // namespace analogy::ad
