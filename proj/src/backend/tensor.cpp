#include "analogy/backend/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "analogy/backend/ops.hpp"

namespace analogy::ad {

namespace {
thread_local bool g_grad_enabled = true;
}

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw std::invalid_argument("negative extent in shape " + to_string(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const std::size_t n = ad::numel(shape);
  return from_values(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from_values(Shape shape, std::vector<double> values, bool requires_grad) {
  if (values.size() != ad::numel(shape)) {
    throw std::invalid_argument("value count " + std::to_string(values.size()) +
                                " does not match shape " + to_string(shape));
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from_values({1}, {value}, requires_grad);
}

detail::Node& Tensor::node() const {
  if (!node_) throw std::logic_error("use of an undefined tensor");
  return *node_;
}

const Shape& Tensor::shape() const { return node().shape; }

int Tensor::dim(std::size_t i) const {
  const auto& s = shape();
  if (i >= s.size()) throw std::out_of_range("tensor dim index out of range");
  return s[i];
}

std::size_t Tensor::numel() const { return node().value.size(); }

std::span<const double> Tensor::values() const { return node().value; }

std::span<double> Tensor::mutable_values() {
  auto& n = node();
  if (n.backward) throw std::logic_error("only leaf tensors can be written in place");
  return n.value;
}

double Tensor::item() const {
  const auto& n = node();
  if (n.value.size() != 1) {
    throw std::invalid_argument("item() on tensor of shape " + to_string(n.shape));
  }
  return n.value.front();
}

bool Tensor::requires_grad() const { return node().requires_grad; }

bool Tensor::is_leaf() const { return !node().backward; }

void Tensor::set_requires_grad(bool flag) {
  auto& n = node();
  if (n.backward) throw std::logic_error("requires_grad can only be set on leaves");
  n.requires_grad = flag;
}

const char* Tensor::op_name() const { return node().op; }

namespace detail {

namespace {
thread_local const std::vector<bool>* t_needed_mask = nullptr;
}  // namespace

bool input_needed(std::size_t i) {
  return t_needed_mask == nullptr || (i < t_needed_mask->size() && (*t_needed_mask)[i]);
}

}  // namespace detail

Tensor Tensor::detach() const { return from_values(shape(), node().value, false); }

Tensor Tensor::clone() const { return from_values(shape(), node().value, requires_grad()); }

Tensor Tensor::make_result(Shape shape, std::vector<double> value, const char* op,
                           std::vector<Tensor> inputs, detail::BackwardFn backward) {
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->op = op;
  if (node->value.size() != ad::numel(node->shape)) {
    throw std::logic_error(std::string("op ") + op + " produced a value/shape mismatch");
  }
  const bool any = std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) {
    return t.defined() && t.requires_grad();
  });
  if (g_grad_enabled && any) {
    node->requires_grad = true;
    node->inputs = std::move(inputs);
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

bool grad_enabled() { return g_grad_enabled; }

void tune_allocator() {
#if defined(__GLIBC__)
  static const bool done = [] {
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
    return true;
  }();
  (void)done;
#endif
}

GradModeGuard::GradModeGuard(bool enabled) : previous_(g_grad_enabled) {
  g_grad_enabled = enabled;
}

GradModeGuard::~GradModeGuard() { g_grad_enabled = previous_; }

std::vector<Tensor> grad(const Tensor& output, const std::vector<Tensor>& wrt,
                         bool create_graph, bool allow_unused) {
  if (output.numel() != 1) {
    throw std::invalid_argument("grad() needs a one-element output, got shape " +
                                to_string(output.shape()));
  }
  for (const auto& w : wrt) {
    if (!w.defined()) throw std::invalid_argument("grad() with an undefined wrt tensor");
  }

  using NodeKey = const detail::Node*;
  std::vector<Tensor> order;
  if (output.requires_grad()) {
    // Iterative post-order DFS so long chains cannot overflow the stack.
    std::unordered_set<NodeKey> visited;
    std::vector<std::pair<Tensor, std::size_t>> stack;
    stack.emplace_back(output, 0);
    visited.insert(output.id());
    while (!stack.empty()) {
      auto& [t, next] = stack.back();
      const auto& inputs = t.id()->inputs;
      if (next < inputs.size()) {
        const Tensor& in = inputs[next++];
        if (in.defined() && in.requires_grad() && visited.insert(in.id()).second) {
          stack.emplace_back(in, 0);
        }
      } else {
        order.push_back(t);
        stack.pop_back();
      }
    }
  }

  // Only nodes on a path to some wrt tensor take part in the backward sweep.
  std::unordered_set<NodeKey> needed;
  for (const auto& w : wrt) needed.insert(w.id());
  for (const Tensor& t : order) {
    for (const Tensor& in : t.id()->inputs) {
      if (in.defined() && needed.count(in.id())) {
        needed.insert(t.id());
        break;
      }
    }
  }

  std::unordered_map<NodeKey, Tensor> grads;
  std::vector<bool> mask;
  {
    GradModeGuard mode(create_graph);
    grads[output.id()] = Tensor::full(output.shape(), 1.0);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const Tensor& t = *it;
      const auto* node = t.id();
      if (!node->backward || !needed.count(node)) continue;
      auto found = grads.find(node);
      if (found == grads.end()) continue;
      const Tensor upstream = found->second;
      mask.assign(node->inputs.size(), false);
      for (std::size_t i = 0; i < node->inputs.size(); ++i) {
        const Tensor& in = node->inputs[i];
        mask[i] = in.defined() && in.requires_grad() && needed.count(in.id()) > 0;
      }
      detail::t_needed_mask = &mask;
      std::vector<Tensor> input_grads;
      try {
        input_grads = node->backward(upstream, t, node->inputs);
      } catch (...) {
        detail::t_needed_mask = nullptr;
        throw;
      }
      detail::t_needed_mask = nullptr;
      for (std::size_t i = 0; i < node->inputs.size(); ++i) {
        const Tensor& in = node->inputs[i];
        if (!mask[i] || i >= input_grads.size() ||
            !input_grads[i].defined()) {
          continue;
        }
        auto [slot, inserted] = grads.try_emplace(in.id(), input_grads[i]);
        if (!inserted) slot->second = add(slot->second, input_grads[i]);
      }
    }
  }

  std::vector<Tensor> result;
  result.reserve(wrt.size());
  for (const auto& w : wrt) {
    auto found = grads.find(w.id());
    if (found != grads.end()) {
      result.push_back(found->second);
    } else if (allow_unused) {
      result.push_back(Tensor::zeros(w.shape()));
    } else {
      throw std::invalid_argument("grad(): a requested tensor is unreachable from the output");
    }
  }
  return result;
}

}  // namespace analogy::ad
