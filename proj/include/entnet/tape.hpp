#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <limits>
#include <unordered_map>
#include <vector>

#include "entnet/parameter.hpp"
#include "entnet/tensor.hpp"

namespace entnet {

/// Handle to a node recorded on a Tape. Only meaningful for the tape that
/// produced it.
struct Var {
  static constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
  std::uint32_t id = kNone;

  bool valid() const noexcept { return id != kNone; }
};

/// Define-by-run reverse-mode tape. Nodes are appended in evaluation order,
/// so the recording order is already a topological order and `backward`
/// walks it in reverse.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::uint32_t self)>;

  Tape() = default;
  /// A tape whose parameter leaves do not require gradients, so no adjoint
  /// closures are recorded. Used for evaluation.
  static Tape inference();

  Var constant(Tensor value);
  /// Leaf bound to a parameter. Repeated calls within one recording return
  /// the same node, so a shared weight has a single adjoint that is flushed
  /// into `Parameter::grad` once, additively.
  Var param(Parameter& p);
  /// Read-only parameter leaf; never requires a gradient.
  Var param(const Parameter& p);

  /// Low-level recording hook used by the op library.
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn);

  const Tensor& value(Var v) const {
    const Node& n = nodes_[v.id];
    return n.external != nullptr ? *n.external : n.value;
  }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  /// Adjoint of `v` after `backward`; zeros if nothing flowed into it.
  const Tensor& grad(Var v);
  /// Mutable adjoint, allocated on first use. Used by backward closures.
  Tensor& grad_mut(std::uint32_t id);
  bool has_grad(std::uint32_t id) const { return !nodes_[id].grad.empty(); }

  /// Seeds d(loss)/d(loss) = seed and propagates to every node, then adds
  /// parameter-leaf adjoints into the owning Parameter. The loss must be a
  /// single-element node. A tape can be replayed only once.
  void backward(Var loss, double seed = 1.0);

  std::size_t size() const noexcept { return nodes_.size(); }
  bool consumed() const noexcept { return consumed_; }

 private:
  struct Node {
    Tensor value;
    // Parameter leaves read the parameter's storage instead of copying it.
    const Tensor* external = nullptr;
    Tensor grad;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::uint32_t> param_nodes_;
  bool consumed_ = false;
  bool track_params_ = true;
};

}  // namespace entnet
