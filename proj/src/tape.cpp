#include "entnet/tape.hpp"

#include "entnet/error.hpp"

namespace entnet {

Tape Tape::inference() {
  Tape t;
  t.track_params_ = false;
  return t;
}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), nullptr, {}, {}, nullptr, false});
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::param(Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) {
    return Var{it->second};
  }
  nodes_.push_back(Node{{}, &p.value, {}, {}, &p, track_params_ && !p.frozen});
  const auto id = static_cast<std::uint32_t>(nodes_.size() - 1);
  param_nodes_.emplace(&p, id);
  return Var{id};
}

Var Tape::param(const Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) {
    return Var{it->second};
  }
  nodes_.push_back(Node{{}, &p.value, {}, {}, nullptr, false});
  const auto id = static_cast<std::uint32_t>(nodes_.size() - 1);
  param_nodes_.emplace(&p, id);
  return Var{id};
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn) {
  bool needs = false;
  for (Var in : inputs) needs = needs || nodes_[in.id].requires_grad;
  nodes_.push_back(Node{std::move(value), nullptr, {}, needs ? std::move(fn) : BackwardFn{},
                        nullptr, needs});
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Tensor& Tape::grad(Var v) { return grad_mut(v.id); }

Tensor& Tape::grad_mut(std::uint32_t id) {
  Node& node = nodes_[id];
  if (node.grad.empty()) {
    node.grad = Tensor(node.external != nullptr ? node.external->shape() : node.value.shape());
  }
  return node.grad;
}

void Tape::backward(Var loss, double seed) {
  if (consumed_) {
    fail(ErrorCode::kDoubleBackward, "tape already replayed; record a new forward pass");
  }
  if (value(loss).size() != 1) {
    fail(ErrorCode::kNotScalar, "backward needs a single-element loss, got shape " +
                                    shape_string(value(loss).shape()));
  }
  consumed_ = true;
  grad_mut(loss.id)[0] += seed;
  for (std::uint32_t id = loss.id + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.requires_grad || node.grad.empty()) continue;
    if (node.backward) {
      node.backward(*this, id);
    } else if (node.param != nullptr) {
      auto dst = node.param->grad.values();
      auto src = node.grad.values();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
  }
}

}  // namespace entnet
