#include "entnet/memory.hpp"

#include <string>

#include "entnet/error.hpp"
#include "entnet/ops.hpp"

namespace entnet {

MemoryConfig MemoryConfig::general(std::size_t slots, std::size_t dim) {
  MemoryConfig c;
  c.slots = slots;
  c.dim = dim;
  return c;
}

MemoryConfig MemoryConfig::simplified(std::size_t slots, std::size_t dim) {
  MemoryConfig c;
  c.slots = slots;
  c.dim = dim;
  c.variant = Variant::kSimplified;
  c.activation = Activation::kIdentity;
  c.normalize = false;
  return c;
}

void MemoryConfig::validate() const {
  if (slots == 0 || dim == 0) fail(ErrorCode::kBadConfig, "memory needs slots > 0 and dim > 0");
  if (variant == Variant::kSimplified && (activation != Activation::kIdentity || normalize)) {
    fail(ErrorCode::kBadConfig,
         "simplified memory requires identity activation and no normalization");
  }
}

namespace {

void check_input(const Tape& tape, Var s, const StateVars& state, const char* op) {
  const Tensor& slots = tape.value(state.slots);
  const Tensor& keys = tape.value(state.keys);
  const Tensor& vs = tape.value(s);
  if (slots.shape() != keys.shape() || slots.rank() != 2 || vs.rank() != 1 ||
      vs.size() != slots.cols()) {
    fail(ErrorCode::kDimensionMismatch,
         std::string(op) + ": input " + shape_string(vs.shape()) + " slots " +
             shape_string(slots.shape()) + " keys " + shape_string(keys.shape()));
  }
}

}  // namespace

StateVars init_state(Tape& tape, Var keys) {
  if (tape.value(keys).rank() != 2) {
    fail(ErrorCode::kDimensionMismatch,
         "init_state: keys must be a matrix, got " + shape_string(tape.value(keys).shape()));
  }
  // Slot values start equal to the keys; the tape never mutates a node, so
  // sharing the node is a copy in every observable sense.
  return StateVars{keys, keys};
}

Var gate(Tape& tape, Var s_gate, const StateVars& state) {
  check_input(tape, s_gate, state, "gate");
  const Var content = ops::matvec(tape, state.slots, s_gate);
  const Var location = ops::matvec(tape, state.keys, s_gate);
  return ops::sigmoid(tape, ops::add(tape, content, location));
}

Var candidate(Tape& tape, Var s_update, const StateVars& state, const CellVars& weights,
              const MemoryConfig& config) {
  check_input(tape, s_update, state, "candidate");
  const std::size_t m = tape.value(state.slots).rows();
  if (config.variant == Variant::kSimplified) return ops::broadcast_rows(tape, s_update, m);
  Var pre = ops::add(tape, ops::matmul_nt(tape, state.slots, weights.U),
                     ops::matmul_nt(tape, state.keys, weights.V));
  pre = ops::add_row(tape, pre, ops::matvec(tape, weights.W, s_update));
  if (config.activation == Activation::kPrelu) return ops::prelu(tape, pre, weights.slopes);
  return pre;
}

StateVars step(Tape& tape, Var s_gate, Var s_update, const StateVars& state,
               const CellVars& weights, const MemoryConfig& config) {
  const Var g = gate(tape, s_gate, state);
  const Var cand = candidate(tape, s_update, state, weights, config);
  Var next = ops::add(tape, state.slots, ops::scale_rows(tape, cand, g));
  if (config.normalize) next = ops::normalize_rows(tape, next);
  return StateVars{next, state.keys};
}

StateVars run_story(Tape& tape, std::span<const Var> s_gate, std::span<const Var> s_update,
                    Var keys, const CellVars& weights, const MemoryConfig& config,
                    std::vector<StateVars>* trace) {
  if (s_gate.size() != s_update.size()) {
    fail(ErrorCode::kDimensionMismatch, "run_story: gate and update sequences differ in length");
  }
  StateVars state = init_state(tape, keys);
  for (std::size_t t = 0; t < s_gate.size(); ++t) {
    state = step(tape, s_gate[t], s_update[t], state, weights, config);
    if (trace != nullptr) trace->push_back(state);
  }
  return state;
}

namespace {

CellVars bind(Tape& tape, const CellWeights& w, const MemoryConfig& config) {
  CellVars vars;
  if (config.variant == Variant::kGeneral) {
    vars.U = tape.constant(w.U);
    vars.V = tape.constant(w.V);
    vars.W = tape.constant(w.W);
    if (config.activation == Activation::kPrelu) vars.slopes = tape.constant(w.slopes);
  }
  return vars;
}

StateVars bind(Tape& tape, const MemoryState& state) {
  return StateVars{tape.constant(state.slots), tape.constant(state.keys)};
}

}  // namespace

MemoryState init_state(const Tensor& keys) {
  if (keys.rank() != 2) {
    fail(ErrorCode::kDimensionMismatch,
         "init_state: keys must be a matrix, got " + shape_string(keys.shape()));
  }
  return MemoryState{keys, keys};
}

Tensor gate(const Tensor& s_gate, const MemoryState& state) {
  Tape tape;
  const StateVars vars = bind(tape, state);
  return tape.value(gate(tape, tape.constant(s_gate), vars));
}

Tensor candidate(const Tensor& s_update, const MemoryState& state, const CellWeights& weights,
                 const MemoryConfig& config) {
  Tape tape;
  const StateVars vars = bind(tape, state);
  const CellVars cell = bind(tape, weights, config);
  return tape.value(candidate(tape, tape.constant(s_update), vars, cell, config));
}

MemoryState step(const Tensor& s_gate, const Tensor& s_update, const MemoryState& state,
                 const CellWeights& weights, const MemoryConfig& config) {
  Tape tape;
  const StateVars vars = bind(tape, state);
  const CellVars cell = bind(tape, weights, config);
  const StateVars next =
      step(tape, tape.constant(s_gate), tape.constant(s_update), vars, cell, config);
  return MemoryState{tape.value(next.slots), tape.value(next.keys)};
}

MemoryState run_story(std::span<const Tensor> inputs, const Tensor& keys,
                      const CellWeights& weights, const MemoryConfig& config,
                      std::vector<MemoryState>* trace) {
  Tape tape;
  const CellVars cell = bind(tape, weights, config);
  std::vector<Var> encoded;
  encoded.reserve(inputs.size());
  for (const auto& s : inputs) encoded.push_back(tape.constant(s));
  std::vector<StateVars> steps;
  const StateVars last = run_story(tape, encoded, encoded, tape.constant(keys), cell, config,
                                   trace != nullptr ? &steps : nullptr);
  if (trace != nullptr) {
    for (const auto& s : steps) trace->push_back({tape.value(s.slots), tape.value(s.keys)});
  }
  return MemoryState{tape.value(last.slots), tape.value(last.keys)};
}

}  // namespace entnet
