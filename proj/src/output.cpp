#include "entnet/output.hpp"

#include "entnet/error.hpp"
#include "entnet/ops.hpp"

namespace entnet {

Var attention_weights(Tape& tape, Var query, Var slots) {
  return ops::softmax(tape, ops::matvec(tape, slots, query));
}

Var output_activation(Tape& tape, Var x, const OutputVars& weights) {
  if (weights.activation == Activation::kPrelu) return ops::prelu(tape, x, weights.slopes);
  return x;
}

Var respond(Tape& tape, Var query, Var slots, const OutputVars& weights) {
  const Var p = attention_weights(tape, query, slots);
  const Var read = ops::matvec_t(tape, slots, p);
  const Var hidden = ops::add(tape, query, ops::matvec(tape, weights.H, read));
  return ops::matvec(tape, weights.R, output_activation(tape, hidden, weights));
}

Tensor attention_weights(const Tensor& query, const MemoryState& state) {
  Tape tape;
  return tape.value(attention_weights(tape, tape.constant(query), tape.constant(state.slots)));
}

Tensor respond(const Tensor& query, const MemoryState& state, const OutputWeights& weights) {
  Tape tape;
  OutputVars vars;
  vars.R = tape.constant(weights.R);
  vars.H = tape.constant(weights.H);
  vars.activation = weights.activation;
  if (weights.activation == Activation::kPrelu) vars.slopes = tape.constant(weights.slopes);
  return tape.value(respond(tape, tape.constant(query), tape.constant(state.slots), vars));
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::size_t predict_from_attention(std::span<const double> attention,
                                   const MemoryConfig& config) {
  if (!config.keys_tied) {
    fail(ErrorCode::kUntiedKeys, "direct prediction needs keys tied to candidates");
  }
  if (attention.size() != config.slots) {
    fail(ErrorCode::kDimensionMismatch, "attention has " + std::to_string(attention.size()) +
                                            " entries for " + std::to_string(config.slots) +
                                            " slots");
  }
  return argmax(attention);
}

}  // namespace entnet
