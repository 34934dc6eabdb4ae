#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "entnet/tape.hpp"
#include "entnet/tensor.hpp"

namespace entnet {

enum class Variant { kGeneral, kSimplified };
enum class Activation { kPrelu, kIdentity };

/// Shape and structure of the dynamic memory bank.
///
/// The simplified variant fixes the candidate to the update encoding
/// (U = V = 0, W = I, identity activation) and never normalizes; the
/// general variant owns shared U, V, W and may use either activation.
struct MemoryConfig {
  std::size_t slots = 5;
  std::size_t dim = 20;
  Variant variant = Variant::kGeneral;
  Activation activation = Activation::kPrelu;
  bool normalize = true;
  bool keys_tied = false;

  static MemoryConfig general(std::size_t slots, std::size_t dim);
  static MemoryConfig simplified(std::size_t slots, std::size_t dim);

  /// Throws BadConfig when the simplified variant is combined with a
  /// non-identity activation or normalization.
  void validate() const;
};

/// Slot contents and keys, both `slots x dim`. Row j is h_j / w_j.
struct MemoryState {
  Tensor slots;
  Tensor keys;
};

/// Shared cell weights. Empty tensors in the simplified variant; `slopes`
/// is empty unless the activation is PReLU.
struct CellWeights {
  Tensor U;
  Tensor V;
  Tensor W;
  Tensor slopes;
};

// Tape-level API. These are what training differentiates through.

struct StateVars {
  Var slots;
  Var keys;
};

struct CellVars {
  Var U;
  Var V;
  Var W;
  Var slopes;
};

StateVars init_state(Tape& tape, Var keys);
/// g_j = sigmoid(<s, h_j> + <s, w_j>), one independent scalar per slot.
Var gate(Tape& tape, Var s_gate, const StateVars& state);
/// Per-slot candidates (slots x dim). In the simplified variant every row is
/// `s_update`.
Var candidate(Tape& tape, Var s_update, const StateVars& state, const CellVars& weights,
              const MemoryConfig& config);
/// One full update: gate, candidate, additive write, optional normalization.
/// Keys pass through unchanged.
StateVars step(Tape& tape, Var s_gate, Var s_update, const StateVars& state,
               const CellVars& weights, const MemoryConfig& config);
/// init_state followed by one step per input. When `trace` is given it
/// receives the state after every step.
StateVars run_story(Tape& tape, std::span<const Var> s_gate, std::span<const Var> s_update,
                    Var keys, const CellVars& weights, const MemoryConfig& config,
                    std::vector<StateVars>* trace = nullptr);

// Value-level API over frozen tensors.

MemoryState init_state(const Tensor& keys);
Tensor gate(const Tensor& s_gate, const MemoryState& state);
Tensor candidate(const Tensor& s_update, const MemoryState& state, const CellWeights& weights,
                 const MemoryConfig& config);
MemoryState step(const Tensor& s_gate, const Tensor& s_update, const MemoryState& state,
                 const CellWeights& weights, const MemoryConfig& config);
/// Gate and update inputs are the same vector for every step.
MemoryState run_story(std::span<const Tensor> inputs, const Tensor& keys,
                      const CellWeights& weights, const MemoryConfig& config,
                      std::vector<MemoryState>* trace = nullptr);

}  // namespace entnet
