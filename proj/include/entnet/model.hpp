#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "entnet/encoding.hpp"
#include "entnet/memory.hpp"
#include "entnet/output.hpp"
#include "entnet/parameter.hpp"
#include "entnet/random.hpp"
#include "entnet/sample.hpp"

namespace entnet {

enum class KeyMode {
  kFree,            // trainable m x d key matrix
  kTiedTokens,      // keys are embedding rows of a fixed token list
  kTiedCandidates,  // keys are embedding rows of each sample's candidates
};

enum class OutputMode {
  kDecoder,  // y = R phi(q + H u) over the vocabulary
  kDirect,   // attention over tied slots is the answer distribution
};

struct ModelConfig {
  MemoryConfig memory;
  Activation output_activation = Activation::kPrelu;
  OutputMode output = OutputMode::kDecoder;
  KeyMode keys = KeyMode::kFree;
  /// Token indices backing the slots when keys == kTiedTokens.
  std::vector<int> key_tokens;
  std::size_t vocab_size = 0;
  /// Positions per statement (K) and per query.
  std::size_t story_length = 0;
  std::size_t query_length = 0;
  /// Separate gate / update encodings of each statement.
  bool dual_encoding = false;
  /// Fixes every mask at 1 (bag-of-words encoder).
  bool freeze_masks = false;
  double dropout = 0.0;

  void validate() const;
};

/// Closed-form number of stored parameter scalars for a configuration
/// (frozen masks included).
std::size_t parameter_count(const ModelConfig& config);

/// Token-index form of a QASample, padded to the model's fixed lengths.
struct EncodedSample {
  std::vector<std::vector<int>> context;
  std::vector<int> query;
  /// Vocabulary index of the answer (decoder mode).
  int answer = kNullIndex;
  /// Candidate token indices (tied-candidate keys).
  std::vector<int> candidates;
  /// Position of the answer among the candidates (direct mode).
  int answer_slot = -1;
};

struct ForwardOptions {
  bool training = false;
  Rng* rng = nullptr;
  /// Record the memory state after every statement.
  bool keep_trace = false;
};

struct ForwardResult {
  /// Scores over the answer space: vocabulary logits or slot scores.
  Var scores;
  Var loss;
  StateVars final_state;
  std::vector<StateVars> trace;
};

struct Prediction {
  std::size_t index = 0;  // vocabulary index or candidate slot
  std::string token;
  std::vector<double> probabilities;
};

/// The full network: encoder, dynamic memory and output module, plus the
/// vocabulary it was built for.
///
/// Parameter names: encoder.embedding, encoder.story_mask, encoder.gate_mask
/// (dual encoding only), encoder.query_mask, memory.keys (free keys only),
/// memory.U / memory.V / memory.W / memory.prelu (general variant),
/// output.H / output.R / output.prelu (decoder mode).
class Model {
 public:
  /// Allocates zero-valued parameters of the right shapes.
  Model(ModelConfig config, Vocabulary vocab);

  const ModelConfig& config() const noexcept { return config_; }
  const Vocabulary& vocab() const noexcept { return vocab_; }
  ParameterSet& params() noexcept { return params_; }
  const ParameterSet& params() const noexcept { return params_; }

  /// Pads and indexes a sample. Throws TooLong and UnknownToken.
  EncodedSample encode_sample(const QASample& sample) const;

  /// Records the forward pass and the cross-entropy loss on `tape`.
  ForwardResult forward(Tape& tape, const EncodedSample& sample,
                        const ForwardOptions& options = {});
  ForwardResult forward(Tape& tape, const EncodedSample& sample,
                        const ForwardOptions& options = {}) const;

  Prediction predict(const EncodedSample& sample) const;

  /// Slot states after each statement, for inspection.
  std::vector<MemoryState> trace(const EncodedSample& sample) const;
  OutputWeights output_weights() const;
  /// Labels for slots: key tokens when tied, `slot<j>` otherwise.
  std::vector<std::string> slot_labels(const EncodedSample& sample) const;

  /// Pins the padding embedding row to zero.
  void zero_null_row();
  /// Drops the padding row's gradient so it never reaches the optimizer.
  void zero_null_grad();

 private:
  template <typename Self>
  static ForwardResult forward_impl(Self& self, Tape& tape, const EncodedSample& sample,
                                    const ForwardOptions& options);

  ModelConfig config_;
  Vocabulary vocab_;
  ParameterSet params_;
};

/// Gaussian(0, 0.1) weights; PReLU slopes and masks at 1; padding row zero.
/// Identical seeds give identical parameters.
void init_model(Model& model, Rng& rng);

/// Statement / query lengths and vocabulary from a training corpus. The
/// answer and candidate tokens are part of the vocabulary.
Vocabulary build_vocab(std::span<const QASample> samples);
std::size_t max_statement_length(std::span<const QASample> samples);
std::size_t max_query_length(std::span<const QASample> samples);

}  // namespace entnet
