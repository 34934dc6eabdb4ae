#include "entnet/model.hpp"

#include <algorithm>
#include <cmath>

#include "entnet/error.hpp"
#include "entnet/ops.hpp"

namespace entnet {

void ModelConfig::validate() const {
  memory.validate();
  if (vocab_size < 2) fail(ErrorCode::kBadConfig, "vocabulary must hold at least one token");
  if (story_length == 0 || query_length == 0) {
    fail(ErrorCode::kBadConfig, "statement and query lengths must be positive");
  }
  if (dropout < 0.0 || dropout >= 1.0) {
    fail(ErrorCode::kInvalidRate, "dropout rate " + std::to_string(dropout) + " not in [0,1)");
  }
  const bool tied = keys != KeyMode::kFree;
  if (tied != memory.keys_tied) {
    fail(ErrorCode::kBadConfig, "memory.keys_tied must match the key mode");
  }
  if (keys == KeyMode::kTiedTokens) {
    if (key_tokens.size() != memory.slots) {
      fail(ErrorCode::kBadConfig, "tied keys need one token per slot");
    }
    for (int t : key_tokens) {
      if (t <= kNullIndex || static_cast<std::size_t>(t) >= vocab_size) {
        fail(ErrorCode::kBadConfig, "key token index " + std::to_string(t) + " out of range");
      }
    }
  }
  if (output == OutputMode::kDirect && !tied) {
    fail(ErrorCode::kUntiedKeys, "direct prediction needs tied keys");
  }
}

std::size_t parameter_count(const ModelConfig& c) {
  const std::size_t d = c.memory.dim;
  const std::size_t m = c.memory.slots;
  std::size_t n = c.vocab_size * d;                               // embedding
  n += c.story_length * d * (c.dual_encoding ? 2 : 1);             // statement masks
  n += c.query_length * d;                                         // query mask
  if (c.keys == KeyMode::kFree) n += m * d;                        // keys
  if (c.memory.variant == Variant::kGeneral) {
    n += 3 * d * d;                                                // U, V, W
    if (c.memory.activation == Activation::kPrelu) n += d;
  }
  if (c.output == OutputMode::kDecoder) {
    n += d * d + c.vocab_size * d;                                 // H, R
    if (c.output_activation == Activation::kPrelu) n += d;
  }
  return n;
}

Model::Model(ModelConfig config, Vocabulary vocab)
    : config_(std::move(config)), vocab_(std::move(vocab)) {
  if (config_.vocab_size == 0) config_.vocab_size = vocab_.size();
  if (config_.vocab_size != vocab_.size()) {
    fail(ErrorCode::kBadConfig, "config vocabulary size differs from the vocabulary");
  }
  config_.validate();
  const std::size_t d = config_.memory.dim;
  const std::size_t m = config_.memory.slots;
  const std::size_t v = config_.vocab_size;
  params_.add("encoder.embedding", Tensor({v, d}));
  params_.add("encoder.story_mask", Tensor({config_.story_length, d}));
  if (config_.dual_encoding) params_.add("encoder.gate_mask", Tensor({config_.story_length, d}));
  params_.add("encoder.query_mask", Tensor({config_.query_length, d}));
  if (config_.keys == KeyMode::kFree) params_.add("memory.keys", Tensor({m, d}));
  if (config_.memory.variant == Variant::kGeneral) {
    params_.add("memory.U", Tensor({d, d}));
    params_.add("memory.V", Tensor({d, d}));
    params_.add("memory.W", Tensor({d, d}));
    if (config_.memory.activation == Activation::kPrelu) params_.add("memory.prelu", Tensor({d}));
  }
  if (config_.output == OutputMode::kDecoder) {
    params_.add("output.H", Tensor({d, d}));
    params_.add("output.R", Tensor({v, d}));
    if (config_.output_activation == Activation::kPrelu) params_.add("output.prelu", Tensor({d}));
  }
  if (config_.freeze_masks) {
    for (auto& p : params_) {
      if (p->name.ends_with("_mask")) p->frozen = true;
    }
  }
}

EncodedSample Model::encode_sample(const QASample& sample) const {
  EncodedSample out;
  out.context.reserve(sample.context.size());
  for (const auto& sentence : sample.context) {
    out.context.push_back(pad_to_length(vocab_.indices(sentence), config_.story_length));
  }
  out.query = pad_to_length(vocab_.indices(sample.query), config_.query_length);
  if (config_.output == OutputMode::kDecoder) out.answer = vocab_.index(sample.answer);
  if (config_.keys == KeyMode::kTiedCandidates) {
    out.candidates = vocab_.indices(sample.candidates);
    if (out.candidates.size() != config_.memory.slots) {
      fail(ErrorCode::kBadCandidateCount,
           std::to_string(out.candidates.size()) + " candidates for " +
               std::to_string(config_.memory.slots) + " slots");
    }
  }
  if (config_.output == OutputMode::kDirect) {
    const auto& keys =
        config_.keys == KeyMode::kTiedCandidates ? out.candidates : config_.key_tokens;
    const int answer = vocab_.index(sample.answer);
    const auto it = std::find(keys.begin(), keys.end(), answer);
    if (it == keys.end()) {
      fail(ErrorCode::kBadConfig, "answer '" + sample.answer + "' is not a slot key");
    }
    out.answer_slot = static_cast<int>(it - keys.begin());
  }
  return out;
}

template <typename Self>
ForwardResult Model::forward_impl(Self& self, Tape& tape, const EncodedSample& sample,
                                  const ForwardOptions& options) {
  const ModelConfig& c = self.config_;
  auto& params = self.params_;
  const Var embedding = tape.param(params.at("encoder.embedding"));
  const Var story_mask = tape.param(params.at("encoder.story_mask"));
  const Var gate_mask = c.dual_encoding ? tape.param(params.at("encoder.gate_mask")) : story_mask;
  const Var query_mask = tape.param(params.at("encoder.query_mask"));

  EncodeOptions enc;
  enc.dropout = c.dropout;
  enc.training = options.training;
  enc.rng = options.rng;
  if (enc.training && enc.dropout > 0.0 && enc.rng == nullptr) {
    fail(ErrorCode::kBadConfig, "dropout during training needs an rng");
  }

  std::vector<Var> s_update;
  std::vector<Var> s_gate;
  s_update.reserve(sample.context.size());
  s_gate.reserve(sample.context.size());
  for (const auto& sentence : sample.context) {
    s_update.push_back(encode(tape, sentence, story_mask, embedding, enc));
    s_gate.push_back(c.dual_encoding ? encode(tape, sentence, gate_mask, embedding, enc)
                                     : s_update.back());
  }

  Var keys;
  switch (c.keys) {
    case KeyMode::kFree: keys = tape.param(params.at("memory.keys")); break;
    case KeyMode::kTiedTokens: keys = ops::gather_rows(tape, embedding, c.key_tokens); break;
    case KeyMode::kTiedCandidates:
      keys = ops::gather_rows(tape, embedding, sample.candidates);
      break;
  }

  CellVars cell;
  if (c.memory.variant == Variant::kGeneral) {
    cell.U = tape.param(params.at("memory.U"));
    cell.V = tape.param(params.at("memory.V"));
    cell.W = tape.param(params.at("memory.W"));
    if (c.memory.activation == Activation::kPrelu) cell.slopes = tape.param(params.at("memory.prelu"));
  }

  ForwardResult result;
  result.final_state = run_story(tape, s_gate, s_update, keys, cell, c.memory,
                                 options.keep_trace ? &result.trace : nullptr);
  const Var query = encode(tape, sample.query, query_mask, embedding, enc);

  if (c.output == OutputMode::kDecoder) {
    OutputVars out;
    out.H = tape.param(params.at("output.H"));
    out.R = tape.param(params.at("output.R"));
    out.activation = c.output_activation;
    if (c.output_activation == Activation::kPrelu) out.slopes = tape.param(params.at("output.prelu"));
    result.scores = respond(tape, query, result.final_state.slots, out);
    result.loss = ops::cross_entropy(tape, result.scores, static_cast<std::size_t>(sample.answer));
  } else {
    result.scores = ops::matvec(tape, result.final_state.slots, query);
    result.loss =
        ops::cross_entropy(tape, result.scores, static_cast<std::size_t>(sample.answer_slot));
  }
  return result;
}

ForwardResult Model::forward(Tape& tape, const EncodedSample& sample,
                             const ForwardOptions& options) {
  return forward_impl(*this, tape, sample, options);
}

ForwardResult Model::forward(Tape& tape, const EncodedSample& sample,
                             const ForwardOptions& options) const {
  return forward_impl(*this, tape, sample, options);
}

Prediction Model::predict(const EncodedSample& sample) const {
  Tape tape = Tape::inference();
  EncodedSample probe = sample;
  // The loss is not needed; any valid target keeps cross_entropy happy.
  if (probe.answer < 0) probe.answer = kNullIndex;
  if (config_.output == OutputMode::kDirect && probe.answer_slot < 0) probe.answer_slot = 0;
  const ForwardResult fwd = forward(tape, probe);
  const Var p = ops::softmax(tape, fwd.scores);
  Prediction pred;
  const auto& probs = tape.value(p).values();
  pred.probabilities.assign(probs.begin(), probs.end());
  if (config_.output == OutputMode::kDirect) {
    pred.index = predict_from_attention(pred.probabilities, config_.memory);
    const auto& keys =
        config_.keys == KeyMode::kTiedCandidates ? sample.candidates : config_.key_tokens;
    pred.token = vocab_.token(keys[pred.index]);
  } else {
    pred.index = argmax(pred.probabilities);
    pred.token = vocab_.token(static_cast<int>(pred.index));
  }
  return pred;
}

std::vector<MemoryState> Model::trace(const EncodedSample& sample) const {
  Tape tape = Tape::inference();
  EncodedSample probe = sample;
  if (probe.answer < 0) probe.answer = kNullIndex;
  if (config_.output == OutputMode::kDirect && probe.answer_slot < 0) probe.answer_slot = 0;
  ForwardOptions options;
  options.keep_trace = true;
  const ForwardResult fwd = forward(tape, probe, options);
  std::vector<MemoryState> out;
  out.reserve(fwd.trace.size());
  for (const auto& s : fwd.trace) out.push_back({tape.value(s.slots), tape.value(s.keys)});
  return out;
}

OutputWeights Model::output_weights() const {
  if (config_.output != OutputMode::kDecoder) {
    fail(ErrorCode::kBadConfig, "model has no decoder");
  }
  OutputWeights w;
  w.R = params_.at("output.R").value;
  w.H = params_.at("output.H").value;
  w.activation = config_.output_activation;
  if (config_.output_activation == Activation::kPrelu) w.slopes = params_.at("output.prelu").value;
  return w;
}

std::vector<std::string> Model::slot_labels(const EncodedSample& sample) const {
  std::vector<std::string> labels;
  for (std::size_t j = 0; j < config_.memory.slots; ++j) {
    switch (config_.keys) {
      case KeyMode::kFree: labels.push_back("slot" + std::to_string(j)); break;
      case KeyMode::kTiedTokens: labels.push_back(vocab_.token(config_.key_tokens[j])); break;
      case KeyMode::kTiedCandidates: labels.push_back(vocab_.token(sample.candidates[j])); break;
    }
  }
  return labels;
}

void Model::zero_null_row() {
  for (double& v : params_.at("encoder.embedding").value.row(kNullIndex)) v = 0.0;
}

void Model::zero_null_grad() {
  for (double& v : params_.at("encoder.embedding").grad.row(kNullIndex)) v = 0.0;
}

void init_model(Model& model, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 0.1);
  for (auto& p : model.params()) {
    const bool ones = p->name.ends_with("_mask") || p->name.ends_with(".prelu");
    for (double& v : p->value.values()) v = ones ? 1.0 : gauss(rng);
    p->zero_grad();
    p->first_moment.fill(0.0);
    p->second_moment.fill(0.0);
  }
  model.zero_null_row();
}

Vocabulary build_vocab(std::span<const QASample> samples) {
  std::vector<TokenSeq> corpus;
  for (const auto& s : samples) {
    for (const auto& sentence : s.context) corpus.push_back(sentence);
    corpus.push_back(s.query);
    corpus.push_back({s.answer});
    corpus.push_back(s.candidates);
  }
  Vocabulary vocab = Vocabulary::build(corpus);
  return vocab;
}

std::size_t max_statement_length(std::span<const QASample> samples) {
  std::size_t n = 1;
  for (const auto& s : samples) {
    for (const auto& sentence : s.context) n = std::max(n, sentence.size());
  }
  return n;
}

std::size_t max_query_length(std::span<const QASample> samples) {
  std::size_t n = 1;
  for (const auto& s : samples) n = std::max(n, s.query.size());
  return n;
}

}  // namespace entnet
