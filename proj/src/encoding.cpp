#include "entnet/encoding.hpp"

#include <cctype>
#include <sstream>

#include "entnet/error.hpp"

namespace entnet {

TokenSeq split_tokens(std::string_view text) {
  TokenSeq out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

Vocabulary::Vocabulary() { add(kNullToken); }

Vocabulary Vocabulary::build(std::span<const TokenSeq> corpus) {
  Vocabulary vocab;
  for (const auto& seq : corpus) {
    for (const auto& tok : seq) vocab.add(tok);
  }
  if (vocab.size() == 1) fail(ErrorCode::kEmptyCorpus, "vocabulary corpus has no tokens");
  return vocab;
}

int Vocabulary::add(std::string_view token) {
  if (auto it = index_.find(std::string(token)); it != index_.end()) return it->second;
  const int idx = static_cast<int>(tokens_.size());
  tokens_.emplace_back(token);
  index_.emplace(tokens_.back(), idx);
  return idx;
}

std::optional<int> Vocabulary::find(std::string_view token) const {
  if (auto it = index_.find(std::string(token)); it != index_.end()) return it->second;
  return std::nullopt;
}

int Vocabulary::index(std::string_view token) const {
  if (auto idx = find(token)) return *idx;
  fail(ErrorCode::kUnknownToken, "token '" + std::string(token) + "' not in vocabulary");
}

std::vector<int> Vocabulary::indices(std::span<const std::string> tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& tok : tokens) out.push_back(index(tok));
  return out;
}

const std::string& Vocabulary::token(int idx) const {
  if (idx < 0 || static_cast<std::size_t>(idx) >= tokens_.size()) {
    fail(ErrorCode::kUnknownToken, "index " + std::to_string(idx) + " not in vocabulary");
  }
  return tokens_[static_cast<std::size_t>(idx)];
}

std::string Vocabulary::serialize() const {
  std::string out;
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    out += tokens_[i];
    out += '\t';
    out += std::to_string(i);
    out += '\n';
  }
  return out;
}

Vocabulary Vocabulary::deserialize(std::string_view text) {
  Vocabulary vocab;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t expected = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) fail(ErrorCode::kBadCheckpoint, "vocabulary line without tab");
    const std::string tok = line.substr(0, tab);
    const std::size_t idx = std::stoul(line.substr(tab + 1));
    if (idx != expected) fail(ErrorCode::kBadCheckpoint, "vocabulary indices out of order");
    if (idx == 0) {
      if (tok != kNullToken) fail(ErrorCode::kBadCheckpoint, "index 0 must be the null token");
    } else if (vocab.add(tok) != static_cast<int>(idx)) {
      fail(ErrorCode::kBadCheckpoint, "duplicate vocabulary token " + tok);
    }
    ++expected;
  }
  return vocab;
}

std::vector<int> pad_to_length(std::span<const int> tokens, std::size_t length) {
  if (tokens.size() > length) {
    fail(ErrorCode::kTooLong, std::to_string(tokens.size()) + " tokens exceed length " +
                                  std::to_string(length));
  }
  std::vector<int> out(tokens.begin(), tokens.end());
  out.resize(length, kNullIndex);
  return out;
}

Var encode(Tape& tape, std::span<const int> indices, Var masks, Var table,
           const EncodeOptions& options) {
  const Tensor& m = tape.value(masks);
  if (m.rank() != 2 || m.rows() != indices.size() || m.cols() != tape.value(table).cols()) {
    fail(ErrorCode::kDimensionMismatch,
         "encode: " + std::to_string(indices.size()) + " positions against masks " +
             shape_string(m.shape()) + " and table " + shape_string(tape.value(table).shape()));
  }
  Var words = ops::gather_rows(tape, table, indices);
  if (options.training && options.dropout > 0.0) {
    words = ops::dropout(tape, words, options.dropout, true, *options.rng);
  }
  return ops::sum_rows(tape, ops::mul(tape, words, masks));
}

Tensor encode(std::span<const int> indices, const Tensor& masks, const Tensor& table) {
  Tape tape;
  const Var out = encode(tape, indices, tape.constant(masks), tape.constant(table));
  return tape.value(out);
}

std::pair<Tensor, Tensor> encode_dual(std::span<const int> indices, const Tensor& masks_gate,
                                      const Tensor& masks_update, const Tensor& table) {
  return {encode(indices, masks_gate, table), encode(indices, masks_update, table)};
}

}  // namespace entnet
