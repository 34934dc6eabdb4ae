#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "entnet/ops.hpp"
#include "entnet/tape.hpp"
#include "entnet/tensor.hpp"

namespace entnet {

inline constexpr int kNullIndex = 0;
inline constexpr std::string_view kNullToken = "<null>";

using TokenSeq = std::vector<std::string>;

/// Splits on ASCII whitespace.
TokenSeq split_tokens(std::string_view text);

/// Closed token <-> index map. Index 0 is always the padding symbol.
class Vocabulary {
 public:
  Vocabulary();

  /// Adds every token in first-occurrence order. Throws EmptyCorpus when the
  /// corpus holds no tokens at all.
  static Vocabulary build(std::span<const TokenSeq> corpus);

  /// Index of `token`, inserting it at the end if new.
  int add(std::string_view token);
  std::optional<int> find(std::string_view token) const;
  /// Throws UnknownToken.
  int index(std::string_view token) const;
  std::vector<int> indices(std::span<const std::string> tokens) const;
  const std::string& token(int index) const;
  bool contains(std::string_view token) const { return find(token).has_value(); }

  std::size_t size() const noexcept { return tokens_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  /// UTF-8 lines `token<TAB>index`, one per entry, in index order.
  std::string serialize() const;
  static Vocabulary deserialize(std::string_view text);

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

/// Right-pads with kNullIndex to exactly `length` entries; TooLong if the
/// input is longer.
std::vector<int> pad_to_length(std::span<const int> tokens, std::size_t length);

/// Options applied to the gathered embeddings before masking.
struct EncodeOptions {
  double dropout = 0.0;
  bool training = false;
  Rng* rng = nullptr;
};

/// sum_i masks[i] (*) table[indices[i]] recorded on the tape. `masks` is a
/// K x d MaskSet and `indices` must have exactly K entries.
Var encode(Tape& tape, std::span<const int> indices, Var masks, Var table,
           const EncodeOptions& options = {});

/// Value-level encode on frozen tensors.
Tensor encode(std::span<const int> indices, const Tensor& masks, const Tensor& table);

/// Gate and update encodings from two mask sets over one embedding table.
std::pair<Tensor, Tensor> encode_dual(std::span<const int> indices, const Tensor& masks_gate,
                                      const Tensor& masks_update, const Tensor& table);

}  // namespace entnet
