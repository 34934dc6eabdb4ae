#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "entnet/encoding.hpp"
#include "entnet/output.hpp"
#include "entnet/tensor.hpp"

namespace entnet {

struct WordAffinity {
  int index = 0;
  std::string token;
  double score = 0.0;
};

struct SlotAffinity {
  std::size_t slot = 0;
  std::string label;
  /// Highest affinity first; equal scores ordered by vocabulary index.
  std::vector<WordAffinity> nearest;
};

struct AffinityReport {
  std::vector<SlotAffinity> slots;
};

/// Cosine similarity between phi(H h_j) and every decoder row r_i (the
/// padding row excluded), keeping the top `k` words per slot. Throws
/// NearZeroNorm when phi(H h_j) vanishes.
AffinityReport slot_nearest_words(const Tensor& slots, const OutputWeights& weights,
                                  const Vocabulary& vocab, std::size_t k,
                                  const std::vector<std::string>& labels = {});

/// Aligned text table: key, then `token (score)` per neighbor.
std::string format_report(const AffinityReport& report);
std::string report_json(const AffinityReport& report);

}  // namespace entnet
