#pragma once

#include <string>
#include <vector>

#include "entnet/encoding.hpp"

namespace entnet {

/// One question over a story. `context` holds sentences (bAbI, world
/// model) or candidate windows (CBT). `candidates` is empty except for CBT.
struct QASample {
  std::vector<TokenSeq> context;
  TokenSeq query;
  std::string answer;
  std::vector<std::string> candidates;
  int task_id = 0;
};

}  // namespace entnet
