#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "entnet/sample.hpp"

/// Children's Book Test: release-format reader and window memories.
namespace entnet::cbt {

inline constexpr std::string_view kBlank = "XXXXX";
inline constexpr std::size_t kWindow = 5;
inline constexpr std::size_t kCandidates = 10;

struct RawSample {
  std::vector<TokenSeq> story;
  TokenSeq query;
  std::string answer;
  std::vector<std::string> candidates;
};

/// Reads 21-line blocks: `1 ..` to `20 ..` story sentences, then
/// `21 query<TAB>answer<TAB><TAB>c1|c2|...|c10`. Blank lines separate blocks.
std::vector<RawSample> parse_cbt(std::istream& in);

/// Tokens i-(b-1)/2 .. i+(b-1)/2 of `stream`, padded with the null token
/// beyond either end.
TokenSeq window_at(const TokenSeq& stream, std::size_t center, std::size_t width = kWindow);

/// One window per occurrence of any candidate in the concatenated story, in
/// occurrence order; the query becomes the window centered on the blank.
/// Throws NoBlank and BadCandidateCount.
QASample build_cbt_sample(const std::vector<TokenSeq>& story, const TokenSeq& query,
                          const std::vector<std::string>& candidates, const std::string& answer,
                          std::size_t width = kWindow);

QASample build_cbt_sample(const RawSample& raw, std::size_t width = kWindow);

}  // namespace entnet::cbt
