#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "entnet/sample.hpp"

/// Reader for the bAbI v1.2 text layout:
///   `N sentence`                              statement
///   `N question<TAB>answer<TAB>support ids`   question
/// A line number of 1 starts a new story.
namespace entnet::babi {

inline constexpr std::size_t kContextCap = 70;
inline constexpr std::size_t kTask3ContextCap = 130;

struct Line {
  int id = 0;
  TokenSeq text;
  /// Set for question lines only.
  std::optional<std::string> answer;
  std::vector<int> supporting;
};

using Story = std::vector<Line>;

/// Lower-cases, drops trailing periods and splits question marks into their
/// own token. Commas are kept, so list answers stay one token.
TokenSeq tokenize(std::string_view sentence);

/// Throws MalformedLine carrying the 1-based line number.
std::vector<Story> parse_stories(std::istream& in);
/// Writes stories back in the same layout, tokens joined by single spaces.
std::string serialize(const std::vector<Story>& stories);

/// One sample per question; its context is the earlier statements of the
/// same story (questions excluded), capped by truncate_context.
std::vector<QASample> to_samples(const std::vector<Story>& stories, int task_id);
std::vector<QASample> parse_babi(std::istream& in, int task_id);
std::vector<QASample> parse_babi_file(const std::string& path);

/// Keeps the most recent 70 sentences (130 for task 3).
std::vector<TokenSeq> truncate_context(std::vector<TokenSeq> sentences, int task_id);

/// Task number from a file name such as `qa3_three-supporting-facts_train.txt`;
/// 0 when the name carries none.
int task_id_from_filename(std::string_view path);

}  // namespace entnet::babi
