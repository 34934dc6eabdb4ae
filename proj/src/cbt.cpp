#include "entnet/cbt.hpp"

#include <algorithm>
#include <istream>
#include <unordered_set>

#include "entnet/error.hpp"

namespace entnet::cbt {

namespace {

std::vector<std::string> split_on(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = text.find(sep, start);
    out.push_back(text.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

std::vector<RawSample> parse_cbt(std::istream& in) {
  std::vector<RawSample> out;
  RawSample current;
  std::string line;
  std::size_t line_no = 0;
  auto bad = [&](const std::string& why) {
    fail(ErrorCode::kMalformedLine, "line " + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (split_tokens(line).empty()) continue;
    const auto space = line.find(' ');
    if (space == std::string::npos) bad("missing line number");
    const std::string num = line.substr(0, space);
    const std::string rest = line.substr(space + 1);
    if (num != "21") {
      current.story.push_back(split_tokens(rest));
      continue;
    }
    const auto fields = split_on(rest, '\t');
    if (fields.size() < 4) bad("query line needs query, answer and candidates");
    current.query = split_tokens(fields[0]);
    current.answer = fields[1];
    for (const auto& c : split_on(fields.back(), '|')) {
      if (!c.empty()) current.candidates.push_back(c);
    }
    out.push_back(std::move(current));
    current = RawSample{};
  }
  if (!current.story.empty()) {
    fail(ErrorCode::kMalformedLine, "trailing story without a query line");
  }
  return out;
}

TokenSeq window_at(const TokenSeq& stream, std::size_t center, std::size_t width) {
  const auto half = static_cast<std::ptrdiff_t>((width - 1) / 2);
  TokenSeq out;
  out.reserve(width);
  for (std::ptrdiff_t off = -half; off <= half; ++off) {
    const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(center) + off;
    if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(stream.size())) {
      out.emplace_back(kNullToken);
    } else {
      out.push_back(stream[static_cast<std::size_t>(pos)]);
    }
  }
  return out;
}

QASample build_cbt_sample(const std::vector<TokenSeq>& story, const TokenSeq& query,
                          const std::vector<std::string>& candidates, const std::string& answer,
                          std::size_t width) {
  if (candidates.size() != kCandidates) {
    fail(ErrorCode::kBadCandidateCount,
         "expected " + std::to_string(kCandidates) + " candidates, got " +
             std::to_string(candidates.size()));
  }
  const auto blank = std::find(query.begin(), query.end(), kBlank);
  if (blank == query.end()) fail(ErrorCode::kNoBlank, "query has no blank token");

  TokenSeq stream;
  for (const auto& sentence : story) stream.insert(stream.end(), sentence.begin(), sentence.end());
  const std::unordered_set<std::string> wanted(candidates.begin(), candidates.end());

  QASample sample;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    if (wanted.contains(stream[i])) sample.context.push_back(window_at(stream, i, width));
  }
  sample.query = window_at(query, static_cast<std::size_t>(blank - query.begin()), width);
  sample.candidates = candidates;
  sample.answer = answer;
  return sample;
}

QASample build_cbt_sample(const RawSample& raw, std::size_t width) {
  return build_cbt_sample(raw.story, raw.query, raw.candidates, raw.answer, width);
}

}  // namespace entnet::cbt
