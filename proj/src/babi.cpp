#include "entnet/babi.hpp"

#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>

#include "entnet/error.hpp"

namespace entnet::babi {

TokenSeq tokenize(std::string_view sentence) {
  std::string lowered(sentence);
  for (char& c : lowered) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  TokenSeq out;
  for (std::string tok : split_tokens(lowered)) {
    bool question = false;
    while (!tok.empty() && (tok.back() == '.' || tok.back() == '?')) {
      question = question || tok.back() == '?';
      tok.pop_back();
    }
    if (!tok.empty()) out.push_back(std::move(tok));
    if (question) out.emplace_back("?");
  }
  return out;
}

namespace {

[[noreturn]] void malformed(std::size_t line_no, const std::string& why) {
  fail(ErrorCode::kMalformedLine, "line " + std::to_string(line_no) + ": " + why);
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

}  // namespace

std::vector<Story> parse_stories(std::istream& in) {
  std::vector<Story> stories;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (split_tokens(raw).empty()) continue;
    const auto space = raw.find(' ');
    if (space == std::string::npos) malformed(line_no, "missing line number");
    Line line;
    const char* begin = raw.data();
    auto [ptr, ec] = std::from_chars(begin, begin + space, line.id);
    if (ec != std::errc() || ptr != begin + space || line.id < 1) {
      malformed(line_no, "bad line number");
    }
    const auto fields = split_tabs(raw.substr(space + 1));
    if (fields.size() == 1) {
      line.text = tokenize(fields[0]);
    } else if (fields.size() >= 2) {
      line.text = tokenize(fields[0]);
      const TokenSeq answer = tokenize(fields[1]);
      if (answer.size() != 1) malformed(line_no, "answer must be a single token");
      line.answer = answer.front();
      if (fields.size() >= 3) {
        for (const auto& id : split_tokens(fields[2])) {
          int v = 0;
          auto [p, e] = std::from_chars(id.data(), id.data() + id.size(), v);
          if (e != std::errc() || p != id.data() + id.size()) {
            malformed(line_no, "bad supporting fact id");
          }
          line.supporting.push_back(v);
        }
      }
    }
    if (line.text.empty()) malformed(line_no, "empty sentence");
    if (line.id == 1 || stories.empty()) stories.emplace_back();
    stories.back().push_back(std::move(line));
  }
  return stories;
}

std::string serialize(const std::vector<Story>& stories) {
  std::string out;
  for (const auto& story : stories) {
    for (const auto& line : story) {
      out += std::to_string(line.id);
      for (const auto& tok : line.text) {
        out += ' ';
        out += tok;
      }
      if (line.answer) {
        out += '\t';
        out += *line.answer;
        out += '\t';
        for (std::size_t i = 0; i < line.supporting.size(); ++i) {
          if (i) out += ' ';
          out += std::to_string(line.supporting[i]);
        }
      }
      out += '\n';
    }
  }
  return out;
}

std::vector<QASample> to_samples(const std::vector<Story>& stories, int task_id) {
  std::vector<QASample> out;
  for (const auto& story : stories) {
    std::vector<TokenSeq> context;
    for (const auto& line : story) {
      if (!line.answer) {
        context.push_back(line.text);
        continue;
      }
      QASample s;
      s.context = truncate_context(context, task_id);
      s.query = line.text;
      s.answer = *line.answer;
      s.task_id = task_id;
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::vector<QASample> parse_babi(std::istream& in, int task_id) {
  return to_samples(parse_stories(in), task_id);
}

std::vector<QASample> parse_babi_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  return parse_babi(in, task_id_from_filename(path));
}

std::vector<TokenSeq> truncate_context(std::vector<TokenSeq> sentences, int task_id) {
  const std::size_t cap = task_id == 3 ? kTask3ContextCap : kContextCap;
  if (sentences.size() > cap) {
    sentences.erase(sentences.begin(),
                    sentences.begin() + static_cast<std::ptrdiff_t>(sentences.size() - cap));
  }
  return sentences;
}

int task_id_from_filename(std::string_view path) {
  const std::string name = std::filesystem::path(path).filename().string();
  if (!name.starts_with("qa")) return 0;
  int id = 0;
  auto [ptr, ec] = std::from_chars(name.data() + 2, name.data() + name.size(), id);
  return ec == std::errc() ? id : 0;
}

}  // namespace entnet::babi
