#include "entnet/world.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "entnet/error.hpp"

namespace entnet::world {

Action Action::place(int agent, Position at) {
  Action a;
  a.kind = Kind::kPlace;
  a.agent = agent;
  a.at = at;
  return a;
}

Action Action::face(int agent, Direction d) {
  Action a;
  a.kind = Kind::kFace;
  a.agent = agent;
  a.direction = d;
  return a;
}

Action Action::move(int agent, int steps) {
  Action a;
  a.kind = Kind::kMove;
  a.agent = agent;
  a.steps = steps;
  return a;
}

void WorldConfig::validate() const {
  if (width < 1 || height < 1 || agents < 1 || max_move < 1) {
    fail(ErrorCode::kBadConfig, "world grid, agent count and move range must be positive");
  }
  if (lines < 2 * agents) {
    fail(ErrorCode::kBadConfig, "a story needs at least " + std::to_string(2 * agents) +
                                    " lines, got " + std::to_string(lines));
  }
}

char direction_letter(Direction d) {
  switch (d) {
    case Direction::kNorth: return 'N';
    case Direction::kSouth: return 'S';
    case Direction::kEast: return 'E';
    case Direction::kWest: return 'W';
  }
  return '?';
}

Position offset(Direction d) {
  switch (d) {
    case Direction::kNorth: return {0, 1};
    case Direction::kSouth: return {0, -1};
    case Direction::kEast: return {1, 0};
    case Direction::kWest: return {-1, 0};
  }
  return {0, 0};
}

std::string format_position(Position p) {
  return "(" + std::to_string(p.x) + "," + std::to_string(p.y) + ")";
}

std::string question_text(int agent) { return "where is agent" + std::to_string(agent) + " ?"; }

std::string format_action(const Action& a) {
  const std::string who = "agent" + std::to_string(a.agent);
  switch (a.kind) {
    case Action::Kind::kPlace: return who + " is at " + format_position(a.at);
    case Action::Kind::kFace: return who + " faces-" + direction_letter(a.direction);
    case Action::Kind::kMove: return who + " moves-" + std::to_string(a.steps);
  }
  return who;
}

namespace {

[[noreturn]] void malformed(std::string_view line) {
  fail(ErrorCode::kMalformedLine, "cannot parse world statement '" + std::string(line) + "'");
}

int parse_int(std::string_view text, std::string_view line) {
  int value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) malformed(line);
  return value;
}

int parse_agent(std::string_view token, std::string_view line) {
  if (!token.starts_with("agent")) malformed(line);
  return parse_int(token.substr(5), line);
}

Position parse_position(std::string_view token, std::string_view line) {
  if (token.size() < 5 || token.front() != '(' || token.back() != ')') malformed(line);
  const auto inner = token.substr(1, token.size() - 2);
  const auto comma = inner.find(',');
  if (comma == std::string_view::npos) malformed(line);
  return {parse_int(inner.substr(0, comma), line), parse_int(inner.substr(comma + 1), line)};
}

bool on_grid(Position p, const WorldConfig& c) {
  return p.x >= 1 && p.x <= c.width && p.y >= 1 && p.y <= c.height;
}

}  // namespace

Action parse_action(std::string_view line) {
  const TokenSeq tok = split_tokens(line);
  if (tok.size() == 4 && tok[1] == "is" && tok[2] == "at") {
    return Action::place(parse_agent(tok[0], line), parse_position(tok[3], line));
  }
  if (tok.size() == 2 && tok[1].starts_with("faces-") && tok[1].size() == 7) {
    const int agent = parse_agent(tok[0], line);
    switch (tok[1][6]) {
      case 'N': return Action::face(agent, Direction::kNorth);
      case 'S': return Action::face(agent, Direction::kSouth);
      case 'E': return Action::face(agent, Direction::kEast);
      case 'W': return Action::face(agent, Direction::kWest);
      default: malformed(line);
    }
  }
  if (tok.size() == 2 && tok[1].starts_with("moves-")) {
    return Action::move(parse_agent(tok[0], line),
                        parse_int(std::string_view(tok[1]).substr(6), line));
  }
  malformed(line);
}

std::vector<Position> world_oracle(std::span<const Action> actions, const WorldConfig& config) {
  struct AgentState {
    bool placed = false;
    bool facing_known = false;
    Position at;
    Direction facing = Direction::kNorth;
  };
  std::vector<AgentState> agents(static_cast<std::size_t>(config.agents));
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const Action& a = actions[i];
    if (a.agent < 1 || a.agent > config.agents) {
      fail(ErrorCode::kMalformedLine, "action " + std::to_string(i) + " names agent " +
                                          std::to_string(a.agent));
    }
    AgentState& s = agents[static_cast<std::size_t>(a.agent - 1)];
    switch (a.kind) {
      case Action::Kind::kPlace:
        s.placed = true;
        s.at = a.at;
        break;
      case Action::Kind::kFace:
        s.facing = a.direction;
        s.facing_known = true;
        break;
      case Action::Kind::kMove: {
        if (!s.facing_known || a.steps < 0) {
          fail(ErrorCode::kMalformedLine,
               "action " + std::to_string(i) + ": move without a facing or with negative steps");
        }
        const Position d = offset(s.facing);
        // Check each cell passed through, not only the destination.
        for (int k = 0; k < a.steps; ++k) {
          s.at = {s.at.x + d.x, s.at.y + d.y};
          if (!on_grid(s.at, config)) {
            fail(ErrorCode::kOffGrid, "action " + std::to_string(i) + " moves agent" +
                                          std::to_string(a.agent) + " to " +
                                          format_position(s.at));
          }
        }
        break;
      }
    }
    if (!s.placed) {
      fail(ErrorCode::kMalformedLine, "action " + std::to_string(i) + " on unplaced agent");
    }
    if (!on_grid(s.at, config)) {
      fail(ErrorCode::kOffGrid, "agent" + std::to_string(a.agent) + " at " + format_position(s.at));
    }
  }
  std::vector<Position> out;
  for (const auto& s : agents) {
    if (!s.placed) fail(ErrorCode::kMalformedLine, "story leaves an agent unplaced");
    out.push_back(s.at);
  }
  return out;
}

WorldStory generate_world_story(const WorldConfig& config, Rng& rng) {
  config.validate();
  std::uniform_int_distribution<int> xs(1, config.width);
  std::uniform_int_distribution<int> ys(1, config.height);
  std::uniform_int_distribution<int> dirs(0, 3);
  std::uniform_int_distribution<int> agents(1, config.agents);
  std::uniform_int_distribution<int> moves(1, config.max_move);
  std::bernoulli_distribution choose_face(0.5);

  WorldStory story;
  std::vector<Position> at(static_cast<std::size_t>(config.agents));
  std::vector<Direction> facing(static_cast<std::size_t>(config.agents));
  for (int k = 1; k <= config.agents; ++k) {
    const int x = xs(rng);
    const int y = ys(rng);
    const Position p{x, y};
    const auto d = static_cast<Direction>(dirs(rng));
    at[static_cast<std::size_t>(k - 1)] = p;
    facing[static_cast<std::size_t>(k - 1)] = d;
    story.actions.push_back(Action::place(k, p));
    story.actions.push_back(Action::face(k, d));
  }
  const int remaining = config.lines - 2 * config.agents;
  for (int line = 0; line < remaining; ++line) {
    const int k = agents(rng);
    Position& p = at[static_cast<std::size_t>(k - 1)];
    Direction& d = facing[static_cast<std::size_t>(k - 1)];
    for (;;) {
      if (choose_face(rng)) {
        d = static_cast<Direction>(dirs(rng));
        story.actions.push_back(Action::face(k, d));
        break;
      }
      const int steps = moves(rng);
      const Position o = offset(d);
      const Position dest{p.x + o.x * steps, p.y + o.y * steps};
      if (on_grid(dest, config)) {
        p = dest;
        story.actions.push_back(Action::move(k, steps));
        break;
      }
    }
  }
  story.answers = at;
  return story;
}

std::vector<QASample> to_samples(const WorldStory& story) {
  std::vector<TokenSeq> context;
  context.reserve(story.actions.size());
  for (const auto& a : story.actions) context.push_back(split_tokens(format_action(a)));
  std::vector<QASample> out;
  for (std::size_t k = 0; k < story.answers.size(); ++k) {
    QASample s;
    s.context = context;
    s.query = split_tokens(question_text(static_cast<int>(k + 1)));
    s.answer = format_position(story.answers[k]);
    out.push_back(std::move(s));
  }
  return out;
}

void write_dataset(std::ostream& out, std::span<const WorldStory> stories,
                   const std::map<std::string, std::string>& header) {
  out << "# entnet-world";
  for (const auto& [k, v] : header) out << ' ' << k << '=' << v;
  out << '\n';
  for (const auto& story : stories) {
    out << '\n';
    for (const auto& a : story.actions) out << format_action(a) << '\n';
    for (std::size_t k = 0; k < story.answers.size(); ++k) {
      out << "Q: " << question_text(static_cast<int>(k + 1)) << '\n';
      out << "A: " << format_position(story.answers[k]) << '\n';
    }
  }
}

Dataset read_dataset(std::istream& in) {
  Dataset data;
  std::string line;
  std::size_t line_no = 0;
  WorldStory current;
  bool open = false;
  int pending_agent = 0;
  auto flush = [&] {
    if (open) {
      if (pending_agent != 0) {
        fail(ErrorCode::kMalformedLine, "line " + std::to_string(line_no) + ": question without answer");
      }
      data.stories.push_back(std::move(current));
      current = WorldStory{};
      open = false;
    }
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.starts_with("#")) {
      for (const auto& kv : split_tokens(std::string_view(line).substr(1))) {
        if (auto eq = kv.find('='); eq != std::string::npos) {
          data.header[kv.substr(0, eq)] = kv.substr(eq + 1);
        }
      }
      continue;
    }
    if (split_tokens(line).empty()) {
      flush();
      continue;
    }
    open = true;
    try {
      if (line.starts_with("Q: ")) {
        const TokenSeq tok = split_tokens(std::string_view(line).substr(3));
        if (tok.size() != 4 || tok[0] != "where" || tok[1] != "is" || tok[3] != "?") {
          fail(ErrorCode::kMalformedLine, "bad question");
        }
        pending_agent = parse_agent(tok[2], line);
      } else if (line.starts_with("A: ")) {
        if (pending_agent < 1) fail(ErrorCode::kMalformedLine, "answer without question");
        const auto idx = static_cast<std::size_t>(pending_agent - 1);
        if (current.answers.size() <= idx) current.answers.resize(idx + 1);
        current.answers[idx] = parse_position(std::string_view(line).substr(3), line);
        pending_agent = 0;
      } else {
        current.actions.push_back(parse_action(line));
      }
    } catch (const Error& e) {
      fail(ErrorCode::kMalformedLine, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  flush();
  return data;
}

}  // namespace entnet::world
