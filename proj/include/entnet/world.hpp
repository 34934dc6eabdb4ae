#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "entnet/random.hpp"
#include "entnet/sample.hpp"

/// Two-agent grid world: story generation, textual grammar and an
/// independent replay oracle.
namespace entnet::world {

enum class Direction { kNorth, kSouth, kEast, kWest };

struct Position {
  int x = 0;
  int y = 0;
  auto operator<=>(const Position&) const = default;
};

/// One statement line. Agents are numbered from 1.
struct Action {
  enum class Kind { kPlace, kFace, kMove };
  Kind kind = Kind::kPlace;
  int agent = 1;
  Position at;                         // kPlace
  Direction direction = Direction::kNorth;  // kFace
  int steps = 0;                       // kMove

  static Action place(int agent, Position at);
  static Action face(int agent, Direction d);
  static Action move(int agent, int steps);

  bool operator==(const Action&) const = default;
};

struct WorldConfig {
  int width = 10;
  int height = 10;
  int agents = 2;
  /// Statement lines per story, placements and first facings included.
  int lines = 10;
  int max_move = 5;

  /// Throws BadConfig unless lines >= 2 * agents and the grid is nonempty.
  void validate() const;
};

struct WorldStory {
  std::vector<Action> actions;
  /// Final position of agent k at index k - 1.
  std::vector<Position> answers;
};

char direction_letter(Direction d);
Position offset(Direction d);

std::string format_position(Position p);
std::string format_action(const Action& a);
/// Inverse of format_action. Throws MalformedLine.
Action parse_action(std::string_view line);
std::string question_text(int agent);

/// Replays actions from scratch. Throws OffGrid the moment any agent leaves
/// the grid and MalformedLine for actions on unplaced or unfaced agents.
std::vector<Position> world_oracle(std::span<const Action> actions, const WorldConfig& config);

/// Places and faces every agent, then emits `lines - 2*agents` legal
/// actions, each for a uniformly chosen agent, resampling illegal proposals.
WorldStory generate_world_story(const WorldConfig& config, Rng& rng);

/// One sample per agent question, sharing the story context.
std::vector<QASample> to_samples(const WorldStory& story);

/// Dataset file: `#` header line with key=value pairs, then stories separated
/// by blank lines; each story is its statement lines followed by
/// `Q: where is agentK ?` / `A: (x,y)` pairs.
void write_dataset(std::ostream& out, std::span<const WorldStory> stories,
                   const std::map<std::string, std::string>& header);

struct Dataset {
  std::map<std::string, std::string> header;
  std::vector<WorldStory> stories;
};

/// Throws MalformedLine with the offending line number.
Dataset read_dataset(std::istream& in);

}  // namespace entnet::world
