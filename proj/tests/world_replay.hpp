#pragma once

// Independent oracle for generated world stories: re-reads the rendered
// text with its own parser and position bookkeeping, sharing nothing with
// world_oracle beyond the grammar.

#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <utility>

#include "entnet/world.hpp"

namespace entnet::testing {

struct ReplayResult {
  bool ok = false;
  bool off_grid = false;
};

inline ReplayResult replay_story(const world::WorldStory& story, const world::WorldConfig& c) {
  std::map<int, std::pair<int, int>> pos;
  std::map<int, char> facing;
  ReplayResult r;
  for (const auto& a : story.actions) {
    std::istringstream in(world::format_action(a));
    std::string agent, verb;
    in >> agent >> verb;
    if (!agent.starts_with("agent")) return r;
    const int id = std::stoi(agent.substr(5));
    if (verb == "is") {
      std::string at, xy;
      in >> at >> xy;
      int x = 0, y = 0;
      if (at != "at" || std::sscanf(xy.c_str(), "(%d,%d)", &x, &y) != 2) return r;
      pos[id] = {x, y};
    } else if (verb.starts_with("faces-") && verb.size() == 7) {
      facing[id] = verb.back();
    } else if (verb.starts_with("moves-")) {
      if (!pos.contains(id) || !facing.contains(id)) return r;
      const int k = std::stoi(verb.substr(6));
      auto& [x, y] = pos[id];
      for (int s = 0; s < k; ++s) {
        switch (facing[id]) {
          case 'N': ++y; break;
          case 'S': --y; break;
          case 'E': ++x; break;
          case 'W': --x; break;
          default: return r;
        }
        if (x < 1 || y < 1 || x > c.width || y > c.height) {
          r.off_grid = true;
          return r;
        }
      }
    } else {
      return r;
    }
  }
  if (story.answers.size() != pos.size()) return r;
  for (std::size_t k = 0; k < story.answers.size(); ++k) {
    const auto it = pos.find(static_cast<int>(k) + 1);
    if (it == pos.end() || story.answers[k] != world::Position{it->second.first, it->second.second}) return r;
  }
  r.ok = true;
  return r;
}

}  // namespace entnet::testing
