#pragma once

#include <map>
#include <set>
#include <string>

#include "core.hpp"
#include "grid.hpp"

namespace dmar {

// Partial map in a frame relative to some agent. Cells missing from `cells` are unknown.
struct LocalMap {
  std::map<Position, CellKind> cells;
  std::set<Position> tasks;
  std::map<AgentId, Position> member_agents;

  bool knows(Position p) const { return cells.contains(p); }
  bool is_free(Position p) const {
    auto it = cells.find(p);
    return it != cells.end() && it->second == CellKind::Free;
  }
  std::set<Position> free_cells() const {
    std::set<Position> out;
    for (const auto& [p, kind] : cells)
      if (kind == CellKind::Free) out.insert(out.end(), p);
    return out;
  }

  friend bool operator==(const LocalMap&, const LocalMap&) = default;
};

// The agent's own view as a map centred on itself. Agents for which `same_cluster` is
// false are left out.
template <class SameCluster>
LocalMap init_map(const View& view, SameCluster&& same_cluster) {
  LocalMap m;
  for (const ViewCell& c : view.cells) m.cells.emplace(c.pos - view.origin, c.kind);
  for (Position t : view.visible_tasks) m.tasks.insert(t - view.origin);
  for (const auto& [id, p] : view.visible_agents)
    if (same_cluster(id)) m.member_agents.emplace(id, p - view.origin);
  return m;
}

inline LocalMap init_map(const View& view) {
  return init_map(view, [](AgentId) { return true; });
}

inline LocalMap translate(const LocalMap& m, Position offset) {
  LocalMap out;
  for (const auto& [p, kind] : m.cells) out.cells.emplace(p + offset, kind);
  for (Position t : m.tasks) out.tasks.insert(t + offset);
  for (const auto& [id, p] : m.member_agents) out.member_agents.emplace(id, p + offset);
  return out;
}

// Folds `incoming` into `base`, translating it so that agent `ref` sits where `base` has it.
// The result is in base's frame.
inline LocalMap merge_maps(const LocalMap& base, const LocalMap& incoming, AgentId ref) {
  auto b = base.member_agents.find(ref);
  auto i = incoming.member_agents.find(ref);
  if (b == base.member_agents.end() || i == incoming.member_agents.end())
    throw ProtocolError("merge_maps: reference agent " + std::to_string(ref) + " missing from a map");
  const Position offset = b->second - i->second;
  LocalMap out = base;
  for (const auto& [p, kind] : incoming.cells) {
    const Position q = p + offset;
    auto [it, inserted] = out.cells.emplace(q, kind);
    if (!inserted && it->second != kind)
      throw ProtocolError("merge_maps: cell (" + std::to_string(q.x) + "," + std::to_string(q.y) +
                          ") is both free and obstacle");
  }
  for (Position t : incoming.tasks) out.tasks.insert(t + offset);
  for (const auto& [id, p] : incoming.member_agents) {
    auto [it, inserted] = out.member_agents.emplace(id, p + offset);
    if (!inserted && it->second != p + offset)
      throw ProtocolError("merge_maps: agent " + std::to_string(id) + " placed at two positions");
  }
  return out;
}

}  // namespace dmar
