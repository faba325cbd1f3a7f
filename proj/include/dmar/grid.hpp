#pragma once

#include <algorithm>
#include <cstdlib>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"

namespace dmar {

enum class CellKind : std::uint8_t { Free, Obstacle };

enum class ViewMode : std::uint8_t { Hop, HopReduced, LineOfSight };

enum class CostClass : std::uint8_t { Exploration, Cluster };

inline std::string to_string(ViewMode m) {
  switch (m) {
    case ViewMode::Hop: return "hop";
    case ViewMode::HopReduced: return "hop_reduced";
    case ViewMode::LineOfSight: return "line_of_sight";
  }
  return "?";
}

inline ViewMode view_mode_from_string(const std::string& s) {
  if (s == "hop") return ViewMode::Hop;
  if (s == "hop_reduced") return ViewMode::HopReduced;
  if (s == "line_of_sight" || s == "los") return ViewMode::LineOfSight;
  throw ParameterError("unknown view mode '" + s + "'");
}

struct CostLedger {
  std::map<AgentId, long> per_agent;
  long exploration = 0;
  long cluster = 0;

  long total() const { return exploration + cluster; }
};

// Ground-truth environment. Tasks and tokens are kept both as ordered sets (for
// deterministic iteration) and as flag grids (for O(1) lookups).
class GridWorld {
 public:
  GridWorld() : GridWorld(1, 1) {}
  GridWorld(int width, int height)
      : width_(width),
        height_(height),
        obstacle_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0),
        task_(obstacle_.size(), 0),
        token_(obstacle_.size(), 0) {
    if (width < 1 || height < 1) throw ParameterError("grid dimensions must be positive");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int cell_count() const { return width_ * height_; }

  bool in_bounds(Position p) const { return p.x >= 0 && p.y >= 0 && p.x < width_ && p.y < height_; }
  int index(Position p) const { return p.y * width_ + p.x; }
  Position position_of(int idx) const { return {idx % width_, idx / width_}; }

  bool is_obstacle(Position p) const { return obstacle_[cell(p)] != 0; }
  bool is_free(Position p) const { return in_bounds(p) && obstacle_[idx(p)] == 0; }
  bool has_task(Position p) const { return task_[cell(p)] != 0; }
  bool has_token(Position p) const { return token_[cell(p)] != 0; }

  void add_obstacle(Position p) {
    if (has_task(p)) throw ContractViolation("obstacle placed on a task cell");
    for (const auto& [id, q] : agents_)
      if (q == p) throw ContractViolation("obstacle placed under agent " + std::to_string(id));
    if (!obstacle_[idx(p)]) {
      obstacle_[idx(p)] = 1;
      obstacles_.insert(p);
    }
  }

  void add_task(Position p) {
    if (is_obstacle(p)) throw ContractViolation("task placed on an obstacle cell");
    if (!task_[idx(p)]) {
      task_[idx(p)] = 1;
      tasks_.insert(p);
    }
  }

  void remove_task(Position p) {
    if (task_[cell(p)]) {
      task_[idx(p)] = 0;
      tasks_.erase(p);
    }
  }

  void add_token(Position p) {
    if (!token_[cell(p)]) {
      token_[idx(p)] = 1;
      tokens_.insert(p);
    }
  }

  void clear_tokens() {
    for (Position p : tokens_) token_[idx(p)] = 0;
    tokens_.clear();
  }

  // Places (or teleports, free of charge) an agent. Used for setup only.
  void place_agent(AgentId id, Position p) {
    if (!in_bounds(p)) throw ContractViolation("agent placed out of bounds");
    if (is_obstacle(p)) throw ContractViolation("agent placed on an obstacle");
    agents_[id] = p;
    ledger_.per_agent.try_emplace(id, 0);
  }

  Position agent_position(AgentId id) const {
    auto it = agents_.find(id);
    if (it == agents_.end()) throw ContractViolation("unknown agent " + std::to_string(id));
    return it->second;
  }

  const std::map<AgentId, Position>& agents() const { return agents_; }
  const std::set<Position>& obstacles() const { return obstacles_; }
  const std::set<Position>& tasks() const { return tasks_; }
  const std::set<Position>& tokens() const { return tokens_; }
  int task_count() const { return static_cast<int>(tasks_.size()); }

  // When enabled, completing a task leaves a token on its cell.
  void set_token_mode(bool on) { token_mode_ = on; }
  bool token_mode() const { return token_mode_; }

  const CostLedger& ledger() const { return ledger_; }

  // Executes one control for one agent. Waits are free; a move is charged to `cost_class`.
  // Landing on a task completes it.
  Position apply_control(AgentId id, Control c, CostClass cost_class) {
    auto it = agents_.find(id);
    if (it == agents_.end()) throw ContractViolation("unknown agent " + std::to_string(id));
    if (c == Control::Wait) return it->second;
    const Position target = step(it->second, c);
    if (!in_bounds(target)) throw ContractViolation("agent " + std::to_string(id) + " moved out of bounds");
    if (is_obstacle(target)) throw ContractViolation("agent " + std::to_string(id) + " moved into an obstacle");
    it->second = target;
    ++ledger_.per_agent[id];
    (cost_class == CostClass::Exploration ? ledger_.exploration : ledger_.cluster) += 1;
    if (has_task(target)) {
      remove_task(target);
      if (token_mode_) add_token(target);
    }
    return target;
  }

  // Tasks sitting under an agent count as visited; called once after setup.
  int settle_tasks_under_agents() {
    int done = 0;
    for (const auto& [id, p] : agents_) {
      if (has_task(p)) {
        remove_task(p);
        ++done;
      }
    }
    return done;
  }

 private:
  std::size_t idx(Position p) const { return static_cast<std::size_t>(index(p)); }
  std::size_t cell(Position p) const {
    if (!in_bounds(p)) throw ContractViolation("position out of bounds");
    return idx(p);
  }

  int width_;
  int height_;
  std::vector<std::uint8_t> obstacle_;
  std::vector<std::uint8_t> task_;
  std::vector<std::uint8_t> token_;
  std::set<Position> obstacles_;
  std::set<Position> tasks_;
  std::set<Position> tokens_;
  std::map<AgentId, Position> agents_;
  CostLedger ledger_;
  bool token_mode_ = false;
};

// In-bounds grid neighbours of p (obstacles included), in canonical control order.
inline std::vector<std::pair<Control, Position>> neighbors(const GridWorld& world, Position p) {
  if (!world.in_bounds(p)) throw ContractViolation("neighbors: position out of bounds");
  std::vector<std::pair<Control, Position>> out;
  for (Control c : kMoveControls) {
    const Position q = step(p, c);
    if (world.in_bounds(q)) out.emplace_back(c, q);
  }
  return out;
}

// True when the centre-to-centre segment a->b passes through the interior of an obstacle
// cell other than the two endpoints. Supercover walk in exact integer arithmetic; a
// segment passing exactly through a lattice corner steps diagonally, so corner contact
// never blocks.
inline bool sight_blocked(const GridWorld& world, Position a, Position b) {
  const int dx = std::abs(b.x - a.x);
  const int dy = std::abs(b.y - a.y);
  const int sx = b.x > a.x ? 1 : -1;
  const int sy = b.y > a.y ? 1 : -1;
  Position cur = a;
  int ix = 0;
  int iy = 0;
  while (ix < dx || iy < dy) {
    if (ix < dx && iy < dy) {
      const long decision = static_cast<long>(1 + 2 * ix) * dy - static_cast<long>(1 + 2 * iy) * dx;
      if (decision == 0) {
        cur.x += sx;
        cur.y += sy;
        ++ix;
        ++iy;
      } else if (decision < 0) {
        cur.x += sx;
        ++ix;
      } else {
        cur.y += sy;
        ++iy;
      }
    } else if (ix < dx) {
      cur.x += sx;
      ++ix;
    } else {
      cur.y += sy;
      ++iy;
    }
    if (cur != b && world.is_obstacle(cur)) return true;
  }
  return false;
}

struct ViewCell {
  Position pos;
  CellKind kind = CellKind::Free;
  int hops = 0;
};

struct View {
  Position origin;
  std::vector<ViewCell> cells;                           // sorted by position
  std::vector<Position> visible_tasks;                   // sorted
  std::vector<Position> reachable_tasks;                 // visible tasks joined to origin by visible free cells
  std::vector<std::pair<AgentId, Position>> visible_agents;  // sorted by id, includes the owner

  const ViewCell* find(Position p) const {
    auto it = std::lower_bound(cells.begin(), cells.end(), p,
                               [](const ViewCell& c, Position q) { return c.pos < q; });
    return it != cells.end() && it->pos == p ? &*it : nullptr;
  }
  bool contains(Position p) const { return find(p) != nullptr; }
  bool sees_agent(AgentId id) const {
    auto it = std::lower_bound(visible_agents.begin(), visible_agents.end(), id,
                               [](const auto& e, AgentId q) { return e.first < q; });
    return it != visible_agents.end() && it->first == id;
  }
  // Election and explorer halting use this: a task seen across a wall or through a
  // corner gap that no visible path reaches cannot be planned for from this view.
  bool sees_task() const { return !reachable_tasks.empty(); }
};

namespace detail {

// Breadth-first ball around p. With `through_obstacles` false, obstacle cells are
// reported but never expanded.
inline std::vector<ViewCell> bfs_ball(const GridWorld& world, Position p, int k, bool through_obstacles) {
  const int side = 2 * k + 1;
  std::vector<int> seen(static_cast<std::size_t>(side) * static_cast<std::size_t>(side), -1);
  auto slot = [&](Position q) {
    return static_cast<std::size_t>((q.y - p.y + k) * side + (q.x - p.x + k));
  };
  std::vector<ViewCell> out;
  std::deque<Position> frontier{p};
  seen[slot(p)] = 0;
  out.push_back({p, world.is_obstacle(p) ? CellKind::Obstacle : CellKind::Free, 0});
  while (!frontier.empty()) {
    const Position u = frontier.front();
    frontier.pop_front();
    const int d = seen[slot(u)];
    if (d == k) continue;
    if (!through_obstacles && world.is_obstacle(u)) continue;
    for (Control c : kMoveControls) {
      const Position v = step(u, c);
      if (!world.in_bounds(v) || seen[slot(v)] >= 0) continue;
      seen[slot(v)] = d + 1;
      const bool obstacle = world.is_obstacle(v);
      out.push_back({v, obstacle ? CellKind::Obstacle : CellKind::Free, d + 1});
      if (through_obstacles || !obstacle) frontier.push_back(v);
    }
  }
  return out;
}

}  // namespace detail

inline View compute_view(const GridWorld& world, Position p, int k, ViewMode mode) {
  if (!world.in_bounds(p)) throw ContractViolation("compute_view: position out of bounds");
  if (k < 1) throw ParameterError("compute_view: radius must be >= 1");
  View view;
  view.origin = p;
  view.cells = detail::bfs_ball(world, p, k, mode == ViewMode::Hop);
  if (mode == ViewMode::LineOfSight) {
    std::erase_if(view.cells, [&](const ViewCell& c) { return sight_blocked(world, p, c.pos); });
  }
  std::sort(view.cells.begin(), view.cells.end(), [](const ViewCell& a, const ViewCell& b) { return a.pos < b.pos; });
  for (const ViewCell& c : view.cells) {
    if (c.kind == CellKind::Free && (world.has_task(c.pos) || world.has_token(c.pos))) view.visible_tasks.push_back(c.pos);
  }
  for (const auto& [id, q] : world.agents()) {
    if (view.contains(q)) view.visible_agents.emplace_back(id, q);
  }
  if (mode == ViewMode::HopReduced || view.visible_tasks.empty()) {
    view.reachable_tasks = view.visible_tasks;
  } else if (world.is_free(p)) {
    std::set<Position> reached{p};
    std::deque<Position> q{p};
    while (!q.empty()) {
      const Position u = q.front();
      q.pop_front();
      for (Control c : kMoveControls) {
        const Position v = step(u, c);
        const ViewCell* vc = view.find(v);
        if (vc && vc->kind == CellKind::Free && reached.insert(v).second) q.push_back(v);
      }
    }
    for (Position t : view.visible_tasks)
      if (reached.contains(t)) view.reachable_tasks.push_back(t);
  }
  return view;
}

// Explorer halting predicate (see View::sees_task), with a cheap distance prefilter.
inline bool task_in_view(const GridWorld& world, Position p, int k, ViewMode mode) {
  bool any_near = false;
  for (Position t : world.tasks()) any_near = any_near || manhattan(p, t) <= k;
  for (Position t : world.tokens()) any_near = any_near || manhattan(p, t) <= k;
  if (!any_near) return false;
  return compute_view(world, p, k, mode).sees_task();
}

// BFS distances over free world cells (dense, -1 = unreachable).
inline std::vector<int> distance_field(const GridWorld& world, Position source) {
  std::vector<int> dist(static_cast<std::size_t>(world.cell_count()), -1);
  if (!world.is_free(source)) return dist;
  std::deque<Position> q{source};
  dist[static_cast<std::size_t>(world.index(source))] = 0;
  while (!q.empty()) {
    const Position u = q.front();
    q.pop_front();
    const int du = dist[static_cast<std::size_t>(world.index(u))];
    for (Control c : kMoveControls) {
      const Position v = step(u, c);
      if (!world.is_free(v)) continue;
      auto& dv = dist[static_cast<std::size_t>(world.index(v))];
      if (dv < 0) {
        dv = du + 1;
        q.push_back(v);
      }
    }
  }
  return dist;
}

// Minimum-length control sequence from `from` to `to` through `cells`; at every point
// where several shortest continuations exist, the canonically smallest control is taken.
inline std::optional<std::vector<Control>> shortest_path(const std::set<Position>& cells, Position from, Position to) {
  if (!cells.contains(from) || !cells.contains(to)) throw ContractViolation("shortest_path: endpoint not in cell set");
  std::map<Position, int> dist{{to, 0}};
  std::deque<Position> q{to};
  while (!q.empty() && !dist.contains(from)) {
    const Position u = q.front();
    q.pop_front();
    for (Control c : kMoveControls) {
      const Position v = step(u, c);
      if (cells.contains(v) && !dist.contains(v)) {
        dist[v] = dist[u] + 1;
        q.push_back(v);
      }
    }
  }
  // Once `from` is labelled at depth D, every cell closer than D is already labelled.
  auto it = dist.find(from);
  if (it == dist.end()) return std::nullopt;
  std::vector<Control> path;
  Position cur = from;
  int d = it->second;
  while (d > 0) {
    for (Control c : kMoveControls) {
      auto nb = dist.find(step(cur, c));
      if (nb != dist.end() && nb->second == d - 1) {
        path.push_back(c);
        cur = nb->first;
        break;
      }
    }
    --d;
  }
  return path;
}

}  // namespace dmar
