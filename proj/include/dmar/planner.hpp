#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core.hpp"
#include "grid.hpp"
#include "local_map.hpp"

namespace dmar {

using PlanSet = std::map<AgentId, ControlSequence>;

// Added to the cost-to-go when the base-policy simulation stops with tasks left, per task.
inline constexpr long kUnfinishedPenalty = 1'000'000;

struct PlannerConfig {
  long horizon_cap = 0;           // base-policy simulation cap; 0 means 4 x map cells
  std::optional<Position> depot;  // when set, cost-to-go also charges the walk back to it
};

// Dense planning grid over a map's bounding box. Unknown cells are not traversable.
class PlanGrid {
 public:
  explicit PlanGrid(const LocalMap& map) {
    if (map.cells.empty()) throw ContractViolation("PlanGrid: empty map");
    Position lo = map.cells.begin()->first;
    Position hi = lo;
    for (const auto& [p, kind] : map.cells) {
      lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
      hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    }
    lo_ = lo;
    w_ = hi.x - lo.x + 1;
    h_ = hi.y - lo.y + 1;
    free_.assign(static_cast<std::size_t>(w_ * h_), 0);
    for (const auto& [p, kind] : map.cells)
      if (kind == CellKind::Free) free_[static_cast<std::size_t>(index(p))] = 1;
    nbr_.resize(free_.size());
    for (int i = 0; i < w_ * h_; ++i) {
      for (Control c : kMoveControls) {
        const Position q = step(position(i), c);
        nbr_[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] = contains(q) && is_free(index(q)) ? index(q) : -1;
      }
    }
  }

  int cell_count() const { return w_ * h_; }
  bool contains(Position p) const { return p.x >= lo_.x && p.y >= lo_.y && p.x < lo_.x + w_ && p.y < lo_.y + h_; }
  int index(Position p) const { return (p.y - lo_.y) * w_ + (p.x - lo_.x); }
  Position position(int i) const { return {lo_.x + i % w_, lo_.y + i / w_}; }
  bool is_free(int i) const { return free_[static_cast<std::size_t>(i)] != 0; }
  // Neighbour cell through control c, or -1 when blocked. Wait maps to the cell itself.
  int move(int i, Control c) const { return c == Control::Wait ? i : nbr_[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)]; }

  std::vector<int> bfs(int source) const {
    std::vector<int> dist(free_.size(), -1);
    if (!is_free(source)) return dist;
    std::deque<int> q{source};
    dist[static_cast<std::size_t>(source)] = 0;
    while (!q.empty()) {
      const int u = q.front();
      q.pop_front();
      for (int v : nbr_[static_cast<std::size_t>(u)]) {
        if (v >= 0 && dist[static_cast<std::size_t>(v)] < 0) {
          dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
          q.push_back(v);
        }
      }
    }
    return dist;
  }

 private:
  Position lo_;
  int w_ = 0;
  int h_ = 0;
  std::vector<std::uint8_t> free_;
  std::vector<std::array<int, 4>> nbr_;
};

// State of the planning problem: agent cells and which tasks remain.
struct PlanState {
  std::vector<int> pos;          // per agent (ascending ID), planning-grid cell
  std::vector<std::uint8_t> alive;  // per task
  int remaining = 0;

  friend bool operator==(const PlanState&, const PlanState&) = default;
};

struct SimResult {
  long cost = 0;
  bool capped = false;
};

// Greedy nearest-task base policy, its simulated cost-to-go, and agent-by-agent rollout
// over one team's map.
class TeamPlanner {
 public:
  TeamPlanner(const LocalMap& map, PlannerConfig cfg = {}) : grid_(map), cfg_(cfg) {
    if (cfg_.horizon_cap <= 0) cfg_.horizon_cap = 4L * grid_.cell_count();
    for (const auto& [id, p] : map.member_agents) {
      if (!grid_.contains(p) || !grid_.is_free(grid_.index(p)))
        throw ContractViolation("TeamPlanner: agent " + std::to_string(id) + " not on a free map cell");
      ids_.push_back(id);
      start_.pos.push_back(grid_.index(p));
    }
    std::vector<Position> tasks(map.tasks.begin(), map.tasks.end());
    std::sort(tasks.begin(), tasks.end(), yx_less);
    task_at_.assign(static_cast<std::size_t>(grid_.cell_count()), -1);
    for (Position t : tasks) {
      if (!grid_.contains(t) || !grid_.is_free(grid_.index(t))) throw ContractViolation("TeamPlanner: task off the free map");
      task_at_[static_cast<std::size_t>(grid_.index(t))] = static_cast<int>(task_cells_.size());
      task_cells_.push_back(grid_.index(t));
      dist_.push_back(grid_.bfs(grid_.index(t)));
    }
    start_.alive.assign(task_cells_.size(), 1);
    start_.remaining = static_cast<int>(task_cells_.size());
    for (int c : start_.pos) complete_at(start_, c);
    if (cfg_.depot) {
      if (!grid_.contains(*cfg_.depot) || !grid_.is_free(grid_.index(*cfg_.depot)))
        throw ContractViolation("TeamPlanner: depot not on a free map cell");
      depot_dist_ = grid_.bfs(grid_.index(*cfg_.depot));
      for (int c : start_.pos)
        if (depot_dist_[static_cast<std::size_t>(c)] < 0) throw ContractViolation("TeamPlanner: depot unreachable");
    }
  }

  const PlanGrid& grid() const { return grid_; }
  const std::vector<AgentId>& agent_ids() const { return ids_; }
  const PlanState& initial_state() const { return start_; }
  long horizon_cap() const { return cfg_.horizon_cap; }
  int cap_hits() const { return cap_hits_; }
  Position agent_position(const PlanState& s, std::size_t i) const { return grid_.position(s.pos[i]); }

  // Shortest-path step towards the nearest remaining task; ties go to the (y, x)-smallest
  // task, then to the canonically first control. Wait when nothing is reachable.
  Control greedy_control(const PlanState& s, std::size_t agent) const {
    const int u = s.pos[agent];
    int best = -1;
    int best_d = std::numeric_limits<int>::max();
    for (std::size_t t = 0; t < task_cells_.size(); ++t) {
      if (!s.alive[t]) continue;
      const int d = dist_[t][static_cast<std::size_t>(u)];
      if (d >= 0 && d < best_d) {
        best_d = d;
        best = static_cast<int>(t);
      }
    }
    if (best < 0 || best_d == 0) return Control::Wait;
    const auto& dt = dist_[static_cast<std::size_t>(best)];
    for (Control c : kMoveControls) {
      const int v = grid_.move(u, c);
      if (v >= 0 && dt[static_cast<std::size_t>(v)] == best_d - 1) return c;
    }
    throw ContractViolation("greedy_control: broken distance field");
  }

  std::vector<Control> greedy_joint(const PlanState& s) const {
    std::vector<Control> out(s.pos.size());
    for (std::size_t i = 0; i < s.pos.size(); ++i) out[i] = greedy_control(s, i);
    return out;
  }

  // Applies a joint control simultaneously; returns the number of moves.
  long apply(PlanState& s, const std::vector<Control>& joint) const {
    long moves = 0;
    for (std::size_t i = 0; i < s.pos.size(); ++i) {
      if (joint[i] == Control::Wait) continue;
      const int v = grid_.move(s.pos[i], joint[i]);
      if (v < 0) throw ContractViolation("planner: illegal control for agent " + std::to_string(ids_[i]));
      s.pos[i] = v;
      ++moves;
    }
    for (int c : s.pos) complete_at(s, c);
    return moves;
  }

  long gather_cost(const PlanState& s) const {
    if (!cfg_.depot) return 0;
    long g = 0;
    for (int c : s.pos) g += depot_dist_[static_cast<std::size_t>(c)];
    return g;
  }

  // Cost of running the base policy from s until no task remains (plus the walk to the
  // depot when one is configured). Hitting the cap adds a per-task penalty.
  SimResult simulate_base_policy(PlanState s) const {
    SimResult r;
    long steps = 0;
    std::vector<Control> joint(s.pos.size());
    while (s.remaining > 0) {
      if (steps >= cfg_.horizon_cap) {
        r.capped = true;
        break;
      }
      bool any = false;
      for (std::size_t i = 0; i < s.pos.size(); ++i) {
        joint[i] = greedy_control(s, i);
        any = any || joint[i] != Control::Wait;
      }
      if (!any) {
        r.capped = true;
        break;
      }
      r.cost += apply(s, joint);
      ++steps;
    }
    if (r.capped) {
      ++cap_hits_;
      r.cost += kUnfinishedPenalty * s.remaining;
    }
    r.cost += gather_cost(s);
    return r;
  }

  // Moves plus Wait that are legal for `agent` in s, canonical order.
  std::vector<Control> feasible_controls(const PlanState& s, std::size_t agent) const {
    std::vector<Control> out;
    for (Control c : kAllControls)
      if (grid_.move(s.pos[agent], c) >= 0) out.push_back(c);
    return out;
  }

  long q_value(const PlanState& s, const std::vector<Control>& joint) const {
    PlanState next = s;
    const long g = apply(next, joint);
    return g + simulate_base_policy(std::move(next)).cost;
  }

  // One rollout step: agents in ascending ID each pick the control minimising one-step
  // cost plus simulated cost-to-go, with earlier choices fixed and later agents greedy.
  // Ties keep the agent's own greedy control, then the canonical order.
  std::vector<Control> mar_step(const PlanState& s) const {
    std::vector<Control> joint = greedy_joint(s);
    long carried = q_value(s, joint);
    for (std::size_t i = 0; i < joint.size(); ++i) {
      const Control base = joint[i];
      Control best = base;
      long best_q = carried;  // the current joint is exactly the one evaluated last
      for (Control u : feasible_controls(s, i)) {
        if (u == base) continue;
        joint[i] = u;
        const long q = q_value(s, joint);
        if (q < best_q) {
          best_q = q;
          best = u;
        }
      }
      joint[i] = best;
      carried = best_q;
    }
    return joint;
  }

  struct Result {
    PlanSet plans;        // unpadded
    PlanState final_state;
    long cost = 0;        // moves, gathering excluded
    long steps = 0;
    long base_estimate = 0;  // cost-to-go at the initial state
  };

  // Runs either the rollout or the plain greedy policy until no task remains.
  Result plan(bool rollout) const {
    Result r;
    PlanState s = start_;
    for (AgentId id : ids_) r.plans[id] = ControlSequence{id, {}};
    r.base_estimate = simulate_base_policy(s).cost;
    while (s.remaining > 0) {
      std::vector<Control> joint = greedy_joint(s);
      if (std::all_of(joint.begin(), joint.end(), [](Control c) { return c == Control::Wait; })) break;
      if (rollout) joint = mar_step(s);
      if (r.steps >= (rollout ? r.base_estimate : cfg_.horizon_cap))
        throw ProtocolError("planner stalled with " + std::to_string(s.remaining) + " tasks left");
      r.cost += apply(s, joint);
      ++r.steps;
      for (std::size_t i = 0; i < ids_.size(); ++i) r.plans[ids_[i]].controls.push_back(joint[i]);
    }
    r.final_state = std::move(s);
    return r;
  }

 private:
  void complete_at(PlanState& s, int cell) const {
    const int t = task_at_[static_cast<std::size_t>(cell)];
    if (t >= 0 && s.alive[static_cast<std::size_t>(t)]) {
      s.alive[static_cast<std::size_t>(t)] = 0;
      --s.remaining;
    }
  }

  PlanGrid grid_;
  PlannerConfig cfg_;
  std::vector<AgentId> ids_;
  PlanState start_;
  std::vector<int> task_cells_;  // (y, x) order
  std::vector<int> task_at_;
  std::vector<std::vector<int>> dist_;
  std::vector<int> depot_dist_;
  mutable int cap_hits_ = 0;
};

inline long plan_cost(const PlanSet& plans) {
  long c = 0;
  for (const auto& [id, seq] : plans) c += seq.moves();
  return c;
}

// Truncates every sequence at lambda and pads it with Wait to exactly lambda.
inline PlanSet fit_to_length(PlanSet plans, long lambda) {
  if (lambda < 0) throw ContractViolation("fit_to_length: negative length");
  for (auto& [id, seq] : plans) seq.controls.resize(static_cast<std::size_t>(lambda), Control::Wait);
  return plans;
}

inline long longest(const PlanSet& plans) {
  std::size_t n = 0;
  for (const auto& [id, seq] : plans) n = std::max(n, seq.controls.size());
  return static_cast<long>(n);
}

inline PlanSet mar_plan(const LocalMap& map, long lambda, PlannerConfig cfg = {}) {
  if (map.tasks.empty()) throw ContractViolation("mar_plan: map has no task");
  return fit_to_length(TeamPlanner(map, cfg).plan(true).plans, lambda);
}

inline PlanSet greedy_plan(const LocalMap& map, long lambda, PlannerConfig cfg = {}) {
  if (map.tasks.empty()) throw ContractViolation("greedy_plan: map has no task");
  return fit_to_length(TeamPlanner(map, cfg).plan(false).plans, lambda);
}

// Whole world as one map in absolute coordinates, every agent a member.
inline LocalMap world_map(const GridWorld& world) {
  LocalMap m;
  for (int y = 0; y < world.height(); ++y)
    for (int x = 0; x < world.width(); ++x)
      m.cells.emplace(Position{x, y}, world.is_obstacle({x, y}) ? CellKind::Obstacle : CellKind::Free);
  m.tasks = world.tasks();
  m.member_agents = world.agents();
  return m;
}

// Rollout over the full world with every agent in one team; no truncation.
inline PlanSet centralized_plan(const GridWorld& world, PlannerConfig cfg = {}) {
  const LocalMap m = world_map(world);
  if (m.tasks.empty()) return fit_to_length(TeamPlanner(m, cfg).plan(false).plans, 0);
  PlanSet plans = TeamPlanner(m, cfg).plan(true).plans;
  const long len = longest(plans);
  return fit_to_length(std::move(plans), len);
}

}  // namespace dmar
