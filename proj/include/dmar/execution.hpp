#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "agent.hpp"
#include "params.hpp"
#include "planner.hpp"
#include "rng.hpp"

namespace dmar {

// FNV-1a over 64-bit words; folds every executed step's positions.
class TrajectoryHash {
 public:
  void mix(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h_ ^= (v >> (8 * i)) & 0xffu;
      h_ *= 0x100000001b3ull;
    }
  }
  void mix_positions(const GridWorld& world) {
    for (const auto& [id, p] : world.agents()) {
      mix(static_cast<std::uint64_t>(id));
      mix((static_cast<std::uint64_t>(static_cast<std::uint32_t>(p.x)) << 32) | static_cast<std::uint32_t>(p.y));
    }
  }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ull;
};

// Leaders hand their plan sets down the trees: the compute step reaches the leader's
// children, then each holder passes it on for L steps. A member takes the sequence with
// its own ID; members absent from the set stay without a plan.
inline long broadcast_plans(AgentSet& agents, const std::map<AgentId, PlanSet>& by_leader, int L) {
  auto& st = agents.states();
  std::vector<const PlanSet*> holding(st.size(), nullptr);
  std::vector<const PlanSet*> expected(st.size(), nullptr);
  for (std::size_t i = 0; i < st.size(); ++i) {
    if (st[i].clustered() && by_leader.contains(*st[i].cluster_id)) expected[i] = &by_leader.at(*st[i].cluster_id);
  }
  auto take = [&](std::size_t i, const PlanSet& R) {
    auto it = R.find(st[i].id);
    if (it != R.end()) st[i].plan = it->second;
  };
  agents.ctx.enter(Phase::Tmar);
  for (const auto& [leader, R] : by_leader) {
    const std::size_t li = agents.index_of(leader);
    take(li, R);
    for (AgentId c : st[li].children) {
      agents.require_local(li, c);
      holding[agents.index_of(c)] = &R;
    }
  }
  ++agents.ctx.step_index;
  for (int s = 0; s < L; ++s) {
    std::vector<const PlanSet*> next(st.size(), nullptr);
    for (std::size_t i = 0; i < st.size(); ++i) {
      if (!holding[i]) continue;
      take(i, *holding[i]);
      for (AgentId c : st[i].children) {
        agents.require_local(i, c);
        next[agents.index_of(c)] = holding[i];
      }
    }
    holding = std::move(next);
    ++agents.ctx.step_index;
  }
  for (std::size_t i = 0; i < st.size(); ++i) {
    if (!expected[i]) continue;
    if (expected[i]->contains(st[i].id) && !st[i].plan)
      throw ProtocolError("agent " + std::to_string(st[i].id) + " holds no plan after broadcast",
                          agents.ctx.round_index, agents.ctx.step_index);
  }
  return 1 + L;
}

// Appends to every member's sequence the canonical shortest walk (over the map's free
// cells) from where its plan ends to the depot. lambda >= 0 also truncates/pads.
inline PlanSet gci_augment(PlanSet plans, const LocalMap& map, Position depot, long lambda = -1) {
  const std::set<Position> cells = map.free_cells();
  for (auto& [id, seq] : plans) {
    auto it = map.member_agents.find(id);
    if (it == map.member_agents.end()) throw ContractViolation("gci_augment: agent not in map");
    Position p = it->second;
    for (Control c : seq.controls) p = step(p, c);
    auto path = shortest_path(cells, p, depot);
    if (!path) throw ProtocolError("gci_augment: depot unreachable for agent " + std::to_string(id));
    seq.controls.insert(seq.controls.end(), path->begin(), path->end());
  }
  return lambda >= 0 ? fit_to_length(std::move(plans), lambda) : plans;
}

struct EmConfig {
  long lambda = 0;
  int k = 1;
  ViewMode view_mode = ViewMode::Hop;
  std::uint64_t master_seed = 0;
  int round_index = 0;
  bool stop_when_done = true;  // end as soon as no task remains
  bool collision_mode = false;
  std::function<void(const GridWorld&)> on_step;  // called after every executed step
};

struct EmOutcome {
  long moves_cluster = 0;
  long moves_exploration = 0;
  int tasks_completed = 0;
  std::vector<AgentId> halted_explorers;
  long steps = 0;           // simulated steps, fast-forwarded ones included
  long fast_forwarded = 0;
  bool stopped_early = false;
  long conflicts = 0;       // collision mode: rejected moves
  std::vector<AgentId> finalized;  // collision mode: agents that gave up the rest of their plan
};

namespace detail {

inline std::vector<Control> explorer_moves(const GridWorld& world, Position p) {
  std::vector<Control> out;
  for (Control c : kMoveControls)
    if (world.is_free(step(p, c))) out.push_back(c);
  return out;
}

inline long last_move_index(const ControlSequence& seq) {
  for (long i = static_cast<long>(seq.controls.size()) - 1; i >= 0; --i)
    if (seq.controls[static_cast<std::size_t>(i)] != Control::Wait) return i;
  return -1;
}

}  // namespace detail

// Execute Movement with co-location allowed. Agents holding a plan run it one control per
// step (Wait once it is exhausted); the others explore with uniform random moves until a
// task or token enters their view, after which they stay put for the rest of the round.
inline EmOutcome execute_em(GridWorld& world, AgentSet& agents, const EmConfig& cfg, TrajectoryHash* hash = nullptr) {
  if (cfg.collision_mode) throw ContractViolation("execute_em: use collision_em in collision mode");
  EmOutcome out;
  auto& st = agents.states();
  const int tasks_before = world.task_count();
  std::vector<char> halted(st.size(), 0);
  std::vector<long> last_move(st.size(), -1);
  for (std::size_t i = 0; i < st.size(); ++i)
    if (st[i].plan) last_move[i] = detail::last_move_index(*st[i].plan);
  agents.ctx.enter(Phase::Em);
  const long start_cluster = world.ledger().cluster;
  const long start_explore = world.ledger().exploration;
  std::vector<Control> joint(st.size(), Control::Wait);
  for (long t = 0; t < cfg.lambda; ++t) {
    if (cfg.stop_when_done && world.task_count() == 0) {
      out.stopped_early = true;
      break;
    }
    bool idle = true;
    for (std::size_t i = 0; i < st.size(); ++i) {
      const Position p = world.agent_position(st[i].id);
      if (st[i].plan) {
        idle = idle && t > last_move[i];
        continue;
      }
      if (!halted[i] && task_in_view(world, p, cfg.k, cfg.view_mode)) halted[i] = 1;
      idle = idle && halted[i];
    }
    if (idle) {
      out.fast_forwarded = cfg.lambda - t;
      out.steps += out.fast_forwarded;
      break;
    }
    for (std::size_t i = 0; i < st.size(); ++i) {
      const Position p = world.agent_position(st[i].id);
      if (st[i].plan) {
        const auto& c = st[i].plan->controls;
        joint[i] = t < static_cast<long>(c.size()) ? c[static_cast<std::size_t>(t)] : Control::Wait;
      } else if (halted[i]) {
        joint[i] = Control::Wait;
      } else {
        const auto moves = detail::explorer_moves(world, p);
        joint[i] = moves.empty() ? Control::Wait
                                 : rand_control(cfg.master_seed, st[i].id, cfg.round_index, static_cast<int>(t), moves);
      }
    }
    for (std::size_t i = 0; i < st.size(); ++i) {
      if (joint[i] == Control::Wait) continue;
      const Position p = world.agent_position(st[i].id);
      if (!world.is_free(step(p, joint[i])))
        throw ProtocolError("agent " + std::to_string(st[i].id) + " planned an illegal move", cfg.round_index,
                            static_cast<int>(t));
      world.apply_control(st[i].id, joint[i], st[i].plan ? CostClass::Cluster : CostClass::Exploration);
    }
    ++out.steps;
    agents.ctx.step_index = static_cast<int>(t + 1);
    if (cfg.on_step) cfg.on_step(world);
    if (hash) {
      hash->mix(static_cast<std::uint64_t>(t));
      hash->mix_positions(world);
    }
  }
  for (std::size_t i = 0; i < st.size(); ++i)
    if (!st[i].plan && halted[i]) out.halted_explorers.push_back(st[i].id);
  out.moves_cluster = world.ledger().cluster - start_cluster;
  out.moves_exploration = world.ledger().exploration - start_explore;
  out.tasks_completed = tasks_before - world.task_count();
  return out;
}

// Execute Movement without co-location. Planned agents follow their own trajectory at one
// control per step and only advance when the move is granted. Conflicts resolve to a
// fixpoint each step:
//   - a move into the cell of an agent that stays this step is refused;
//   - two agents trading cells: the one with lower precedence is refused;
//   - several agents claiming one cell: the one ending its plan there wins, then the
//     smallest ID.
// Longer rotations are allowed. An agent refused by one that will never move again
// (finished, halted or finalized), or the loser of a trade, keeps its current cell as its
// final position. Explorers are stationary during that pass, then move in ascending ID,
// re-drawing among the cells still open when their first draw is blocked.
inline EmOutcome collision_em(GridWorld& world, AgentSet& agents, const EmConfig& cfg, TrajectoryHash* hash = nullptr) {
  EmOutcome out;
  auto& st = agents.states();
  const std::size_t n = st.size();
  const int tasks_before = world.task_count();
  std::vector<char> halted(n, 0);
  std::vector<char> finalized(n, 0);
  std::vector<std::size_t> cursor(n, 0);
  std::vector<Position> final_cell(n);
  for (std::size_t i = 0; i < n; ++i) {
    Position p = world.agent_position(st[i].id);
    if (st[i].plan)
      for (Control c : st[i].plan->controls) p = step(p, c);
    final_cell[i] = p;
  }
  auto finished = [&](std::size_t i) {
    return finalized[i] || (st[i].plan && cursor[i] >= st[i].plan->controls.size());
  };
  auto pending_moves = [&](std::size_t i) {
    if (!st[i].plan || finalized[i]) return false;
    const auto& c = st[i].plan->controls;
    for (std::size_t j = cursor[i]; j < c.size(); ++j)
      if (c[j] != Control::Wait) return true;
    return false;
  };
  agents.ctx.enter(Phase::Em);
  const long start_cluster = world.ledger().cluster;
  const long start_explore = world.ledger().exploration;

  for (long t = 0; t < cfg.lambda; ++t) {
    if (cfg.stop_when_done && world.task_count() == 0) {
      out.stopped_early = true;
      break;
    }
    std::vector<Position> pos(n);
    std::map<Position, std::size_t> occ;
    for (std::size_t i = 0; i < n; ++i) {
      pos[i] = world.agent_position(st[i].id);
      if (!occ.emplace(pos[i], i).second)
        throw ProtocolError("co-location at EM step start", cfg.round_index, static_cast<int>(t));
    }
    bool idle = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (st[i].plan) {
        idle = idle && !pending_moves(i);
        continue;
      }
      if (!halted[i] && task_in_view(world, pos[i], cfg.k, cfg.view_mode)) halted[i] = 1;
      idle = idle && halted[i];
    }
    if (idle) {
      out.fast_forwarded = cfg.lambda - t;
      out.steps += out.fast_forwarded;
      break;
    }
    auto permanent = [&](std::size_t j) { return st[j].plan ? finished(j) : halted[j] != 0; };

    // Planned agents.
    std::vector<char> moving(n, 0);
    std::vector<Position> target = pos;
    for (std::size_t i = 0; i < n; ++i) {
      if (!st[i].plan || finished(i)) continue;
      const Control c = st[i].plan->controls[cursor[i]];
      if (c == Control::Wait) continue;
      target[i] = step(pos[i], c);
      moving[i] = 1;
    }
    auto precedence = [&](std::size_t i) { return std::pair{target[i] == final_cell[i] ? 0 : 1, st[i].id}; };
    std::vector<char> refused(n, 0);
    auto refuse = [&](std::size_t i, bool give_up) {
      moving[i] = 0;
      refused[i] = 1;
      ++out.conflicts;
      if (give_up && !finalized[i]) {
        finalized[i] = 1;
        final_cell[i] = pos[i];
        out.finalized.push_back(st[i].id);
      }
    };
    for (bool changed = true; changed;) {
      changed = false;
      for (std::size_t i = 0; i < n; ++i) {
        if (!moving[i]) continue;
        auto it = occ.find(target[i]);
        if (it == occ.end()) continue;
        const std::size_t j = it->second;
        if (!moving[j]) {
          refuse(i, permanent(j));
          changed = true;
        } else if (target[j] == pos[i]) {
          const std::size_t loser = precedence(i) < precedence(j) ? j : i;
          refuse(loser, true);
          changed = true;
        }
      }
      std::map<Position, std::vector<std::size_t>> claims;
      for (std::size_t i = 0; i < n; ++i)
        if (moving[i]) claims[target[i]].push_back(i);
      for (auto& [cell, who] : claims) {
        if (who.size() < 2) continue;
        const std::size_t win = *std::min_element(who.begin(), who.end(),
                                                  [&](std::size_t a, std::size_t b) { return precedence(a) < precedence(b); });
        for (std::size_t i : who)
          if (i != win) refuse(i, false);
        changed = true;
      }
    }
    std::set<Position> taken;
    for (std::size_t i = 0; i < n; ++i) {
      if (!st[i].plan) continue;
      if (moving[i]) {
        world.apply_control(st[i].id, st[i].plan->controls[cursor[i]], CostClass::Cluster);
        ++cursor[i];
      } else if (!refused[i] && !finished(i)) {
        ++cursor[i];  // a planned Wait
      }
      taken.insert(world.agent_position(st[i].id));
    }
    // Explorers, after the planned agents, in ascending ID.
    for (std::size_t i = 0; i < n; ++i)
      if (!st[i].plan) taken.insert(pos[i]);
    for (std::size_t i = 0; i < n; ++i) {
      if (st[i].plan || halted[i]) continue;
      const auto moves = detail::explorer_moves(world, pos[i]);
      if (moves.empty()) continue;
      Control c = rand_control(cfg.master_seed, st[i].id, cfg.round_index, static_cast<int>(t), moves);
      if (taken.contains(step(pos[i], c))) {
        std::vector<Control> open;
        for (Control m : moves)
          if (!taken.contains(step(pos[i], m))) open.push_back(m);
        if (open.empty()) continue;
        ++out.conflicts;
        c = rand_control(cfg.master_seed, st[i].id, cfg.round_index, static_cast<int>(t), open, 1);
      }
      taken.erase(pos[i]);
      const Position q = world.apply_control(st[i].id, c, CostClass::Exploration);
      taken.insert(q);
    }
    std::set<Position> seen;
    for (const auto& [id, p] : world.agents())
      if (!seen.insert(p).second)
        throw ProtocolError("co-location of agent " + std::to_string(id) + " at step end", cfg.round_index,
                            static_cast<int>(t));
    ++out.steps;
    agents.ctx.step_index = static_cast<int>(t + 1);
    if (cfg.on_step) cfg.on_step(world);
    if (hash) {
      hash->mix(static_cast<std::uint64_t>(t));
      hash->mix_positions(world);
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!st[i].plan && halted[i]) out.halted_explorers.push_back(st[i].id);
  out.moves_cluster = world.ledger().cluster - start_cluster;
  out.moves_exploration = world.ledger().exploration - start_explore;
  out.tasks_completed = tasks_before - world.task_count();
  return out;
}

}  // namespace dmar
