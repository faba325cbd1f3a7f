#pragma once

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "agent.hpp"
#include "params.hpp"

namespace dmar {

// Gives every clustered agent its own view as a map, with non-members dropped, and raises
// the message flag on the leader's children.
inline void init_cluster_maps(AgentSet& agents) {
  auto& st = agents.states();
  for (std::size_t i = 0; i < st.size(); ++i) {
    AgentState& a = st[i];
    if (!a.clustered()) continue;
    a.local_map = init_map(agents.view(i), [&](AgentId other) { return agents.local(i, other).cluster_id == a.cluster_id; });
    a.msg_flag = false;
  }
  for (std::size_t i = 0; i < st.size(); ++i) {
    AgentState& a = st[i];
    if (a.clustered() && a.parent) a.msg_flag = agents.local(i, *a.parent).is_leader();
  }
}

// Downward pass: a flagged agent re-expresses its map in its parent's frame (which is
// already the leader's frame), keeps the flag only as a leaf, and flags its children.
inline void lma_down_step(AgentSet& agents) {
  auto& st = agents.states();
  std::vector<std::optional<LocalMap>> maps(st.size());
  std::vector<char> flag(st.size());
  for (std::size_t i = 0; i < st.size(); ++i) flag[i] = st[i].msg_flag;
  for (std::size_t i = 0; i < st.size(); ++i) {
    const AgentState& a = st[i];
    if (!a.clustered() || !a.msg_flag || !a.parent) continue;
    maps[i] = merge_maps(agents.local(i, *a.parent).local_map, a.local_map, a.id);
    if (!a.children.empty()) flag[i] = 0;
  }
  for (std::size_t i = 0; i < st.size(); ++i) {
    const AgentState& a = st[i];
    if (!a.clustered() || !a.msg_flag || !a.parent) continue;
    for (AgentId c : a.children) {
      agents.require_local(i, c);
      flag[agents.index_of(c)] = 1;
    }
  }
  for (std::size_t i = 0; i < st.size(); ++i) {
    if (maps[i]) st[i].local_map = std::move(*maps[i]);
    st[i].msg_flag = flag[i] != 0;
  }
  ++agents.ctx.step_index;
}

// Upward pass: a flagged non-leader folds its map into its parent's and hands the flag up.
inline void lma_up_step(AgentSet& agents) {
  auto& st = agents.states();
  std::map<std::size_t, LocalMap> merged;  // parent index -> map after this step
  std::vector<char> flag(st.size());
  for (std::size_t i = 0; i < st.size(); ++i) flag[i] = st[i].msg_flag;
  for (std::size_t i = 0; i < st.size(); ++i) {
    const AgentState& a = st[i];
    if (!a.clustered() || !a.msg_flag || a.is_leader()) continue;
    const std::size_t p = agents.index_of(*a.parent);
    agents.require_local(i, *a.parent);
    auto it = merged.find(p);
    if (it == merged.end()) it = merged.emplace(p, st[p].local_map).first;
    it->second = merge_maps(it->second, a.local_map, a.id);
    flag[i] = 0;
  }
  for (const auto& [p, m] : merged) flag[p] = 1;
  for (auto& [p, m] : merged) st[p].local_map = std::move(m);
  for (std::size_t i = 0; i < st.size(); ++i) st[i].msg_flag = flag[i] != 0;
  ++agents.ctx.step_index;
}

// Full aggregation: L down steps then L up steps. Afterwards each leader holds the union
// of its members' views in its own frame.
inline void run_lma(AgentSet& agents, const ProtocolParams& params) {
  const int L = tree_height_bound(params.psi);
  init_cluster_maps(agents);
  agents.ctx.enter(Phase::LmaDown);
  for (int s = 0; s < L; ++s) lma_down_step(agents);
  agents.ctx.enter(Phase::LmaUp);
  for (int s = 0; s < L; ++s) lma_up_step(agents);
  for (AgentState& a : agents.states()) a.msg_flag = false;
}

// Map cells reachable from `from` through free cells.
inline std::set<Position> reachable_free(const LocalMap& map, Position from) {
  std::set<Position> seen;
  if (!map.is_free(from)) return seen;
  std::deque<Position> q{from};
  seen.insert(from);
  while (!q.empty()) {
    const Position u = q.front();
    q.pop_front();
    for (Control c : kMoveControls) {
      const Position v = step(u, c);
      if (map.is_free(v) && seen.insert(v).second) q.push_back(v);
    }
  }
  return seen;
}

struct PruneResult {
  LocalMap map;
  bool dissolve = false;
  std::vector<AgentId> released;  // members handed back to exploration (depot-gathering mode)
};

// Drops tasks no member can reach over known free cells. With `require_depot`, members
// that cannot reach the leader's cell are released first. No task left means dissolve.
inline PruneResult prune_or_dissolve(const LocalMap& leader_map, AgentId leader, bool require_depot = false) {
  PruneResult out;
  out.map = leader_map;
  auto lead = leader_map.member_agents.find(leader);
  if (lead == leader_map.member_agents.end()) throw ContractViolation("prune_or_dissolve: leader missing from map");
  if (require_depot) {
    const std::set<Position> depot_comp = reachable_free(leader_map, lead->second);
    for (auto it = out.map.member_agents.begin(); it != out.map.member_agents.end();) {
      if (!depot_comp.contains(it->second)) {
        out.released.push_back(it->first);
        it = out.map.member_agents.erase(it);
      } else {
        ++it;
      }
    }
  }
  std::set<Position> reach;
  for (const auto& [id, p] : out.map.member_agents) {
    if (reach.contains(p)) continue;
    const auto comp = reachable_free(out.map, p);
    reach.insert(comp.begin(), comp.end());
  }
  for (auto it = out.map.tasks.begin(); it != out.map.tasks.end();) {
    it = reach.contains(*it) ? std::next(it) : out.map.tasks.erase(it);
  }
  out.dissolve = out.map.tasks.empty();
  return out;
}

// The leader's decision to dissolve: it signals its children and drops its own state at
// once, so the wave reaches depth L within L steps.
inline void start_dissolve(AgentSet& agents, AgentId leader) {
  const std::size_t i = agents.index_of(leader);
  AgentState& l = agents.states()[i];
  if (!l.is_leader()) throw ContractViolation("start_dissolve: agent is not a leader");
  const std::vector<AgentId> kids = l.children;
  l.reset();
  for (AgentId c : kids) {
    agents.require_local(i, c);
    agents.at(c).msg_flag = true;
  }
}

// One step of the reset wave: every flagged agent passes the flag to its children and
// then forgets its own cluster state.
inline void dissolve_step(AgentSet& agents) {
  auto& st = agents.states();
  std::vector<AgentId> next_wave;
  std::vector<std::size_t> reset_now;
  for (std::size_t i = 0; i < st.size(); ++i) {
    if (!st[i].msg_flag) continue;
    for (AgentId c : st[i].children) {
      agents.require_local(i, c);
      next_wave.push_back(c);
    }
    reset_now.push_back(i);
  }
  for (std::size_t i : reset_now) st[i].reset();
  for (AgentId c : next_wave) agents.at(c).msg_flag = true;
  ++agents.ctx.step_index;
}

}  // namespace dmar
