#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core.hpp"
#include "grid.hpp"
#include "local_map.hpp"

namespace dmar {

enum class Phase : std::uint8_t { Idle, Election, Append, Join, LmaDown, LmaUp, Dissolve, Tmar, Em };

inline const char* to_string(Phase p) {
  switch (p) {
    case Phase::Idle: return "idle";
    case Phase::Election: return "election";
    case Phase::Append: return "append";
    case Phase::Join: return "join";
    case Phase::LmaDown: return "lma-down";
    case Phase::LmaUp: return "lma-up";
    case Phase::Dissolve: return "dissolve";
    case Phase::Tmar: return "tmar";
    case Phase::Em: return "em";
  }
  return "?";
}

struct RoundContext {
  int round_index = 0;
  int step_index = 0;
  Phase phase = Phase::Idle;

  // SOAC cycles between append and join; every other phase only moves forward.
  static int rank(Phase p) {
    switch (p) {
      case Phase::Idle: return 0;
      case Phase::Election: return 1;
      case Phase::Append:
      case Phase::Join: return 2;
      case Phase::LmaDown: return 3;
      case Phase::LmaUp: return 4;
      case Phase::Dissolve: return 5;
      case Phase::Tmar: return 6;
      case Phase::Em: return 7;
    }
    return 0;
  }

  void enter(Phase p) {
    if (p != Phase::Idle && rank(p) < rank(phase))
      throw ProtocolError(std::string("phase ") + to_string(p) + " entered after " + to_string(phase), round_index,
                          step_index);
    phase = p;
    step_index = 0;
  }
};

// Protocol memory of one agent.
struct AgentState {
  AgentId id = 0;
  Position position;
  bool ldr_flag = false;
  bool msg_flag = false;
  std::optional<AgentId> cluster_id;
  std::optional<AgentId> parent;
  std::vector<AgentId> children;  // ascending
  std::optional<AgentId> join_message;
  int depth = 0;          // hops to the root along parent links
  int height_bound = 0;   // upper bound on the cluster tree height, as known locally
  bool joined_this_iteration = false;
  LocalMap local_map;
  std::optional<ControlSequence> plan;

  bool clustered() const { return cluster_id.has_value(); }
  bool is_leader() const { return cluster_id && *cluster_id == id; }
  int degree() const { return static_cast<int>(children.size()) + (parent ? 1 : 0); }

  void reset() {
    ldr_flag = msg_flag = false;
    cluster_id.reset();
    parent.reset();
    children.clear();
    join_message.reset();
    depth = height_bound = 0;
    joined_this_iteration = false;
    local_map = {};
    plan.reset();
  }
};

// All agents of an episode plus the views they hold during the current round.
// Every cross-agent read or write goes through `local`, which rejects targets that are
// not inside the caller's view.
class AgentSet {
 public:
  AgentSet() = default;
  explicit AgentSet(const GridWorld& world) {
    for (const auto& [id, p] : world.agents()) {
      AgentState s;
      s.id = id;
      s.position = p;
      index_.emplace(id, agents_.size());
      agents_.push_back(std::move(s));
    }
  }

  std::size_t size() const { return agents_.size(); }
  std::vector<AgentState>& states() { return agents_; }
  const std::vector<AgentState>& states() const { return agents_; }
  std::size_t index_of(AgentId id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw ContractViolation("unknown agent " + std::to_string(id));
    return it->second;
  }
  AgentState& at(AgentId id) { return agents_[index_of(id)]; }
  const AgentState& at(AgentId id) const { return agents_[index_of(id)]; }

  // Snapshot positions and views at round start; agents do not move before EM.
  void observe(const GridWorld& world, int k, ViewMode mode) {
    views_.clear();
    views_.reserve(agents_.size());
    for (AgentState& s : agents_) {
      s.position = world.agent_position(s.id);
      views_.push_back(compute_view(world, s.position, k, mode));
    }
  }
  bool observed() const { return views_.size() == agents_.size(); }
  const View& view(std::size_t i) const { return views_.at(i); }
  const View& view_of(AgentId id) const { return views_.at(index_of(id)); }

  void reset_all() {
    for (AgentState& s : agents_) s.reset();
  }

  // Locality contract: agent `reader` may touch `target` only if target is in its view.
  const AgentState& local(std::size_t reader, AgentId target) const {
    require_local(reader, target);
    return agents_[index_of(target)];
  }
  void require_local(std::size_t reader, AgentId target) const {
    if (!views_.at(reader).sees_agent(target))
      throw ProtocolError("locality violation: agent " + std::to_string(agents_[reader].id) + " accessed agent " +
                              std::to_string(target) + " outside its view",
                          ctx.round_index, ctx.step_index);
  }

  RoundContext ctx;

 private:
  std::vector<AgentState> agents_;  // ascending id
  std::map<AgentId, std::size_t> index_;
  std::vector<View> views_;
};

struct Cluster {
  AgentId leader = 0;
  std::vector<AgentId> members;  // ascending, includes the leader
  int height = 0;

  friend bool operator==(const Cluster&, const Cluster&) = default;
};

// Reads the trees out of the agents' links and checks them: mutual parent/child links,
// a single root per cluster, cluster_id equal to the root everywhere, no cycles.
inline std::vector<Cluster> collect_clusters(const AgentSet& agents) {
  const auto& st = agents.states();
  std::map<AgentId, Cluster> by_leader;
  for (const AgentState& s : st) {
    if (!s.clustered()) {
      if (s.parent || !s.children.empty())
        throw ProtocolError("agent " + std::to_string(s.id) + " has tree links but no cluster");
      continue;
    }
    if (s.parent) {
      const AgentState& p = agents.at(*s.parent);
      if (!std::binary_search(p.children.begin(), p.children.end(), s.id))
        throw ProtocolError("agent " + std::to_string(s.id) + " is not listed by its parent " +
                            std::to_string(p.id));
    } else if (!s.is_leader()) {
      throw ProtocolError("agent " + std::to_string(s.id) + " has no parent but is not a leader");
    }
    for (AgentId c : s.children) {
      const AgentState& ch = agents.at(c);
      if (ch.parent != s.id)
        throw ProtocolError("agent " + std::to_string(c) + " listed as child of " + std::to_string(s.id) +
                            " without pointing back");
    }
    int height = 0;
    const AgentState* cur = &s;
    while (cur->parent) {
      cur = &agents.at(*cur->parent);
      if (++height > static_cast<int>(st.size())) throw ProtocolError("cycle in cluster tree");
    }
    if (!cur->is_leader() || *s.cluster_id != cur->id)
      throw ProtocolError("agent " + std::to_string(s.id) + " carries cluster id " + std::to_string(*s.cluster_id) +
                          " but its root is " + std::to_string(cur->id));
    Cluster& c = by_leader[cur->id];
    c.leader = cur->id;
    c.members.push_back(s.id);
    c.height = std::max(c.height, height);
  }
  std::vector<Cluster> out;
  for (auto& [id, c] : by_leader) out.push_back(std::move(c));
  return out;
}

inline std::vector<AgentId> unassigned_agents(const AgentSet& agents) {
  std::vector<AgentId> out;
  for (const AgentState& s : agents.states())
    if (!s.clustered()) out.push_back(s.id);
  return out;
}

}  // namespace dmar
