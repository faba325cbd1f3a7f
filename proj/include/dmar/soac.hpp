#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "agent.hpp"
#include "params.hpp"

namespace dmar {

namespace detail {

inline int hops_to(const View& v, Position p) {
  const ViewCell* c = v.find(p);
  if (!c) throw ContractViolation("hops_to: position outside view");
  return c->hops;
}

inline void insert_sorted(std::vector<AgentId>& v, AgentId id) {
  auto it = std::lower_bound(v.begin(), v.end(), id);
  if (it == v.end() || *it != id) v.insert(it, id);
}

inline void erase_sorted(std::vector<AgentId>& v, AgentId id) {
  auto it = std::lower_bound(v.begin(), v.end(), id);
  if (it != v.end() && *it == id) v.erase(it);
}

}  // namespace detail

// One synchronous step. Leaders are agents that see a task and see no agent with a
// larger ID that also sees one.
inline std::vector<AgentId> elect_leaders(AgentSet& agents) {
  if (!agents.observed()) throw ContractViolation("elect_leaders: views not observed");
  auto& st = agents.states();
  for (std::size_t i = 0; i < st.size(); ++i) st[i].ldr_flag = agents.view(i).sees_task();
  std::vector<bool> keep(st.size(), false);
  for (std::size_t i = 0; i < st.size(); ++i) {
    if (!st[i].ldr_flag) continue;
    bool beaten = false;
    for (const auto& [id, pos] : agents.view(i).visible_agents) {
      if (id <= st[i].id) continue;
      if (agents.local(i, id).ldr_flag) {
        beaten = true;
        break;
      }
    }
    keep[i] = !beaten;
  }
  std::vector<AgentId> leaders;
  for (std::size_t i = 0; i < st.size(); ++i) {
    st[i].ldr_flag = keep[i];
    if (keep[i]) {
      st[i].cluster_id = st[i].id;
      st[i].depth = 0;
      st[i].height_bound = 0;
      leaders.push_back(st[i].id);
    }
  }
  ++agents.ctx.step_index;
  return leaders;
}

// One synchronous step. Every unassigned agent nominates the nearest visible clustered
// agent with a free child slot whose children would stay within the height bound; each
// parent admits nominees in ascending ID order up to its free capacity.
inline std::vector<std::pair<AgentId, AgentId>> append_step(AgentSet& agents, const ProtocolParams& params) {
  const int L = tree_height_bound(params.psi);
  auto& st = agents.states();
  std::map<AgentId, std::vector<AgentId>> requests;  // parent -> requesters (ascending by construction)
  for (std::size_t i = 0; i < st.size(); ++i) {
    if (st[i].clustered()) continue;
    const View& v = agents.view(i);
    std::optional<std::pair<int, AgentId>> best;
    for (const auto& [id, pos] : v.visible_agents) {
      if (id == st[i].id) continue;
      const AgentState& x = agents.local(i, id);
      if (!x.clustered() || static_cast<int>(x.children.size()) >= params.c || x.depth + 1 > L) continue;
      const std::pair<int, AgentId> key{detail::hops_to(v, pos), id};
      if (!best || key < *best) best = key;
    }
    if (best) requests[best->second].push_back(st[i].id);
  }
  std::vector<std::pair<AgentId, AgentId>> admitted;  // (child, parent)
  for (auto& [pid, reqs] : requests) {
    AgentState& p = agents.at(pid);
    const int free_slots = params.c - static_cast<int>(p.children.size());
    for (int j = 0; j < static_cast<int>(reqs.size()) && j < free_slots; ++j) {
      AgentState& a = agents.at(reqs[static_cast<std::size_t>(j)]);
      a.parent = pid;
      a.cluster_id = p.cluster_id;
      a.depth = p.depth + 1;
      a.height_bound = p.height_bound;
      detail::insert_sorted(p.children, a.id);
      admitted.emplace_back(a.id, pid);
    }
    if (static_cast<int>(p.children.size()) > params.c)
      throw ProtocolError("append overflowed children of " + std::to_string(pid), agents.ctx.round_index,
                          agents.ctx.step_index);
  }
  for (AgentState& s : st)
    if (s.clustered()) s.height_bound = std::min(L, s.height_bound + 1);
  ++agents.ctx.step_index;
  return admitted;
}

struct JoinInitiation {
  AgentId initiator = 0;
  std::vector<AgentId> contacts;  // one per chosen cluster, ordered by that cluster's leader ID
};

// One synchronous step of the cluster-join window (`window_step` counts from 1).
// Step 1 lets still-unassigned agents that see at least two distinct clusters start a join;
// every step lets holders of a join message re-parent under the sender and forward the
// message along their old tree links. Writes use step-start state; a message write lands
// only on an empty slot and the smallest sender wins.
inline std::vector<JoinInitiation> cluster_join_step(AgentSet& agents, const ProtocolParams& params, int window_step) {
  const int L = tree_height_bound(params.psi);
  const auto prev = agents.states();
  auto& next = agents.states();
  std::map<AgentId, AgentId> writes;  // target -> smallest sender
  auto request_write = [&](std::size_t writer, AgentId target) {
    agents.require_local(writer, target);
    auto [it, inserted] = writes.emplace(target, prev[writer].id);
    if (!inserted) it->second = std::min(it->second, prev[writer].id);
  };
  auto peer = [&](std::size_t reader, AgentId id) -> const AgentState& {
    agents.require_local(reader, id);
    return prev[agents.index_of(id)];
  };
  std::map<AgentId, std::vector<AgentId>> appends;  // new parent -> children joining it

  for (std::size_t i = 0; i < prev.size(); ++i) {
    const AgentState& a = prev[i];
    if (!a.join_message) continue;
    AgentState& n = next[i];
    n.join_message.reset();
    if (a.joined_this_iteration) continue;  // declined: already re-parented during this window
    const AgentState& xs = peer(i, *a.join_message);
    n.cluster_id = xs.cluster_id;
    n.depth = xs.depth + 1;
    n.height_bound = xs.height_bound;
    for (AgentId b : a.children)
      if (b != xs.id) request_write(i, b);
    if (a.parent && *a.parent != xs.id) {
      request_write(i, *a.parent);
      agents.require_local(i, *a.parent);
      detail::erase_sorted(next[agents.index_of(*a.parent)].children, a.id);
    }
    n.parent = xs.id;
    n.children.clear();
    n.joined_this_iteration = true;
    appends[xs.id].push_back(a.id);
  }

  std::vector<JoinInitiation> initiations;
  if (window_step == 1) {
    for (std::size_t i = 0; i < prev.size(); ++i) {
      const AgentState& a = prev[i];
      if (a.clustered()) continue;
      const View& v = agents.view(i);
      // Per visible cluster, the contact whose re-rooted tree stays within the bound and
      // whose wave finishes inside the window.
      std::map<AgentId, std::tuple<int, int, AgentId>> contact;  // cluster -> (depth, hops, id)
      for (const auto& [id, pos] : v.visible_agents) {
        if (id == a.id) continue;
        const AgentState& x = peer(i, id);
        if (!x.clustered()) continue;
        if (x.degree() > params.c || x.depth + x.height_bound > L - 2) continue;
        const std::tuple<int, int, AgentId> key{x.depth, detail::hops_to(v, pos), id};
        auto [it, inserted] = contact.emplace(*x.cluster_id, key);
        if (!inserted && key < it->second) it->second = key;
      }
      if (contact.size() < 2) continue;
      JoinInitiation init{a.id, {}};
      int reach = 0;
      for (const auto& [cid, key] : contact) {
        if (static_cast<int>(init.contacts.size()) == params.c) break;
        const AgentState& x = peer(i, std::get<2>(key));
        init.contacts.push_back(x.id);
        reach = std::max(reach, x.depth + x.height_bound);
        request_write(i, x.id);
      }
      AgentState& n = next[i];
      n.cluster_id = a.id;
      n.depth = 0;
      n.height_bound = 1 + reach;
      n.joined_this_iteration = true;
      initiations.push_back(std::move(init));
    }
  }

  for (const auto& [target, sender] : writes) {
    const std::size_t t = agents.index_of(target);
    if (!prev[t].join_message) next[t].join_message = sender;
  }
  for (auto& [pid, kids] : appends) {
    AgentState& p = next[agents.index_of(pid)];
    for (AgentId kid : kids) detail::insert_sorted(p.children, kid);
    if (static_cast<int>(p.children.size()) > params.c)
      throw ProtocolError("join overflowed children of " + std::to_string(pid), agents.ctx.round_index,
                          agents.ctx.step_index);
  }
  ++agents.ctx.step_index;
  return initiations;
}

struct SoacResult {
  std::vector<AgentId> leaders_elected;
  std::vector<Cluster> clusters;
  std::vector<AgentId> unassigned;
  long steps = 0;
};

// Election, then ceil(log2 psi) iterations of one append step and L join steps.
inline SoacResult run_soac(AgentSet& agents, const ProtocolParams& params) {
  const Schedule sched = Schedule::make(params);
  SoacResult out;
  agents.ctx.enter(Phase::Election);
  out.leaders_elected = elect_leaders(agents);
  for (int outer = 0; outer < sched.steps_soac_outer; ++outer) {
    agents.ctx.enter(Phase::Append);
    append_step(agents, params);
    agents.ctx.enter(Phase::Join);
    for (int s = 1; s <= sched.steps_join_inner; ++s) cluster_join_step(agents, params, s);
    for (AgentState& a : agents.states()) {
      if (a.join_message && !a.joined_this_iteration)
        throw ProtocolError("join wave unfinished at agent " + std::to_string(a.id), agents.ctx.round_index,
                            agents.ctx.step_index);
      a.join_message.reset();
      a.joined_this_iteration = false;
    }
  }
  out.steps = sched.soac_steps();
  out.clusters = collect_clusters(agents);
  for (const Cluster& c : out.clusters) {
    if (c.height > sched.height_bound())
      throw ProtocolError("cluster " + std::to_string(c.leader) + " exceeds the height bound", agents.ctx.round_index,
                          agents.ctx.step_index);
  }
  out.unassigned = unassigned_agents(agents);
  return out;
}

}  // namespace dmar
