#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "agent.hpp"
#include "execution.hpp"
#include "instance.hpp"
#include "lma.hpp"
#include "params.hpp"
#include "planner.hpp"
#include "soac.hpp"

namespace dmar {

struct RoundOutcome {
  int round_index = 0;
  std::map<AgentId, Position> start_positions;
  std::vector<Cluster> clusters;          // as formed by SOAC
  std::vector<AgentId> dissolved;         // leaders whose cluster had no reachable task
  std::map<AgentId, long> cluster_costs;  // leader -> planned moves
  long cluster_cost = 0;                  // executed cluster moves
  long exploration_cost = 0;
  int tasks_completed = 0;
  std::set<Position> tokens;              // as they stood before the end-of-round clear
  long steps = 0;
  long em_steps = 0;
  bool solved_before_em = false;
  bool episode_done = false;              // no task left when the round ended
  double planner_ms = 0.0;
  int truncated_plans = 0;                // plans cut at lambda
  int planner_cap_hits = 0;
};

struct RoundOptions {
  bool measure_time = true;
  TrajectoryHash* hash = nullptr;
  std::function<void(const GridWorld&)> on_step;
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

}  // namespace detail

// One complete round: SOAC, LMA with pruning/dissolution, TMAR and EM. Every phase uses
// its full step budget; only EM may end early (last task done, non-GCI) or be
// fast-forwarded when nobody can move any more.
inline RoundOutcome run_round(GridWorld& world, AgentSet& agents, const ProtocolParams& params, const Schedule& sched,
                              int round_index, const RoundOptions& opts = {}) {
  RoundOutcome out;
  out.round_index = round_index;
  const bool gci = uses_gci(params.policy);
  const int L = sched.height_bound();
  out.start_positions = world.agents();
  out.solved_before_em = world.task_count() == 0;

  agents.reset_all();
  agents.ctx = RoundContext{round_index, 0, Phase::Idle};
  agents.observe(world, params.k, params.view_mode);

  const SoacResult soac = run_soac(agents, params);
  out.clusters = soac.clusters;
  run_lma(agents, params);

  // Leaders prune their maps, then either plan or start the reset wave.
  const long cap = std::max(max_route_length(params.psi, params.k, LambdaMode::analytic()), 0L);
  std::map<AgentId, PlanSet> plans;
  agents.ctx.enter(Phase::Dissolve);
  for (const Cluster& c : soac.clusters) {
    const AgentState& leader = agents.at(c.leader);
    PruneResult pr = prune_or_dissolve(leader.local_map, c.leader, gci);
    if (pr.dissolve) {
      out.dissolved.push_back(c.leader);
      start_dissolve(agents, c.leader);
      continue;
    }
    PlannerConfig cfg;
    cfg.horizon_cap = std::max(cap, 4L * static_cast<long>(pr.map.cells.size()));
    if (gci) cfg.depot = pr.map.member_agents.at(c.leader);
    const auto t0 = detail::Clock::now();
    TeamPlanner planner(pr.map, cfg);
    PlanSet R = planner.plan(uses_rollout(params.policy)).plans;
    if (gci) R = gci_augment(std::move(R), pr.map, *cfg.depot);
    if (opts.measure_time) out.planner_ms += detail::ms_since(t0);
    out.planner_cap_hits += planner.cap_hits();
    if (longest(R) > sched.steps_em) ++out.truncated_plans;
    out.cluster_costs[c.leader] = plan_cost(R);
    plans.emplace(c.leader, fit_to_length(std::move(R), sched.steps_em));
  }
  for (int s = 0; s < L; ++s) dissolve_step(agents);
  broadcast_plans(agents, plans, L);

  EmConfig em;
  em.lambda = sched.steps_em;
  em.k = params.k;
  em.view_mode = params.view_mode;
  em.master_seed = params.master_seed;
  em.round_index = round_index;
  em.stop_when_done = !gci;
  em.collision_mode = params.collision_mode;
  em.on_step = opts.on_step;
  const EmOutcome eo = params.collision_mode ? collision_em(world, agents, em, opts.hash)
                                             : execute_em(world, agents, em, opts.hash);
  out.cluster_cost = eo.moves_cluster;
  out.exploration_cost = eo.moves_exploration;
  out.tasks_completed = eo.tasks_completed;
  out.em_steps = eo.steps;
  out.steps = sched.pre_em_steps() + eo.steps;
  out.tokens = world.tokens();
  world.clear_tokens();
  agents.reset_all();
  agents.ctx.enter(Phase::Idle);
  out.episode_done = world.task_count() == 0;
  if (opts.hash) {
    opts.hash->mix(0x524f554e44ull ^ static_cast<std::uint64_t>(round_index));
    for (const Cluster& c : out.clusters)
      for (AgentId m : c.members) opts.hash->mix((static_cast<std::uint64_t>(c.leader) << 32) | static_cast<std::uint32_t>(m));
  }
  return out;
}

struct EpisodeCaps {
  long max_rounds = -1;  // negative: unlimited
  long max_steps = -1;
};

struct EpisodeOptions {
  bool measure_time = true;
  bool keep_rounds = false;
  std::function<void(const GridWorld&)> on_step;  // forwarded to every EM step
};

struct RunRecord {
  std::string instance_id;
  std::uint64_t seed = 0;
  int side = 0;
  int k = 0;
  int psi = 0;
  std::string ratio;
  std::string policy;
  std::string view_mode;
  long total_cost = 0;
  long exploration_cost = 0;
  long cluster_cost = 0;
  long rounds = 0;
  long steps = 0;
  double mean_clusters_per_round = 0.0;
  double planner_time_ms = 0.0;
  bool completed = false;

  std::uint64_t trajectory_hash = 0;
  int truncated_plans = 0;
  int planner_cap_hits = 0;
  std::vector<RoundOutcome> round_log;
};

inline bool same_outcome(const RunRecord& a, const RunRecord& b) {
  return a.instance_id == b.instance_id && a.seed == b.seed && a.side == b.side && a.k == b.k && a.psi == b.psi &&
         a.ratio == b.ratio && a.policy == b.policy && a.view_mode == b.view_mode && a.total_cost == b.total_cost &&
         a.exploration_cost == b.exploration_cost && a.cluster_cost == b.cluster_cost && a.rounds == b.rounds &&
         a.steps == b.steps && a.mean_clusters_per_round == b.mean_clusters_per_round && a.completed == b.completed &&
         a.trajectory_hash == b.trajectory_hash;
}

// Rounds until no task is left or a cap is reached. The centralized policy plans once over
// the full world and executes that plan.
inline RunRecord run_episode(const Instance& inst, const ProtocolParams& params, const EpisodeCaps& caps = {},
                             const EpisodeOptions& opts = {}) {
  params.validate();
  const Schedule sched = Schedule::make(params);
  const Validation v = validate(inst);
  if (!v.solvable && caps.max_rounds < 0 && caps.max_steps < 0)
    throw ParameterError("run_episode: unsolvable instance without caps (" + v.reason + ")");
  if (params.collision_mode) {
    std::set<Position> seen;
    for (const auto& [id, p] : inst.agents)
      if (!seen.insert(p).second) throw ParameterError("run_episode: co-located agents in collision mode");
  }
  GridWorld world = inst.make_world();
  world.set_token_mode(uses_gci(params.policy));
  world.settle_tasks_under_agents();
  AgentSet agents(world);
  TrajectoryHash hash;

  RunRecord rec;
  rec.seed = params.master_seed;
  rec.side = inst.width;
  rec.k = params.k;
  rec.psi = params.psi;
  rec.ratio = inst.ratio;
  rec.policy = to_string(params.policy);
  rec.view_mode = to_string(params.view_mode);

  if (params.policy == Policy::Centralized) {
    const auto t0 = detail::Clock::now();
    PlannerConfig cfg;
    cfg.horizon_cap = std::max(max_route_length(params.psi, params.k, LambdaMode::analytic()), 4L * world.cell_count());
    PlanSet R = centralized_plan(world, cfg);
    if (opts.measure_time) rec.planner_time_ms = detail::ms_since(t0);
    long len = longest(R);
    if (caps.max_steps >= 0 && len > caps.max_steps) {
      len = caps.max_steps;
      R = fit_to_length(std::move(R), len);
    }
    for (AgentState& s : agents.states()) s.plan = R.at(s.id);
    EmConfig em;
    em.lambda = len;
    em.k = params.k;
    em.view_mode = params.view_mode;
    em.master_seed = params.master_seed;
    em.collision_mode = params.collision_mode;
    em.on_step = opts.on_step;
    const EmOutcome eo = params.collision_mode ? collision_em(world, agents, em, &hash) : execute_em(world, agents, em, &hash);
    rec.rounds = 1;
    rec.steps = eo.steps;
    rec.mean_clusters_per_round = 1.0;
  } else {
    long clusters_total = 0;
    while (world.task_count() > 0) {
      if (caps.max_rounds >= 0 && rec.rounds >= caps.max_rounds) break;
      if (caps.max_steps >= 0 && rec.steps >= caps.max_steps) break;
      RoundOutcome ro = run_round(world, agents, params, sched, static_cast<int>(rec.rounds),
                                  RoundOptions{opts.measure_time, &hash, opts.on_step});
      ++rec.rounds;
      rec.steps += ro.steps;
      rec.planner_time_ms += ro.planner_ms;
      rec.truncated_plans += ro.truncated_plans;
      rec.planner_cap_hits += ro.planner_cap_hits;
      clusters_total += static_cast<long>(ro.clusters.size());
      if (opts.keep_rounds) rec.round_log.push_back(std::move(ro));
    }
    rec.mean_clusters_per_round = rec.rounds > 0 ? static_cast<double>(clusters_total) / static_cast<double>(rec.rounds) : 0.0;
  }
  rec.exploration_cost = world.ledger().exploration;
  rec.cluster_cost = world.ledger().cluster;
  rec.total_cost = world.ledger().total();
  rec.completed = world.task_count() == 0;
  long audit = 0;
  for (const auto& [id, c] : world.ledger().per_agent) audit += c;
  if (audit != rec.total_cost) throw ProtocolError("cost ledger does not reconcile with per-agent moves");
  hash.mix(static_cast<std::uint64_t>(rec.total_cost));
  rec.trajectory_hash = hash.value();
  return rec;
}

}  // namespace dmar
