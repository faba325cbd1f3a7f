#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace dmar;

namespace {

ControlSequence seq(AgentId id, const std::string& s) {
  ControlSequence out{id, {}};
  for (char ch : s) out.controls.push_back(control_from_char(ch));
  return out;
}

EmConfig em_config(long lambda, int k = 1, bool stop_when_done = true) {
  EmConfig c;
  c.lambda = lambda;
  c.k = k;
  c.stop_when_done = stop_when_done;
  return c;
}

struct Stage {
  GridWorld world;
  AgentSet agents;

  explicit Stage(GridWorld w, int k = 1) : world(std::move(w)), agents(world) { agents.observe(world, k, ViewMode::Hop); }
  void give(AgentId id, const std::string& s) { agents.at(id).plan = seq(id, s); }
};

GridWorld open_world(int w, int h, std::map<AgentId, Position> agents, std::set<Position> tasks = {}) {
  GridWorld g(w, h);
  for (Position t : tasks) g.add_task(t);
  for (const auto& [id, p] : agents) g.place_agent(id, p);
  return g;
}

// A chain 1 <- 2 <- ... <- n along a row, rooted at 1.
void link_chain(AgentSet& a, int n) {
  for (int i = 1; i <= n; ++i) {
    AgentState& s = a.at(i);
    s.cluster_id = 1;
    s.depth = i - 1;
    if (i > 1) s.parent = i - 1;
    if (i < n) s.children = {i + 1};
  }
}

}  // namespace

TEST(Broadcast, SingletonLeaderTakesItsOwnPlan) {
  Stage s(open_world(4, 4, {{1, {0, 0}}}));
  s.agents.at(1).cluster_id = 1;
  const long steps = broadcast_plans(s.agents, {{1, PlanSet{{1, seq(1, "EN")}}}}, 3);
  EXPECT_EQ(steps, 4);
  EXPECT_EQ(s.agents.at(1).plan, seq(1, "EN"));
}

TEST(Broadcast, ReachesDepthLAndNoFurther) {
  const int L = 3;
  {
    Stage s(open_world(10, 3, {{1, {0, 1}}, {2, {1, 1}}, {3, {2, 1}}, {4, {3, 1}}}));
    link_chain(s.agents, L + 1);
    PlanSet R;
    for (AgentId id = 1; id <= 4; ++id) R[id] = seq(id, "N");
    broadcast_plans(s.agents, {{1, R}}, L);
    for (AgentId id = 1; id <= 4; ++id) EXPECT_EQ(s.agents.at(id).plan, R.at(id)) << id;
  }
  {
    Stage s(open_world(10, 3, {{1, {0, 1}}, {2, {1, 1}}, {3, {2, 1}}, {4, {3, 1}}, {5, {4, 1}}}));
    link_chain(s.agents, L + 2);
    PlanSet R;
    for (AgentId id = 1; id <= 5; ++id) R[id] = seq(id, "N");
    EXPECT_THROW(broadcast_plans(s.agents, {{1, R}}, L), ProtocolError);
  }
}

TEST(Broadcast, FuzzEveryMemberGetsItsSequence) {
  CounterRng rng(1212);
  for (int trial = 0; trial < 300; ++trial) {
    oracle::RandomWorldSpec spec;
    spec.side_lo = 8;
    spec.side_hi = 16;
    spec.agents_lo = 4;
    spec.agents_hi = 30;
    GridWorld w = oracle::random_world(rng, spec);
    ProtocolParams p;
    p.psi = trial % 2 ? 8 : 4;
    p.k = 1 + static_cast<int>(rng.uniform(4));
    AgentSet agents(w);
    agents.observe(w, p.k, p.view_mode);
    const SoacResult r = run_soac(agents, p);
    std::map<AgentId, PlanSet> plans;
    for (const Cluster& c : r.clusters)
      for (AgentId m : c.members) plans[c.leader][m] = ControlSequence{m, std::vector<Control>(static_cast<std::size_t>(m % 5), Control::Wait)};
    broadcast_plans(agents, plans, tree_height_bound(p.psi));
    for (const AgentState& a : agents.states()) {
      if (a.clustered()) {
        ASSERT_TRUE(a.plan);
        ASSERT_EQ(a.plan->agent, a.id);
        ASSERT_EQ(static_cast<int>(a.plan->controls.size()), a.id % 5);
      } else {
        ASSERT_FALSE(a.plan);
      }
    }
  }
}

TEST(ExecuteEm, ExplorerThatSeesATaskStaysPut) {
  Stage s(open_world(6, 6, {{1, {0, 0}}}, {{1, 0}}));
  const EmOutcome o = execute_em(s.world, s.agents, em_config(20));
  EXPECT_EQ(o.moves_exploration, 0);
  EXPECT_EQ(o.halted_explorers, (std::vector<AgentId>{1}));
  EXPECT_EQ(o.steps, 20);
  EXPECT_EQ(o.fast_forwarded, 20);
}

TEST(ExecuteEm, PlannedMoveThenWaitsCostsOne) {
  Stage s(open_world(6, 6, {{1, {0, 0}}}, {{1, 0}, {5, 5}}));
  s.give(1, "Ewwww");
  const EmOutcome o = execute_em(s.world, s.agents, em_config(10));
  EXPECT_EQ(o.moves_cluster, 1);
  EXPECT_EQ(o.tasks_completed, 1);
  EXPECT_EQ(o.steps, 10);
  EXPECT_EQ(o.fast_forwarded, 9);
}

TEST(ExecuteEm, SharedTaskIsCompletedOnce) {
  Stage s(open_world(5, 3, {{1, {1, 1}}, {2, {3, 1}}}, {{2, 1}, {0, 0}}));
  s.give(1, "E");
  s.give(2, "W");
  const EmOutcome o = execute_em(s.world, s.agents, em_config(4));
  EXPECT_EQ(o.tasks_completed, 1);
  EXPECT_EQ(o.moves_cluster, 2);
  EXPECT_EQ(s.world.task_count(), 1);
}

TEST(ExecuteEm, HaltingLatchesForTheRound) {
  Stage s(open_world(6, 3, {{1, {2, 0}}, {2, {0, 0}}}, {{1, 0}, {5, 2}}));
  s.give(1, "W");
  const EmOutcome o = execute_em(s.world, s.agents, em_config(10, 1, false));
  EXPECT_EQ(o.moves_exploration, 0);  // the task 2 saw is gone after step 0, 2 still waits
  EXPECT_EQ(o.halted_explorers, (std::vector<AgentId>{2}));
  EXPECT_EQ(s.world.agent_position(2), (Position{0, 0}));
}

TEST(ExecuteEm, StopsWhenLastTaskIsDone) {
  Stage s(open_world(6, 3, {{1, {0, 0}}, {2, {5, 2}}}, {{1, 0}}), 1);
  s.give(1, "E");
  const EmOutcome o = execute_em(s.world, s.agents, em_config(50));
  EXPECT_TRUE(o.stopped_early);
  EXPECT_EQ(o.steps, 1);
}

TEST(ExecuteEm, ExplorerWalkMatchesKeyedDraws) {
  GridWorld w = open_world(40, 40, {{3, {5, 5}}}, {{39, 39}});
  w.add_obstacle({6, 5});
  Stage s(std::move(w));
  EmConfig cfg = em_config(12);
  cfg.master_seed = 4242;
  cfg.round_index = 7;
  const EmOutcome o = execute_em(s.world, s.agents, cfg);
  // Independent replay: canonical feasible moves, keyed draw per step.
  Position p{5, 5};
  for (int t = 0; t < 12; ++t) {
    std::vector<Control> feas;
    for (Control c : kMoveControls) {
      const Position q = step(p, c);
      if (q.x >= 0 && q.y >= 0 && q.x < 40 && q.y < 40 && q != Position{6, 5}) feas.push_back(c);
    }
    p = step(p, rand_control(4242, 3, 7, t, feas));
  }
  EXPECT_EQ(s.world.agent_position(3), p);
  EXPECT_EQ(o.moves_exploration, 12);
}

TEST(ExecuteEm, IllegalPlannedMoveIsAProtocolError) {
  GridWorld w = open_world(3, 3, {{1, {0, 0}}}, {{2, 2}});
  w.add_obstacle({1, 0});
  Stage s(std::move(w));
  s.give(1, "E");
  EXPECT_THROW(execute_em(s.world, s.agents, em_config(3)), ProtocolError);
}

TEST(Gci, LeaderOnlyWalksBack) {
  LocalMap m;
  for (int x = 0; x < 4; ++x) m.cells[{x, 0}] = CellKind::Free;
  m.member_agents = {{1, {0, 0}}};
  const PlanSet out = gci_augment({{1, seq(1, "EE")}}, m, {0, 0});
  EXPECT_EQ(to_string(out.at(1)), "EEWW");
  EXPECT_EQ(to_string(gci_augment({{1, seq(1, "EE")}}, m, {0, 0}, 6).at(1)), "EEWWww");
}

TEST(Gci, TwoHopMemberWithEmptyPlan) {
  LocalMap m;
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x) m.cells[{x, y}] = x == 1 && y == 1 ? CellKind::Obstacle : CellKind::Free;
  m.member_agents = {{1, {0, 0}}, {2, {2, 0}}, {3, {0, 2}}};
  const PlanSet out = gci_augment({{1, seq(1, "")}, {2, seq(2, "")}, {3, seq(3, "")}}, m, {0, 0});
  EXPECT_EQ(to_string(out.at(1)), "");
  EXPECT_EQ(to_string(out.at(2)), "WW");
  EXPECT_EQ(to_string(out.at(3)), "SS");
  m.member_agents[4] = {9, 9};
  EXPECT_THROW(gci_augment({{5, seq(5, "")}}, m, {0, 0}), ContractViolation);
}

TEST(Gci, FuzzEveryMemberEndsAtTheDepot) {
  CounterRng rng(606);
  for (int trial = 0; trial < 200; ++trial) {
    oracle::RandomWorldSpec spec;
    spec.side_lo = 5;
    spec.side_hi = 10;
    spec.agents_hi = 5;
    spec.tasks_hi = 6;
    const GridWorld w = oracle::random_world(rng, spec);
    const LocalMap m = oracle::planning_map(w);
    if (m.tasks.empty()) continue;
    const Position depot = m.member_agents.begin()->second;
    PlannerConfig cfg;
    cfg.depot = depot;
    const PlanSet R = gci_augment(TeamPlanner(m, cfg).plan(true).plans, m, depot);
    for (const auto& [id, sq] : R) {
      Position p = m.member_agents.at(id);
      for (Control c : sq.controls) {
        p = step(p, c);
        ASSERT_TRUE(m.is_free(p));
      }
      ASSERT_EQ(p, depot) << trial;
    }
  }
}

TEST(CollisionEm, HeadOnSwapIsRefused) {
  Stage s(open_world(4, 1, {{1, {0, 0}}, {2, {1, 0}}}, {{3, 0}}));
  s.give(1, "E");
  s.give(2, "W");
  const EmOutcome o = collision_em(s.world, s.agents, em_config(5));
  EXPECT_EQ(o.moves_cluster, 0);
  EXPECT_EQ(s.world.agent_position(1), (Position{0, 0}));
  EXPECT_EQ(s.world.agent_position(2), (Position{1, 0}));
  EXPECT_EQ(o.finalized, (std::vector<AgentId>{2, 1}));
}

TEST(CollisionEm, AgentEndingOnACellWinsIt) {
  Stage s(open_world(4, 3, {{1, {0, 0}}, {2, {1, 1}}}, {{3, 2}}));
  s.give(1, "EE");
  s.give(2, "S");
  const EmOutcome o = collision_em(s.world, s.agents, em_config(5));
  EXPECT_EQ(s.world.agent_position(2), (Position{1, 0}));
  EXPECT_EQ(s.world.agent_position(1), (Position{0, 0}));
  EXPECT_EQ(o.finalized, (std::vector<AgentId>{1}));
  EXPECT_EQ(o.moves_cluster, 1);
}

TEST(CollisionEm, SameTargetSmallestIdWins) {
  Stage s(open_world(3, 3, {{1, {0, 1}}, {2, {2, 1}}}, {{0, 0}}));
  s.give(1, "EN");
  s.give(2, "WS");
  collision_em(s.world, s.agents, em_config(1, 1, false));
  EXPECT_EQ(s.world.agent_position(1), (Position{1, 1}));
  EXPECT_EQ(s.world.agent_position(2), (Position{2, 1}));
}

TEST(CollisionEm, RotationIsAllowed) {
  Stage s(open_world(3, 3, {{1, {0, 0}}, {2, {1, 0}}, {3, {1, 1}}, {4, {0, 1}}}, {{2, 2}}));
  s.give(1, "E");
  s.give(2, "N");
  s.give(3, "W");
  s.give(4, "S");
  const EmOutcome o = collision_em(s.world, s.agents, em_config(3));
  EXPECT_EQ(o.moves_cluster, 4);
  EXPECT_EQ(o.conflicts, 0);
  EXPECT_EQ(s.world.agent_position(1), (Position{1, 0}));
  EXPECT_EQ(s.world.agent_position(4), (Position{0, 0}));
}

TEST(CollisionEm, ExplorerRedrawsAroundPlannedAgent) {
  Stage s(open_world(3, 1, {{1, {2, 0}}, {2, {0, 0}}}));
  s.give(1, "W");
  EmConfig cfg = em_config(1, 1, false);
  const EmOutcome o = collision_em(s.world, s.agents, cfg);
  // 1 takes (1, 0); explorer 2's only move is blocked, so it stays.
  EXPECT_EQ(s.world.agent_position(1), (Position{1, 0}));
  EXPECT_EQ(s.world.agent_position(2), (Position{0, 0}));
  EXPECT_EQ(o.moves_exploration, 0);
}

TEST(CollisionEm, FuzzNeverCoLocates) {
  CounterRng rng(777);
  for (int trial = 0; trial < 300; ++trial) {
    oracle::RandomWorldSpec spec;
    spec.side_lo = 5;
    spec.side_hi = 10;
    spec.agents_lo = 2;
    spec.agents_hi = 8;
    spec.distinct_agents = true;
    GridWorld w = oracle::random_world(rng, spec);
    const LocalMap m = oracle::planning_map(w);
    AgentSet agents(w);
    agents.observe(w, 2, ViewMode::Hop);
    if (!m.tasks.empty()) {
      const PlanSet R = mar_plan(m, 4L * w.cell_count());
      for (const auto& [id, sq] : R) agents.at(id).plan = sq;
    }
    EmConfig cfg = em_config(60, 2, false);
    cfg.master_seed = static_cast<std::uint64_t>(trial);
    cfg.collision_mode = true;
    const EmOutcome o = collision_em(w, agents, cfg);  // throws on co-location
    ASSERT_EQ(o.moves_cluster + o.moves_exploration, w.ledger().total());
    std::set<Position> cells;
    for (const auto& [id, p] : w.agents()) ASSERT_TRUE(cells.insert(p).second);
  }
}

TEST(Tokens, LeftByGciRoundsAndClearedAtRoundEnd) {
  GridWorld w = open_world(8, 8, {{1, {1, 1}}, {2, {2, 1}}}, {{3, 1}, {1, 3}});
  w.set_token_mode(true);
  AgentSet agents(w);
  ProtocolParams p;
  p.psi = 4;
  p.k = 2;
  p.policy = Policy::DMAR_GCI;
  const RoundOutcome ro = run_round(w, agents, p, Schedule::make(p), 0);
  EXPECT_EQ(ro.tokens, (std::set<Position>{{3, 1}, {1, 3}}));
  EXPECT_TRUE(w.tokens().empty());
  EXPECT_EQ(w.task_count(), 0);
  // Both members walked back to the depot, the leader's start cell.
  EXPECT_EQ(w.agent_position(1), (Position{2, 1}));
  EXPECT_EQ(w.agent_position(2), (Position{2, 1}));
}
