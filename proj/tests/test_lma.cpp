#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace dmar;

namespace {

// Agents on a row, linked into a chain rooted at the first one.
struct Chain {
  GridWorld world;
  AgentSet agents;

  Chain(int n, int k, ViewMode mode = ViewMode::Hop) : world(n + 4, 5) {
    for (int i = 0; i < n; ++i) world.place_agent(i + 1, {i + 2, 2});
    agents = AgentSet(world);
    agents.observe(world, k, mode);
    for (int i = 1; i <= n; ++i) {
      AgentState& s = agents.at(i);
      s.cluster_id = 1;
      s.depth = i - 1;
      if (i > 1) s.parent = i - 1;
      if (i < n) s.children = {i + 1};
    }
  }
};

std::vector<AgentId> iota_ids(int n) {
  std::vector<AgentId> v;
  for (int i = 1; i <= n; ++i) v.push_back(i);
  return v;
}

}  // namespace

TEST(InitMap, ViewInOwnFrame) {
  GridWorld w(5, 5);
  w.add_obstacle({3, 2});
  w.add_task({2, 3});
  w.place_agent(1, {2, 2});
  w.place_agent(2, {1, 2});
  w.place_agent(3, {2, 1});
  const View v = compute_view(w, {2, 2}, 1, ViewMode::Hop);
  const LocalMap m = init_map(v, [](AgentId id) { return id != 3; });
  EXPECT_EQ(m.cells.size(), 5u);
  EXPECT_EQ(m.cells.at({1, 0}), CellKind::Obstacle);
  EXPECT_EQ(m.cells.at({0, 0}), CellKind::Free);
  EXPECT_EQ(m.tasks, (std::set<Position>{{0, 1}}));
  EXPECT_EQ(m.member_agents, (std::map<AgentId, Position>{{1, {0, 0}}, {2, {-1, 0}}}));
}

TEST(MergeMaps, AlignsOnReferenceAgent) {
  LocalMap base;
  base.cells = {{{0, 0}, CellKind::Free}};
  base.member_agents = {{1, {0, 0}}, {2, {1, 1}}};
  LocalMap inc;
  inc.cells = {{{0, 0}, CellKind::Free}, {{1, 0}, CellKind::Obstacle}};
  inc.tasks = {{0, -1}};
  inc.member_agents = {{2, {0, 0}}, {5, {-1, 0}}};
  const LocalMap m = merge_maps(base, inc, 2);
  EXPECT_EQ(m.cells.size(), 3u);
  EXPECT_EQ(m.cells.at({2, 1}), CellKind::Obstacle);
  EXPECT_EQ(m.tasks, (std::set<Position>{{1, 0}}));
  EXPECT_EQ(m.member_agents.at(5), (Position{0, 1}));
  EXPECT_EQ(translate(translate(m, {3, -4}), {-3, 4}), m);
}

TEST(MergeMaps, InconsistentInputsAreRejected) {
  LocalMap base;
  base.cells = {{{1, 0}, CellKind::Free}};
  base.member_agents = {{1, {0, 0}}, {4, {5, 5}}};
  LocalMap inc;
  inc.cells = {{{1, 0}, CellKind::Obstacle}};
  inc.member_agents = {{1, {0, 0}}};
  EXPECT_THROW(merge_maps(base, inc, 1), ProtocolError);
  inc.cells.clear();
  EXPECT_THROW(merge_maps(base, inc, 9), ProtocolError);
  inc.member_agents[4] = {0, 5};
  EXPECT_THROW(merge_maps(base, inc, 1), ProtocolError);
}

TEST(RunLma, SingletonKeepsOwnView) {
  GridWorld w(7, 7);
  w.add_task({3, 4});
  w.add_obstacle({4, 3});
  w.place_agent(1, {3, 3});
  AgentSet agents(w);
  agents.observe(w, 2, ViewMode::Hop);
  ProtocolParams p;
  p.psi = 4;
  run_soac(agents, p);
  run_lma(agents, p);
  EXPECT_EQ(agents.at(1).local_map, init_map(agents.view(0)));
}

TEST(RunLma, ChainOfHeightLMatchesUnion) {
  ProtocolParams p;
  p.psi = 4;  // L = 3
  Chain c(4, 1);
  c.world.add_task({5, 3});  // seen only by the deepest agent
  c.agents.observe(c.world, 1, ViewMode::Hop);
  run_lma(c.agents, p);
  EXPECT_EQ(c.agents.at(1).local_map, oracle::omniscient_union(c.world, iota_ids(4), 1, 1, ViewMode::Hop));
  EXPECT_TRUE(c.agents.at(1).local_map.tasks.contains({3, 1}));
}

TEST(RunLma, FuzzLeaderMapIsUnionOfMemberViews) {
  CounterRng rng(8080);
  int multi = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    oracle::RandomWorldSpec spec;
    spec.side_lo = 6;
    spec.side_hi = 16;
    spec.agents_lo = 3;
    spec.agents_hi = 25;
    spec.tasks_lo = 1;
    spec.tasks_hi = 8;
    GridWorld w = oracle::random_world(rng, spec);
    ProtocolParams p;
    p.psi = trial % 3 == 0 ? 8 : 4;
    p.k = 1 + static_cast<int>(rng.uniform(4));
    p.view_mode = static_cast<ViewMode>(rng.uniform(3));
    AgentSet agents(w);
    agents.observe(w, p.k, p.view_mode);
    const SoacResult r = run_soac(agents, p);
    run_lma(agents, p);
    const int L = tree_height_bound(p.psi);
    for (const Cluster& c : r.clusters) {
      multi += c.members.size() > 1;
      const LocalMap& got = agents.at(c.leader).local_map;
      ASSERT_EQ(got, oracle::omniscient_union(w, c.members, c.leader, p.k, p.view_mode)) << "trial " << trial;
      for (const auto& [q, kind] : got.cells) ASSERT_LE(std::abs(q.x) + std::abs(q.y), p.k * (L + 1));
    }
  }
  EXPECT_GT(multi, 300);
}

TEST(Prune, UnreachableTasksAreDropped) {
  LocalMap m;
  for (int x = 0; x < 5; ++x) m.cells[{x, 0}] = x == 2 ? CellKind::Obstacle : CellKind::Free;
  m.tasks = {{1, 0}, {4, 0}};
  m.member_agents = {{1, {0, 0}}};
  PruneResult r = prune_or_dissolve(m, 1);
  EXPECT_FALSE(r.dissolve);
  EXPECT_EQ(r.map.tasks, (std::set<Position>{{1, 0}}));

  // A second member beyond the wall keeps the far task alive.
  m.member_agents[2] = {3, 0};
  r = prune_or_dissolve(m, 1);
  EXPECT_EQ(r.map.tasks.size(), 2u);
  EXPECT_TRUE(r.released.empty());
}

TEST(Prune, NoReachableTaskDissolves) {
  LocalMap m;
  for (int x = 0; x < 4; ++x) m.cells[{x, 0}] = x == 1 ? CellKind::Obstacle : CellKind::Free;
  m.tasks = {{3, 0}};
  m.member_agents = {{1, {0, 0}}};
  const PruneResult r = prune_or_dissolve(m, 1);
  EXPECT_TRUE(r.dissolve);
  EXPECT_TRUE(r.map.tasks.empty());
  m.member_agents.clear();
  EXPECT_THROW(prune_or_dissolve(m, 1), ContractViolation);
}

TEST(Prune, DepotModeReleasesCutOffMembers) {
  LocalMap m;
  for (int x = 0; x < 5; ++x) m.cells[{x, 0}] = x == 2 ? CellKind::Obstacle : CellKind::Free;
  m.tasks = {{1, 0}, {4, 0}};
  m.member_agents = {{1, {0, 0}}, {2, {3, 0}}};
  const PruneResult r = prune_or_dissolve(m, 1, true);
  EXPECT_EQ(r.released, (std::vector<AgentId>{2}));
  EXPECT_EQ(r.map.tasks, (std::set<Position>{{1, 0}}));
  EXPECT_FALSE(r.map.member_agents.contains(2));
}

TEST(Dissolve, WaveClearsChainWithinLSteps) {
  for (int psi : {3, 4, 8}) {
    const int L = tree_height_bound(psi);
    Chain c(L + 1, 1);
    start_dissolve(c.agents, 1);
    EXPECT_FALSE(c.agents.at(1).clustered());
    for (int s = 0; s < L; ++s) {
      // Depth d is still clustered until step d.
      ASSERT_TRUE(c.agents.at(L + 1).clustered()) << psi << " step " << s;
      dissolve_step(c.agents);
    }
    for (AgentId id : iota_ids(L + 1)) {
      EXPECT_FALSE(c.agents.at(id).clustered()) << id;
      EXPECT_FALSE(c.agents.at(id).msg_flag) << id;
    }
    EXPECT_NO_THROW(collect_clusters(c.agents));
  }
}

TEST(Dissolve, OnlyLeadersStartTheWave) {
  Chain c(3, 1);
  EXPECT_THROW(start_dissolve(c.agents, 2), ContractViolation);
}

TEST(Dissolve, OtherClustersAreUntouched) {
  Chain c(3, 1);
  c.world.place_agent(9, {0, 0});
  AgentSet agents(c.world);
  agents.observe(c.world, 1, ViewMode::Hop);
  for (int i = 1; i <= 3; ++i) agents.at(i) = c.agents.at(i);
  agents.at(9).cluster_id = 9;
  start_dissolve(agents, 1);
  for (int s = 0; s < 3; ++s) dissolve_step(agents);
  EXPECT_TRUE(agents.at(9).is_leader());
  EXPECT_EQ(unassigned_agents(agents), (std::vector<AgentId>{1, 2, 3}));
}
