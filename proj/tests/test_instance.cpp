#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace dmar;

namespace {

GenerateParams protocol(int side, int tasks, std::uint64_t seed) {
  GenerateParams gp;
  gp.side = side;
  gp.n_agents = side;
  gp.n_tasks = tasks;
  gp.seed = seed;
  return gp;
}

}  // namespace

TEST(Generate, ExactObstacleCountAndAgentCount) {
  const Instance inst = generate(protocol(10, 10, 1));
  EXPECT_EQ(inst.obstacles.size(), 20u);
  EXPECT_EQ(inst.agents.size(), 10u);
  EXPECT_EQ(inst.tasks.size(), 10u);
  for (AgentId id = 1; id <= 10; ++id) EXPECT_TRUE(inst.agents.contains(id));
}

TEST(Generate, RatiosGiveTaskCounts) {
  EXPECT_EQ(tasks_for(Ratio::OneToTwo, 10), 20);
  EXPECT_EQ(tasks_for(Ratio::OneToOne, 10), 10);
  EXPECT_EQ(tasks_for(Ratio::TwoToOne, 10), 5);
  const Instance inst = protocol_instance(9, 10, Ratio::OneToTwo, 0, 0.2, false);
  EXPECT_EQ(inst.tasks.size(), 20u);
  EXPECT_EQ(inst.agents.size(), 10u);
  EXPECT_EQ(inst.ratio, "1:2");
}

TEST(Generate, PureFunctionOfParameters) {
  EXPECT_EQ(generate(protocol(12, 6, 77)), generate(protocol(12, 6, 77)));
  EXPECT_NE(generate(protocol(12, 6, 77)), generate(protocol(12, 6, 78)));
}

TEST(Generate, EveryInstanceValidatesAndKeepsCategoriesApart) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    GenerateParams gp = protocol(6 + static_cast<int>(seed % 10), 8, seed);
    gp.collision_mode = seed % 2 == 0;
    const Instance inst = generate(gp);
    ASSERT_TRUE(validate(inst).solvable) << seed;
    std::set<Position> agent_cells;
    for (const auto& [id, p] : inst.agents) {
      ASSERT_FALSE(inst.obstacles.contains(p));
      ASSERT_FALSE(inst.tasks.contains(p));
      agent_cells.insert(p);
    }
    for (Position t : inst.tasks) ASSERT_FALSE(inst.obstacles.contains(t));
    if (gp.collision_mode) {
      ASSERT_EQ(agent_cells.size(), inst.agents.size()) << seed;
    }
  }
}

TEST(Generate, RetryBudgetExhaustion) {
  GenerateParams gp = protocol(6, 5, 3);
  gp.obstacle_frac = 0.55;
  gp.max_attempts = 3;
  EXPECT_THROW(generate(gp), GenerationError);
  gp.max_attempts = 0;
  gp.obstacle_frac = 0.0;
  EXPECT_THROW(generate(gp), GenerationError);
}

TEST(Generate, ParameterErrors) {
  EXPECT_THROW(generate(protocol(1, 1, 0)), ParameterError);
  EXPECT_THROW(generate(protocol(3, 20, 0)), ParameterError);
}

TEST(Validate, Examples) {
  Instance open;
  open.width = open.height = 4;
  open.tasks = {{3, 3}};
  open.agents = {{1, {0, 0}}};
  EXPECT_TRUE(validate(open).solvable);

  Instance boxed = open;
  boxed.tasks = {{2, 2}};
  boxed.obstacles = {{1, 2}, {3, 2}, {2, 1}, {2, 3}};
  const Validation v = validate(boxed);
  EXPECT_FALSE(v.solvable);
  EXPECT_NE(v.reason.find("unreachable"), std::string::npos);

  // Wall at x = 2 splits agents and tasks into two components.
  Instance split;
  split.width = 5;
  split.height = 3;
  for (int y = 0; y < 3; ++y) split.obstacles.insert({2, y});
  split.agents = {{1, {0, 0}}, {2, {4, 0}}};
  split.tasks = {{1, 1}, {3, 1}};
  EXPECT_FALSE(validate(split).solvable);
}

TEST(Serialize, FuzzRoundTripIsByteStable) {
  CounterRng rng(404);
  for (int trial = 0; trial < 1000; ++trial) {
    GenerateParams gp = protocol(3 + static_cast<int>(rng.uniform(12)), 0, rng.next_u64());
    gp.n_agents = 1 + static_cast<int>(rng.uniform(6));
    gp.n_tasks = static_cast<int>(rng.uniform(6));
    gp.obstacle_frac = 0.1;
    if (trial % 3 == 0) gp.ratio = "1:1";
    const Instance inst = generate(gp);
    const std::string text = serialize(inst);
    const Instance back = deserialize(text);
    ASSERT_EQ(back, inst);
    ASSERT_EQ(serialize(back), text);
  }
}

TEST(Serialize, DocumentedGrammar) {
  const std::string text =
      "format 1\nwidth 3\nheight 2\nseed 42\nratio 1:2\n# comment\nO 1 0\nT 2 1\nA 7 0 0\nA 8 0 0\n";
  const Instance inst = deserialize(text);
  EXPECT_EQ(inst.width, 3);
  EXPECT_EQ(inst.height, 2);
  EXPECT_EQ(inst.seed, 42u);
  EXPECT_EQ(inst.ratio, "1:2");
  EXPECT_EQ(inst.obstacles, (std::set<Position>{{1, 0}}));
  EXPECT_EQ(inst.tasks, (std::set<Position>{{2, 1}}));
  EXPECT_EQ(inst.agents.size(), 2u);
}

TEST(Serialize, MissingFieldIsNamed) {
  try {
    deserialize("format 1\nwidth 3\nseed 1\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("'height'"), std::string::npos) << e.what();
  }
  try {
    deserialize("format 1\nwidth 3\nheight 3\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("'seed'"), std::string::npos) << e.what();
  }
}

TEST(Serialize, UnknownVersionIsExplicit) {
  EXPECT_THROW(deserialize("format 2\nwidth 3\nheight 3\nseed 1\n"), FormatVersionError);
}

TEST(Serialize, MalformedLinesCarryLineNumbers) {
  try {
    deserialize("format 1\nwidth 3\nheight 3\nseed 1\nT 1\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 5);
  }
  EXPECT_THROW(deserialize("format 1\nwidth 3\nheight 3\nseed 1\nT 5 5\n"), ParseError);
  EXPECT_THROW(deserialize("format 1\nwidth 3\nheight 3\nseed 1\nQ 1 1\n"), ParseError);
  EXPECT_THROW(deserialize("format 1\nwidth 3\nheight 3\nseed 1\nA 1 0 0\nA 1 1 1\n"), ParseError);
  EXPECT_THROW(deserialize("format 1\nwidth 3\nheight 3\nseed 1\nO 1 1 junk\n"), ParseError);
}
