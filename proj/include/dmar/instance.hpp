#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "core.hpp"
#include "grid.hpp"
#include "rng.hpp"

namespace dmar {

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line) : std::runtime_error(format(what, line)), line_(line) {}
  int line() const { return line_; }

 private:
  static std::string format(const std::string& what, int line) {
    return line > 0 ? "line " + std::to_string(line) + ": " + what : what;
  }
  int line_;
};

class FormatVersionError : public ParseError {
 public:
  using ParseError::ParseError;
};

inline constexpr int kInstanceFormatVersion = 1;

struct Instance {
  int width = 0;
  int height = 0;
  std::set<Position> obstacles;
  std::set<Position> tasks;
  std::map<AgentId, Position> agents;
  std::uint64_t seed = 0;
  std::string ratio;  // optional tag such as "1:1"

  GridWorld make_world() const {
    GridWorld w(width, height);
    for (Position o : obstacles) w.add_obstacle(o);
    for (Position t : tasks) w.add_task(t);
    for (const auto& [id, p] : agents) w.place_agent(id, p);
    return w;
  }

  friend bool operator==(const Instance&, const Instance&) = default;
};

struct Validation {
  bool solvable = true;
  std::string reason;
};

// Solvable iff every task and every agent lie in one connected free component.
inline Validation validate(const Instance& inst) {
  auto inside = [&](Position p) { return p.x >= 0 && p.y >= 0 && p.x < inst.width && p.y < inst.height; };
  for (Position t : inst.tasks) {
    if (!inside(t)) return {false, "task out of bounds"};
    if (inst.obstacles.contains(t)) return {false, "task on an obstacle"};
  }
  for (const auto& [id, p] : inst.agents) {
    if (!inside(p)) return {false, "agent " + std::to_string(id) + " out of bounds"};
    if (inst.obstacles.contains(p)) return {false, "agent " + std::to_string(id) + " on an obstacle"};
  }
  if (inst.agents.empty()) return {inst.tasks.empty(), inst.tasks.empty() ? "" : "tasks but no agents"};
  std::set<Position> comp{inst.agents.begin()->second};
  std::deque<Position> q{inst.agents.begin()->second};
  while (!q.empty()) {
    const Position u = q.front();
    q.pop_front();
    for (Control c : kMoveControls) {
      const Position v = step(u, c);
      if (inside(v) && !inst.obstacles.contains(v) && comp.insert(v).second) q.push_back(v);
    }
  }
  for (const auto& [id, p] : inst.agents)
    if (!comp.contains(p)) return {false, "agent " + std::to_string(id) + " cut off from agent " +
                                              std::to_string(inst.agents.begin()->first)};
  for (Position t : inst.tasks)
    if (!comp.contains(t))
      return {false, "task (" + std::to_string(t.x) + "," + std::to_string(t.y) + ") unreachable"};
  return {};
}

struct GenerateParams {
  int side = 10;
  double obstacle_frac = 0.2;
  int n_agents = 10;
  int n_tasks = 10;
  std::uint64_t seed = 0;
  bool collision_mode = false;
  int max_attempts = 1000;
  std::string ratio;
};

// Uniform obstacles (exact count), then agents and tasks on uniform free cells; tasks are
// distinct and avoid agent cells; agents are distinct only in collision mode. Topologies
// failing validation are redrawn with derived seeds.
inline Instance generate(const GenerateParams& gp) {
  if (gp.side < 2) throw ParameterError("generate: side must be >= 2");
  if (gp.obstacle_frac < 0.0 || gp.obstacle_frac >= 1.0) throw ParameterError("generate: obstacle_frac must be in [0,1)");
  if (gp.n_agents < 1 || gp.n_tasks < 0) throw ParameterError("generate: bad agent/task counts");
  const int N = gp.side * gp.side;
  const int n_obs = static_cast<int>(gp.obstacle_frac * N);
  const int n_free = N - n_obs;
  const int need = gp.n_tasks + (gp.collision_mode ? gp.n_agents : 1);
  if (need > n_free) throw ParameterError("generate: not enough free cells for agents and tasks");
  for (int attempt = 0; attempt < gp.max_attempts; ++attempt) {
    CounterRng rng(derive_seed(gp.seed, {attempt}));
    Instance inst;
    inst.width = inst.height = gp.side;
    inst.seed = gp.seed;
    inst.ratio = gp.ratio;
    auto to_pos = [&](int idx) { return Position{idx % gp.side, idx / gp.side}; };
    std::vector<char> blocked(static_cast<std::size_t>(N), 0);
    for (int idx : rng.sample_without_replacement(N, n_obs)) {
      blocked[static_cast<std::size_t>(idx)] = 1;
      inst.obstacles.insert(to_pos(idx));
    }
    std::vector<int> free;
    for (int idx = 0; idx < N; ++idx)
      if (!blocked[static_cast<std::size_t>(idx)]) free.push_back(idx);
    std::set<int> agent_cells;
    if (gp.collision_mode) {
      for (int j : rng.sample_without_replacement(static_cast<int>(free.size()), gp.n_agents))
        agent_cells.insert(free[static_cast<std::size_t>(j)]);
      int id = 1;
      for (int j : agent_cells) inst.agents.emplace(id++, to_pos(j));
    } else {
      for (int id = 1; id <= gp.n_agents; ++id) {
        const int j = free[static_cast<std::size_t>(rng.uniform(free.size()))];
        agent_cells.insert(j);
        inst.agents.emplace(id, to_pos(j));
      }
    }
    std::vector<int> task_pool;
    for (int idx : free)
      if (!agent_cells.contains(idx)) task_pool.push_back(idx);
    if (gp.n_tasks > static_cast<int>(task_pool.size())) continue;
    for (int j : rng.sample_without_replacement(static_cast<int>(task_pool.size()), gp.n_tasks))
      inst.tasks.insert(to_pos(task_pool[static_cast<std::size_t>(j)]));
    if (validate(inst).solvable) return inst;
  }
  throw GenerationError("generate: no connected topology after " + std::to_string(gp.max_attempts) +
                        " attempts (side " + std::to_string(gp.side) + ", seed " + std::to_string(gp.seed) + ")");
}

// Line-oriented text: a header of `key value` lines, then `O x y`, `T x y` and `A id x y`
// records, each group sorted.
inline std::string serialize(const Instance& inst) {
  std::ostringstream os;
  os << "format " << kInstanceFormatVersion << "\n";
  os << "width " << inst.width << "\n";
  os << "height " << inst.height << "\n";
  os << "seed " << inst.seed << "\n";
  if (!inst.ratio.empty()) os << "ratio " << inst.ratio << "\n";
  for (Position o : inst.obstacles) os << "O " << o.x << " " << o.y << "\n";
  for (Position t : inst.tasks) os << "T " << t.x << " " << t.y << "\n";
  for (const auto& [id, p] : inst.agents) os << "A " << id << " " << p.x << " " << p.y << "\n";
  return os.str();
}

inline Instance deserialize(std::istream& in) {
  Instance inst;
  std::optional<int> version;
  std::optional<int> width;
  std::optional<int> height;
  std::optional<std::uint64_t> seed;
  std::string line;
  int lineno = 0;
  auto ints = [&](std::istringstream& ls, int count, const std::string& what) {
    std::vector<long long> v;
    for (int i = 0; i < count; ++i) {
      long long x = 0;
      if (!(ls >> x)) throw ParseError(what + ": expected " + std::to_string(count) + " integers", lineno);
      v.push_back(x);
    }
    std::string extra;
    if (ls >> extra) throw ParseError(what + ": trailing field '" + extra + "'", lineno);
    return v;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "format") {
      version = static_cast<int>(ints(ls, 1, "format")[0]);
      if (*version != kInstanceFormatVersion)
        throw FormatVersionError("unsupported instance format version " + std::to_string(*version), lineno);
    } else if (!version) {
      throw ParseError("missing required field 'format' before '" + tag + "'", lineno);
    } else if (tag == "width") {
      width = static_cast<int>(ints(ls, 1, "width")[0]);
    } else if (tag == "height") {
      height = static_cast<int>(ints(ls, 1, "height")[0]);
    } else if (tag == "seed") {
      std::uint64_t s = 0;
      if (!(ls >> s)) throw ParseError("seed: expected an unsigned integer", lineno);
      seed = s;
    } else if (tag == "ratio") {
      if (!(ls >> inst.ratio)) throw ParseError("ratio: missing value", lineno);
    } else if (tag == "O" || tag == "T" || tag == "A") {
      if (!width || !height) throw ParseError(std::string("missing required field '") + (width ? "height" : "width") + "' before records", lineno);
      const auto v = ints(ls, tag == "A" ? 3 : 2, tag);
      const Position p{static_cast<int>(v[v.size() - 2]), static_cast<int>(v.back())};
      if (p.x < 0 || p.y < 0 || p.x >= *width || p.y >= *height) throw ParseError(tag + ": position out of bounds", lineno);
      if (tag == "O") inst.obstacles.insert(p);
      if (tag == "T") inst.tasks.insert(p);
      if (tag == "A" && !inst.agents.emplace(static_cast<AgentId>(v[0]), p).second)
        throw ParseError("A: duplicate agent id " + std::to_string(v[0]), lineno);
    } else {
      throw ParseError("unknown record '" + tag + "'", lineno);
    }
  }
  if (!version) throw ParseError("missing required field 'format'", 0);
  if (!width) throw ParseError("missing required field 'width'", 0);
  if (!height) throw ParseError("missing required field 'height'", 0);
  if (!seed) throw ParseError("missing required field 'seed'", 0);
  if (*width < 1 || *height < 1) throw ParseError("width and height must be positive", 0);
  inst.width = *width;
  inst.height = *height;
  inst.seed = *seed;
  return inst;
}

inline Instance deserialize(const std::string& text) {
  std::istringstream in(text);
  return deserialize(in);
}

}  // namespace dmar
