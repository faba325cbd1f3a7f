#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "engine.hpp"
#include "instance.hpp"
#include "params.hpp"

namespace dmar {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kCsvHeader =
    "instance_id,seed,side,k,psi,ratio,policy,view_mode,total_cost,exploration_cost,cluster_cost,rounds,steps,"
    "mean_clusters_per_round,planner_time_ms,completed";

// Agents-to-tasks ratio of the instance protocol. Agents always number `side`.
enum class Ratio : std::uint8_t { OneToTwo, OneToOne, TwoToOne };

inline std::string to_string(Ratio r) {
  switch (r) {
    case Ratio::OneToTwo: return "1:2";
    case Ratio::OneToOne: return "1:1";
    case Ratio::TwoToOne: return "2:1";
  }
  return "?";
}

inline Ratio ratio_from_string(const std::string& s) {
  if (s == "1:2") return Ratio::OneToTwo;
  if (s == "1:1") return Ratio::OneToOne;
  if (s == "2:1") return Ratio::TwoToOne;
  throw ParameterError("unknown ratio '" + s + "' (expected 1:2, 1:1 or 2:1)");
}

inline int tasks_for(Ratio r, int n_agents) {
  switch (r) {
    case Ratio::OneToTwo: return 2 * n_agents;
    case Ratio::OneToOne: return n_agents;
    case Ratio::TwoToOne: return n_agents / 2;
  }
  return n_agents;
}

inline std::uint64_t instance_seed(std::uint64_t master, int side, Ratio ratio, int instance_index) {
  return derive_seed(master, {side, static_cast<int>(ratio), instance_index});
}

// Shared by every policy and view mode so paired comparisons see the same randomness.
inline std::uint64_t run_seed(std::uint64_t master, int side, int k, Ratio ratio, int instance_index, int run_index) {
  return derive_seed(master, {side, k, static_cast<int>(ratio), instance_index, run_index});
}

inline std::string instance_id(int side, Ratio ratio, int instance_index) {
  return "s" + std::to_string(side) + "-r" + to_string(ratio) + "-i" + std::to_string(instance_index);
}

inline Instance protocol_instance(std::uint64_t master, int side, Ratio ratio, int instance_index, double obstacle_frac,
                                  bool collision_mode) {
  GenerateParams gp;
  gp.side = side;
  gp.obstacle_frac = obstacle_frac;
  gp.n_agents = side;
  gp.n_tasks = tasks_for(ratio, side);
  gp.seed = instance_seed(master, side, ratio, instance_index);
  gp.collision_mode = collision_mode;
  gp.ratio = to_string(ratio);
  return generate(gp);
}

struct SweepSpec {
  std::vector<int> sides{10};
  std::vector<int> ks{4};
  std::vector<Ratio> ratios{Ratio::OneToOne};
  std::vector<Policy> policies{Policy::DMAR, Policy::BP};
  std::vector<ViewMode> view_modes{ViewMode::Hop};
  int instances = 1;
  int runs = 1;
  std::uint64_t master_seed = 1;
  LambdaMode lambda_mode{};
  int psi = 8;
  int children = 4;
  double obstacle_frac = 0.2;
  bool collision_mode = false;
  bool measure_time = true;
  long max_rounds = -1;
  long max_steps = -1;  // negative: 100 * N^2
  std::string out_path;

  void validate() const {
    if (sides.empty() || ks.empty() || ratios.empty() || policies.empty() || view_modes.empty())
      throw ParameterError("sweep: every axis needs at least one value");
    if (instances < 1 || runs < 1) throw ParameterError("sweep: instances and runs must be >= 1");
  }

  std::size_t row_count() const {
    return sides.size() * ratios.size() * static_cast<std::size_t>(instances) * ks.size() * policies.size() *
           view_modes.size() * static_cast<std::size_t>(runs);
  }
};

inline std::string format_double(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string csv_row(const RunRecord& r) {
  std::ostringstream os;
  os << r.instance_id << ',' << r.seed << ',' << r.side << ',' << r.k << ',' << r.psi << ',' << r.ratio << ','
     << r.policy << ',' << r.view_mode << ',' << r.total_cost << ',' << r.exploration_cost << ',' << r.cluster_cost
     << ',' << r.rounds << ',' << r.steps << ',' << format_double(r.mean_clusters_per_round, 6) << ','
     << format_double(r.planner_time_ms, 3) << ',' << (r.completed ? 1 : 0);
  return os.str();
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

inline RunRecord parse_csv_row(const std::string& line, int lineno) {
  const auto f = split(line, ',');
  if (f.size() != 16) throw DataError("csv line " + std::to_string(lineno) + ": expected 16 fields");
  RunRecord r;
  try {
    r.instance_id = f[0];
    r.seed = std::stoull(f[1]);
    r.side = std::stoi(f[2]);
    r.k = std::stoi(f[3]);
    r.psi = std::stoi(f[4]);
    r.ratio = f[5];
    r.policy = f[6];
    r.view_mode = f[7];
    r.total_cost = std::stol(f[8]);
    r.exploration_cost = std::stol(f[9]);
    r.cluster_cost = std::stol(f[10]);
    r.rounds = std::stol(f[11]);
    r.steps = std::stol(f[12]);
    r.mean_clusters_per_round = std::stod(f[13]);
    r.planner_time_ms = std::stod(f[14]);
    r.completed = f[15] == "1" || f[15] == "true";
  } catch (const std::exception& e) {
    throw DataError("csv line " + std::to_string(lineno) + ": " + e.what());
  }
  return r;
}

inline std::vector<RunRecord> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw DataError("csv: header does not match the RunRecord schema");
  std::vector<RunRecord> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(parse_csv_row(line, lineno));
  }
  return rows;
}

inline std::vector<RunRecord> read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  return read_csv(in);
}

namespace detail {

struct SweepCell {
  int side;
  Ratio ratio;
  int instance;
  int k;
  Policy policy;
  ViewMode view;
  int run;
};

}  // namespace detail

// Runs the Cartesian product of the spec's axes. Rows come back in canonical axis order
// regardless of `jobs`. With an output path, the file is opened before any simulation.
inline std::vector<RunRecord> sweep(const SweepSpec& spec, int jobs = 1) {
  spec.validate();
  std::ofstream out;
  if (!spec.out_path.empty()) {
    out.open(spec.out_path, std::ios::out | std::ios::trunc);
    if (!out) throw IoError("cannot open " + spec.out_path + " for writing");
  }
  std::map<std::tuple<int, int, int>, Instance> instances;
  for (int side : spec.sides)
    for (Ratio r : spec.ratios)
      for (int i = 0; i < spec.instances; ++i)
        instances.emplace(std::tuple{side, static_cast<int>(r), i},
                          protocol_instance(spec.master_seed, side, r, i, spec.obstacle_frac, spec.collision_mode));

  std::vector<detail::SweepCell> cells;
  for (int side : spec.sides)
    for (Ratio r : spec.ratios)
      for (int i = 0; i < spec.instances; ++i)
        for (int k : spec.ks)
          for (Policy p : spec.policies)
            for (ViewMode v : spec.view_modes)
              for (int run = 0; run < spec.runs; ++run) cells.push_back({side, r, i, k, p, v, run});

  std::vector<RunRecord> rows(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::optional<std::string> first_error;
  auto worker = [&] {
    for (std::size_t j = next++; j < cells.size(); j = next++) {
      const auto& c = cells[j];
      try {
        ProtocolParams pp;
        pp.psi = spec.psi;
        pp.c = spec.children;
        pp.k = c.k;
        pp.view_mode = c.view;
        pp.lambda_mode = spec.lambda_mode;
        pp.policy = c.policy;
        pp.collision_mode = spec.collision_mode;
        pp.master_seed = run_seed(spec.master_seed, c.side, c.k, c.ratio, c.instance, c.run);
        EpisodeCaps caps;
        caps.max_rounds = spec.max_rounds;
        const long N = static_cast<long>(c.side) * c.side;
        caps.max_steps = spec.max_steps >= 0 ? spec.max_steps : 100 * N * N;
        RunRecord rec = run_episode(instances.at({c.side, static_cast<int>(c.ratio), c.instance}), pp, caps,
                                    EpisodeOptions{spec.measure_time, false, {}});
        rec.instance_id = instance_id(c.side, c.ratio, c.instance);
        rec.ratio = to_string(c.ratio);
        rows[j] = std::move(rec);
      } catch (const std::exception& e) {
        std::lock_guard lock(err_mu);
        if (!first_error) first_error = std::string(e.what());
        next = cells.size();
      }
    }
  };
  const int n_threads = std::max(1, jobs);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) throw std::runtime_error("sweep failed: " + *first_error);
  if (out.is_open()) {
    out << kCsvHeader << '\n';
    for (const RunRecord& r : rows) out << csv_row(r) << '\n';
    out.flush();
    if (!out) throw IoError("write to " + spec.out_path + " failed");
  }
  return rows;
}

// Iterated base-2 logarithm: 0 for n <= 1, else 1 + log2*(log2 n).
inline int log2_star(double n) {
  if (!(n > 0.0)) throw ParameterError("log2_star: argument must be positive");
  int count = 0;
  while (n > 1.0) {
    n = std::log2(n);
    ++count;
  }
  return count;
}

struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  std::optional<double> half_width;  // 95% normal-approximation interval
};

inline Summary summarize(const std::vector<double>& xs) {
  Summary s;
  s.n = xs.size();
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n < 2) return s;
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  const double sd = std::sqrt(ss / static_cast<double>(s.n - 1));
  s.half_width = 1.96 * sd / std::sqrt(static_cast<double>(s.n));
  return s;
}

struct GroupKey {
  int side = 0;
  std::string ratio;
  std::string view_mode;
  int psi = 0;
  int k = 0;
  std::string policy;

  auto tie() const { return std::tie(side, ratio, view_mode, psi, k, policy); }
  friend bool operator<(const GroupKey& a, const GroupKey& b) { return a.tie() < b.tie(); }
};

struct GroupSummary {
  GroupKey key;
  Summary total_cost;
  Summary exploration_cost;
  Summary clusters;
  Summary planner_time_ms;
  double completed_fraction = 0.0;
};

inline std::vector<GroupSummary> summarize_rows(const std::vector<RunRecord>& rows) {
  std::map<GroupKey, std::vector<const RunRecord*>> groups;
  for (const RunRecord& r : rows) groups[{r.side, r.ratio, r.view_mode, r.psi, r.k, r.policy}].push_back(&r);
  std::vector<GroupSummary> out;
  for (const auto& [key, rs] : groups) {
    std::vector<double> tc, ec, cl, pt;
    double done = 0;
    for (const RunRecord* r : rs) {
      tc.push_back(static_cast<double>(r->total_cost));
      ec.push_back(static_cast<double>(r->exploration_cost));
      cl.push_back(r->mean_clusters_per_round);
      pt.push_back(r->planner_time_ms);
      done += r->completed ? 1 : 0;
    }
    out.push_back({key, summarize(tc), summarize(ec), summarize(cl), summarize(pt), done / static_cast<double>(rs.size())});
  }
  return out;
}

struct CriticalRadius {
  std::optional<int> k_star;  // empty: no crossing on the tested grid
  std::map<int, std::pair<double, double>> means;  // k -> (rollout mean, base-policy mean)
};

// Smallest tested k from which the rollout policy's mean cost stays strictly below the
// base policy's at every larger tested k. Rows must come from one grid size.
inline CriticalRadius critical_radius(const std::vector<RunRecord>& rows, const std::string& rollout = "DMAR",
                                      const std::string& base = "BP") {
  std::map<int, std::vector<double>> a, b;
  for (const RunRecord& r : rows) {
    if (r.policy == rollout) a[r.k].push_back(static_cast<double>(r.total_cost));
    if (r.policy == base) b[r.k].push_back(static_cast<double>(r.total_cost));
  }
  if (a.empty()) throw DataError("critical_radius: no rows for policy " + rollout);
  if (b.empty()) throw DataError("critical_radius: no rows for policy " + base);
  CriticalRadius out;
  for (const auto& [k, xs] : a)
    if (b.contains(k)) out.means[k] = {summarize(xs).mean, summarize(b.at(k)).mean};
  if (out.means.empty()) throw DataError("critical_radius: the two policies share no k");
  for (auto it = out.means.rbegin(); it != out.means.rend(); ++it) {
    if (!(it->second.first < it->second.second)) break;
    out.k_star = it->first;
  }
  return out;
}

// Per (side, ratio, view, psi) critical radius over a mixed row set.
inline std::map<std::tuple<int, std::string, std::string, int>, CriticalRadius> critical_radius_table(
    const std::vector<RunRecord>& rows) {
  std::map<std::tuple<int, std::string, std::string, int>, std::vector<RunRecord>> groups;
  for (const RunRecord& r : rows) groups[{r.side, r.ratio, r.view_mode, r.psi}].push_back(r);
  std::map<std::tuple<int, std::string, std::string, int>, CriticalRadius> out;
  for (const auto& [key, rs] : groups) {
    bool has_a = false, has_b = false;
    for (const RunRecord& r : rs) {
      has_a = has_a || r.policy == "DMAR";
      has_b = has_b || r.policy == "BP";
    }
    if (has_a && has_b) out.emplace(key, critical_radius(rs));
  }
  return out;
}

}  // namespace dmar
