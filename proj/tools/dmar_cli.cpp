// dmar_cli: instance generation, single episodes, sweeps and reports.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "dmar/dmar.hpp"

using json = nlohmann::json;
using namespace dmar;

namespace {

json record_json(const RunRecord& r) {
  return json{{"instance_id", r.instance_id},
              {"seed", r.seed},
              {"side", r.side},
              {"k", r.k},
              {"psi", r.psi},
              {"ratio", r.ratio},
              {"policy", r.policy},
              {"view_mode", r.view_mode},
              {"total_cost", r.total_cost},
              {"exploration_cost", r.exploration_cost},
              {"cluster_cost", r.cluster_cost},
              {"rounds", r.rounds},
              {"steps", r.steps},
              {"mean_clusters_per_round", r.mean_clusters_per_round},
              {"planner_time_ms", r.planner_time_ms},
              {"completed", r.completed},
              {"trajectory_hash", r.trajectory_hash},
              {"truncated_plans", r.truncated_plans},
              {"planner_cap_hits", r.planner_cap_hits}};
}

template <class T, class F>
std::vector<T> parse_list(const std::vector<std::string>& in, F conv) {
  std::vector<T> out;
  for (const std::string& s : in) out.push_back(conv(s));
  return out;
}

SweepSpec spec_from_json(const json& j) {
  SweepSpec s;
  auto strs = [&](const char* key) { return j.at(key).get<std::vector<std::string>>(); };
  if (j.contains("sides")) s.sides = j.at("sides").get<std::vector<int>>();
  if (j.contains("ks")) s.ks = j.at("ks").get<std::vector<int>>();
  if (j.contains("ratios")) s.ratios = parse_list<Ratio>(strs("ratios"), ratio_from_string);
  if (j.contains("policies")) s.policies = parse_list<Policy>(strs("policies"), policy_from_string);
  if (j.contains("view_modes")) s.view_modes = parse_list<ViewMode>(strs("view_modes"), view_mode_from_string);
  s.instances = j.value("instances", s.instances);
  s.runs = j.value("runs", s.runs);
  s.master_seed = j.value("seed", s.master_seed);
  if (j.contains("lambda")) s.lambda_mode = lambda_mode_from_string(j.at("lambda").get<std::string>());
  s.psi = j.value("psi", s.psi);
  s.children = j.value("children", s.children);
  s.obstacle_frac = j.value("obstacle_frac", s.obstacle_frac);
  s.collision_mode = j.value("collision", s.collision_mode);
  s.measure_time = j.value("timing", s.measure_time);
  s.max_rounds = j.value("max_rounds", s.max_rounds);
  s.max_steps = j.value("max_steps", s.max_steps);
  if (j.contains("out")) s.out_path = j.at("out").get<std::string>();
  return s;
}

void print_report(const std::vector<RunRecord>& rows, std::ostream& os) {
  os << "side,ratio,view_mode,psi,k,policy,n,total_cost_mean,total_cost_ci95,exploration_cost_mean,"
        "clusters_mean,planner_time_ms_mean,completed_fraction\n";
  for (const GroupSummary& g : summarize_rows(rows)) {
    os << g.key.side << ',' << g.key.ratio << ',' << g.key.view_mode << ',' << g.key.psi << ',' << g.key.k << ','
       << g.key.policy << ',' << g.total_cost.n << ',' << format_double(g.total_cost.mean, 6) << ','
       << (g.total_cost.half_width ? format_double(*g.total_cost.half_width, 6) : "") << ','
       << format_double(g.exploration_cost.mean, 6) << ',' << format_double(g.clusters.mean, 6) << ','
       << format_double(g.planner_time_ms.mean, 6) << ',' << format_double(g.completed_fraction, 6) << '\n';
  }
  os << "\ncritical radius (DMAR vs BP)\n";
  for (const auto& [key, cr] : critical_radius_table(rows)) {
    const auto& [side, ratio, view, psi] = key;
    const double lstar = static_cast<double>(side) * side;
    os << "side " << side << " ratio " << ratio << " view " << view << " psi " << psi << ": k* = "
       << (cr.k_star ? std::to_string(*cr.k_star) : std::string("NoCrossing")) << "  (log2* N = " << log2_star(lstar)
       << ")\n";
    for (const auto& [k, m] : cr.means)
      os << "  k=" << k << "  DMAR " << format_double(m.first, 2) << "  BP " << format_double(m.second, 2) << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized multiagent rollout simulator"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate an instance file");
  int g_side = 10;
  std::string g_ratio = "1:1";
  std::uint64_t g_seed = 1;
  int g_index = 0;
  double g_frac = 0.2;
  bool g_collision = false;
  std::string g_out;
  gen->add_option("--side", g_side, "grid side length")->check(CLI::Range(2, 100000));
  gen->add_option("--ratio", g_ratio, "agents:tasks ratio (1:2, 1:1, 2:1)");
  gen->add_option("--seed", g_seed, "master seed");
  gen->add_option("--index", g_index, "instance index under the master seed");
  gen->add_option("--obstacle-frac", g_frac, "obstacle fraction");
  gen->add_flag("--collision", g_collision, "distinct agent cells");
  gen->add_option("--out", g_out, "output file (default stdout)");

  // run
  auto* run = app.add_subcommand("run", "run one episode");
  std::string r_instance, r_policy = "DMAR", r_view = "hop", r_lambda = "default", r_json;
  int r_k = 4, r_psi = 8, r_children = 4;
  std::uint64_t r_seed = 1;
  bool r_collision = false, r_no_timing = false;
  long r_max_steps = -1, r_max_rounds = -1;
  run->add_option("--instance", r_instance, "instance file")->required();
  run->add_option("--policy", r_policy, "DMAR, BP, DMAR_GCI, BP_GCI or CENTRALIZED");
  run->add_option("--k", r_k, "sensing radius");
  run->add_option("--psi", r_psi, "cluster growth parameter");
  run->add_option("--children", r_children, "max children per tree node");
  run->add_option("--view", r_view, "hop, hop_reduced or line_of_sight");
  run->add_option("--seed", r_seed, "run seed");
  run->add_option("--lambda", r_lambda, "default, analytic or an integer");
  run->add_flag("--collision", r_collision, "collision-avoidance execution");
  run->add_option("--json-out", r_json, "write the RunRecord as JSON");
  run->add_option("--max-steps", r_max_steps, "step cap (default 100*N^2)");
  run->add_option("--max-rounds", r_max_rounds, "round cap");
  run->add_flag("--no-timing", r_no_timing, "report planner_time_ms as 0");

  // sweep
  auto* sw = app.add_subcommand("sweep", "run a parameter sweep to CSV");
  std::string s_spec, s_out, s_lambda = "default";
  std::vector<int> s_sides{10}, s_ks{2, 4, 6, 8, 10, 12};
  std::vector<std::string> s_ratios{"1:1"}, s_policies{"DMAR", "BP"}, s_views{"hop"};
  int s_instances = 1, s_runs = 1, s_jobs = 1, s_psi = 8, s_children = 4;
  std::uint64_t s_seed = 1;
  bool s_collision = false, s_no_timing = false;
  sw->add_option("--spec", s_spec, "JSON sweep spec; replaces the axis flags");
  sw->add_option("--out", s_out, "output CSV")->required();
  sw->add_option("--jobs", s_jobs, "worker threads")->check(CLI::PositiveNumber);
  sw->add_option("--sides", s_sides, "grid sides");
  sw->add_option("--ks", s_ks, "sensing radii");
  sw->add_option("--ratios", s_ratios, "agents:tasks ratios");
  sw->add_option("--policies", s_policies, "policies");
  sw->add_option("--views", s_views, "view modes");
  sw->add_option("--instances", s_instances, "instances per cell");
  sw->add_option("--runs", s_runs, "runs per instance");
  sw->add_option("--seed", s_seed, "master seed");
  sw->add_option("--psi", s_psi, "cluster growth parameter");
  sw->add_option("--children", s_children, "max children per tree node");
  sw->add_option("--lambda", s_lambda, "default, analytic or an integer");
  sw->add_flag("--collision", s_collision, "collision-avoidance execution");
  sw->add_flag("--no-timing", s_no_timing, "report planner_time_ms as 0");

  // report
  auto* rep = app.add_subcommand("report", "summaries and critical radius from a sweep CSV");
  std::string p_in;
  rep->add_option("--in", p_in, "sweep CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const Ratio ratio = ratio_from_string(g_ratio);
      const Instance inst = protocol_instance(g_seed, g_side, ratio, g_index, g_frac, g_collision);
      const std::string text = serialize(inst);
      if (g_out.empty()) {
        std::cout << text;
      } else {
        std::ofstream out(g_out);
        if (!(out << text)) throw IoError("cannot write " + g_out);
      }
    } else if (*run) {
      std::ifstream in(r_instance);
      if (!in) throw IoError("cannot read " + r_instance);
      const Instance inst = deserialize(in);
      ProtocolParams pp;
      pp.policy = policy_from_string(r_policy);
      pp.k = r_k;
      pp.psi = r_psi;
      pp.c = r_children;
      pp.view_mode = view_mode_from_string(r_view);
      pp.lambda_mode = lambda_mode_from_string(r_lambda);
      pp.collision_mode = r_collision;
      pp.master_seed = r_seed;
      EpisodeCaps caps;
      const long N = static_cast<long>(inst.width) * inst.height;
      caps.max_steps = r_max_steps >= 0 ? r_max_steps : 100 * N * N;
      caps.max_rounds = r_max_rounds;
      RunRecord rec = run_episode(inst, pp, caps, EpisodeOptions{!r_no_timing, false, {}});
      rec.instance_id = r_instance;
      const json j = record_json(rec);
      if (!r_json.empty()) {
        std::ofstream out(r_json);
        if (!(out << j.dump(2) << '\n')) throw IoError("cannot write " + r_json);
      }
      std::cout << j.dump(2) << '\n';
    } else if (*sw) {
      SweepSpec spec;
      if (!s_spec.empty()) {
        std::ifstream in(s_spec);
        if (!in) throw IoError("cannot read " + s_spec);
        spec = spec_from_json(json::parse(in));
      } else {
        spec.sides = s_sides;
        spec.ks = s_ks;
        spec.ratios = parse_list<Ratio>(s_ratios, ratio_from_string);
        spec.policies = parse_list<Policy>(s_policies, policy_from_string);
        spec.view_modes = parse_list<ViewMode>(s_views, view_mode_from_string);
        spec.instances = s_instances;
        spec.runs = s_runs;
        spec.master_seed = s_seed;
        spec.psi = s_psi;
        spec.children = s_children;
        spec.lambda_mode = lambda_mode_from_string(s_lambda);
        spec.collision_mode = s_collision;
        spec.measure_time = !s_no_timing;
      }
      spec.out_path = s_out;
      const auto rows = sweep(spec, s_jobs);
      std::cerr << "wrote " << rows.size() << " rows to " << s_out << '\n';
    } else if (*rep) {
      print_report(read_csv_file(p_in), std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
