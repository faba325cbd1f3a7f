#pragma once

#include <cstdint>
#include <string>

#include "core.hpp"
#include "grid.hpp"

namespace dmar {

enum class Policy : std::uint8_t { DMAR, BP, DMAR_GCI, BP_GCI, Centralized };

inline std::string to_string(Policy p) {
  switch (p) {
    case Policy::DMAR: return "DMAR";
    case Policy::BP: return "BP";
    case Policy::DMAR_GCI: return "DMAR_GCI";
    case Policy::BP_GCI: return "BP_GCI";
    case Policy::Centralized: return "CENTRALIZED";
  }
  return "?";
}

inline Policy policy_from_string(const std::string& s) {
  if (s == "DMAR" || s == "dmar") return Policy::DMAR;
  if (s == "BP" || s == "bp") return Policy::BP;
  if (s == "DMAR_GCI" || s == "dmar_gci") return Policy::DMAR_GCI;
  if (s == "BP_GCI" || s == "bp_gci") return Policy::BP_GCI;
  if (s == "CENTRALIZED" || s == "centralized") return Policy::Centralized;
  throw ParameterError("unknown policy '" + s + "'");
}

// Rollout planning inside clusters (as opposed to the greedy base policy).
constexpr bool uses_rollout(Policy p) { return p == Policy::DMAR || p == Policy::DMAR_GCI || p == Policy::Centralized; }
constexpr bool uses_gci(Policy p) { return p == Policy::DMAR_GCI || p == Policy::BP_GCI; }

struct LambdaMode {
  enum class Kind : std::uint8_t { Default, Analytic, Override };
  Kind kind = Kind::Default;
  int value = 0;  // Override only

  static LambdaMode make_default() { return {}; }
  static LambdaMode analytic() { return {Kind::Analytic, 0}; }
  static LambdaMode override_with(int n) { return {Kind::Override, n}; }
};

inline std::string to_string(const LambdaMode& m) {
  switch (m.kind) {
    case LambdaMode::Kind::Default: return "default";
    case LambdaMode::Kind::Analytic: return "analytic";
    case LambdaMode::Kind::Override: return std::to_string(m.value);
  }
  return "?";
}

inline LambdaMode lambda_mode_from_string(const std::string& s) {
  if (s == "default") return LambdaMode::make_default();
  if (s == "analytic") return LambdaMode::analytic();
  std::size_t used = 0;
  int n = 0;
  try {
    n = std::stoi(s, &used);
  } catch (const std::exception&) {
    throw ParameterError("lambda must be 'default', 'analytic' or a positive integer, got '" + s + "'");
  }
  if (used != s.size()) throw ParameterError("lambda must be 'default', 'analytic' or a positive integer, got '" + s + "'");
  return LambdaMode::override_with(n);
}

struct ProtocolParams {
  int psi = 8;   // cluster growth parameter
  int c = 4;     // child pointers per agent
  int k = 4;     // sensing radius in hops
  ViewMode view_mode = ViewMode::Hop;
  LambdaMode lambda_mode{};
  Policy policy = Policy::DMAR;
  bool collision_mode = false;
  std::uint64_t master_seed = 0;

  void validate() const {
    if (psi < 2) throw ParameterError("psi must be >= 2");
    if (c < 2) throw ParameterError("c must be >= 2");
    if (k < 1) throw ParameterError("k must be >= 1");
    if (collision_mode && uses_gci(policy)) throw ParameterError("collision mode cannot be combined with GCI depot gathering");
  }
};

// Maximum cluster-tree height, ceil(3/2 * (psi - 2)).
constexpr int tree_height_bound(int psi) {
  if (psi < 2) throw ParameterError("tree_height_bound: psi must be >= 2");
  return (3 * (psi - 2) + 1) / 2;
}

constexpr int ceil_log2(int n) {
  int bits = 0;
  while ((1 << bits) < n) ++bits;
  return bits;
}

// Length of the Execute-Movement window.
inline long max_route_length(int psi, int k, const LambdaMode& mode) {
  const long L = tree_height_bound(psi);
  switch (mode.kind) {
    case LambdaMode::Kind::Default: return 8L * k * (L + 1);
    case LambdaMode::Kind::Analytic: {
      const long s = 2L * k * (L + 1) + 1;
      return 2 * s * s * s;
    }
    case LambdaMode::Kind::Override:
      if (mode.value < 1) throw ParameterError("lambda override must be >= 1");
      return mode.value;
  }
  return 0;
}

// Per-phase step budget of one round. Depends on (psi, k, lambda) only.
struct Schedule {
  int steps_election = 1;
  int steps_soac_outer = 0;
  int steps_join_inner = 0;
  int steps_lma = 0;
  int steps_dissolve = 0;
  int steps_tmar_broadcast = 0;
  long steps_em = 0;

  int height_bound() const { return steps_join_inner; }
  long soac_steps() const { return steps_election + static_cast<long>(steps_soac_outer) * (1 + steps_join_inner); }
  long pre_em_steps() const { return soac_steps() + steps_lma + steps_dissolve + steps_tmar_broadcast; }
  long round_steps() const { return pre_em_steps() + steps_em; }

  static Schedule make(const ProtocolParams& p) {
    p.validate();
    const int L = tree_height_bound(p.psi);
    Schedule s;
    s.steps_election = 1;
    s.steps_soac_outer = ceil_log2(p.psi);
    s.steps_join_inner = L;
    s.steps_lma = 2 * L;
    s.steps_dissolve = L;
    s.steps_tmar_broadcast = L + 1;
    s.steps_em = max_route_length(p.psi, p.k, p.lambda_mode);
    return s;
  }
};

}  // namespace dmar
