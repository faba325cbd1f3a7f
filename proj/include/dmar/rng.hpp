#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

#include "core.hpp"

namespace dmar {

// Philox4x32-10 (Salmon et al., SC'11). Stateless: the output is a pure function of
// (counter, key), so independent draws never shift each other.
namespace philox {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

inline constexpr std::uint32_t kMul0 = 0xD2511F53u;
inline constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
inline constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

constexpr Counter round(Counter ctr, Key key) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
  return {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
          static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
}

constexpr Counter philox4x32_10(Counter ctr, Key key) {
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    ctr = round(ctr, key);
  }
  return ctr;
}

constexpr Key key_from(std::uint64_t seed) {
  return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

}  // namespace philox

// Uniform index in [0, n) from 64 random bits (multiply-shift, no modulo bias beyond 2^-64).
constexpr std::uint64_t bounded(std::uint64_t bits, std::uint64_t n) {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(bits) * n) >> 64);
}

// Stable mixing of a seed with a list of integers; used to derive per-cell / per-run seeds.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::int64_t> parts) {
  std::uint64_t state = master;
  std::uint32_t index = 0;
  for (std::int64_t part : parts) {
    const auto v = static_cast<std::uint64_t>(part);
    const auto out = philox::philox4x32_10(
        {static_cast<std::uint32_t>(v), static_cast<std::uint32_t>(v >> 32), index++, 0x5eedu},
        philox::key_from(state));
    state = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
  }
  return state;
}

// Sequential draws backed by Philox in counter mode. Reproducible on every platform
// (std:: distributions are implementation-defined, so they are not used anywhere).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint32_t stream = 0) : key_(philox::key_from(seed)), stream_(stream) {}

  std::uint64_t next_u64() {
    const auto out = philox::philox4x32_10(
        {static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32), stream_, 0u}, key_);
    ++counter_;
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
  }

  std::uint64_t uniform(std::uint64_t n) { return bounded(next_u64(), n); }

  // Fisher-Yates prefix: returns k distinct indices of [0, n) in draw order.
  std::vector<int> sample_without_replacement(int n, int k) {
    std::vector<int> pool(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
    for (int i = 0; i < k; ++i) {
      const auto j = i + static_cast<int>(uniform(static_cast<std::uint64_t>(n - i)));
      std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
    }
    pool.resize(static_cast<std::size_t>(k));
    return pool;
  }

  std::uint64_t draws() const { return counter_; }

 private:
  philox::Key key_;
  std::uint32_t stream_;
  std::uint64_t counter_ = 0;
};

// Explorer draw keyed by (seed, agent, round, em_step, salt). `salt` selects fresh keys for
// re-draws (collision mode) without touching the primary key.
inline Control rand_control(std::uint64_t master_seed, AgentId agent, int round_index, int em_step,
                            std::span<const Control> feasible, std::uint32_t salt = 0) {
  if (feasible.empty()) throw ContractViolation("rand_control: empty feasible set");
  if (feasible.size() == 1) return feasible.front();
  const auto out = philox::philox4x32_10({static_cast<std::uint32_t>(agent), static_cast<std::uint32_t>(round_index),
                                          static_cast<std::uint32_t>(em_step), salt},
                                         philox::key_from(master_seed));
  const std::uint64_t bits = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
  return feasible[static_cast<std::size_t>(bounded(bits, feasible.size()))];
}

}  // namespace dmar
