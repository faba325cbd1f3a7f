#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dmar {

using AgentId = int;

// Grid coordinates: x grows east, y grows north.
struct Position {
  int x = 0;
  int y = 0;

  friend constexpr auto operator<=>(const Position&, const Position&) = default;
  friend constexpr Position operator+(Position a, Position b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Position operator-(Position a, Position b) { return {a.x - b.x, a.y - b.y}; }
};

// Row-major "(y, x)" ordering used for target tie-breaks.
constexpr bool yx_less(Position a, Position b) {
  return a.y != b.y ? a.y < b.y : a.x < b.x;
}

constexpr int manhattan(Position a, Position b) {
  return (a.x > b.x ? a.x - b.x : b.x - a.x) + (a.y > b.y ? a.y - b.y : b.y - a.y);
}

// Canonical order. Every deterministic tie-break in the library walks this order.
enum class Control : std::uint8_t { North = 0, East = 1, South = 2, West = 3, Wait = 4 };

inline constexpr std::array<Control, 5> kAllControls = {Control::North, Control::East, Control::South,
                                                        Control::West, Control::Wait};
inline constexpr std::array<Control, 4> kMoveControls = {Control::North, Control::East, Control::South,
                                                         Control::West};

constexpr Position delta(Control c) {
  switch (c) {
    case Control::North: return {0, 1};
    case Control::East: return {1, 0};
    case Control::South: return {0, -1};
    case Control::West: return {-1, 0};
    case Control::Wait: return {0, 0};
  }
  return {0, 0};
}

constexpr Position step(Position p, Control c) { return p + delta(c); }

constexpr char control_char(Control c) { return "NESWw"[static_cast<int>(c)]; }

inline Control control_from_char(char ch) {
  switch (ch) {
    case 'N': return Control::North;
    case 'E': return Control::East;
    case 'S': return Control::South;
    case 'W': return Control::West;
    case 'w': return Control::Wait;
  }
  throw std::invalid_argument(std::string("unknown control character '") + ch + "'");
}

// Ordered controls for a single agent.
struct ControlSequence {
  AgentId agent = 0;
  std::vector<Control> controls;

  int moves() const {
    int n = 0;
    for (Control c : controls) n += c != Control::Wait;
    return n;
  }
  friend bool operator==(const ControlSequence&, const ControlSequence&) = default;
};

inline std::string to_string(const ControlSequence& seq) {
  std::string s;
  s.reserve(seq.controls.size());
  for (Control c : seq.controls) s.push_back(control_char(c));
  return s;
}

// A precondition was broken by the caller (planner bug, out-of-bounds access, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An internal protocol invariant failed; carries the round/step where it happened.
class ProtocolError : public std::logic_error {
 public:
  ProtocolError(const std::string& what, int round = -1, int step = -1)
      : std::logic_error(round < 0 ? what
                                   : what + " (round " + std::to_string(round) + ", step " +
                                         std::to_string(step) + ")"),
        round_(round),
        step_(step) {}
  int round() const { return round_; }
  int step() const { return step_; }

 private:
  int round_;
  int step_;
};

}  // namespace dmar
