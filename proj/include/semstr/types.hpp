#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace semstr {

/// Boolean variable, 0-based. External formats (DIMACS, group files, JSON)
/// use 1-based indices; conversion happens only at the I/O boundary.
using Var = std::uint32_t;

inline constexpr Var kNoVar = std::numeric_limits<Var>::max();

/// Identifier of a constraint group. Stable across strengthening rounds:
/// merged groups get fresh ids, untouched groups keep theirs.
using GroupId = std::uint32_t;

/// Reference to a node inside a NodeStore.
struct Handle {
  std::uint32_t index = 0;

  auto operator<=>(const Handle&) const = default;
};

inline constexpr Handle kFalse{0};
inline constexpr Handle kTrue{1};

/// Per-variable Bernoulli parameters; entry i is P(Y_i = 1).
using ProbVector = std::vector<double>;

/// A complete assignment of at most 32 variables; bit i is the value of var i.
using World = std::uint32_t;

/// Raised when an internal consistency condition fails (e.g. a joint table
/// that cannot come from a probability distribution).
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace semstr

template <>
struct std::hash<semstr::Handle> {
  std::size_t operator()(const semstr::Handle& h) const noexcept {
    return std::hash<std::uint32_t>{}(h.index);
  }
};
