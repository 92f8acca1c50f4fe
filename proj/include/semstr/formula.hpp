#pragma once

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <istream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "semstr/types.hpp"

namespace semstr {

struct Literal {
  Var var = 0;
  bool positive = true;

  /// Signed 1-based DIMACS encoding.
  int dimacs() const { return positive ? static_cast<int>(var) + 1 : -(static_cast<int>(var) + 1); }

  static Literal from_dimacs(int lit) {
    return Literal{static_cast<Var>(std::abs(lit) - 1), lit > 0};
  }

  Literal negated() const { return Literal{var, !positive}; }

  bool operator==(const Literal&) const = default;
};

/// Disjunction of literals. Non-empty, no repeated literal, no complementary
/// pair; see make_clause().
struct Clause {
  std::vector<Literal> literals;

  bool operator==(const Clause&) const = default;

  std::size_t size() const { return literals.size(); }

  bool satisfied_by(World world) const {
    return std::any_of(literals.begin(), literals.end(), [world](const Literal& l) {
      return (((world >> l.var) & 1U) != 0) == l.positive;
    });
  }
};

struct Cnf {
  std::size_t num_vars = 0;
  std::vector<Clause> clauses;

  bool operator==(const Cnf&) const = default;

  bool satisfied_by(World world) const {
    return std::all_of(clauses.begin(), clauses.end(),
                       [world](const Clause& c) { return c.satisfied_by(world); });
  }

  /// Satisfaction of a 0/1 assignment of arbitrary length.
  bool satisfied_by(const std::vector<std::uint8_t>& assignment) const {
    return std::all_of(clauses.begin(), clauses.end(), [&](const Clause& c) {
      return std::any_of(c.literals.begin(), c.literals.end(), [&](const Literal& l) {
        return (assignment[l.var] != 0) == l.positive;
      });
    });
  }
};

class ParseError : public std::runtime_error {
 public:
  enum class Kind {
    kSyntax,
    kHeader,
    kLiteralRange,
    kEmptyClause,
    kDuplicateLiteral,
    kTautology,
    kClauseCount,
    kGroupIndex,
    kGroupOverlap,
    kGroupUnclaimed,
  };

  ParseError(Kind kind, std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), kind_(kind), line_(line) {}

  Kind kind() const { return kind_; }
  std::size_t line() const { return line_; }

 private:
  Kind kind_;
  std::size_t line_;
};

enum class ClauseDefect { kNone, kEmpty, kDuplicate, kTautology };

inline ClauseDefect check_clause(const std::vector<Literal>& lits) {
  if (lits.empty()) return ClauseDefect::kEmpty;
  for (std::size_t i = 0; i < lits.size(); ++i) {
    for (std::size_t j = i + 1; j < lits.size(); ++j) {
      if (lits[i].var != lits[j].var) continue;
      return lits[i].positive == lits[j].positive ? ClauseDefect::kDuplicate
                                                  : ClauseDefect::kTautology;
    }
  }
  return ClauseDefect::kNone;
}

/// Builds a clause, throwing std::invalid_argument if the literal list is
/// empty, repeats a literal or contains both polarities of a variable.
inline Clause make_clause(std::vector<Literal> lits) {
  switch (check_clause(lits)) {
    case ClauseDefect::kEmpty: throw std::invalid_argument("empty clause");
    case ClauseDefect::kDuplicate: throw std::invalid_argument("duplicate literal in clause");
    case ClauseDefect::kTautology: throw std::invalid_argument("tautological clause");
    case ClauseDefect::kNone: break;
  }
  return Clause{std::move(lits)};
}

namespace detail {

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (end == text.size()) break;
    start = end + 1;
  }
  return lines;
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) tokens.push_back(line.substr(i, j - i));
    i = j;
  }
  return tokens;
}

template <typename Int>
std::optional<Int> to_int(std::string_view token) {
  Int value{};
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size()) return std::nullopt;
  return value;
}

inline std::string slurp(std::istream& in) {
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace detail

/// Parses DIMACS CNF. Clauses may span lines and must be 0-terminated; `c`
/// lines are comments and a `%` line ends the input (SATLIB convention).
inline Cnf parse_dimacs(std::string_view text) {
  using Kind = ParseError::Kind;
  Cnf cnf;
  std::optional<std::size_t> declared_clauses;
  std::vector<Literal> pending;
  std::size_t pending_line = 0;
  std::size_t lineno = 0;

  for (auto line : detail::split_lines(text)) {
    ++lineno;
    auto tokens = detail::split_ws(line);
    if (tokens.empty() || tokens[0][0] == 'c') continue;
    if (tokens[0] == "%") break;
    if (tokens[0] == "p") {
      if (declared_clauses) throw ParseError(Kind::kHeader, lineno, "duplicate problem line");
      if (tokens.size() != 4 || tokens[1] != "cnf")
        throw ParseError(Kind::kHeader, lineno, "expected 'p cnf <vars> <clauses>'");
      auto nv = detail::to_int<std::size_t>(tokens[2]);
      auto nc = detail::to_int<std::size_t>(tokens[3]);
      if (!nv || !nc) throw ParseError(Kind::kHeader, lineno, "non-numeric counts in problem line");
      if (*nv > static_cast<std::size_t>(std::numeric_limits<int>::max()))
        throw ParseError(Kind::kHeader, lineno, "variable count too large");
      cnf.num_vars = *nv;
      declared_clauses = *nc;
      cnf.clauses.reserve(*nc);
      continue;
    }
    if (!declared_clauses) throw ParseError(Kind::kHeader, lineno, "clause before problem line");
    for (auto tok : tokens) {
      auto lit = detail::to_int<long long>(tok);
      if (!lit) throw ParseError(Kind::kSyntax, lineno, "bad literal '" + std::string(tok) + "'");
      if (*lit == 0) {
        switch (check_clause(pending)) {
          case ClauseDefect::kEmpty: throw ParseError(Kind::kEmptyClause, lineno, "empty clause");
          case ClauseDefect::kDuplicate:
            throw ParseError(Kind::kDuplicateLiteral, lineno, "duplicate literal in clause");
          case ClauseDefect::kTautology:
            throw ParseError(Kind::kTautology, lineno, "tautological clause");
          case ClauseDefect::kNone: break;
        }
        cnf.clauses.push_back(Clause{std::move(pending)});
        pending.clear();
        continue;
      }
      if (static_cast<std::size_t>(std::llabs(*lit)) > cnf.num_vars)
        throw ParseError(Kind::kLiteralRange, lineno,
                         "literal " + std::string(tok) + " exceeds variable count " +
                             std::to_string(cnf.num_vars));
      if (pending.empty()) pending_line = lineno;
      pending.push_back(Literal::from_dimacs(static_cast<int>(*lit)));
    }
  }
  if (!declared_clauses) throw ParseError(Kind::kHeader, lineno, "missing problem line");
  if (!pending.empty())
    throw ParseError(Kind::kSyntax, pending_line, "clause not terminated by 0");
  if (cnf.clauses.size() != *declared_clauses)
    throw ParseError(Kind::kClauseCount, lineno,
                     "header declares " + std::to_string(*declared_clauses) + " clauses, found " +
                         std::to_string(cnf.clauses.size()));
  return cnf;
}

inline Cnf parse_dimacs(std::istream& in) { return parse_dimacs(detail::slurp(in)); }

inline std::string emit_dimacs(const Cnf& cnf) {
  std::ostringstream out;
  out << "p cnf " << cnf.num_vars << ' ' << cnf.clauses.size() << '\n';
  for (const auto& clause : cnf.clauses) {
    for (const auto& lit : clause.literals) out << lit.dimacs() << ' ';
    out << "0\n";
  }
  return out.str();
}

/// A constraint of the factorized loss: a conjunction of CNF clauses that is
/// treated as one unit.
struct ConstraintGroup {
  GroupId id = 0;
  std::vector<std::size_t> clause_ids;  // 0-based, ascending
  std::vector<Var> vars;                // ascending
  std::optional<Handle> root;
};

inline std::vector<Var> clause_vars(const Cnf& cnf, const std::vector<std::size_t>& clause_ids) {
  std::vector<Var> vars;
  for (auto id : clause_ids)
    for (const auto& lit : cnf.clauses.at(id).literals) vars.push_back(lit.var);
  std::sort(vars.begin(), vars.end());
  vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
  return vars;
}

inline ConstraintGroup make_group(GroupId id, const Cnf& cnf, std::vector<std::size_t> clause_ids) {
  if (clause_ids.empty()) throw std::invalid_argument("constraint group without clauses");
  std::sort(clause_ids.begin(), clause_ids.end());
  clause_ids.erase(std::unique(clause_ids.begin(), clause_ids.end()), clause_ids.end());
  auto vars = clause_vars(cnf, clause_ids);
  return ConstraintGroup{id, std::move(clause_ids), std::move(vars), std::nullopt};
}

/// One group per clause.
inline std::vector<ConstraintGroup> singleton_groups(const Cnf& cnf) {
  std::vector<ConstraintGroup> groups;
  groups.reserve(cnf.clauses.size());
  for (std::size_t i = 0; i < cnf.clauses.size(); ++i)
    groups.push_back(make_group(static_cast<GroupId>(i), cnf, {i}));
  return groups;
}

/// Parses a group file: one group per line, whitespace-separated 1-based
/// clause indices, `#` starts a comment. Text without any group yields one
/// group per clause.
inline std::vector<ConstraintGroup> parse_groups(std::string_view text, const Cnf& cnf) {
  using Kind = ParseError::Kind;
  std::vector<ConstraintGroup> groups;
  std::vector<std::size_t> owner_line(cnf.clauses.size(), 0);
  std::size_t lineno = 0;
  for (auto line : detail::split_lines(text)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    auto tokens = detail::split_ws(line);
    if (tokens.empty()) continue;
    std::vector<std::size_t> ids;
    for (auto tok : tokens) {
      auto idx = detail::to_int<std::size_t>(tok);
      if (!idx) throw ParseError(Kind::kSyntax, lineno, "bad clause index '" + std::string(tok) + "'");
      if (*idx < 1 || *idx > cnf.clauses.size())
        throw ParseError(Kind::kGroupIndex, lineno,
                         "clause index " + std::string(tok) + " out of range 1.." +
                             std::to_string(cnf.clauses.size()));
      auto& owner = owner_line[*idx - 1];
      if (owner != 0)
        throw ParseError(Kind::kGroupOverlap, lineno,
                         "clause " + std::string(tok) + " already claimed on line " +
                             std::to_string(owner));
      owner = lineno;
      ids.push_back(*idx - 1);
    }
    groups.push_back(make_group(static_cast<GroupId>(groups.size()), cnf, std::move(ids)));
  }
  if (groups.empty()) return singleton_groups(cnf);
  for (std::size_t i = 0; i < owner_line.size(); ++i)
    if (owner_line[i] == 0)
      throw ParseError(Kind::kGroupUnclaimed, lineno,
                       "clause " + std::to_string(i + 1) + " belongs to no group");
  return groups;
}

inline std::vector<ConstraintGroup> parse_groups(std::istream& in, const Cnf& cnf) {
  return parse_groups(detail::slurp(in), cnf);
}

inline std::string emit_groups(const std::vector<ConstraintGroup>& groups) {
  std::ostringstream out;
  for (const auto& g : groups) {
    for (std::size_t i = 0; i < g.clause_ids.size(); ++i)
      out << (i ? " " : "") << g.clause_ids[i] + 1;
    out << '\n';
  }
  return out.str();
}

inline bool shares_vars(const ConstraintGroup& a, const ConstraintGroup& b) {
  auto i = a.vars.begin();
  auto j = b.vars.begin();
  while (i != a.vars.end() && j != b.vars.end()) {
    if (*i == *j) return true;
    if (*i < *j) ++i; else ++j;
  }
  return false;
}

/// Throws InvariantError unless the groups partition the clause set and
/// every group's variable set matches its clauses.
inline void check_partition(const std::vector<ConstraintGroup>& groups, const Cnf& cnf) {
  std::vector<int> seen(cnf.clauses.size(), 0);
  for (const auto& g : groups) {
    if (g.clause_ids.empty()) throw InvariantError("group " + std::to_string(g.id) + " is empty");
    for (auto id : g.clause_ids) {
      if (id >= cnf.clauses.size()) throw InvariantError("group references unknown clause");
      if (seen[id]++) throw InvariantError("clause " + std::to_string(id + 1) + " in two groups");
    }
    if (clause_vars(cnf, g.clause_ids) != g.vars)
      throw InvariantError("group " + std::to_string(g.id) + " has stale variable set");
  }
  for (std::size_t i = 0; i < seen.size(); ++i)
    if (!seen[i]) throw InvariantError("clause " + std::to_string(i + 1) + " unclaimed");
}

}  // namespace semstr
