#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace provlog {

/// Position in rule source text (1-based). Locations never take part in AST
/// equality, so a pretty-printed and re-parsed program compares equal.
struct SourceLoc {
  std::size_t line = 0;
  std::size_t column = 0;
  friend bool operator==(const SourceLoc&, const SourceLoc&) { return true; }
};

struct Variable {
  std::string name;
  bool operator==(const Variable&) const = default;
};

/// A ground value. Symbols (`read`) and quoted strings (`"read"`) denote the
/// same text constant; `quoted` only records how it was spelled.
struct Constant {
  enum class Kind : std::uint8_t { Text, Integer };

  Kind kind = Kind::Text;
  std::string text;
  std::int64_t number = 0;
  bool quoted = false;

  static Constant symbol(std::string s) { return {Kind::Text, std::move(s), 0, false}; }
  static Constant string(std::string s) { return {Kind::Text, std::move(s), 0, true}; }
  static Constant integer(std::int64_t n) { return {Kind::Integer, {}, n, false}; }

  bool is_integer() const { return kind == Kind::Integer; }

  bool operator==(const Constant& o) const {
    return kind == o.kind && (kind == Kind::Integer ? number == o.number : text == o.text) &&
           quoted == o.quoted;
  }
};

/// Value identity ignoring spelling; integers order before text.
std::strong_ordering compare_values(const Constant& a, const Constant& b);
bool same_value(const Constant& a, const Constant& b);

/// Plain text of a value: the symbol or string contents, or the decimal integer.
std::string value_text(const Constant& c);

struct Wildcard {
  bool operator==(const Wildcard&) const = default;
};

using Term = std::variant<Variable, Constant, Wildcard>;

struct PredicateSig {
  std::string name;
  std::size_t arity = 0;
  auto operator<=>(const PredicateSig&) const = default;
  std::string str() const { return name + "/" + std::to_string(arity); }
};

struct Atom {
  std::string predicate;
  std::vector<Term> args;
  SourceLoc loc;

  PredicateSig sig() const { return {predicate, args.size()}; }
  bool operator==(const Atom&) const = default;
};

enum class CompareOp : std::uint8_t { Lt, Gt, Le, Ge, Eq, Ne };
enum class ArithOp : std::uint8_t { Add, Sub };

std::string_view to_string(CompareOp op);

/// Integer expression `first (+|-) t1 (+|-) t2 ...`, evaluated left to right.
struct Expr {
  Term first;
  std::vector<std::pair<ArithOp, Term>> rest;
  bool operator==(const Expr&) const = default;
};

struct PositiveLit {
  Atom atom;
  bool operator==(const PositiveLit&) const = default;
};

struct NafLit {
  Atom atom;
  bool operator==(const NafLit&) const = default;
};

struct CompareLit {
  CompareOp op = CompareOp::Eq;
  Term lhs;
  Term rhs;
  SourceLoc loc;
  bool operator==(const CompareLit&) const = default;
};

/// `Target is Expr`: binds Target, or checks it when already bound.
struct AssignLit {
  Variable target;
  Expr expr;
  SourceLoc loc;
  bool operator==(const AssignLit&) const = default;
};

/// `Result = #count{Collect : pattern}`: number of distinct Collect values
/// among the pattern's matches, grouped by the pattern's variables that are
/// bound elsewhere in the rule.
struct CountLit {
  Variable result;
  Variable collect;
  Atom pattern;
  SourceLoc loc;
  bool operator==(const CountLit&) const = default;
};

using Literal = std::variant<PositiveLit, NafLit, CompareLit, AssignLit, CountLit>;

/// `head :- body.`; a missing head makes the rule a constraint.
struct Rule {
  std::optional<Atom> head;
  std::vector<Literal> body;
  SourceLoc loc;

  bool is_constraint() const { return !head.has_value(); }
  bool is_fact() const { return head && body.empty(); }
  bool operator==(const Rule&) const = default;
};

struct Program {
  std::vector<Rule> rules;
  /// Predicates supplied by the fact store rather than by rules.
  std::vector<PredicateSig> base_predicates;

  bool operator==(const Program&) const = default;
};

/// `?- l1, ..., ln.` Answer variables are the named variables in order of
/// first occurrence, excluding variables local to a count aggregate.
struct Query {
  std::vector<Literal> body;
  std::vector<std::string> answer_vars;
  bool operator==(const Query&) const = default;
};

/// A fully ground atom, used for lookups and explanations.
struct GroundAtom {
  std::string predicate;
  std::vector<Constant> args;

  PredicateSig sig() const { return {predicate, args.size()}; }
  bool operator==(const GroundAtom& o) const;
  std::string str() const;
};

/// Predicates the graph store provides: the five node kinds, edge/4 and the
/// metadata schema.
const std::vector<PredicateSig>& graph_base_predicates();

// --- helpers over terms and literals ---------------------------------------

const Variable* as_variable(const Term& t);
const Constant* as_constant(const Term& t);
bool is_wildcard(const Term& t);

/// Named variables appearing in a term list / expression / literal, in order,
/// with repetition.
void collect_vars(const Term& t, std::vector<std::string>& out);
void collect_vars(const Expr& e, std::vector<std::string>& out);
void collect_vars(const Atom& a, std::vector<std::string>& out);

/// Predicate read by a literal (positive, naf or aggregate), if any.
const Atom* literal_atom(const Literal& lit);

// --- canonical source form ---------------------------------------------------

/// Symbols that are not plain lowercase identifiers come out quoted.
std::string to_source(const Constant& c);
std::string to_source(const Term& t);
std::string to_source(const Atom& a);
std::string to_source(const Literal& lit);
std::string to_source(const Rule& r);
std::string to_source(const Query& q);

/// Clauses separated by newlines, canonical spacing, no trailing newline.
std::string pretty_print(const Program& program);

}  // namespace provlog
