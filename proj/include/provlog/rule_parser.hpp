#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "provlog/rule_ast.hpp"

namespace provlog {

struct Diagnostic {
  SourceLoc loc;
  std::string code;  // e.g. "syntax", "unsafe-variable", "arity"
  std::string message;

  std::string str() const;
};

struct ParseResult {
  Program program;
  std::vector<Diagnostic> diagnostics;
  bool ok() const { return diagnostics.empty(); }
};

struct QueryParseResult {
  Query query;
  std::vector<Diagnostic> diagnostics;
  bool ok() const { return diagnostics.empty(); }
};

/// Parses rule text (`%` comments, clauses ending in `.`). Syntax errors are
/// collected; the parser resynchronises at the next `.` and keeps going.
/// The returned program's base predicates are the graph store's schema.
ParseResult parse_program(std::string_view text);

/// Parses `?- l1, ..., ln.`
QueryParseResult parse_query(std::string_view text);

/// Parses a single ground atom such as `reachable(a, b)` (trailing `.` optional).
/// Throws Error(ParseError) on malformed input or when the atom has variables.
GroundAtom parse_ground_atom(std::string_view text);

/// Throws Error(ParseError) carrying every diagnostic when parsing fails.
Program parse_program_or_throw(std::string_view text);
Query parse_query_or_throw(std::string_view text);

}  // namespace provlog
