#pragma once

#include <map>
#include <string>
#include <vector>

#include "provlog/error.hpp"
#include "provlog/rule_parser.hpp"

namespace provlog {

/// One diagnostic per unsafe variable occurrence (and per malformed
/// aggregate). Empty iff every rule is safe.
std::vector<Diagnostic> check_safety(const Program& program);

/// Safety of a query, treating its answer variables as a rule head.
std::vector<Diagnostic> check_query_safety(const Query& query);

/// Arity consistency: every use matches a base or rule-defined signature
/// whenever its name is known, and base predicates keep their schema arity.
std::vector<Diagnostic> check_arities(const Program& program);

/// Safety plus arity checks.
std::vector<Diagnostic> validate(const Program& program);

/// Dependency edge `body -> head`; negative for `not` and `#count` reads.
struct Dependency {
  PredicateSig from;
  PredicateSig to;
  bool negative = false;
  auto operator<=>(const Dependency&) const = default;
};

std::vector<Dependency> dependencies(const Program& program);

struct Stratification {
  /// strata[i] is the sorted set of predicates evaluated in round i.
  std::vector<std::vector<PredicateSig>> strata;
  std::map<PredicateSig, std::size_t> stratum_of;
};

class UnstratifiableError : public Error {
 public:
  UnstratifiableError(std::vector<PredicateSig> cycle, const std::string& message)
      : Error(ErrorCode::Unstratifiable, message), cycle_(std::move(cycle)) {}

  /// Predicates along the offending cycle; the first is repeated at the end.
  const std::vector<PredicateSig>& cycle() const noexcept { return cycle_; }

 private:
  std::vector<PredicateSig> cycle_;
};

/// Assigns every predicate mentioned in the program its lowest legal stratum.
/// Throws UnstratifiableError when a negative or aggregate dependency lies on
/// a cycle. Constraints (headless rules) have no predicate and are ignored.
Stratification stratify(const Program& program);

}  // namespace provlog
