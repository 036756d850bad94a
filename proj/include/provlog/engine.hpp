#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "provlog/graph_store.hpp"
#include "provlog/proof.hpp"
#include "provlog/rule_ast.hpp"

namespace provlog {

namespace detail {
struct Workspace;
}

inline constexpr std::size_t kDefaultMaxDerivedTuples = 50'000'000;

struct EvalOptions {
  /// Upper bound on tuples derived by rules (base facts excluded).
  std::size_t max_derived_tuples = kDefaultMaxDerivedTuples;
  /// Record one witness per derived tuple so `explain` works.
  bool record_provenance = true;
};

using Tuple = std::vector<Constant>;

/// Result of materializing a program: every relation the program defines or
/// reads, plus derivation witnesses. Self-contained; outlives its FactBase.
class DerivedDatabase {
 public:
  DerivedDatabase() = default;

  /// Predicates defined by at least one rule (constraints excluded), sorted.
  std::vector<PredicateSig> derived_predicates() const;
  /// Every predicate with a relation (rule-defined and base), sorted.
  std::vector<PredicateSig> predicates() const;
  bool has_relation(const PredicateSig& sig) const;

  /// Tuples of a relation, sorted; empty for unknown predicates.
  std::vector<Tuple> tuples(const PredicateSig& sig) const;
  std::size_t size(const PredicateSig& sig) const;
  bool contains(const GroundAtom& atom) const;

  /// Number of tuples produced by rules across all derived relations.
  std::size_t derived_count() const;

  /// Proof tree for `atom`. Throws Error(NotDerived) if the atom is absent,
  /// Error(InvalidProgram) if provenance was not recorded.
  ProofTree explain(const GroundAtom& atom) const;

  /// The evaluated program (constraints included).
  const Program& program() const;

 private:
  friend class Engine;
  friend struct DatabaseAccess;
  explicit DerivedDatabase(std::shared_ptr<const detail::Workspace> ws) : ws_(std::move(ws)) {}

  std::shared_ptr<const detail::Workspace> ws_;
};

struct QueryResult {
  std::vector<std::string> variables;
  /// One row per distinct binding of `variables`, sorted.
  std::vector<Tuple> rows;
  /// Predicates the goal-directed evaluation touched (rule-defined and base),
  /// sorted. Predicates irrelevant to the goal do not appear.
  std::vector<PredicateSig> evaluated_predicates;

  /// `X=b, Y=c` per row; `true` for a variable-free query that holds.
  std::vector<std::string> lines() const;
};

struct ConstraintViolation {
  std::size_t rule_index = 0;  // position of the constraint in the program
  std::string rule_text;
  std::vector<std::pair<std::string, Constant>> bindings;

  std::string str() const;
};

/// Evaluation context over one FactBase. Base relations and their indexes are
/// built once and reused across materialize/query calls. The FactBase must
/// outlive the Engine and must not change while the Engine is in use.
class Engine {
 public:
  explicit Engine(const FactBase& facts, EvalOptions options = {});
  ~Engine();
  Engine(Engine&&) noexcept;
  Engine& operator=(Engine&&) noexcept;

  /// Stratified semi-naive evaluation of the whole program. Throws
  /// Error(InvalidProgram) for unsafe or ill-formed programs,
  /// UnstratifiableError, and Error(ResourceLimit).
  DerivedDatabase materialize(const Program& program);

  /// Goal-directed evaluation: only the part of the program relevant to the
  /// query is computed (magic-set rewriting of the program for the goal).
  QueryResult query(const Query& query, const Program& program);

  /// Materializes only the predicates `goals` depend on (transitively). The
  /// whole program is still validated and must stratify.
  DerivedDatabase materialize_for(const Program& program, const std::vector<PredicateSig>& goals);

  const EvalOptions& options() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

DerivedDatabase materialize(const Program& program, const FactBase& facts, const EvalOptions& options = {});
QueryResult query(const Query& query, const Program& program, const FactBase& facts,
                  const EvalOptions& options = {});

/// One violation per distinct binding of the named variables of each
/// headless rule, in program order then sorted bindings.
std::vector<ConstraintViolation> check_constraints(const Program& program, const DerivedDatabase& db);

struct GroupCount {
  Tuple group;
  std::size_t count = 0;
};

/// Distinct values of `collect` among the matches of `pattern` in `db`,
/// grouped by the values of `group` (variables of the pattern). With a
/// `domain`, every domain group is reported, zero-count groups included;
/// otherwise only groups with at least one match. Sorted by group.
std::vector<GroupCount> eval_count_distinct(const Atom& pattern, const std::string& collect,
                                            const std::vector<std::string>& group, const DerivedDatabase& db,
                                            const std::vector<Tuple>* domain = nullptr);

/// Rule-defined relations as JSONL attr records, predicate-sorted then
/// tuple-sorted.
void dump_derived(const DerivedDatabase& db, std::ostream& out);

}  // namespace provlog
