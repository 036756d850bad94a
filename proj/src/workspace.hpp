#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "provlog/engine.hpp"
#include "provlog/rule_ast.hpp"
#include "provlog/symbol_table.hpp"
#include "relation.hpp"

namespace provlog::detail {

/// Headless rule compiled to a synthetic head over its named variables.
struct ConstraintInfo {
  std::size_t rule_index = 0;
  std::vector<std::string> vars;
  PredicateSig sig;
};

/// Everything a DerivedDatabase needs after evaluation: relations by
/// predicate, the shared symbol table that decodes them and the program
/// whose rule ids the witnesses refer to.
struct Workspace {
  std::shared_ptr<SymbolTable> symbols;
  std::vector<PredicateSig> sigs;
  std::map<PredicateSig, std::uint32_t> rel_of;
  std::vector<std::shared_ptr<Relation>> rels;
  std::set<PredicateSig> rule_defined;
  Program program;
  std::vector<ConstraintInfo> constraints;
  bool provenance = false;
  std::size_t derived = 0;

  std::optional<std::uint32_t> relation_id(const PredicateSig& sig) const {
    const auto it = rel_of.find(sig);
    if (it == rel_of.end()) return std::nullopt;
    return it->second;
  }

  /// Lookup-only encoding: constants never seen by the engine cannot occur
  /// in any relation.
  std::optional<Value> encode(const Constant& c) const {
    if (c.is_integer()) return Value::integer(c.number);
    const auto id = symbols->find(c.text);
    if (!id) return std::nullopt;
    return Value::symbol(*id);
  }

  Constant decode(Value v) const {
    if (v.is_int()) return Constant::integer(v.as_int());
    return Constant::symbol(std::string(symbols->text(v.symbol_id())));
  }

  Tuple decode_row(std::uint32_t rel, std::uint32_t row) const {
    const auto& r = *rels[rel];
    const Value* vals = r.row(row);
    Tuple out;
    out.reserve(r.arity());
    for (std::size_t i = 0; i < r.arity(); ++i) out.push_back(decode(vals[i]));
    return out;
  }

  GroundAtom atom(std::uint32_t rel, std::uint32_t row) const {
    return {sigs[rel].name, decode_row(rel, row)};
  }
};

/// Magic-set rewriting of `program` for `query`. The result defines
/// `answer_pred` over the query's answer variables. Predicates in
/// `full_eval` (and anything read under negation or counting) keep their
/// original rules; other rule-defined predicates get adorned copies
/// (`name@bf`) guarded by magic predicates (`magic@name@bf`).
Program magic_rewrite(const Program& program, const Query& query, const std::string& answer_pred,
                      const std::set<PredicateSig>& full_eval);

/// Maps a rewritten predicate name back to the original one; empty for
/// magic and answer predicates.
std::string original_predicate(const std::string& rewritten);

}  // namespace provlog::detail
