#pragma once

#include <optional>
#include <string>
#include <vector>

namespace provlog {

/// One justification of a ground atom. Leaves are base facts (no rule id).
/// `naf_checked` lists the instantiated negated atoms that were verified
/// absent; `conditions` lists the instantiated comparisons, arithmetic and
/// count literals that held.
struct ProofTree {
  std::string atom;
  std::optional<std::size_t> rule_id;
  std::string rule_text;
  std::vector<ProofTree> children;
  std::vector<std::string> naf_checked;
  std::vector<std::string> conditions;

  bool is_leaf() const { return !rule_id.has_value(); }
  std::size_t node_count() const;
  std::size_t depth() const;

  bool operator==(const ProofTree&) const = default;
};

/// Nested JSON `{atom, rule_id, children[], naf_checked[], conditions[]}`;
/// `rule_id` is null for base facts.
std::string to_json(const ProofTree& tree, int indent = -1);
ProofTree proof_from_json(const std::string& text);

/// Indented human-readable rendering, one atom per line.
std::string to_text(const ProofTree& tree);

}  // namespace provlog
