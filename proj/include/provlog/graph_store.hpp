#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "provlog/symbol_table.hpp"

namespace provlog {

/// Dense handle for an interned entity label.
struct EntityId {
  std::uint32_t index = 0;
  auto operator<=>(const EntityId&) const = default;
};

/// Interned interaction type (read, write, connect, ...).
struct EdgeType {
  std::uint32_t id = 0;
  auto operator<=>(const EdgeType&) const = default;
};

/// Logical time. Only the ordering matters.
using Timestamp = std::uint64_t;

/// Largest timestamp the rule engine can represent as an integer constant.
inline constexpr Timestamp kMaxTimestamp = (Timestamp{1} << 62) - 1;

enum class NodeKind : std::uint8_t { Process, File, NetworkConnection, User, MemoryObject };

inline constexpr NodeKind kAllNodeKinds[] = {NodeKind::Process, NodeKind::File,
                                            NodeKind::NetworkConnection, NodeKind::User,
                                            NodeKind::MemoryObject};

/// Predicate name used for the kind in facts and in the JSONL format.
std::string_view kind_name(NodeKind kind);
std::optional<NodeKind> parse_kind(std::string_view name);

struct EdgeFact {
  EntityId from;
  EntityId to;
  EdgeType etype;
  Timestamp ts = 0;
  auto operator<=>(const EdgeFact&) const = default;
};

/// Argument of a metadata fact: an entity reference, free text, or an integer.
using AttrValue = std::variant<EntityId, std::string, std::int64_t>;
using AttrTuple = std::vector<AttrValue>;

enum class ArgKind : std::uint8_t { Entity, Text, Integer, Scalar };

/// Declared signature of one metadata predicate. `Scalar` accepts text or integer.
struct MetadataPredicate {
  std::string_view name;
  std::vector<ArgKind> args;
};

/// The fixed metadata schema accepted by `FactBase::assert_attribute`.
const std::vector<MetadataPredicate>& metadata_predicates();
const MetadataPredicate* find_metadata_predicate(std::string_view name);

struct EdgeFilter {
  std::optional<EntityId> from;
  std::optional<EntityId> to;
  std::optional<EdgeType> etype;
};

/// Indexed store of provenance facts: typed entities, timestamped edges and
/// metadata attributes. Single writer while building; read-only afterwards.
class FactBase {
 public:
  EntityId intern(std::string_view label);
  std::optional<EntityId> find(std::string_view label) const;
  std::string_view label(EntityId id) const { return labels_.text(id.index); }
  std::size_t interned_count() const noexcept { return labels_.size(); }
  const SymbolTable& labels() const noexcept { return labels_; }

  /// Throws KindConflict when `id` already has a different kind.
  void add_node(EntityId id, NodeKind kind);
  std::optional<NodeKind> node_kind(EntityId id) const;
  bool is_registered(EntityId id) const { return node_kind(id).has_value(); }
  std::size_t node_count() const noexcept { return node_count_; }
  std::vector<EntityId> nodes_of_kind(NodeKind kind) const;

  EdgeType edge_type(std::string_view name);
  std::optional<EdgeType> find_edge_type(std::string_view name) const;
  std::string_view edge_type_name(EdgeType t) const { return etypes_.text(t.id); }
  const SymbolTable& edge_types() const noexcept { return etypes_; }

  /// Returns false when the edge was already present. Throws UnknownEntity
  /// for unregistered endpoints.
  bool add_edge(EntityId from, EntityId to, EdgeType etype, Timestamp ts);
  bool add_edge(EntityId from, EntityId to, std::string_view etype, Timestamp ts);
  std::span<const EdgeFact> edges() const noexcept { return edges_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }

  /// Sorted by (from, etype, ts, to).
  std::vector<EdgeFact> edges_matching(const EdgeFilter& filter) const;

  /// Returns false when the tuple was already present.
  bool assert_attribute(std::string_view pred, AttrTuple args);
  const std::set<AttrTuple>& attribute(std::string_view pred) const;
  const std::map<std::string, std::set<AttrTuple>, std::less<>>& attributes() const noexcept {
    return attributes_;
  }
  std::size_t attribute_count() const noexcept;

 private:
  void require_registered(EntityId id) const;

  SymbolTable labels_;
  std::vector<std::int8_t> kinds_;  // -1 when unregistered
  std::size_t node_count_ = 0;

  SymbolTable etypes_;
  std::vector<EdgeFact> edges_;
  std::set<EdgeFact> edge_set_;
  std::unordered_map<std::uint32_t, std::vector<std::uint32_t>> by_from_;
  std::unordered_map<std::uint32_t, std::vector<std::uint32_t>> by_to_;
  std::unordered_map<std::uint32_t, std::vector<std::uint32_t>> by_etype_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> by_from_etype_;

  std::map<std::string, std::set<AttrTuple>, std::less<>> attributes_;
};

}  // namespace provlog
