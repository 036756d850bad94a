#include "provlog/graph_store.hpp"

#include <algorithm>
#include <tuple>

#include "provlog/error.hpp"

namespace provlog {

namespace {

const std::set<AttrTuple> kEmptyRelation;

std::uint64_t pack(std::uint32_t hi, std::uint32_t lo) {
  return (std::uint64_t{hi} << 32) | lo;
}

}  // namespace

std::string_view kind_name(NodeKind kind) {
  switch (kind) {
    case NodeKind::Process: return "process";
    case NodeKind::File: return "file";
    case NodeKind::NetworkConnection: return "network_connection";
    case NodeKind::User: return "user";
    case NodeKind::MemoryObject: return "memory_object";
  }
  return "unknown";
}

std::optional<NodeKind> parse_kind(std::string_view name) {
  for (NodeKind k : kAllNodeKinds) {
    if (kind_name(k) == name) return k;
  }
  return std::nullopt;
}

const std::vector<MetadataPredicate>& metadata_predicates() {
  using enum ArgKind;
  static const std::vector<MetadataPredicate> preds = {
      {"process_name", {Entity, Text}},
      {"file_path", {Entity, Text}},
      {"network_address", {Entity, Text}},
      {"user_name", {Entity, Text}},
      {"memory_address", {Entity, Scalar}},
      {"sensitive_file", {Entity}},
      {"authorized_process", {Entity}},
      {"compromised_node", {Entity}},
      {"process_privilege", {Entity, Integer}},
      {"whitelisted_process", {Entity}},
      {"threshold", {Integer, Integer}},
      {"initial_compromise", {Entity}},
      {"untrusted_source", {Entity}},
  };
  return preds;
}

const MetadataPredicate* find_metadata_predicate(std::string_view name) {
  for (const auto& p : metadata_predicates()) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

EntityId FactBase::intern(std::string_view label) {
  const auto id = labels_.intern(label);
  if (id >= kinds_.size()) kinds_.resize(id + 1, -1);
  return EntityId{id};
}

std::optional<EntityId> FactBase::find(std::string_view label) const {
  if (auto id = labels_.find(label)) return EntityId{*id};
  return std::nullopt;
}

void FactBase::add_node(EntityId id, NodeKind kind) {
  if (id.index >= kinds_.size()) {
    throw Error(ErrorCode::UnknownEntity,
                "entity index " + std::to_string(id.index) + " was never interned");
  }
  auto& slot = kinds_[id.index];
  const auto wanted = static_cast<std::int8_t>(kind);
  if (slot == wanted) return;
  if (slot >= 0) {
    throw Error(ErrorCode::KindConflict,
                "entity '" + std::string(label(id)) + "' is already a " +
                    std::string(kind_name(static_cast<NodeKind>(slot))) + ", not a " +
                    std::string(kind_name(kind)));
  }
  slot = wanted;
  ++node_count_;
}

std::optional<NodeKind> FactBase::node_kind(EntityId id) const {
  if (id.index >= kinds_.size() || kinds_[id.index] < 0) return std::nullopt;
  return static_cast<NodeKind>(kinds_[id.index]);
}

std::vector<EntityId> FactBase::nodes_of_kind(NodeKind kind) const {
  std::vector<EntityId> out;
  const auto wanted = static_cast<std::int8_t>(kind);
  for (std::uint32_t i = 0; i < kinds_.size(); ++i) {
    if (kinds_[i] == wanted) out.push_back(EntityId{i});
  }
  return out;
}

EdgeType FactBase::edge_type(std::string_view name) { return EdgeType{etypes_.intern(name)}; }

std::optional<EdgeType> FactBase::find_edge_type(std::string_view name) const {
  if (auto id = etypes_.find(name)) return EdgeType{*id};
  return std::nullopt;
}

void FactBase::require_registered(EntityId id) const {
  if (is_registered(id)) return;
  const std::string what = id.index < labels_.size()
                               ? "'" + std::string(label(id)) + "'"
                               : "#" + std::to_string(id.index);
  throw Error(ErrorCode::UnknownEntity, "entity " + what + " is not a registered node");
}

bool FactBase::add_edge(EntityId from, EntityId to, EdgeType etype, Timestamp ts) {
  require_registered(from);
  require_registered(to);
  EdgeFact e{from, to, etype, ts};
  if (!edge_set_.insert(e).second) return false;
  const auto row = static_cast<std::uint32_t>(edges_.size());
  edges_.push_back(e);
  by_from_[from.index].push_back(row);
  by_to_[to.index].push_back(row);
  by_etype_[etype.id].push_back(row);
  by_from_etype_[pack(from.index, etype.id)].push_back(row);
  return true;
}

bool FactBase::add_edge(EntityId from, EntityId to, std::string_view etype, Timestamp ts) {
  return add_edge(from, to, edge_type(etype), ts);
}

std::vector<EdgeFact> FactBase::edges_matching(const EdgeFilter& filter) const {
  // Pick the narrowest index that applies, then filter the remainder.
  const std::vector<std::uint32_t>* rows = nullptr;
  bool none = false;
  auto use = [&](const auto& index, auto key) {
    auto it = index.find(key);
    if (it == index.end()) {
      none = true;
      return;
    }
    if (rows == nullptr || it->second.size() < rows->size()) rows = &it->second;
  };
  if (filter.from && filter.etype) use(by_from_etype_, pack(filter.from->index, filter.etype->id));
  if (filter.from && !none) use(by_from_, filter.from->index);
  if (filter.to && !none) use(by_to_, filter.to->index);
  if (filter.etype && !none) use(by_etype_, filter.etype->id);

  std::vector<EdgeFact> out;
  if (none) return out;
  auto keep = [&](const EdgeFact& e) {
    return (!filter.from || e.from == *filter.from) && (!filter.to || e.to == *filter.to) &&
           (!filter.etype || e.etype == *filter.etype);
  };
  if (rows != nullptr) {
    for (auto r : *rows) {
      if (keep(edges_[r])) out.push_back(edges_[r]);
    }
  } else {
    out.assign(edges_.begin(), edges_.end());
  }
  std::sort(out.begin(), out.end(), [](const EdgeFact& a, const EdgeFact& b) {
    return std::tie(a.from, a.etype, a.ts, a.to) < std::tie(b.from, b.etype, b.ts, b.to);
  });
  return out;
}

bool FactBase::assert_attribute(std::string_view pred, AttrTuple args) {
  const auto* decl = find_metadata_predicate(pred);
  if (decl == nullptr) {
    throw Error(ErrorCode::UnknownPredicate, "unknown metadata predicate '" + std::string(pred) + "'");
  }
  if (args.size() != decl->args.size()) {
    throw Error(ErrorCode::ArityMismatch, std::string(pred) + " takes " +
                                              std::to_string(decl->args.size()) + " argument(s), got " +
                                              std::to_string(args.size()));
  }
  for (std::size_t i = 0; i < args.size(); ++i) {
    const auto& a = args[i];
    bool ok = false;
    switch (decl->args[i]) {
      case ArgKind::Entity:
        ok = std::holds_alternative<EntityId>(a);
        if (ok) require_registered(std::get<EntityId>(a));
        break;
      case ArgKind::Text: ok = std::holds_alternative<std::string>(a); break;
      case ArgKind::Integer: ok = std::holds_alternative<std::int64_t>(a); break;
      case ArgKind::Scalar: ok = !std::holds_alternative<EntityId>(a); break;
    }
    if (!ok) {
      throw Error(ErrorCode::TypeMismatch, std::string(pred) + ": argument " + std::to_string(i + 1) +
                                                " has the wrong type");
    }
  }
  auto it = attributes_.find(pred);
  if (it == attributes_.end()) it = attributes_.emplace(std::string(pred), std::set<AttrTuple>{}).first;
  return it->second.insert(std::move(args)).second;
}

const std::set<AttrTuple>& FactBase::attribute(std::string_view pred) const {
  auto it = attributes_.find(pred);
  return it == attributes_.end() ? kEmptyRelation : it->second;
}

std::size_t FactBase::attribute_count() const noexcept {
  std::size_t n = 0;
  for (const auto& [_, rel] : attributes_) n += rel.size();
  return n;
}

}  // namespace provlog
