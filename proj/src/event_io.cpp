#include "provlog/event_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <tuple>

#include "json.hpp"
#include "provlog/error.hpp"

namespace provlog {

namespace {

using ordered_json = nlohmann::ordered_json;

const std::string& require_string(const nlohmann::json& rec, const char* key, std::size_t line) {
  auto it = rec.find(key);
  if (it == rec.end() || !it->is_string()) {
    throw ParseError(ErrorCode::ParseError, line, std::string("missing string field \"") + key + "\"");
  }
  return it->get_ref<const std::string&>();
}

NodeKind require_kind(const std::string& name, std::size_t line) {
  auto kind = parse_kind(name);
  if (!kind) throw ParseError(ErrorCode::ParseError, line, "unknown node kind \"" + name + "\"");
  return *kind;
}

class Loader {
 public:
  void record(const nlohmann::json& rec, std::size_t line) {
    if (!rec.is_object()) throw ParseError(ErrorCode::ParseError, line, "record is not a JSON object");
    const auto& type = require_string(rec, "type", line);
    try {
      if (type == "node") {
        node(rec, line);
      } else if (type == "edge") {
        edge(rec, line);
      } else if (type == "attr") {
        attr(rec, line);
      } else {
        throw ParseError(ErrorCode::ParseError, line, "unknown record type \"" + type + "\"");
      }
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(e.code(), line, e.what());
    }
  }

  FactBase take() { return std::move(facts_); }

 private:
  void node(const nlohmann::json& rec, std::size_t line) {
    const auto kind = require_kind(require_string(rec, "kind", line), line);
    facts_.add_node(facts_.intern(require_string(rec, "id", line)), kind);
  }

  EntityId endpoint(const nlohmann::json& rec, const char* key, const char* kind_key, std::size_t line) {
    const auto& label = require_string(rec, key, line);
    if (auto it = rec.find(kind_key); it != rec.end()) {
      if (!it->is_string()) throw ParseError(ErrorCode::ParseError, line, std::string(kind_key) + " must be a string");
      const auto id = facts_.intern(label);
      facts_.add_node(id, require_kind(it->get<std::string>(), line));
      return id;
    }
    auto id = facts_.find(label);
    if (!id || !facts_.is_registered(*id)) {
      throw ParseError(ErrorCode::UnknownEntity, line, "edge endpoint '" + label + "' is not a registered node");
    }
    return *id;
  }

  void edge(const nlohmann::json& rec, std::size_t line) {
    const auto from = endpoint(rec, "from", "from_kind", line);
    const auto to = endpoint(rec, "to", "to_kind", line);
    const auto& op = require_string(rec, "op", line);
    auto ts = rec.find("ts");
    if (ts == rec.end() || !ts->is_number_unsigned()) {
      throw ParseError(ErrorCode::ParseError, line, "missing unsigned integer field \"ts\"");
    }
    facts_.add_edge(from, to, op, ts->get<Timestamp>());
  }

  void attr(const nlohmann::json& rec, std::size_t line) {
    const auto& pred = require_string(rec, "pred", line);
    const auto* decl = find_metadata_predicate(pred);
    if (decl == nullptr) {
      throw ParseError(ErrorCode::UnknownPredicate, line, "unknown metadata predicate '" + pred + "'");
    }
    auto args = rec.find("args");
    if (args == rec.end() || !args->is_array()) {
      throw ParseError(ErrorCode::ParseError, line, "missing array field \"args\"");
    }
    if (args->size() != decl->args.size()) {
      throw ParseError(ErrorCode::ArityMismatch, line,
                       pred + " takes " + std::to_string(decl->args.size()) + " argument(s), got " +
                           std::to_string(args->size()));
    }
    AttrTuple tuple;
    for (std::size_t i = 0; i < args->size(); ++i) {
      const auto& a = (*args)[i];
      const auto bad = [&] {
        return ParseError(ErrorCode::TypeMismatch, line,
                          pred + ": argument " + std::to_string(i + 1) + " has the wrong type");
      };
      switch (decl->args[i]) {
        case ArgKind::Entity: {
          if (!a.is_string()) throw bad();
          auto id = facts_.find(a.get<std::string>());
          if (!id || !facts_.is_registered(*id)) {
            throw ParseError(ErrorCode::UnknownEntity, line,
                             "entity '" + a.get<std::string>() + "' is not a registered node");
          }
          tuple.emplace_back(*id);
          break;
        }
        case ArgKind::Text:
          if (!a.is_string()) throw bad();
          tuple.emplace_back(a.get<std::string>());
          break;
        case ArgKind::Integer:
          if (!a.is_number_integer()) throw bad();
          tuple.emplace_back(a.get<std::int64_t>());
          break;
        case ArgKind::Scalar:
          if (a.is_string()) {
            tuple.emplace_back(a.get<std::string>());
          } else if (a.is_number_integer()) {
            tuple.emplace_back(a.get<std::int64_t>());
          } else {
            throw bad();
          }
          break;
      }
    }
    facts_.assert_attribute(pred, std::move(tuple));
  }

  FactBase facts_;
};

ordered_json attr_arg(const FactBase& facts, const AttrValue& v) {
  if (const auto* id = std::get_if<EntityId>(&v)) return std::string(facts.label(*id));
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  return std::get<std::int64_t>(v);
}

}  // namespace

FactBase load_events(std::istream& in) {
  Loader loader;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(ErrorCode::ParseError, line, e.what());
    }
    loader.record(rec, line);
  }
  return loader.take();
}

FactBase load_events_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open facts file '" + path + "'");
  return load_events(in);
}

void export_events(const FactBase& facts, std::ostream& out) {
  struct NodeRow {
    std::string_view label;
    NodeKind kind;
  };
  std::vector<NodeRow> nodes;
  for (std::uint32_t i = 0; i < facts.interned_count(); ++i) {
    if (auto kind = facts.node_kind(EntityId{i})) nodes.push_back({facts.label(EntityId{i}), *kind});
  }
  std::sort(nodes.begin(), nodes.end(), [](const NodeRow& a, const NodeRow& b) { return a.label < b.label; });
  for (const auto& n : nodes) {
    ordered_json rec = {{"type", "node"}, {"kind", kind_name(n.kind)}, {"id", n.label}};
    out << rec.dump() << '\n';
  }

  std::vector<EdgeFact> edges(facts.edges().begin(), facts.edges().end());
  std::sort(edges.begin(), edges.end(), [&](const EdgeFact& a, const EdgeFact& b) {
    return std::make_tuple(facts.label(a.from), facts.edge_type_name(a.etype), a.ts, facts.label(a.to)) <
           std::make_tuple(facts.label(b.from), facts.edge_type_name(b.etype), b.ts, facts.label(b.to));
  });
  for (const auto& e : edges) {
    ordered_json rec = {{"type", "edge"},
                        {"from", facts.label(e.from)},
                        {"to", facts.label(e.to)},
                        {"op", facts.edge_type_name(e.etype)},
                        {"ts", e.ts}};
    out << rec.dump() << '\n';
  }

  // The attribute map is keyed by predicate name, so iteration is already sorted.
  for (const auto& [pred, tuples] : facts.attributes()) {
    std::vector<ordered_json> rows;
    rows.reserve(tuples.size());
    for (const auto& t : tuples) {
      ordered_json args = ordered_json::array();
      for (const auto& a : t) args.push_back(attr_arg(facts, a));
      rows.push_back(std::move(args));
    }
    std::sort(rows.begin(), rows.end());
    for (auto& args : rows) {
      ordered_json rec = {{"type", "attr"}, {"pred", pred}, {"args", std::move(args)}};
      out << rec.dump() << '\n';
    }
  }
}

std::string export_events(const FactBase& facts) {
  std::ostringstream out;
  export_events(facts, out);
  return out.str();
}

}  // namespace provlog
