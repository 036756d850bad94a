#include "provlog/proof.hpp"

#include <algorithm>
#include <map>
#include <unordered_set>

#include "json.hpp"
#include "planning.hpp"
#include "provlog/engine.hpp"
#include "provlog/error.hpp"
#include "workspace.hpp"

namespace provlog {

std::size_t ProofTree::node_count() const {
  std::size_t n = 1;
  for (const auto& c : children) n += c.node_count();
  return n;
}

std::size_t ProofTree::depth() const {
  std::size_t d = 0;
  for (const auto& c : children) d = std::max(d, c.depth());
  return d + 1;
}

namespace {

using Env = std::map<std::string, Constant>;

std::string substitute(const Term& t, const Env& env) {
  if (const auto* v = as_variable(t)) {
    const auto it = env.find(v->name);
    return it == env.end() ? v->name : to_source(it->second);
  }
  return to_source(t);
}

std::string substitute(const Atom& a, const Env& env) {
  std::string out = a.predicate;
  if (a.args.empty()) return out;
  out += '(';
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    if (i) out += ", ";
    out += substitute(a.args[i], env);
  }
  return out + ')';
}

std::string substitute(const Expr& e, const Env& env) {
  std::string out = substitute(e.first, env);
  for (const auto& [op, t] : e.rest) out += (op == ArithOp::Add ? " + " : " - ") + substitute(t, env);
  return out;
}

void unify(const Atom& atom, const Tuple& values, Env& env) {
  for (std::size_t i = 0; i < atom.args.size() && i < values.size(); ++i) {
    if (const auto* v = as_variable(atom.args[i])) env.emplace(v->name, values[i]);
  }
}

std::optional<Constant> lookup(const Term& t, const Env& env) {
  if (const auto* c = as_constant(t)) return *c;
  if (const auto* v = as_variable(t)) {
    const auto it = env.find(v->name);
    if (it != env.end()) return it->second;
  }
  return std::nullopt;
}

class ProofBuilder {
 public:
  explicit ProofBuilder(const detail::Workspace& ws) : ws_(ws) {}

  ProofTree build(std::uint32_t rel, std::uint32_t row) {
    ProofTree t;
    const auto atom = ws_.atom(rel, row);
    t.atom = atom.str();
    const auto& relation = *ws_.rels[rel];
    const auto rule_id = relation.witness_rule(row);
    if (rule_id == detail::kBaseFact) return t;

    const Rule& rule = ws_.program.rules.at(rule_id);
    t.rule_id = rule_id;
    t.rule_text = to_source(rule);
    const auto refs = relation.witness_refs(row);

    Env env;
    if (rule.head) unify(*rule.head, atom.args, env);
    std::size_t k = 0;
    for (const auto& lit : rule.body) {
      const auto* p = std::get_if<PositiveLit>(&lit);
      if (p == nullptr || k >= refs.size()) continue;
      unify(p->atom, ws_.decode_row(refs[k].rel, refs[k].row), env);
      t.children.push_back(build(refs[k].rel, refs[k].row));
      ++k;
    }
    annotate(rule, env, t);
    return t;
  }

 private:
  /// Replays the non-positive literals in evaluation order to recover the
  /// remaining bindings and record what was checked.
  void annotate(const Rule& rule, Env& env, ProofTree& t) const {
    for (const auto i : detail::order_body(rule.head, rule.body, {})) {
      const auto& lit = rule.body[i];
      if (const auto* n = std::get_if<NafLit>(&lit)) {
        t.naf_checked.push_back(substitute(n->atom, env));
      } else if (const auto* c = std::get_if<CompareLit>(&lit)) {
        t.conditions.push_back(substitute(c->lhs, env) + " " + std::string(to_string(c->op)) + " " +
                               substitute(c->rhs, env));
      } else if (const auto* a = std::get_if<AssignLit>(&lit)) {
        if (!env.contains(a->target.name)) {
          if (const auto v = evaluate(a->expr, env)) env.emplace(a->target.name, *v);
        }
        t.conditions.push_back(substitute(Term{a->target}, env) + " is " + substitute(a->expr, env));
      } else if (const auto* c = std::get_if<CountLit>(&lit)) {
        const auto n = count(*c, env);
        env.emplace(c->result.name, Constant::integer(static_cast<std::int64_t>(n)));
        t.conditions.push_back("#count{" + c->collect.name + " : " + substitute(c->pattern, env) +
                               "} = " + std::to_string(n));
      }
    }
  }

  static std::optional<Constant> evaluate(const Expr& e, const Env& env) {
    const auto first = lookup(e.first, env);
    if (!first || !first->is_integer()) return std::nullopt;
    std::int64_t acc = first->number;
    for (const auto& [op, t] : e.rest) {
      const auto v = lookup(t, env);
      if (!v || !v->is_integer()) return std::nullopt;
      acc = op == ArithOp::Add ? acc + v->number : acc - v->number;
    }
    return Constant::integer(acc);
  }

  std::size_t count(const CountLit& c, const Env& env) const {
    const auto rel = ws_.relation_id(c.pattern.sig());
    if (!rel) return 0;
    const auto& relation = *ws_.rels[*rel];
    std::unordered_set<std::uint64_t> seen;
    for (std::uint32_t r = 0; r < relation.size(); ++r) {
      const auto* vals = relation.row(r);
      std::map<std::string, detail::Value> local;
      bool ok = true;
      for (std::size_t i = 0; i < c.pattern.args.size() && ok; ++i) {
        const auto& term = c.pattern.args[i];
        if (is_wildcard(term)) continue;
        if (const auto fixed = lookup(term, env)) {
          const auto v = ws_.encode(*fixed);
          ok = v && *v == vals[i];
        } else {
          const auto name = as_variable(term)->name;
          const auto [it, fresh] = local.emplace(name, vals[i]);
          ok = fresh || it->second == vals[i];
        }
      }
      if (!ok) continue;
      if (const auto it = local.find(c.collect.name); it != local.end()) {
        seen.insert(it->second.raw);
      } else if (const auto fixed = lookup(Term{c.collect}, env)) {
        if (const auto v = ws_.encode(*fixed)) seen.insert(v->raw);
      }
    }
    return seen.size();
  }

  const detail::Workspace& ws_;
};

nlohmann::ordered_json tree_json(const ProofTree& t) {
  nlohmann::ordered_json j;
  j["atom"] = t.atom;
  j["rule_id"] = t.rule_id ? nlohmann::ordered_json(*t.rule_id) : nlohmann::ordered_json(nullptr);
  if (t.rule_id) j["rule"] = t.rule_text;
  auto children = nlohmann::ordered_json::array();
  for (const auto& c : t.children) children.push_back(tree_json(c));
  j["children"] = std::move(children);
  j["naf_checked"] = t.naf_checked;
  j["conditions"] = t.conditions;
  return j;
}

ProofTree tree_from(const nlohmann::json& j) {
  ProofTree t;
  t.atom = j.at("atom").get<std::string>();
  if (!j.at("rule_id").is_null()) t.rule_id = j.at("rule_id").get<std::size_t>();
  if (j.contains("rule")) t.rule_text = j.at("rule").get<std::string>();
  for (const auto& c : j.at("children")) t.children.push_back(tree_from(c));
  t.naf_checked = j.value("naf_checked", std::vector<std::string>{});
  t.conditions = j.value("conditions", std::vector<std::string>{});
  return t;
}

void render(const ProofTree& t, std::size_t depth, std::string& out) {
  const std::string pad(depth * 2, ' ');
  out += pad + t.atom;
  if (t.rule_id) {
    out += "  <- rule " + std::to_string(*t.rule_id) + ": " + t.rule_text + "\n";
  } else {
    out += "  [fact]\n";
  }
  for (const auto& c : t.children) render(c, depth + 1, out);
  const std::string inner((depth + 1) * 2, ' ');
  for (const auto& n : t.naf_checked) out += inner + "not " + n + "  [absent]\n";
  for (const auto& c : t.conditions) out += inner + c + "  [holds]\n";
}

}  // namespace

ProofTree DerivedDatabase::explain(const GroundAtom& atom) const {
  const auto not_derived = [&] { return Error(ErrorCode::NotDerived, "not derived: " + atom.str()); };
  if (!ws_) throw not_derived();
  const auto rel = ws_->relation_id(atom.sig());
  if (!rel) throw not_derived();
  std::vector<detail::Value> key;
  for (const auto& c : atom.args) {
    const auto v = ws_->encode(c);
    if (!v) throw not_derived();
    key.push_back(*v);
  }
  const auto row = ws_->rels[*rel]->find(key.data());
  if (row == detail::kNoRow) throw not_derived();
  if (!ws_->provenance && ws_->rule_defined.contains(atom.sig())) {
    throw Error(ErrorCode::InvalidProgram, "provenance was not recorded for this evaluation");
  }
  return ProofBuilder(*ws_).build(*rel, row);
}

std::string to_json(const ProofTree& tree, int indent) { return tree_json(tree).dump(indent); }

ProofTree proof_from_json(const std::string& text) {
  try {
    return tree_from(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed proof tree: ") + e.what());
  }
}

std::string to_text(const ProofTree& tree) {
  std::string out;
  render(tree, 0, out);
  return out;
}

}  // namespace provlog
