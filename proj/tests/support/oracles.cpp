#include "oracles.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "provlog/rule_analysis.hpp"
#include "provlog/rule_parser.hpp"

namespace provlog::testing {

namespace {

Constant plain(Constant c) {
  c.quoted = false;
  return c;
}

Constant attr_constant(const FactBase& facts, const AttrValue& v) {
  if (const auto* e = std::get_if<EntityId>(&v)) return Constant::symbol(std::string(facts.label(*e)));
  if (const auto* s = std::get_if<std::string>(&v)) return Constant::symbol(*s);
  return Constant::integer(std::get<std::int64_t>(v));
}

using Env = std::map<std::string, Constant>;

std::optional<Constant> value_of(const Term& t, const Env& env) {
  if (const auto* c = as_constant(t)) return plain(*c);
  if (const auto* v = as_variable(t)) {
    if (const auto it = env.find(v->name); it != env.end()) return it->second;
  }
  return std::nullopt;
}

/// Extends `env` so that `atom` matches `tuple`; false on a clash.
bool match(const Atom& atom, const Tuple& tuple, Env& env) {
  if (atom.args.size() != tuple.size()) return false;
  for (std::size_t i = 0; i < tuple.size(); ++i) {
    const auto& term = atom.args[i];
    if (is_wildcard(term)) continue;
    if (const auto* c = as_constant(term)) {
      if (!same_value(*c, tuple[i])) return false;
      continue;
    }
    const auto& name = as_variable(term)->name;
    const auto [it, fresh] = env.emplace(name, tuple[i]);
    if (!fresh && !same_value(it->second, tuple[i])) return false;
  }
  return true;
}

bool compare(CompareOp op, const Constant& a, const Constant& b) {
  if (op == CompareOp::Eq) return same_value(a, b);
  if (op == CompareOp::Ne) return !same_value(a, b);
  if (!a.is_integer() || !b.is_integer()) return false;
  switch (op) {
    case CompareOp::Lt: return a.number < b.number;
    case CompareOp::Gt: return a.number > b.number;
    case CompareOp::Le: return a.number <= b.number;
    case CompareOp::Ge: return a.number >= b.number;
    default: return false;
  }
}

std::optional<std::int64_t> arithmetic(const Expr& e, const Env& env) {
  const auto first = value_of(e.first, env);
  if (!first || !first->is_integer()) return std::nullopt;
  std::int64_t acc = first->number;
  for (const auto& [op, t] : e.rest) {
    const auto v = value_of(t, env);
    if (!v || !v->is_integer()) return std::nullopt;
    acc = op == ArithOp::Add ? acc + v->number : acc - v->number;
  }
  return acc;
}

void vars_of(const Term& t, std::set<std::string>& out) {
  if (const auto* v = as_variable(t)) out.insert(v->name);
}

void vars_of(const Atom& a, std::set<std::string>& out) {
  for (const auto& t : a.args) vars_of(t, out);
}

/// Variables of a literal that must be bound before it can be evaluated.
std::set<std::string> inputs(const Literal& lit, const Rule& rule) {
  std::set<std::string> out;
  if (const auto* n = std::get_if<NafLit>(&lit)) vars_of(n->atom, out);
  if (const auto* c = std::get_if<CompareLit>(&lit)) {
    vars_of(c->lhs, out);
    vars_of(c->rhs, out);
  }
  if (const auto* a = std::get_if<AssignLit>(&lit)) {
    vars_of(a->expr.first, out);
    for (const auto& [_, t] : a->expr.rest) vars_of(t, out);
  }
  if (const auto* c = std::get_if<CountLit>(&lit)) {
    // Grouping variables: pattern variables that occur anywhere else.
    std::set<std::string> pattern, elsewhere;
    vars_of(c->pattern, pattern);
    if (rule.head) vars_of(*rule.head, elsewhere);
    for (const auto& other : rule.body) {
      if (&other == &lit) continue;
      if (const auto* p = std::get_if<PositiveLit>(&other)) vars_of(p->atom, elsewhere);
      if (const auto* n = std::get_if<NafLit>(&other)) vars_of(n->atom, elsewhere);
      if (const auto* cmp = std::get_if<CompareLit>(&other)) {
        vars_of(cmp->lhs, elsewhere);
        vars_of(cmp->rhs, elsewhere);
      }
      if (const auto* a = std::get_if<AssignLit>(&other)) {
        elsewhere.insert(a->target.name);
        vars_of(a->expr.first, elsewhere);
        for (const auto& [_, t] : a->expr.rest) vars_of(t, elsewhere);
      }
      if (const auto* k = std::get_if<CountLit>(&other)) {
        elsewhere.insert(k->result.name);
        vars_of(k->pattern, elsewhere);
      }
    }
    for (const auto& v : pattern) {
      if (elsewhere.contains(v)) out.insert(v);
    }
  }
  return out;
}

bool ready(const std::set<std::string>& need, const Env& env) {
  return std::all_of(need.begin(), need.end(), [&](const std::string& v) { return env.contains(v); });
}

/// Looks up relations with a lazily built index on the first column.
class Lookup {
 public:
  explicit Lookup(const Model& model) : model_(model) {}

  std::vector<const Tuple*> candidates(const Atom& atom, const Env& env) {
    const auto& rel = relation(model_, atom.sig());
    std::vector<const Tuple*> out;
    std::optional<Constant> key;
    if (!atom.args.empty()) key = value_of(atom.args[0], env);
    if (!key) {
      for (const auto& t : rel) out.push_back(&t);
      return out;
    }
    auto& idx = index_[atom.sig()];
    if (idx.empty() && !rel.empty()) {
      for (const auto& t : rel) idx[to_source(t[0])].push_back(&t);
    }
    if (const auto it = idx.find(to_source(*key)); it != idx.end()) out = it->second;
    return out;
  }

  bool any(const Atom& atom, const Env& env) {
    for (const auto* t : candidates(atom, env)) {
      Env local = env;
      if (match(atom, *t, local)) return true;
    }
    return false;
  }

  std::size_t count(const CountLit& c, const Env& env) {
    std::set<Constant, std::function<bool(const Constant&, const Constant&)>> seen(
        [](const Constant& a, const Constant& b) { return compare_values(a, b) < 0; });
    for (const auto* t : candidates(c.pattern, env)) {
      Env local = env;
      if (!match(c.pattern, *t, local)) continue;
      if (const auto it = local.find(c.collect.name); it != local.end()) seen.insert(it->second);
    }
    return seen.size();
  }

 private:
  const Model& model_;
  std::map<PredicateSig, std::map<std::string, std::vector<const Tuple*>>> index_;
};

/// Enumerates every satisfying assignment of a rule body, evaluating
/// literals in source order but deferring non-positive literals until
/// their inputs are bound.
void solve(const Rule& rule, std::vector<bool>& done, Env& env, Lookup& lookup,
           const std::function<void(const Env&)>& emit) {
  std::optional<std::size_t> next;
  for (std::size_t i = 0; i < rule.body.size() && !next; ++i) {
    if (done[i]) continue;
    if (std::holds_alternative<PositiveLit>(rule.body[i]) || ready(inputs(rule.body[i], rule), env)) next = i;
  }
  if (!next) {
    if (std::all_of(done.begin(), done.end(), [](bool d) { return d; })) emit(env);
    return;
  }
  const auto i = *next;
  const auto& lit = rule.body[i];
  done[i] = true;
  if (const auto* p = std::get_if<PositiveLit>(&lit)) {
    for (const auto* t : lookup.candidates(p->atom, env)) {
      Env local = env;
      if (match(p->atom, *t, local)) solve(rule, done, local, lookup, emit);
    }
  } else if (const auto* n = std::get_if<NafLit>(&lit)) {
    if (!lookup.any(n->atom, env)) solve(rule, done, env, lookup, emit);
  } else if (const auto* c = std::get_if<CompareLit>(&lit)) {
    if (compare(c->op, *value_of(c->lhs, env), *value_of(c->rhs, env))) solve(rule, done, env, lookup, emit);
  } else if (const auto* a = std::get_if<AssignLit>(&lit)) {
    if (const auto v = arithmetic(a->expr, env)) {
      Env local = env;
      const auto [it, fresh] = local.emplace(a->target.name, Constant::integer(*v));
      if (fresh || same_value(it->second, Constant::integer(*v))) solve(rule, done, local, lookup, emit);
    }
  } else if (const auto* c = std::get_if<CountLit>(&lit)) {
    const auto n = Constant::integer(static_cast<std::int64_t>(lookup.count(*c, env)));
    Env local = env;
    const auto [it, fresh] = local.emplace(c->result.name, n);
    if (fresh || same_value(it->second, n)) solve(rule, done, local, lookup, emit);
  }
  done[i] = false;
}

Tuple instantiate(const Atom& head, const Env& env) {
  Tuple out;
  for (const auto& t : head.args) out.push_back(*value_of(t, env));
  return out;
}

}  // namespace

bool TupleLess::operator()(const Tuple& a, const Tuple& b) const {
  const auto n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (const auto c = compare_values(a[i], b[i]); c != 0) return c < 0;
  }
  return a.size() < b.size();
}

/// The tuple with spelling (quoted or bare) erased.
Tuple plain(Tuple t) {
  for (auto& c : t) c.quoted = false;
  return t;
}

TupleSet to_set(const std::vector<Tuple>& tuples) {
  TupleSet out;
  for (const auto& t : tuples) out.insert(plain(t));
  return out;
}

const TupleSet& relation(const Model& model, const PredicateSig& sig) {
  static const TupleSet empty;
  const auto it = model.find(sig);
  return it == model.end() ? empty : it->second;
}

Model base_model(const FactBase& facts) {
  Model m;
  for (const auto kind : kAllNodeKinds) {
    auto& rel = m[{std::string(kind_name(kind)), 1}];
    for (const auto id : facts.nodes_of_kind(kind)) rel.insert({Constant::symbol(std::string(facts.label(id)))});
  }
  auto& edges = m[{"edge", 4}];
  for (const auto& e : facts.edges()) {
    edges.insert({Constant::symbol(std::string(facts.label(e.from))), Constant::symbol(std::string(facts.label(e.to))),
                  Constant::symbol(std::string(facts.edge_type_name(e.etype))),
                  Constant::integer(static_cast<std::int64_t>(e.ts))});
  }
  for (const auto& [pred, tuples] : facts.attributes()) {
    for (const auto& tuple : tuples) {
      Tuple t;
      for (const auto& v : tuple) t.push_back(attr_constant(facts, v));
      m[{pred, t.size()}].insert(std::move(t));
    }
  }
  return m;
}

Model naive_fixpoint(const Program& program, const FactBase& facts) {
  Model model = base_model(facts);
  const auto strat = stratify(program);
  for (const auto& stratum : strat.strata) {
    const std::set<PredicateSig> members(stratum.begin(), stratum.end());
    std::vector<const Rule*> rules;
    for (const auto& r : program.rules) {
      if (r.head && members.contains(r.head->sig())) rules.push_back(&r);
    }
    for (;;) {
      // Full re-derivation from the current model.
      Model next = model;
      Lookup lookup(model);
      for (const auto* rule : rules) {
        auto& out = next[rule->head->sig()];
        std::vector<bool> done(rule->body.size(), false);
        Env env;
        solve(*rule, done, env, lookup, [&](const Env& e) { out.insert(instantiate(*rule->head, e)); });
      }
      if (next == model) break;
      model = std::move(next);
    }
  }
  return model;
}

std::set<std::pair<std::string, std::string>> transitive_closure(const FactBase& facts) {
  std::map<std::uint32_t, std::set<std::uint32_t>> succ;
  for (const auto& e : facts.edges()) succ[e.from.index].insert(e.to.index);
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& [start, _] : succ) {
    std::set<std::uint32_t> seen;
    std::deque<std::uint32_t> queue(succ[start].begin(), succ[start].end());
    while (!queue.empty()) {
      const auto v = queue.front();
      queue.pop_front();
      if (!seen.insert(v).second) continue;
      if (const auto it = succ.find(v); it != succ.end()) queue.insert(queue.end(), it->second.begin(), it->second.end());
    }
    for (const auto v : seen) out.emplace(facts.label(EntityId{start}), facts.label(EntityId{v}));
  }
  return out;
}

std::set<std::string> forward_reachable(const FactBase& facts, const std::vector<std::string>& seeds) {
  const auto closure = transitive_closure(facts);
  std::set<std::string> out;
  for (const auto& [a, b] : closure) {
    if (std::find(seeds.begin(), seeds.end(), a) != seeds.end()) out.insert(b);
  }
  return out;
}

FactBase random_store(std::mt19937_64& rng, const RandomStoreOptions& options) {
  static const char* kOps[] = {"read", "write", "open", "connect", "send_data", "create_process", "spawn", "mmap"};
  const auto below = [&](std::uint64_t n) { return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(rng); };
  FactBase fb;
  const std::size_t n = 2 + below(options.max_nodes - 1);
  std::vector<EntityId> ids;
  std::map<NodeKind, std::vector<EntityId>> by_kind;
  for (std::size_t i = 0; i < n; ++i) {
    const auto kind = kAllNodeKinds[below(5)];
    const auto id = fb.intern(std::string(1, "pfcum"[static_cast<int>(kind)]) + std::to_string(i));
    fb.add_node(id, kind);
    ids.push_back(id);
    by_kind[kind].push_back(id);
  }
  // Half the edges are well-typed (a process acting on a target of the kind
  // the operation expects), the rest join arbitrary nodes.
  static const NodeKind kTargets[] = {NodeKind::File, NodeKind::File, NodeKind::File,
                                      NodeKind::NetworkConnection, NodeKind::NetworkConnection,
                                      NodeKind::Process, NodeKind::Process, NodeKind::MemoryObject};
  const std::size_t m = below(options.max_edges + 1);
  for (std::size_t i = 0; i < m; ++i) {
    const auto op = below(8);
    auto from = ids[below(n)];
    auto to = ids[below(n)];
    const auto& procs = by_kind[NodeKind::Process];
    const auto& targets = by_kind[kTargets[op]];
    if (below(2) == 0 && !procs.empty() && !targets.empty()) {
      from = procs[below(procs.size())];
      to = targets[below(targets.size())];
    }
    fb.add_edge(from, to, kOps[op], 1 + below(options.max_ts));
  }
  const auto some = [&](NodeKind kind, const char* pred, std::uint64_t one_in) {
    for (const auto id : by_kind[kind]) {
      if (below(one_in) == 0) fb.assert_attribute(pred, {id});
    }
  };
  some(NodeKind::File, "sensitive_file", 3);
  some(NodeKind::Process, "authorized_process", 3);
  some(NodeKind::Process, "whitelisted_process", 3);
  some(NodeKind::Process, "initial_compromise", 4);
  some(NodeKind::NetworkConnection, "untrusted_source", 2);
  for (const auto id : by_kind[NodeKind::Process]) {
    fb.assert_attribute("process_privilege", {id, static_cast<std::int64_t>(1 + below(3))});
  }
  for (const auto id : ids) {
    if (below(12) == 0) fb.assert_attribute("compromised_node", {id});
  }
  return fb;
}

std::vector<std::string> validate_proof(const ProofTree& tree, const Program& program, const Model& base,
                                        const Model& model) {
  std::vector<std::string> problems;
  const auto fail = [&](const std::string& msg) { problems.push_back(tree.atom + ": " + msg); };

  GroundAtom atom;
  try {
    atom = parse_ground_atom(tree.atom);
  } catch (const std::exception& e) {
    fail(std::string("unparsable atom: ") + e.what());
    return problems;
  }
  const Tuple tuple = plain(atom.args);

  if (tree.is_leaf()) {
    if (!tree.children.empty()) fail("leaf with children");
    if (!relation(base, atom.sig()).contains(tuple)) fail("leaf is not a base fact");
    return problems;
  }
  if (*tree.rule_id >= program.rules.size()) {
    fail("rule id out of range");
    return problems;
  }
  const Rule& rule = program.rules[*tree.rule_id];
  if (!rule.head || rule.head->sig() != atom.sig()) {
    fail("rule head does not match the atom");
    return problems;
  }
  if (tree.rule_text != to_source(rule)) fail("rule text differs from the program");
  if (!relation(model, atom.sig()).contains(tuple)) fail("atom is not in the model");

  Env env;
  if (!match(*rule.head, tuple, env)) fail("head does not unify");

  std::size_t k = 0;
  std::size_t nafs = 0;
  for (const auto& lit : rule.body) {
    if (const auto* p = std::get_if<PositiveLit>(&lit)) {
      if (k >= tree.children.size()) {
        fail("missing child for " + to_source(p->atom));
        return problems;
      }
      GroundAtom child;
      try {
        child = parse_ground_atom(tree.children[k].atom);
      } catch (const std::exception&) {
        fail("unparsable child");
        return problems;
      }
      if (child.sig() != p->atom.sig() || !match(p->atom, plain(child.args), env)) {
        fail("child " + tree.children[k].atom + " does not instantiate " + to_source(p->atom));
      }
      ++k;
    }
    if (std::holds_alternative<NafLit>(lit)) ++nafs;
  }
  if (k != tree.children.size()) fail("extra children");
  if (nafs != tree.naf_checked.size()) fail("naf annotations do not match the rule");

  // Non-positive literals, in any order in which their inputs are bound.
  Lookup lookup(model);
  std::vector<bool> done(rule.body.size(), false);
  for (std::size_t i = 0; i < rule.body.size(); ++i) done[i] = std::holds_alternative<PositiveLit>(rule.body[i]);
  for (bool progressed = true; progressed;) {
    progressed = false;
    for (std::size_t i = 0; i < rule.body.size(); ++i) {
      if (done[i] || !ready(inputs(rule.body[i], rule), env)) continue;
      done[i] = progressed = true;
      const auto& lit = rule.body[i];
      if (const auto* n = std::get_if<NafLit>(&lit)) {
        if (lookup.any(n->atom, env)) fail("negated atom holds: " + to_source(n->atom));
      } else if (const auto* c = std::get_if<CompareLit>(&lit)) {
        if (!compare(c->op, *value_of(c->lhs, env), *value_of(c->rhs, env))) fail("comparison fails");
      } else if (const auto* a = std::get_if<AssignLit>(&lit)) {
        const auto v = arithmetic(a->expr, env);
        if (!v) {
          fail("arithmetic over non-integers");
          continue;
        }
        const auto [it, fresh] = env.emplace(a->target.name, Constant::integer(*v));
        if (!fresh && !same_value(it->second, Constant::integer(*v))) fail("assignment mismatch");
      } else if (const auto* c = std::get_if<CountLit>(&lit)) {
        const auto n = Constant::integer(static_cast<std::int64_t>(lookup.count(*c, env)));
        const auto [it, fresh] = env.emplace(c->result.name, n);
        if (!fresh && !same_value(it->second, n)) fail("count mismatch");
      }
    }
  }
  if (std::find(done.begin(), done.end(), false) != done.end()) fail("literals left unevaluated");

  for (const auto& child : tree.children) {
    const auto sub = validate_proof(child, program, base, model);
    problems.insert(problems.end(), sub.begin(), sub.end());
  }
  return problems;
}

FactBase store_from_lines(const std::string& text) {
  FactBase fb;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream words(line);
    std::string head;
    if (!(words >> head)) continue;
    if (const auto kind = parse_kind(head)) {
      std::string label;
      while (words >> label) fb.add_node(fb.intern(label), *kind);
    } else if (head == "edge") {
      std::string from, to, op;
      Timestamp ts = 0;
      words >> from >> to >> op >> ts;
      fb.add_edge(fb.intern(from), fb.intern(to), op, ts);
    } else if (head == "attr") {
      std::string pred, word;
      words >> pred;
      AttrTuple args;
      while (words >> word) {
        if (const auto id = fb.find(word); id && fb.is_registered(*id)) {
          args.emplace_back(*id);
        } else if (!word.empty() && std::all_of(word.begin(), word.end(), [](char ch) { return ch >= '0' && ch <= '9'; })) {
          args.emplace_back(static_cast<std::int64_t>(std::stoll(word)));
        } else {
          args.emplace_back(word);
        }
      }
      fb.assert_attribute(pred, std::move(args));
    } else {
      throw std::invalid_argument("store_from_lines: unknown record " + head);
    }
  }
  return fb;
}

std::set<std::vector<std::string>> labels(const TupleSet& tuples) {
  std::set<std::vector<std::string>> out;
  for (const auto& t : tuples) {
    std::vector<std::string> row;
    for (const auto& c : t) row.push_back(value_text(c));
    out.insert(std::move(row));
  }
  return out;
}

std::set<std::vector<std::string>> labels(const std::vector<Tuple>& tuples) {
  return labels(to_set(tuples));
}

}  // namespace provlog::testing
