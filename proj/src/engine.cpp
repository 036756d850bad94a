#include "provlog/engine.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <ostream>
#include <unordered_set>

#include "json.hpp"
#include "planning.hpp"
#include "provlog/error.hpp"
#include "provlog/rule_analysis.hpp"
#include "relation.hpp"
#include "workspace.hpp"

namespace provlog {

/// Grants engine internals access to a database's workspace.
struct DatabaseAccess {
  static const detail::Workspace* get(const DerivedDatabase& db) { return db.ws_.get(); }
  static DerivedDatabase make(std::shared_ptr<const detail::Workspace> ws) { return DerivedDatabase(std::move(ws)); }
};

namespace detail {
namespace {

constexpr std::int64_t kIntLimit = std::int64_t{1} << 62;
constexpr std::size_t kMaxArity = 32;

Value checked_integer(std::int64_t n, const std::string& what) {
  if (n >= kIntLimit || n < -kIntLimit) {
    throw Error(ErrorCode::TypeMismatch, what + " " + std::to_string(n) + " is outside the engine's integer range");
  }
  return Value::integer(n);
}

bool is_internal(const std::string& name) { return name.rfind("__", 0) == 0; }

// --- compiled rule plans ----------------------------------------------------

enum class OpKind : std::uint8_t { KeyConst, KeyVar, Bind, Check, Ignore };

struct ArgOp {
  OpKind kind = OpKind::Ignore;
  std::uint32_t slot = 0;
  Value value;
};

struct Operand {
  bool is_var = false;
  std::uint32_t slot = 0;
  Value value;

  Value get(const std::vector<Value>& env) const { return is_var ? env[slot] : value; }
};

enum class Range : std::uint8_t { Full, Old, Delta };
enum class StepKind : std::uint8_t { Scan, Negation, Compare, Assign, Count };

struct Step {
  StepKind kind = StepKind::Scan;
  std::uint32_t rel = 0;
  std::vector<ArgOp> args;
  std::uint32_t mask = 0;
  bool has_ignore = false;
  Range range = Range::Full;
  int pos = -1;  // witness slot: index among the rule's positive literals

  CompareOp op = CompareOp::Eq;
  Operand lhs;
  Operand rhs;
  std::vector<std::pair<ArithOp, Operand>> terms;

  std::uint32_t target = 0;  // assignment target / count result
  bool target_bound = false;
  std::uint32_t collect = 0;
};

struct Plan {
  std::uint32_t rule_id = 0;
  std::uint32_t head_rel = 0;
  std::vector<Operand> head;
  std::vector<Step> steps;
  std::uint32_t slots = 0;
  std::uint32_t positives = 0;
  std::optional<std::uint32_t> delta_rel;
};

class Compiler {
 public:
  explicit Compiler(Workspace& ws) : ws_(ws) {}

  /// `delta` is the body index of the delta literal of a semi-naive
  /// variant; `recursive(i)` tells whether body literal i reads a relation
  /// of the component being evaluated.
  Plan compile(const Rule& rule, std::uint32_t rule_id, const std::vector<std::size_t>& order,
               std::optional<std::size_t> delta, const std::function<bool(std::size_t)>& recursive) {
    slots_.clear();
    Plan plan;
    plan.rule_id = rule_id;
    plan.head_rel = rel(rule.head->sig());

    std::vector<int> pos_of(rule.body.size(), -1);
    int npos = 0;
    for (std::size_t i = 0; i < rule.body.size(); ++i) {
      if (std::holds_alternative<PositiveLit>(rule.body[i])) pos_of[i] = npos++;
    }
    plan.positives = static_cast<std::uint32_t>(npos);

    VarSet bound;
    for (const auto i : order) {
      const auto& lit = rule.body[i];
      Step s;
      if (const auto* p = std::get_if<PositiveLit>(&lit)) {
        s.kind = StepKind::Scan;
        s.rel = rel(p->atom.sig());
        compile_args(p->atom, bound, s);
        s.pos = pos_of[i];
        if (delta) {
          if (i == *delta) {
            s.range = Range::Delta;
            plan.delta_rel = s.rel;
          } else if (i < *delta && recursive(i)) {
            s.range = Range::Old;
          }
        }
        add_vars(p->atom, bound);
      } else if (const auto* n = std::get_if<NafLit>(&lit)) {
        s.kind = StepKind::Negation;
        s.rel = rel(n->atom.sig());
        compile_args(n->atom, bound, s);
      } else if (const auto* c = std::get_if<CompareLit>(&lit)) {
        s.kind = StepKind::Compare;
        s.op = c->op;
        s.lhs = operand(c->lhs);
        s.rhs = operand(c->rhs);
      } else if (const auto* a = std::get_if<AssignLit>(&lit)) {
        s.kind = StepKind::Assign;
        s.lhs = operand(a->expr.first);
        for (const auto& [op, t] : a->expr.rest) s.terms.emplace_back(op, operand(t));
        s.target_bound = bound.contains(a->target.name);
        s.target = slot(a->target.name);
        bound.insert(a->target.name);
      } else if (const auto* c = std::get_if<CountLit>(&lit)) {
        s.kind = StepKind::Count;
        s.rel = rel(c->pattern.sig());
        compile_args(c->pattern, bound, s);
        s.collect = slot(c->collect.name);
        s.target_bound = bound.contains(c->result.name);
        s.target = slot(c->result.name);
        bound.insert(c->result.name);
      }
      plan.steps.push_back(std::move(s));
    }
    for (const auto& t : rule.head->args) plan.head.push_back(operand(t));
    plan.slots = static_cast<std::uint32_t>(slots_.size());
    return plan;
  }

 private:
  std::uint32_t rel(const PredicateSig& sig) const { return ws_.rel_of.at(sig); }

  std::uint32_t slot(const std::string& var) {
    const auto [it, _] = slots_.emplace(var, static_cast<std::uint32_t>(slots_.size()));
    return it->second;
  }

  Value constant(const Constant& c) {
    if (c.is_integer()) return checked_integer(c.number, "integer constant");
    return Value::symbol(ws_.symbols->intern(c.text));
  }

  Operand operand(const Term& t) {
    Operand o;
    if (const auto* v = as_variable(t)) {
      o.is_var = true;
      o.slot = slot(v->name);
    } else if (const auto* c = as_constant(t)) {
      o.value = constant(*c);
    }
    return o;
  }

  void compile_args(const Atom& atom, const VarSet& bound, Step& s) {
    if (atom.args.size() > kMaxArity) {
      throw Error(ErrorCode::InvalidProgram, "predicate " + atom.predicate + " exceeds the maximum arity of 32");
    }
    VarSet local;
    for (std::size_t col = 0; col < atom.args.size(); ++col) {
      const auto& t = atom.args[col];
      ArgOp op;
      if (const auto* c = as_constant(t)) {
        op.kind = OpKind::KeyConst;
        op.value = constant(*c);
        s.mask |= 1U << col;
      } else if (const auto* v = as_variable(t)) {
        op.slot = slot(v->name);
        if (bound.contains(v->name)) {
          op.kind = OpKind::KeyVar;
          s.mask |= 1U << col;
        } else if (local.insert(v->name).second) {
          op.kind = OpKind::Bind;
        } else {
          op.kind = OpKind::Check;
        }
      } else {
        op.kind = OpKind::Ignore;
        s.has_ignore = true;
      }
      s.args.push_back(op);
    }
  }

  Workspace& ws_;
  std::map<std::string, std::uint32_t> slots_;
};

bool compare(CompareOp op, Value a, Value b) {
  if (a.is_int() && b.is_int()) {
    const auto x = a.as_int(), y = b.as_int();
    switch (op) {
      case CompareOp::Lt: return x < y;
      case CompareOp::Gt: return x > y;
      case CompareOp::Le: return x <= y;
      case CompareOp::Ge: return x >= y;
      case CompareOp::Eq: return x == y;
      case CompareOp::Ne: return x != y;
    }
  }
  // Symbols compare by identity only.
  if (op == CompareOp::Eq) return a == b;
  if (op == CompareOp::Ne) return a != b;
  return false;
}

// --- execution ------------------------------------------------------------------

class Executor {
 public:
  Executor(Workspace& ws, std::size_t limit) : ws_(ws), limit_(limit) {}

  /// Row windows per relation: Old = [0, old_end), Delta = [old_end, full_end),
  /// Full = [0, full_end).
  std::vector<std::uint32_t> old_end;
  std::vector<std::uint32_t> full_end;

  void run(const Plan& plan) {
    plan_ = &plan;
    env_.assign(plan.slots, Value{});
    refs_.assign(plan.positives, TupleRef{});
    head_.assign(plan.head.size(), Value{});
    exec(0);
  }

 private:
  void exec(std::size_t i) {
    if (i == plan_->steps.size()) {
      emit();
      return;
    }
    const Step& s = plan_->steps[i];
    switch (s.kind) {
      case StepKind::Scan: scan(s, i); break;
      case StepKind::Negation:
        if (!exists(s)) exec(i + 1);
        break;
      case StepKind::Compare:
        if (compare(s.op, s.lhs.get(env_), s.rhs.get(env_))) exec(i + 1);
        break;
      case StepKind::Assign: assign(s, i); break;
      case StepKind::Count: count(s, i); break;
    }
  }

  void fill_key(const Step& s, Value* key) const {
    for (std::size_t c = 0; c < s.args.size(); ++c) {
      const auto& op = s.args[c];
      if (op.kind == OpKind::KeyConst) key[c] = op.value;
      if (op.kind == OpKind::KeyVar) key[c] = env_[op.slot];
    }
  }

  /// Applies the step's column ops to row `r`; false on mismatch.
  bool match(const Step& s, const Relation& rel, std::uint32_t r) {
    const Value* v = rel.row(r);
    for (std::size_t c = 0; c < s.args.size(); ++c) {
      const auto& op = s.args[c];
      switch (op.kind) {
        case OpKind::KeyConst:
          if (v[c] != op.value) return false;
          break;
        case OpKind::KeyVar:
        case OpKind::Check:
          if (v[c] != env_[op.slot]) return false;
          break;
        case OpKind::Bind: env_[op.slot] = v[c]; break;
        case OpKind::Ignore: break;
      }
    }
    return true;
  }

  /// Calls `fn(row)` for each row in [begin, end) that may match the step's
  /// key columns. Safe against appends to the relation during iteration.
  template <typename Fn>
  void candidates(const Step& s, Relation& rel, std::uint32_t begin, std::uint32_t end, Fn&& fn) {
    if (begin >= end) return;
    if (s.mask == 0) {
      for (auto r = begin; r < end; ++r) fn(r);
      return;
    }
    Value key[kMaxArity];
    fill_key(s, key);
    const auto& idx = rel.index(s.mask);
    const auto it = idx.buckets.find(Relation::key_hash(s.mask, key, rel.arity()));
    if (it == idx.buckets.end()) return;
    const std::vector<std::uint32_t>& bucket = it->second;
    auto k = static_cast<std::size_t>(std::lower_bound(bucket.begin(), bucket.end(), begin) - bucket.begin());
    for (; k < bucket.size(); ++k) {
      const auto r = bucket[k];
      if (r >= end) break;
      fn(r);
    }
  }

  void scan(const Step& s, std::size_t i) {
    Relation& rel = *ws_.rels[s.rel];
    std::uint32_t begin = 0, end = full_end[s.rel];
    if (s.range == Range::Old) end = old_end[s.rel];
    if (s.range == Range::Delta) begin = old_end[s.rel];
    candidates(s, rel, begin, end, [&](std::uint32_t r) {
      if (!match(s, rel, r)) return;
      if (s.pos >= 0) refs_[static_cast<std::size_t>(s.pos)] = {s.rel, r};
      exec(i + 1);
    });
  }

  bool exists(const Step& s) {
    Relation& rel = *ws_.rels[s.rel];
    if (!s.has_ignore) {
      Value key[kMaxArity];
      fill_key(s, key);
      return rel.find(key) != kNoRow;
    }
    // Wildcards: any row agreeing on the bound columns (projection).
    bool found = false;
    candidates(s, rel, 0, rel.size(), [&](std::uint32_t r) {
      if (!found && match(s, rel, r)) found = true;
    });
    return found;
  }

  void bind_result(const Step& s, std::size_t i, Value result) {
    if (s.target_bound) {
      if (env_[s.target] == result) exec(i + 1);
      return;
    }
    env_[s.target] = result;
    exec(i + 1);
  }

  void assign(const Step& s, std::size_t i) {
    const Value first = s.lhs.get(env_);
    if (!first.is_int()) return;
    std::int64_t acc = first.as_int();
    for (const auto& [op, t] : s.terms) {
      const Value x = t.get(env_);
      if (!x.is_int()) return;
      acc = op == ArithOp::Add ? acc + x.as_int() : acc - x.as_int();
    }
    bind_result(s, i, checked_integer(acc, "arithmetic result"));
  }

  void count(const Step& s, std::size_t i) {
    Relation& rel = *ws_.rels[s.rel];
    std::unordered_set<std::uint64_t> seen;
    candidates(s, rel, 0, rel.size(), [&](std::uint32_t r) {
      if (match(s, rel, r)) seen.insert(env_[s.collect].raw);
    });
    bind_result(s, i, Value::integer(static_cast<std::int64_t>(seen.size())));
  }

  void emit() {
    for (std::size_t c = 0; c < plan_->head.size(); ++c) head_[c] = plan_->head[c].get(env_);
    Relation& rel = *ws_.rels[plan_->head_rel];
    const auto r = rel.insert(head_.data());
    if (r == kNoRow) return;
    if (++ws_.derived > limit_) {
      throw Error(ErrorCode::ResourceLimit, "derived tuple limit of " + std::to_string(limit_) +
                                                " exceeded while deriving " + ws_.sigs[plan_->head_rel].str());
    }
    if (ws_.provenance) rel.set_witness(r, plan_->rule_id, refs_);
  }

  Workspace& ws_;
  std::size_t limit_;
  const Plan* plan_ = nullptr;
  std::vector<Value> env_;
  std::vector<TupleRef> refs_;
  std::vector<Value> head_;
};

/// Strongly connected components of the predicate dependency graph, in
/// evaluation order (dependencies first).
std::vector<std::vector<PredicateSig>> evaluation_order(const std::vector<Rule>& rules) {
  std::set<PredicateSig> nodes_set;
  std::map<PredicateSig, std::set<PredicateSig>> deps;
  for (const auto& r : rules) {
    const auto h = r.head->sig();
    nodes_set.insert(h);
    for (const auto& lit : r.body) {
      if (const Atom* a = literal_atom(lit)) {
        nodes_set.insert(a->sig());
        deps[h].insert(a->sig());
      }
    }
  }
  const std::vector<PredicateSig> nodes(nodes_set.begin(), nodes_set.end());
  const auto id = [&](const PredicateSig& s) {
    return static_cast<std::size_t>(std::lower_bound(nodes.begin(), nodes.end(), s) - nodes.begin());
  };
  const std::size_t n = nodes.size();
  std::vector<std::size_t> disc(n, SIZE_MAX), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::size_t timer = 0;
  std::vector<std::vector<PredicateSig>> out;
  std::function<void(std::size_t)> visit = [&](std::size_t v) {
    disc[v] = low[v] = timer++;
    stack.push_back(v);
    on_stack[v] = true;
    if (const auto it = deps.find(nodes[v]); it != deps.end()) {
      for (const auto& d : it->second) {
        const auto w = id(d);
        if (disc[w] == SIZE_MAX) {
          visit(w);
          low[v] = std::min(low[v], low[w]);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], disc[w]);
        }
      }
    }
    if (low[v] == disc[v]) {
      std::vector<PredicateSig> comp;
      for (;;) {
        const auto w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        comp.push_back(nodes[w]);
        if (w == v) break;
      }
      std::sort(comp.begin(), comp.end());
      out.push_back(std::move(comp));
    }
  };
  for (std::size_t v = 0; v < n; ++v) {
    if (disc[v] == SIZE_MAX) visit(v);
  }
  return out;
}

}  // namespace

// --- engine state shared across evaluations -----------------------------------

struct EngineState {
  const FactBase& facts;
  EvalOptions options;
  std::shared_ptr<SymbolTable> symbols = std::make_shared<SymbolTable>();
  std::set<PredicateSig> base_sigs;
  std::map<PredicateSig, std::shared_ptr<Relation>> base_cache;

  EngineState(const FactBase& f, EvalOptions o) : facts(f), options(o) {
    // Entity labels first, so a symbol id equals the entity index.
    for (std::uint32_t i = 0; i < facts.interned_count(); ++i) symbols->intern(facts.label(EntityId{i}));
    const auto& base = graph_base_predicates();
    base_sigs.insert(base.begin(), base.end());
  }

  Value entity(EntityId e) const { return Value::symbol(e.index); }

  std::shared_ptr<Relation> build_base(const PredicateSig& sig) {
    auto rel = std::make_shared<Relation>(sig.arity);
    if (sig.name == "edge" && sig.arity == 4) {
      for (const auto& e : facts.edges()) {
        if (e.ts > kMaxTimestamp) {
          throw Error(ErrorCode::TypeMismatch,
                      "timestamp " + std::to_string(e.ts) + " exceeds the engine's integer range");
        }
        const Value row[4] = {entity(e.from), entity(e.to),
                              Value::symbol(symbols->intern(facts.edge_type_name(e.etype))),
                              Value::integer(static_cast<std::int64_t>(e.ts))};
        rel->insert(row);
      }
      return rel;
    }
    if (sig.arity == 1) {
      if (const auto kind = parse_kind(sig.name)) {
        for (const auto id : facts.nodes_of_kind(*kind)) {
          const Value row[1] = {entity(id)};
          rel->insert(row);
        }
        return rel;
      }
    }
    std::vector<Value> row(sig.arity);
    for (const auto& tuple : facts.attribute(sig.name)) {
      if (tuple.size() != sig.arity) continue;
      for (std::size_t i = 0; i < tuple.size(); ++i) {
        const auto& a = tuple[i];
        if (const auto* e = std::get_if<EntityId>(&a)) row[i] = entity(*e);
        if (const auto* s = std::get_if<std::string>(&a)) row[i] = Value::symbol(symbols->intern(*s));
        if (const auto* n = std::get_if<std::int64_t>(&a)) row[i] = checked_integer(*n, "attribute value");
      }
      rel->insert(row.data());
    }
    return rel;
  }

  std::shared_ptr<Relation> base(const PredicateSig& sig) {
    auto& slot = base_cache[sig];
    if (!slot) slot = build_base(sig);
    return slot;
  }

  /// Evaluates `rules` (all with heads) and returns the populated workspace.
  std::shared_ptr<Workspace> evaluate(const Program& source, const std::vector<Rule>& rules,
                                      const std::vector<std::uint32_t>& rule_ids, bool provenance) {
    auto ws = std::make_shared<Workspace>();
    ws->symbols = symbols;
    ws->program = source;
    ws->provenance = provenance;

    std::set<PredicateSig> all;
    for (const auto& r : rules) {
      ws->rule_defined.insert(r.head->sig());
      all.insert(r.head->sig());
      for (const auto& lit : r.body) {
        if (const Atom* a = literal_atom(lit)) all.insert(a->sig());
      }
    }
    for (const auto& sig : all) {
      std::shared_ptr<Relation> rel;
      if (base_sigs.contains(sig)) {
        auto b = base(sig);
        if (ws->rule_defined.contains(sig)) {
          // Rules add to a base relation: evaluate over a private copy.
          rel = std::make_shared<Relation>(sig.arity);
          for (std::uint32_t r = 0; r < b->size(); ++r) rel->insert(b->row(r));
        } else {
          rel = std::move(b);
        }
      } else {
        rel = std::make_shared<Relation>(sig.arity);
      }
      ws->rel_of.emplace(sig, static_cast<std::uint32_t>(ws->rels.size()));
      ws->sigs.push_back(sig);
      ws->rels.push_back(std::move(rel));
    }

    Compiler compiler(*ws);
    Executor exec(*ws, options.max_derived_tuples);
    // Rows matching the literal's constants, read from the constant columns' index.
    const auto size_of = [&](const Atom& a) -> std::size_t {
      auto& rel = *ws->rels[ws->rel_of.at(a.sig())];
      std::uint32_t mask = 0;
      std::vector<Value> key(a.args.size());
      for (std::size_t i = 0; i < a.args.size(); ++i) {
        const auto* c = as_constant(a.args[i]);
        if (c == nullptr) continue;
        const auto v = ws->encode(*c);
        if (!v) return 0;
        key[i] = *v;
        mask |= 1U << i;
      }
      if (mask == 0) return rel.size();
      const auto& idx = rel.index(mask);
      const auto it = idx.buckets.find(Relation::key_hash(mask, key.data(), a.args.size()));
      return it == idx.buckets.end() ? 0 : it->second.size();
    };

    for (const auto& component : evaluation_order(rules)) {
      std::set<std::uint32_t> comp_rels;
      for (const auto& sig : component) {
        if (ws->rule_defined.contains(sig)) comp_rels.insert(ws->rel_of.at(sig));
      }
      if (comp_rels.empty()) continue;

      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < rules.size(); ++i) {
        if (comp_rels.contains(ws->rel_of.at(rules[i].head->sig()))) members.push_back(i);
      }

      const auto n = ws->rels.size();
      exec.old_end.resize(n);
      exec.full_end.resize(n);
      for (std::size_t r = 0; r < n; ++r) exec.old_end[r] = exec.full_end[r] = ws->rels[r]->size();

      std::vector<Plan> variants;
      for (const auto i : members) {
        const Rule& rule = rules[i];
        const auto recursive = [&](std::size_t lit) {
          const auto* p = std::get_if<PositiveLit>(&rule.body[lit]);
          return p != nullptr && comp_rels.contains(ws->rel_of.at(p->atom.sig()));
        };
        const auto order = order_body(rule.head, rule.body, {}, std::nullopt, size_of);
        exec.run(compiler.compile(rule, rule_ids[i], order, std::nullopt, recursive));
        for (std::size_t lit = 0; lit < rule.body.size(); ++lit) {
          if (!recursive(lit)) continue;
          const auto vorder = order_body(rule.head, rule.body, {}, lit, size_of);
          variants.push_back(compiler.compile(rule, rule_ids[i], vorder, lit, recursive));
        }
      }
      if (variants.empty()) continue;

      for (;;) {
        bool changed = false;
        for (const auto r : comp_rels) {
          exec.old_end[r] = exec.full_end[r];
          exec.full_end[r] = ws->rels[r]->size();
          changed = changed || exec.full_end[r] > exec.old_end[r];
        }
        if (!changed) break;
        for (const auto& plan : variants) {
          const auto d = *plan.delta_rel;
          if (exec.full_end[d] > exec.old_end[d]) exec.run(plan);
        }
      }
    }
    return ws;
  }
};

namespace {

void require_valid(const Program& program, const std::vector<Diagnostic>& extra = {}) {
  auto diags = validate(program);
  diags.insert(diags.end(), extra.begin(), extra.end());
  if (diags.empty()) return;
  std::string msg = "invalid program:";
  for (const auto& d : diags) msg += "\n  " + d.str();
  throw Error(ErrorCode::InvalidProgram, msg);
}

/// Named variables a constraint body binds, in first-occurrence order.
std::vector<std::string> constraint_vars(const Rule& rule) {
  std::vector<std::string> out;
  const auto add = [&](const std::string& v) {
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  };
  for (const auto& lit : rule.body) {
    if (const auto* p = std::get_if<PositiveLit>(&lit)) {
      std::vector<std::string> vs;
      collect_vars(p->atom, vs);
      for (const auto& v : vs) add(v);
    }
    if (const auto* a = std::get_if<AssignLit>(&lit)) add(a->target.name);
    if (const auto* c = std::get_if<CountLit>(&lit)) add(c->result.name);
  }
  return out;
}

}  // namespace
}  // namespace detail

// --- Engine ------------------------------------------------------------------------

struct Engine::Impl : detail::EngineState {
  using EngineState::EngineState;
};

Engine::Engine(const FactBase& facts, EvalOptions options) : impl_(std::make_unique<Impl>(facts, options)) {}
Engine::~Engine() = default;
Engine::Engine(Engine&&) noexcept = default;
Engine& Engine::operator=(Engine&&) noexcept = default;

const EvalOptions& Engine::options() const { return impl_->options; }

DerivedDatabase Engine::materialize(const Program& program) {
  detail::require_valid(program);
  std::vector<Rule> rules;
  std::vector<std::uint32_t> ids;
  std::vector<detail::ConstraintInfo> constraints;
  for (std::size_t i = 0; i < program.rules.size(); ++i) {
    Rule r = program.rules[i];
    if (r.is_constraint()) {
      detail::ConstraintInfo info;
      info.rule_index = i;
      info.vars = detail::constraint_vars(r);
      Atom head{"__violation_" + std::to_string(i), {}, r.loc};
      for (const auto& v : info.vars) head.args.emplace_back(Variable{v});
      info.sig = head.sig();
      r.head = std::move(head);
      constraints.push_back(std::move(info));
    }
    rules.push_back(std::move(r));
    ids.push_back(static_cast<std::uint32_t>(i));
  }
  // The whole program must be stratifiable, not only the part evaluated.
  stratify(program);
  auto ws = impl_->evaluate(program, rules, ids, impl_->options.record_provenance);
  ws->constraints = std::move(constraints);
  return DatabaseAccess::make(std::move(ws));
}

DerivedDatabase Engine::materialize_for(const Program& program, const std::vector<PredicateSig>& goals) {
  detail::require_valid(program);
  std::map<PredicateSig, std::vector<std::size_t>> by_head;
  for (std::size_t i = 0; i < program.rules.size(); ++i) {
    if (program.rules[i].head) by_head[program.rules[i].head->sig()].push_back(i);
  }
  std::set<PredicateSig> needed;
  std::vector<PredicateSig> work(goals.begin(), goals.end());
  while (!work.empty()) {
    const auto sig = work.back();
    work.pop_back();
    if (!needed.insert(sig).second) continue;
    const auto it = by_head.find(sig);
    if (it == by_head.end()) continue;
    for (const auto i : it->second) {
      for (const auto& lit : program.rules[i].body) {
        if (const Atom* a = literal_atom(lit)) work.push_back(a->sig());
      }
    }
  }
  std::vector<Rule> rules;
  std::vector<std::uint32_t> ids;
  for (std::size_t i = 0; i < program.rules.size(); ++i) {
    const auto& r = program.rules[i];
    if (r.head && needed.contains(r.head->sig())) {
      rules.push_back(r);
      ids.push_back(static_cast<std::uint32_t>(i));
    }
  }
  // The whole program must be stratifiable, not only the part evaluated.
  stratify(program);
  auto ws = impl_->evaluate(program, rules, ids, impl_->options.record_provenance);
  // Goals without rules still get (possibly empty or base) relations.
  for (const auto& g : goals) {
    if (ws->rel_of.contains(g)) continue;
    ws->rel_of.emplace(g, static_cast<std::uint32_t>(ws->rels.size()));
    ws->sigs.push_back(g);
    ws->rels.push_back(impl_->base_sigs.contains(g) ? impl_->base(g) : std::make_shared<detail::Relation>(g.arity));
  }
  return DatabaseAccess::make(std::move(ws));
}

QueryResult Engine::query(const Query& q, const Program& program) {
  const std::string answer = "__answer";
  Program check = program;
  Atom head{answer, {}, {}};
  for (const auto& v : q.answer_vars) head.args.emplace_back(Variable{v});
  check.rules.push_back(Rule{head, q.body, {}});
  detail::require_valid(check);
  stratify(program);

  std::set<PredicateSig> full_eval;
  for (const auto& r : program.rules) {
    if (r.head && impl_->base_sigs.contains(r.head->sig())) full_eval.insert(r.head->sig());
  }
  const Program rewritten = detail::magic_rewrite(program, q, answer, full_eval);
  std::vector<Rule> rules;
  std::vector<std::uint32_t> ids;
  for (std::size_t i = 0; i < rewritten.rules.size(); ++i) {
    rules.push_back(rewritten.rules[i]);
    ids.push_back(static_cast<std::uint32_t>(i));
  }
  auto ws = impl_->evaluate(rewritten, rules, ids, false);

  QueryResult result;
  result.variables = q.answer_vars;
  const auto rel = ws->rel_of.at(PredicateSig{answer, q.answer_vars.size()});
  for (std::uint32_t r = 0; r < ws->rels[rel]->size(); ++r) result.rows.push_back(ws->decode_row(rel, r));
  std::sort(result.rows.begin(), result.rows.end(), [](const Tuple& a, const Tuple& b) {
    return std::lexicographical_compare_three_way(a.begin(), a.end(), b.begin(), b.end(), compare_values) < 0;
  });
  std::set<PredicateSig> touched;
  for (const auto& sig : ws->sigs) {
    const auto name = detail::original_predicate(sig.name);
    if (!name.empty()) touched.insert({name, sig.arity});
  }
  result.evaluated_predicates.assign(touched.begin(), touched.end());
  return result;
}

DerivedDatabase materialize(const Program& program, const FactBase& facts, const EvalOptions& options) {
  Engine engine(facts, options);
  return engine.materialize(program);
}

QueryResult query(const Query& q, const Program& program, const FactBase& facts, const EvalOptions& options) {
  Engine engine(facts, options);
  return engine.query(q, program);
}

// --- DerivedDatabase ------------------------------------------------------------------

namespace {

bool tuple_less(const Tuple& a, const Tuple& b) {
  return std::lexicographical_compare_three_way(a.begin(), a.end(), b.begin(), b.end(), compare_values) < 0;
}

const Program& empty_program() {
  static const Program p;
  return p;
}

}  // namespace

std::vector<PredicateSig> DerivedDatabase::derived_predicates() const {
  std::vector<PredicateSig> out;
  if (!ws_) return out;
  for (const auto& sig : ws_->rule_defined) {
    if (!detail::is_internal(sig.name)) out.push_back(sig);
  }
  return out;
}

std::vector<PredicateSig> DerivedDatabase::predicates() const {
  std::vector<PredicateSig> out;
  if (!ws_) return out;
  for (const auto& [sig, _] : ws_->rel_of) {
    if (!detail::is_internal(sig.name)) out.push_back(sig);
  }
  return out;
}

bool DerivedDatabase::has_relation(const PredicateSig& sig) const {
  return ws_ && ws_->rel_of.contains(sig);
}

std::vector<Tuple> DerivedDatabase::tuples(const PredicateSig& sig) const {
  std::vector<Tuple> out;
  if (!ws_) return out;
  const auto rel = ws_->relation_id(sig);
  if (!rel) return out;
  const auto n = ws_->rels[*rel]->size();
  out.reserve(n);
  for (std::uint32_t r = 0; r < n; ++r) out.push_back(ws_->decode_row(*rel, r));
  std::sort(out.begin(), out.end(), tuple_less);
  return out;
}

std::size_t DerivedDatabase::size(const PredicateSig& sig) const {
  if (!ws_) return 0;
  const auto rel = ws_->relation_id(sig);
  return rel ? ws_->rels[*rel]->size() : 0;
}

bool DerivedDatabase::contains(const GroundAtom& atom) const {
  if (!ws_) return false;
  const auto rel = ws_->relation_id(atom.sig());
  if (!rel) return false;
  std::vector<detail::Value> key;
  for (const auto& c : atom.args) {
    const auto v = ws_->encode(c);
    if (!v) return false;
    key.push_back(*v);
  }
  return ws_->rels[*rel]->find(key.data()) != detail::kNoRow;
}

std::size_t DerivedDatabase::derived_count() const { return ws_ ? ws_->derived : 0; }

const Program& DerivedDatabase::program() const { return ws_ ? ws_->program : empty_program(); }

// --- QueryResult / constraints / counting / dump -------------------------------------

std::vector<std::string> QueryResult::lines() const {
  std::vector<std::string> out;
  for (const auto& row : rows) {
    if (variables.empty()) {
      out.emplace_back("true");
      continue;
    }
    std::string line;
    for (std::size_t i = 0; i < variables.size(); ++i) {
      if (i) line += ", ";
      line += variables[i] + "=" + value_text(row[i]);
    }
    out.push_back(std::move(line));
  }
  return out;
}

std::string ConstraintViolation::str() const {
  std::string out = "constraint " + std::to_string(rule_index) + " violated";
  for (std::size_t i = 0; i < bindings.size(); ++i) {
    out += i ? ", " : ": ";
    out += bindings[i].first + "=" + value_text(bindings[i].second);
  }
  return out;
}

std::vector<ConstraintViolation> check_constraints(const Program& program, const DerivedDatabase& db) {
  const auto* ws = DatabaseAccess::get(db);
  std::vector<ConstraintViolation> out;
  if (ws == nullptr) return out;
  for (const auto& info : ws->constraints) {
    if (info.rule_index >= program.rules.size() || !program.rules[info.rule_index].is_constraint()) {
      throw Error(ErrorCode::InvalidProgram, "database was not materialized from this program");
    }
    for (const auto& row : db.tuples(info.sig)) {
      ConstraintViolation v;
      v.rule_index = info.rule_index;
      v.rule_text = to_source(program.rules[info.rule_index]);
      for (std::size_t i = 0; i < info.vars.size(); ++i) v.bindings.emplace_back(info.vars[i], row[i]);
      out.push_back(std::move(v));
    }
  }
  return out;
}

std::vector<GroupCount> eval_count_distinct(const Atom& pattern, const std::string& collect,
                                            const std::vector<std::string>& group, const DerivedDatabase& db,
                                            const std::vector<Tuple>* domain) {
  std::vector<std::string> pattern_vars;
  collect_vars(pattern, pattern_vars);
  const auto in_pattern = [&](const std::string& v) {
    return std::find(pattern_vars.begin(), pattern_vars.end(), v) != pattern_vars.end();
  };
  if (!in_pattern(collect)) {
    throw Error(ErrorCode::InvalidProgram, "counted variable " + collect + " does not occur in the pattern");
  }
  for (const auto& g : group) {
    if (!in_pattern(g)) throw Error(ErrorCode::InvalidProgram, "group variable " + g + " does not occur in the pattern");
  }

  const auto by_group = [](const Tuple& a, const Tuple& b) { return tuple_less(a, b); };
  std::map<Tuple, std::set<std::uint64_t>, decltype(by_group)> counts(by_group);
  const auto* ws = DatabaseAccess::get(db);
  const auto rel = ws ? ws->relation_id(pattern.sig()) : std::nullopt;
  if (rel) {
    const auto& relation = *ws->rels[*rel];
    for (std::uint32_t r = 0; r < relation.size(); ++r) {
      const auto* vals = relation.row(r);
      std::map<std::string, detail::Value> env;
      bool ok = true;
      for (std::size_t c = 0; c < pattern.args.size() && ok; ++c) {
        const auto& t = pattern.args[c];
        if (const auto* k = as_constant(t)) {
          const auto v = ws->encode(*k);
          ok = v && *v == vals[c];
        } else if (const auto* var = as_variable(t)) {
          const auto [it, fresh] = env.emplace(var->name, vals[c]);
          ok = fresh || it->second == vals[c];
        }
      }
      if (!ok) continue;
      Tuple key;
      for (const auto& g : group) key.push_back(ws->decode(env.at(g)));
      counts[key].insert(env.at(collect).raw);
    }
  }

  std::vector<GroupCount> out;
  if (domain) {
    std::vector<Tuple> keys = *domain;
    std::sort(keys.begin(), keys.end(), tuple_less);
    keys.erase(std::unique(keys.begin(), keys.end(),
                           [](const Tuple& a, const Tuple& b) { return !tuple_less(a, b) && !tuple_less(b, a); }),
               keys.end());
    for (const auto& k : keys) {
      const auto it = counts.find(k);
      out.push_back({k, it == counts.end() ? 0 : it->second.size()});
    }
  } else {
    for (const auto& [k, vals] : counts) out.push_back({k, vals.size()});
  }
  return out;
}

void dump_derived(const DerivedDatabase& db, std::ostream& out) {
  for (const auto& sig : db.derived_predicates()) {
    for (const auto& row : db.tuples(sig)) {
      nlohmann::ordered_json rec;
      rec["type"] = "attr";
      rec["pred"] = sig.name;
      auto args = nlohmann::ordered_json::array();
      for (const auto& c : row) {
        if (c.is_integer()) {
          args.push_back(c.number);
        } else {
          args.push_back(c.text);
        }
      }
      rec["args"] = std::move(args);
      out << rec.dump() << '\n';
    }
  }
}

}  // namespace provlog
