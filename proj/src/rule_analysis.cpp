#include "provlog/rule_analysis.hpp"

#include <algorithm>
#include <functional>
#include <queue>
#include <set>

namespace provlog {

namespace {

using VarSet = std::set<std::string>;

void add_vars(const Term& t, VarSet& out) {
  if (const auto* v = as_variable(t)) out.insert(v->name);
}

void add_vars(const Atom& a, VarSet& out) {
  for (const auto& t : a.args) add_vars(t, out);
}

void add_vars(const Expr& e, VarSet& out) {
  add_vars(e.first, out);
  for (const auto& [_, t] : e.rest) add_vars(t, out);
}

/// Variables of a literal as seen from outside it: for an aggregate only the
/// result variable is visible.
VarSet visible_vars(const Literal& lit) {
  VarSet out;
  if (const auto* p = std::get_if<PositiveLit>(&lit)) add_vars(p->atom, out);
  if (const auto* n = std::get_if<NafLit>(&lit)) add_vars(n->atom, out);
  if (const auto* c = std::get_if<CompareLit>(&lit)) {
    add_vars(c->lhs, out);
    add_vars(c->rhs, out);
  }
  if (const auto* a = std::get_if<AssignLit>(&lit)) {
    out.insert(a->target.name);
    add_vars(a->expr, out);
  }
  if (const auto* c = std::get_if<CountLit>(&lit)) out.insert(c->result.name);
  return out;
}

SourceLoc literal_loc(const Literal& lit) {
  if (const Atom* a = literal_atom(lit)) {
    if (const auto* c = std::get_if<CountLit>(&lit)) return c->loc;
    return a->loc;
  }
  if (const auto* c = std::get_if<CompareLit>(&lit)) return c->loc;
  return std::get<AssignLit>(lit).loc;
}

struct SafetyChecker {
  std::vector<Diagnostic>& out;

  void unsafe(const SourceLoc& loc, const std::string& var, const std::string& where) {
    out.push_back({loc, "unsafe-variable",
                   "variable " + var + " in " + where + " is not bound by a positive body literal"});
  }

  /// Variables of the count literal's pattern that also occur elsewhere in the rule.
  static VarSet outer_vars(const CountLit& c, const std::optional<Atom>& head,
                           const std::vector<Literal>& body) {
    VarSet elsewhere;
    if (head) add_vars(*head, elsewhere);
    for (const auto& lit : body) {
      if (const auto* other = std::get_if<CountLit>(&lit); other == &c) continue;
      const auto vs = visible_vars(lit);
      elsewhere.insert(vs.begin(), vs.end());
    }
    VarSet pattern;
    add_vars(c.pattern, pattern);
    VarSet outer;
    for (const auto& v : pattern) {
      if (elsewhere.contains(v)) outer.insert(v);
    }
    return outer;
  }

  void check(const std::optional<Atom>& head, const std::vector<Literal>& body) {
    VarSet bound;
    for (const auto& lit : body) {
      if (const auto* p = std::get_if<PositiveLit>(&lit)) add_vars(p->atom, bound);
    }
    // Assignments and aggregates bind their result once their inputs are bound.
    for (bool changed = true; changed;) {
      changed = false;
      for (const auto& lit : body) {
        if (const auto* a = std::get_if<AssignLit>(&lit)) {
          VarSet in;
          add_vars(a->expr, in);
          if (!bound.contains(a->target.name) && std::includes(bound.begin(), bound.end(), in.begin(), in.end())) {
            bound.insert(a->target.name);
            changed = true;
          }
        } else if (const auto* c = std::get_if<CountLit>(&lit)) {
          const auto outer = outer_vars(*c, head, body);
          if (!bound.contains(c->result.name) &&
              std::includes(bound.begin(), bound.end(), outer.begin(), outer.end())) {
            bound.insert(c->result.name);
            changed = true;
          }
        }
      }
    }

    std::set<std::string> reported;
    const auto require = [&](const VarSet& vars, const SourceLoc& loc, const std::string& where) {
      for (const auto& v : vars) {
        if (!bound.contains(v) && reported.insert(v).second) unsafe(loc, v, where);
      }
    };

    if (head) {
      VarSet hv;
      add_vars(*head, hv);
      require(hv, head->loc, "the head of " + head->predicate);
      if (std::any_of(head->args.begin(), head->args.end(), is_wildcard)) {
        out.push_back({head->loc, "unsafe-variable", "wildcard '_' is not allowed in a rule head"});
      }
    }
    for (const auto& lit : body) {
      const auto loc = literal_loc(lit);
      if (const auto* n = std::get_if<NafLit>(&lit)) {
        VarSet vs;
        add_vars(n->atom, vs);
        require(vs, loc, "negated literal 'not " + n->atom.predicate + "'");
      } else if (const auto* c = std::get_if<CompareLit>(&lit)) {
        VarSet vs;
        add_vars(c->lhs, vs);
        add_vars(c->rhs, vs);
        require(vs, loc, "a comparison");
      } else if (const auto* a = std::get_if<AssignLit>(&lit)) {
        VarSet vs;
        add_vars(a->expr, vs);
        require(vs, loc, "an arithmetic expression");
      } else if (const auto* c = std::get_if<CountLit>(&lit)) {
        VarSet pattern;
        add_vars(c->pattern, pattern);
        if (!pattern.contains(c->collect.name)) {
          out.push_back({loc, "aggregate", "counted variable " + c->collect.name + " does not occur in the pattern"});
        }
        if (pattern.contains(c->result.name)) {
          out.push_back({loc, "aggregate", "count result " + c->result.name + " must not occur in its own pattern"});
        }
        require(outer_vars(*c, head, body), loc, "the #count pattern");
      }
    }
  }
};

void arity_diag(std::vector<Diagnostic>& out, const Atom& a, std::size_t expected) {
  out.push_back({a.loc, "arity",
                 "predicate " + a.predicate + " is used with " + std::to_string(a.args.size()) +
                     " argument(s) but elsewhere with " + std::to_string(expected)});
}

}  // namespace

std::vector<Diagnostic> check_safety(const Program& program) {
  std::vector<Diagnostic> out;
  SafetyChecker checker{out};
  for (const auto& r : program.rules) checker.check(r.head, r.body);
  return out;
}

std::vector<Diagnostic> check_query_safety(const Query& query) {
  std::vector<Diagnostic> out;
  Atom head{"?-", {}, {}};
  for (const auto& v : query.answer_vars) head.args.emplace_back(Variable{v});
  SafetyChecker checker{out};
  checker.check(head, query.body);
  return out;
}

std::vector<Diagnostic> check_arities(const Program& program) {
  // A predicate is identified by name and arity, so one name may be defined
  // at several arities (reachable/2 next to reachable/3). A use is
  // inconsistent when it matches no base or defined signature although the
  // name exists at another arity; base predicates keep their schema arity.
  std::vector<Diagnostic> out;
  std::map<std::string, std::size_t> base;
  std::map<std::string, std::set<std::size_t>> known;
  for (const auto& b : program.base_predicates) {
    base.emplace(b.name, b.arity);
    known[b.name].insert(b.arity);
  }
  for (const auto& r : program.rules) {
    if (r.head && !base.contains(r.head->predicate)) known[r.head->predicate].insert(r.head->args.size());
  }
  const auto visit = [&](const Atom& a) {
    if (const auto it = base.find(a.predicate); it != base.end()) {
      if (it->second != a.args.size()) arity_diag(out, a, it->second);
      return;
    }
    const auto it = known.find(a.predicate);
    if (it != known.end() && !it->second.contains(a.args.size())) arity_diag(out, a, *it->second.begin());
  };
  for (const auto& r : program.rules) {
    if (r.head) visit(*r.head);
    for (const auto& lit : r.body) {
      if (const Atom* atom = literal_atom(lit)) visit(*atom);
    }
  }
  return out;
}

std::vector<Diagnostic> validate(const Program& program) {
  auto out = check_arities(program);
  auto safety = check_safety(program);
  out.insert(out.end(), safety.begin(), safety.end());
  return out;
}

std::vector<Dependency> dependencies(const Program& program) {
  std::set<Dependency> deps;
  for (const auto& r : program.rules) {
    if (!r.head) continue;
    for (const auto& lit : r.body) {
      const Atom* a = literal_atom(lit);
      if (a == nullptr) continue;
      deps.insert({a->sig(), r.head->sig(), !std::holds_alternative<PositiveLit>(lit)});
    }
  }
  return {deps.begin(), deps.end()};
}

Stratification stratify(const Program& program) {
  // Collect predicates and number them in sorted order for determinism.
  std::set<PredicateSig> preds;
  for (const auto& r : program.rules) {
    if (r.head) preds.insert(r.head->sig());
    for (const auto& lit : r.body) {
      if (const Atom* a = literal_atom(lit)) preds.insert(a->sig());
    }
  }
  const std::vector<PredicateSig> nodes(preds.begin(), preds.end());
  const auto index_of = [&](const PredicateSig& p) {
    return static_cast<std::size_t>(std::lower_bound(nodes.begin(), nodes.end(), p) - nodes.begin());
  };
  const auto deps = dependencies(program);
  struct Arc {
    std::size_t to;
    bool negative;
  };
  std::vector<std::vector<Arc>> out(nodes.size());
  for (const auto& d : deps) out[index_of(d.from)].push_back({index_of(d.to), d.negative});

  // Tarjan's SCC; components come out in reverse topological order.
  const std::size_t n = nodes.size();
  std::vector<std::size_t> comp(n, SIZE_MAX), low(n), disc(n, SIZE_MAX);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::size_t timer = 0, comp_count = 0;
  std::function<void(std::size_t)> visit = [&](std::size_t v) {
    disc[v] = low[v] = timer++;
    stack.push_back(v);
    on_stack[v] = true;
    for (const auto& arc : out[v]) {
      if (disc[arc.to] == SIZE_MAX) {
        visit(arc.to);
        low[v] = std::min(low[v], low[arc.to]);
      } else if (on_stack[arc.to]) {
        low[v] = std::min(low[v], disc[arc.to]);
      }
    }
    if (low[v] == disc[v]) {
      for (;;) {
        const auto w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        comp[w] = comp_count;
        if (w == v) break;
      }
      ++comp_count;
    }
  };
  for (std::size_t v = 0; v < n; ++v) {
    if (disc[v] == SIZE_MAX) visit(v);
  }

  // A negative arc inside a component is a cycle through negation.
  for (std::size_t v = 0; v < n; ++v) {
    for (const auto& arc : out[v]) {
      if (!arc.negative || comp[arc.to] != comp[v]) continue;
      // Shortest path arc.to ~> v inside the component closes the cycle.
      std::vector<std::size_t> parent(n, SIZE_MAX);
      std::queue<std::size_t> q;
      q.push(arc.to);
      parent[arc.to] = arc.to;
      while (!q.empty() && parent[v] == SIZE_MAX) {
        const auto u = q.front();
        q.pop();
        for (const auto& next : out[u]) {
          if (comp[next.to] == comp[v] && parent[next.to] == SIZE_MAX) {
            parent[next.to] = u;
            q.push(next.to);
          }
        }
      }
      std::vector<PredicateSig> path;
      for (auto u = v; ; u = parent[u]) {
        path.push_back(nodes[u]);
        if (u == arc.to) break;
      }
      std::reverse(path.begin(), path.end());  // arc.to ... v
      std::vector<PredicateSig> cycle{nodes[v]};
      cycle.insert(cycle.end(), path.begin(), path.end());
      std::string text;
      for (std::size_t i = 0; i < cycle.size(); ++i) {
        if (i) text += " -> ";
        text += cycle[i].str();
      }
      throw UnstratifiableError(cycle, "program is not stratifiable: negation or aggregation on cycle " + text);
    }
  }

  // Components in topological order are comp_count-1 .. 0.
  std::vector<std::size_t> comp_stratum(comp_count, 0);
  std::vector<std::vector<std::size_t>> members(comp_count);
  for (std::size_t v = 0; v < n; ++v) members[comp[v]].push_back(v);
  for (std::size_t c = comp_count; c-- > 0;) {
    for (auto v : members[c]) {
      for (const auto& arc : out[v]) {
        if (comp[arc.to] == c) continue;
        auto& s = comp_stratum[comp[arc.to]];
        s = std::max(s, comp_stratum[c] + (arc.negative ? 1 : 0));
      }
    }
  }

  Stratification result;
  for (std::size_t v = 0; v < n; ++v) {
    const auto s = comp_stratum[comp[v]];
    if (result.strata.size() <= s) result.strata.resize(s + 1);
    result.strata[s].push_back(nodes[v]);
    result.stratum_of[nodes[v]] = s;
  }
  return result;
}

}  // namespace provlog
