#include "planning.hpp"

#include <algorithm>

namespace provlog::detail {

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

VarSet count_outer_vars(const CountLit& c, const std::optional<Atom>& head, const std::vector<Literal>& body) {
  VarSet elsewhere;
  if (head) add_vars(*head, elsewhere);
  for (const auto& lit : body) {
    if (const auto* other = std::get_if<CountLit>(&lit)) {
      if (other != &c) elsewhere.insert(other->result.name);
      continue;
    }
    if (const auto* p = std::get_if<PositiveLit>(&lit)) add_vars(p->atom, elsewhere);
    if (const auto* n = std::get_if<NafLit>(&lit)) add_vars(n->atom, elsewhere);
    if (const auto* cmp = std::get_if<CompareLit>(&lit)) {
      add_vars(cmp->lhs, elsewhere);
      add_vars(cmp->rhs, elsewhere);
    }
    if (const auto* a = std::get_if<AssignLit>(&lit)) {
      elsewhere.insert(a->target.name);
      add_vars(a->expr, elsewhere);
    }
  }
  VarSet pattern;
  add_vars(c.pattern, pattern);
  VarSet outer;
  for (const auto& v : pattern) {
    if (elsewhere.contains(v)) outer.insert(v);
  }
  return outer;
}

VarSet bound_by(const Literal& lit) {
  VarSet out;
  if (const auto* p = std::get_if<PositiveLit>(&lit)) add_vars(p->atom, out);
  if (const auto* a = std::get_if<AssignLit>(&lit)) out.insert(a->target.name);
  if (const auto* c = std::get_if<CountLit>(&lit)) out.insert(c->result.name);
  return out;
}

namespace {

bool covered(const VarSet& need, const VarSet& bound) {
  return std::includes(bound.begin(), bound.end(), need.begin(), need.end());
}

std::size_t bound_vars(const Atom& a, const VarSet& bound) {
  std::size_t n = 0;
  for (const auto& t : a.args) {
    if (const auto* v = as_variable(t); v != nullptr && bound.contains(v->name)) ++n;
  }
  return n;
}

std::size_t constant_args(const Atom& a) {
  return static_cast<std::size_t>(
      std::count_if(a.args.begin(), a.args.end(), [](const Term& t) { return as_constant(t) != nullptr; }));
}

}  // namespace

std::vector<std::size_t> order_body(const std::optional<Atom>& head, const std::vector<Literal>& body,
                                    VarSet bound, std::optional<std::size_t> first,
                                    const std::function<std::size_t(const Atom&)>& size_of) {
  // Inputs each non-positive literal needs before it can run.
  std::vector<VarSet> needs(body.size());
  for (std::size_t i = 0; i < body.size(); ++i) {
    const auto& lit = body[i];
    if (const auto* n = std::get_if<NafLit>(&lit)) add_vars(n->atom, needs[i]);
    if (const auto* c = std::get_if<CompareLit>(&lit)) {
      add_vars(c->lhs, needs[i]);
      add_vars(c->rhs, needs[i]);
    }
    if (const auto* a = std::get_if<AssignLit>(&lit)) add_vars(a->expr, needs[i]);
    if (const auto* c = std::get_if<CountLit>(&lit)) needs[i] = count_outer_vars(*c, head, body);
  }

  std::vector<std::size_t> order;
  std::vector<bool> placed(body.size(), false);
  const auto place = [&](std::size_t i) {
    order.push_back(i);
    placed[i] = true;
    const auto b = bound_by(body[i]);
    bound.insert(b.begin(), b.end());
  };
  if (first) place(*first);

  while (order.size() < body.size()) {
    bool progressed = false;
    for (std::size_t i = 0; i < body.size(); ++i) {
      if (placed[i] || std::holds_alternative<PositiveLit>(body[i])) continue;
      if (covered(needs[i], bound)) {
        place(i);
        progressed = true;
      }
    }
    if (progressed) continue;

    // Bound variables first: a literal joined on an already bound variable
    // is a lookup. Constants only narrow the estimate, since a constant
    // column such as an edge type can still match most of the relation.
    std::optional<std::size_t> best;
    std::size_t best_bound = 0, best_size = 0, best_consts = 0;
    for (std::size_t i = 0; i < body.size(); ++i) {
      const auto* p = std::get_if<PositiveLit>(&body[i]);
      if (placed[i] || p == nullptr) continue;
      const auto nb = bound_vars(p->atom, bound);
      const auto sz = size_of ? size_of(p->atom) : 0;
      const auto nc = constant_args(p->atom);
      const bool better = !best || nb > best_bound ||
                          (nb == best_bound && (sz < best_size || (sz == best_size && nc > best_consts)));
      if (better) {
        best = i;
        best_bound = nb;
        best_size = sz;
        best_consts = nc;
      }
    }
    if (best) {
      place(*best);
      continue;
    }
    // Only unsafe programs get here; keep source order for the rest.
    for (std::size_t i = 0; i < body.size(); ++i) {
      if (!placed[i]) place(i);
    }
  }
  return order;
}

}  // namespace provlog::detail
