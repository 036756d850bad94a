#include "provlog/rule_ast.hpp"

#include <cctype>

#include "provlog/graph_store.hpp"

namespace provlog {

namespace {

bool plain_identifier(std::string_view s) {
  if (s.empty() || !std::islower(static_cast<unsigned char>(s[0]))) return false;
  for (char c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  }
  return s != "not" && s != "is";
}

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

std::string join_terms(const std::vector<Term>& args) {
  std::string out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) out += ", ";
    out += to_source(args[i]);
  }
  return out;
}

std::string to_source(const Expr& e) {
  std::string out = to_source(e.first);
  for (const auto& [op, t] : e.rest) {
    out += op == ArithOp::Add ? " + " : " - ";
    out += to_source(t);
  }
  return out;
}

std::string body_source(const std::vector<Literal>& body) {
  std::string out;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (i) out += ", ";
    out += to_source(body[i]);
  }
  return out;
}

}  // namespace

std::strong_ordering compare_values(const Constant& a, const Constant& b) {
  if (a.kind != b.kind) return a.is_integer() ? std::strong_ordering::less : std::strong_ordering::greater;
  if (a.is_integer()) return a.number <=> b.number;
  return a.text.compare(b.text) <=> 0;
}

bool same_value(const Constant& a, const Constant& b) { return compare_values(a, b) == 0; }

std::string value_text(const Constant& c) { return c.is_integer() ? std::to_string(c.number) : c.text; }

std::string_view to_string(CompareOp op) {
  switch (op) {
    case CompareOp::Lt: return "<";
    case CompareOp::Gt: return ">";
    case CompareOp::Le: return "<=";
    case CompareOp::Ge: return ">=";
    case CompareOp::Eq: return "=";
    case CompareOp::Ne: return "!=";
  }
  return "?";
}

bool GroundAtom::operator==(const GroundAtom& o) const {
  if (predicate != o.predicate || args.size() != o.args.size()) return false;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (!same_value(args[i], o.args[i])) return false;
  }
  return true;
}

std::string GroundAtom::str() const {
  std::string out = predicate;
  if (args.empty()) return out;
  out += '(';
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) out += ", ";
    out += to_source(args[i]);
  }
  out += ')';
  return out;
}

const std::vector<PredicateSig>& graph_base_predicates() {
  static const std::vector<PredicateSig> preds = [] {
    std::vector<PredicateSig> v;
    for (NodeKind k : kAllNodeKinds) v.push_back({std::string(kind_name(k)), 1});
    v.push_back({"edge", 4});
    for (const auto& m : metadata_predicates()) v.push_back({std::string(m.name), m.args.size()});
    return v;
  }();
  return preds;
}

const Variable* as_variable(const Term& t) { return std::get_if<Variable>(&t); }
const Constant* as_constant(const Term& t) { return std::get_if<Constant>(&t); }
bool is_wildcard(const Term& t) { return std::holds_alternative<Wildcard>(t); }

void collect_vars(const Term& t, std::vector<std::string>& out) {
  if (const auto* v = as_variable(t)) out.push_back(v->name);
}

void collect_vars(const Expr& e, std::vector<std::string>& out) {
  collect_vars(e.first, out);
  for (const auto& [_, t] : e.rest) collect_vars(t, out);
}

void collect_vars(const Atom& a, std::vector<std::string>& out) {
  for (const auto& t : a.args) collect_vars(t, out);
}

const Atom* literal_atom(const Literal& lit) {
  return std::visit(overloaded{
                        [](const PositiveLit& l) -> const Atom* { return &l.atom; },
                        [](const NafLit& l) -> const Atom* { return &l.atom; },
                        [](const CountLit& l) -> const Atom* { return &l.pattern; },
                        [](const auto&) -> const Atom* { return nullptr; },
                    },
                    lit);
}

std::string to_source(const Constant& c) {
  if (c.is_integer()) return std::to_string(c.number);
  if (c.quoted || !plain_identifier(c.text)) return quote(c.text);
  return c.text;
}

std::string to_source(const Term& t) {
  return std::visit(overloaded{
                        [](const Variable& v) { return v.name; },
                        [](const Constant& c) { return to_source(c); },
                        [](const Wildcard&) { return std::string("_"); },
                    },
                    t);
}

std::string to_source(const Atom& a) {
  if (a.args.empty()) return a.predicate;
  return a.predicate + "(" + join_terms(a.args) + ")";
}

std::string to_source(const Literal& lit) {
  return std::visit(overloaded{
                        [](const PositiveLit& l) { return to_source(l.atom); },
                        [](const NafLit& l) { return "not " + to_source(l.atom); },
                        [](const CompareLit& l) {
                          return to_source(l.lhs) + " " + std::string(to_string(l.op)) + " " + to_source(l.rhs);
                        },
                        [](const AssignLit& l) { return l.target.name + " is " + to_source(l.expr); },
                        [](const CountLit& l) {
                          return l.result.name + " = #count{" + l.collect.name + " : " + to_source(l.pattern) + "}";
                        },
                    },
                    lit);
}

std::string to_source(const Rule& r) {
  if (!r.head) return ":- " + body_source(r.body) + ".";
  if (r.body.empty()) return to_source(*r.head) + ".";
  return to_source(*r.head) + " :- " + body_source(r.body) + ".";
}

std::string to_source(const Query& q) { return "?- " + body_source(q.body) + "."; }

std::string pretty_print(const Program& program) {
  std::string out;
  for (std::size_t i = 0; i < program.rules.size(); ++i) {
    if (i) out += '\n';
    out += to_source(program.rules[i]);
  }
  return out;
}

}  // namespace provlog
