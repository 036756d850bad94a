#include <deque>
#include <map>

#include "planning.hpp"
#include "workspace.hpp"

namespace provlog::detail {

namespace {

std::string adorned_name(const std::string& pred, const std::string& adornment) {
  return pred + "@" + adornment;
}

std::string magic_name(const std::string& pred, const std::string& adornment) {
  return "magic@" + pred + "@" + adornment;
}

class MagicRewriter {
 public:
  MagicRewriter(const Program& program, const std::set<PredicateSig>& full_eval)
      : forced_(full_eval) {
    for (const auto& r : program.rules) {
      if (r.head) by_head_[r.head->sig()].push_back(&r);
    }
    out_.base_predicates = program.base_predicates;
  }

  Program run(const Query& query, const std::string& answer_pred) {
    Atom head{answer_pred, {}, {}};
    for (const auto& v : query.answer_vars) head.args.emplace_back(Variable{v});
    auto body = rewrite_body(head, std::nullopt, {}, query.body);
    out_.rules.push_back(Rule{std::move(head), std::move(body), {}});

    while (!work_.empty()) {
      const auto [sig, adornment] = work_.front();
      work_.pop_front();
      for (const Rule* r : by_head_.at(sig)) adorn_rule(*r, adornment);
    }
    while (!full_queue_.empty()) {
      const auto sig = full_queue_.front();
      full_queue_.pop_front();
      for (const Rule* r : by_head_.at(sig)) {
        out_.rules.push_back(*r);
        for (const auto& lit : r->body) {
          if (const Atom* a = literal_atom(lit)) mark_full(a->sig());
        }
      }
    }
    return std::move(out_);
  }

 private:
  bool is_idb(const PredicateSig& sig) const { return by_head_.contains(sig); }

  void mark_full(const PredicateSig& sig) {
    if (is_idb(sig) && full_.insert(sig).second) full_queue_.push_back(sig);
  }

  void adorn_rule(const Rule& rule, const std::string& adornment) {
    const Atom& head = *rule.head;
    VarSet bound;
    std::vector<Term> bound_args;
    for (std::size_t i = 0; i < head.args.size(); ++i) {
      if (adornment[i] != 'b') continue;
      bound_args.push_back(head.args[i]);
      add_vars(head.args[i], bound);
    }
    std::optional<Atom> guard;
    if (adornment.find('b') != std::string::npos) {
      guard = Atom{magic_name(head.predicate, adornment), bound_args, head.loc};
    }
    auto body = rewrite_body(head, guard, bound, rule.body);
    out_.rules.push_back(Rule{Atom{adorned_name(head.predicate, adornment), head.args, head.loc}, std::move(body),
                              rule.loc});
  }

  std::vector<Literal> rewrite_body(const Atom& head, const std::optional<Atom>& guard, VarSet bound,
                                    const std::vector<Literal>& body) {
    const auto order = order_body(head, body, bound);
    std::vector<Literal> out;
    if (guard) out.emplace_back(PositiveLit{*guard});
    for (const auto i : order) {
      const auto& lit = body[i];
      const auto* p = std::get_if<PositiveLit>(&lit);
      if (p != nullptr && is_idb(p->atom.sig()) && !forced_.contains(p->atom.sig())) {
        std::string adornment;
        std::vector<Term> bound_args;
        for (const auto& t : p->atom.args) {
          const auto* v = as_variable(t);
          const bool b = as_constant(t) != nullptr || (v != nullptr && bound.contains(v->name));
          adornment += b ? 'b' : 'f';
          if (b) bound_args.push_back(t);
        }
        if (adornment.find('b') != std::string::npos) {
          // Bindings flowing into the call: the body prefix evaluated so far.
          out_.rules.push_back(
              Rule{Atom{magic_name(p->atom.predicate, adornment), bound_args, p->atom.loc}, out, p->atom.loc});
        }
        out.emplace_back(PositiveLit{Atom{adorned_name(p->atom.predicate, adornment), p->atom.args, p->atom.loc}});
        if (seen_.insert({p->atom.sig(), adornment}).second) work_.emplace_back(p->atom.sig(), adornment);
      } else {
        // Base reads, negation, counting and forced predicates use the
        // original (fully evaluated) relations.
        if (const Atom* a = literal_atom(lit)) mark_full(a->sig());
        out.push_back(lit);
      }
      const auto b = bound_by(lit);
      bound.insert(b.begin(), b.end());
    }
    return out;
  }

  const std::set<PredicateSig>& forced_;
  std::map<PredicateSig, std::vector<const Rule*>> by_head_;
  std::set<std::pair<PredicateSig, std::string>> seen_;
  std::deque<std::pair<PredicateSig, std::string>> work_;
  std::set<PredicateSig> full_;
  std::deque<PredicateSig> full_queue_;
  Program out_;
};

}  // namespace

Program magic_rewrite(const Program& program, const Query& query, const std::string& answer_pred,
                      const std::set<PredicateSig>& full_eval) {
  return MagicRewriter(program, full_eval).run(query, answer_pred);
}

std::string original_predicate(const std::string& rewritten) {
  if (rewritten.rfind("magic@", 0) == 0 || rewritten.rfind("__", 0) == 0) return {};
  return rewritten.substr(0, rewritten.find('@'));
}

}  // namespace provlog::detail
