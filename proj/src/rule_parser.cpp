#include "provlog/rule_parser.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <optional>

#include "provlog/error.hpp"

namespace provlog {

std::string Diagnostic::str() const {
  return std::to_string(loc.line) + ":" + std::to_string(loc.column) + ": " + code + ": " + message;
}

namespace {

enum class Tok {
  Ident,
  Var,
  Wildcard,
  Int,
  String,
  LParen,
  RParen,
  LBrace,
  RBrace,
  Comma,
  Dot,
  If,
  QueryMark,
  Colon,
  Lt,
  Gt,
  Le,
  Ge,
  Eq,
  Ne,
  Plus,
  Minus,
  Count,
  End,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::int64_t number = 0;
  SourceLoc loc;
};

std::string_view describe(Tok t) {
  switch (t) {
    case Tok::Ident: return "identifier";
    case Tok::Var: return "variable";
    case Tok::Wildcard: return "'_'";
    case Tok::Int: return "integer";
    case Tok::String: return "string";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::LBrace: return "'{'";
    case Tok::RBrace: return "'}'";
    case Tok::Comma: return "','";
    case Tok::Dot: return "'.'";
    case Tok::If: return "':-'";
    case Tok::QueryMark: return "'?-'";
    case Tok::Colon: return "':'";
    case Tok::Lt: return "'<'";
    case Tok::Gt: return "'>'";
    case Tok::Le: return "'<='";
    case Tok::Ge: return "'>='";
    case Tok::Eq: return "'='";
    case Tok::Ne: return "'!='";
    case Tok::Plus: return "'+'";
    case Tok::Minus: return "'-'";
    case Tok::Count: return "'#count'";
    case Tok::End: return "end of input";
  }
  return "token";
}

class Lexer {
 public:
  Lexer(std::string_view src, std::vector<Diagnostic>& diags) : src_(src), diags_(diags) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token t;
      t.loc = {line_, col_};
      if (pos_ >= src_.size()) {
        t.kind = Tok::End;
        out.push_back(std::move(t));
        return out;
      }
      if (lex_one(t)) out.push_back(std::move(t));
    }
  }

 private:
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }

  void advance() {
    if (pos_ >= src_.size()) return;
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '%') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  bool lex_one(Token& t) {
    const char c = peek();
    const auto word = [&] {
      const std::size_t start = pos_;
      while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_') advance();
      return std::string(src_.substr(start, pos_ - start));
    };
    if (std::islower(static_cast<unsigned char>(c))) {
      t.kind = Tok::Ident;
      t.text = word();
      return true;
    }
    if (std::isupper(static_cast<unsigned char>(c)) || c == '_') {
      t.text = word();
      t.kind = t.text == "_" ? Tok::Wildcard : Tok::Var;
      return true;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
      const auto digits = src_.substr(start, pos_ - start);
      t.kind = Tok::Int;
      auto [_, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), t.number);
      if (ec != std::errc{}) {
        diags_.push_back({t.loc, "syntax", "integer literal out of range"});
      }
      return true;
    }
    if (c == '"') return lex_string(t);
    if (c == '#') {
      advance();
      const std::string w = word();
      if (w == "count") {
        t.kind = Tok::Count;
        return true;
      }
      diags_.push_back({t.loc, "syntax", "unknown aggregate '#" + w + "' (only #count is supported)"});
      return false;
    }
    const char n = peek(1);
    const auto two = [&](Tok k) {
      advance();
      advance();
      t.kind = k;
      return true;
    };
    const auto one = [&](Tok k) {
      advance();
      t.kind = k;
      return true;
    };
    switch (c) {
      case ':': return n == '-' ? two(Tok::If) : one(Tok::Colon);
      case '?':
        if (n == '-') return two(Tok::QueryMark);
        break;
      case '<': return n == '=' ? two(Tok::Le) : one(Tok::Lt);
      case '>': return n == '=' ? two(Tok::Ge) : one(Tok::Gt);
      case '!':
        if (n == '=') return two(Tok::Ne);
        break;
      case '=': return one(Tok::Eq);
      case '(': return one(Tok::LParen);
      case ')': return one(Tok::RParen);
      case '{': return one(Tok::LBrace);
      case '}': return one(Tok::RBrace);
      case ',': return one(Tok::Comma);
      case '.': return one(Tok::Dot);
      case '+': return one(Tok::Plus);
      case '-': return one(Tok::Minus);
      default: break;
    }
    diags_.push_back({t.loc, "syntax", std::string("unexpected character '") + c + "'"});
    advance();
    return false;
  }

  bool lex_string(Token& t) {
    advance();  // opening quote
    std::string value;
    while (pos_ < src_.size() && peek() != '"') {
      char c = peek();
      if (c == '\n') break;
      if (c == '\\') {
        advance();
        switch (peek()) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default:
            diags_.push_back({{line_, col_}, "syntax", "unknown escape sequence"});
            c = peek();
        }
      }
      value += c;
      advance();
    }
    if (peek() != '"') {
      diags_.push_back({t.loc, "syntax", "unterminated string"});
      return false;
    }
    advance();
    t.kind = Tok::String;
    t.text = std::move(value);
    return true;
  }

  std::string_view src_;
  std::vector<Diagnostic>& diags_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

struct SyntaxError {
  Diagnostic diag;
};

class Parser {
 public:
  Parser(std::vector<Token> toks, std::vector<Diagnostic>& diags)
      : toks_(std::move(toks)), diags_(diags) {}

  Program program() {
    Program p;
    p.base_predicates = graph_base_predicates();
    while (!at(Tok::End)) {
      try {
        p.rules.push_back(clause());
      } catch (const SyntaxError& e) {
        diags_.push_back(e.diag);
        recover();
      }
    }
    return p;
  }

  Query query() {
    Query q;
    try {
      expect(Tok::QueryMark, "a query must start with '?-'");
      q.body = body();
      expect(Tok::Dot, "expected '.' at end of query");
      if (!at(Tok::End)) fail(cur(), "unexpected input after query");
    } catch (const SyntaxError& e) {
      diags_.push_back(e.diag);
    }
    q.answer_vars = answer_variables(q.body);
    return q;
  }

  Atom ground_atom() {
    Atom a = atom();
    accept(Tok::Dot);
    if (!at(Tok::End)) fail(cur(), "unexpected input after atom");
    return a;
  }

  void guarded(auto&& fn) {
    try {
      fn();
    } catch (const SyntaxError& e) {
      diags_.push_back(e.diag);
    }
  }

 private:
  const Token& cur() const { return toks_[pos_]; }
  const Token& ahead(std::size_t n) const { return toks_[std::min(pos_ + n, toks_.size() - 1)]; }
  bool at(Tok k) const { return cur().kind == k; }

  Token take() {
    Token t = cur();
    if (!at(Tok::End)) ++pos_;
    return t;
  }

  bool accept(Tok k) {
    if (!at(k)) return false;
    take();
    return true;
  }

  [[noreturn]] void fail(const Token& t, std::string msg) {
    if (t.kind != Tok::End) msg += " (found " + std::string(describe(t.kind)) + ")";
    throw SyntaxError{{t.loc, "syntax", std::move(msg)}};
  }

  Token expect(Tok k, const std::string& msg) {
    if (!at(k)) fail(cur(), msg);
    return take();
  }

  void recover() {
    while (!at(Tok::End) && !at(Tok::Dot)) take();
    accept(Tok::Dot);
  }

  Rule clause() {
    Rule r;
    r.loc = cur().loc;
    if (accept(Tok::If)) {
      r.body = body();
    } else {
      r.head = atom();
      if (accept(Tok::If)) r.body = body();
    }
    expect(Tok::Dot, "expected '.' at end of clause");
    return r;
  }

  std::vector<Literal> body() {
    std::vector<Literal> lits;
    lits.push_back(literal());
    while (accept(Tok::Comma)) lits.push_back(literal());
    return lits;
  }

  Atom atom() {
    const Token name = expect(Tok::Ident, "expected a predicate name");
    if (name.text == "not" || name.text == "is") fail(name, "'" + name.text + "' is a reserved word");
    Atom a;
    a.predicate = name.text;
    a.loc = name.loc;
    if (accept(Tok::LParen)) {
      a.args.push_back(term());
      while (accept(Tok::Comma)) a.args.push_back(term());
      expect(Tok::RParen, "expected ')' to close the argument list");
    }
    return a;
  }

  Term term() {
    const Token& t = cur();
    switch (t.kind) {
      case Tok::Var: return Variable{take().text};
      case Tok::Wildcard: take(); return Wildcard{};
      case Tok::Int: return Constant::integer(take().number);
      case Tok::String: return Constant::string(take().text);
      case Tok::Minus:
        if (ahead(1).kind == Tok::Int) {
          take();
          return Constant::integer(-take().number);
        }
        break;
      case Tok::Ident:
        if (t.text != "not" && t.text != "is" && ahead(1).kind != Tok::LParen) {
          return Constant::symbol(take().text);
        }
        break;
      default: break;
    }
    fail(t, "expected a term");
  }

  static std::optional<CompareOp> compare_op(Tok k) {
    switch (k) {
      case Tok::Lt: return CompareOp::Lt;
      case Tok::Gt: return CompareOp::Gt;
      case Tok::Le: return CompareOp::Le;
      case Tok::Ge: return CompareOp::Ge;
      case Tok::Eq: return CompareOp::Eq;
      case Tok::Ne: return CompareOp::Ne;
      default: return std::nullopt;
    }
  }

  bool at_arith() const { return at(Tok::Plus) || at(Tok::Minus); }

  Expr expr_after(Term first) {
    Expr e{std::move(first), {}};
    while (at_arith()) {
      const ArithOp op = take().kind == Tok::Plus ? ArithOp::Add : ArithOp::Sub;
      e.rest.emplace_back(op, term());
    }
    return e;
  }

  Literal literal() {
    const Token& t = cur();
    if (t.kind == Tok::Ident && t.text == "not") {
      take();
      return NafLit{atom()};
    }
    if (t.kind == Tok::Ident && (ahead(1).kind == Tok::LParen || !compare_op(ahead(1).kind))) {
      return PositiveLit{atom()};
    }
    const SourceLoc loc = t.loc;
    // Assignment: `V is expr`
    if (t.kind == Tok::Var && ahead(1).kind == Tok::Ident && ahead(1).text == "is") {
      Variable target{take().text};
      take();
      return AssignLit{std::move(target), expr_after(term()), loc};
    }
    // Aggregate: `V = #count{C : atom}`
    if (t.kind == Tok::Var && ahead(1).kind == Tok::Eq && ahead(2).kind == Tok::Count) {
      CountLit c;
      c.loc = loc;
      c.result = Variable{take().text};
      take();
      take();
      expect(Tok::LBrace, "expected '{' after #count");
      c.collect = Variable{expect(Tok::Var, "expected the counted variable").text};
      expect(Tok::Colon, "expected ':' in #count{V : atom}");
      c.pattern = atom();
      expect(Tok::RBrace, "expected '}' to close #count");
      return c;
    }
    Term lhs = term();
    const auto op = compare_op(cur().kind);
    if (!op) fail(cur(), "expected a comparison operator");
    take();
    Term rhs = term();
    if (at_arith()) {
      const auto* target = as_variable(lhs);
      if (*op != CompareOp::Eq || target == nullptr) {
        fail(cur(), "arithmetic is only allowed on the right of 'V is ...' or 'V = ...'");
      }
      return AssignLit{*target, expr_after(std::move(rhs)), loc};
    }
    return CompareLit{*op, std::move(lhs), std::move(rhs), loc};
  }

  static std::vector<std::string> answer_variables(const std::vector<Literal>& body) {
    // Variables that occur outside aggregates.
    std::vector<std::string> outside;
    for (const auto& lit : body) {
      if (const auto* c = std::get_if<CountLit>(&lit)) {
        outside.push_back(c->result.name);
        continue;
      }
      if (const Atom* a = literal_atom(lit)) {
        collect_vars(*a, outside);
      } else if (const auto* cmp = std::get_if<CompareLit>(&lit)) {
        collect_vars(cmp->lhs, outside);
        collect_vars(cmp->rhs, outside);
      } else if (const auto* as = std::get_if<AssignLit>(&lit)) {
        outside.push_back(as->target.name);
        collect_vars(as->expr, outside);
      }
    }
    std::vector<std::string> out;
    for (auto& v : outside) {
      if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(std::move(v));
    }
    return out;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::vector<Diagnostic>& diags_;
};

std::string joined(const std::vector<Diagnostic>& diags) {
  std::string out;
  for (const auto& d : diags) {
    if (!out.empty()) out += "\n";
    out += d.str();
  }
  return out;
}

}  // namespace

ParseResult parse_program(std::string_view text) {
  ParseResult r;
  Parser parser(Lexer(text, r.diagnostics).run(), r.diagnostics);
  r.program = parser.program();
  return r;
}

QueryParseResult parse_query(std::string_view text) {
  QueryParseResult r;
  Parser parser(Lexer(text, r.diagnostics).run(), r.diagnostics);
  r.query = parser.query();
  return r;
}

GroundAtom parse_ground_atom(std::string_view text) {
  std::vector<Diagnostic> diags;
  Parser parser(Lexer(text, diags).run(), diags);
  Atom atom;
  parser.guarded([&] { atom = parser.ground_atom(); });
  if (!diags.empty()) throw Error(ErrorCode::ParseError, joined(diags));
  GroundAtom g{atom.predicate, {}};
  for (const auto& t : atom.args) {
    const auto* c = as_constant(t);
    if (c == nullptr) throw Error(ErrorCode::ParseError, "atom '" + to_source(atom) + "' is not ground");
    g.args.push_back(*c);
  }
  return g;
}

Program parse_program_or_throw(std::string_view text) {
  auto r = parse_program(text);
  if (!r.ok()) throw Error(ErrorCode::ParseError, joined(r.diagnostics));
  return std::move(r.program);
}

Query parse_query_or_throw(std::string_view text) {
  auto r = parse_query(text);
  if (!r.ok()) throw Error(ErrorCode::ParseError, joined(r.diagnostics));
  return std::move(r.query);
}

}  // namespace provlog
