#include "tlmarl/logic.hpp"

#include <algorithm>
#include <cctype>

namespace tlmarl {

// ---------------------------------------------------------------------------
// PredicateTable

const Predicate& PredicateTable::add(std::string name, PredicateKind kind,
                                     std::string request, double constant) {
  if (by_name_.count(name) != 0) {
    throw std::invalid_argument("duplicate predicate '" + name + "'");
  }
  Predicate p{name, kind, std::move(request), constant, predicates_.size()};
  by_name_.emplace(std::move(name), p.slot);
  predicates_.push_back(std::move(p));
  return predicates_.back();
}

const Predicate* PredicateTable::find(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  return it == by_name_.end() ? nullptr : &predicates_[it->second];
}

PredicateTable PredicateTable::custom(const std::vector<std::string>& names) {
  PredicateTable table;
  for (const auto& n : names) table.add(n, PredicateKind::Custom);
  return table;
}

// ---------------------------------------------------------------------------
// Formula

struct Formula::Node {
  Op op;
  Predicate pred;
  std::vector<Formula> args;
  std::size_t depth;
  bool temporal;
};

bool is_temporal(Op op) {
  switch (op) {
    case Op::Next:
    case Op::Eventually:
    case Op::Always:
    case Op::Until:
    case Op::Then:
      return true;
    default:
      return false;
  }
}

int arity(Op op) {
  switch (op) {
    case Op::True:
    case Op::Pred:
      return 0;
    case Op::Not:
    case Op::Next:
    case Op::Eventually:
    case Op::Always:
      return 1;
    default:
      return 2;
  }
}

Formula Formula::top() {
  static const Formula t(std::make_shared<const Node>(Node{Op::True, {}, {}, 1, false}));
  return t;
}

Formula Formula::pred(const Predicate& p) {
  return Formula(std::make_shared<const Node>(Node{Op::Pred, p, {}, 1, false}));
}

Formula Formula::unary(Op op, Formula child) {
  if (arity(op) != 1) throw std::invalid_argument("operator is not unary");
  const std::size_t d = child.depth() + 1;
  const bool temporal = is_temporal(op) || child.has_temporal();
  return Formula(std::make_shared<const Node>(Node{op, {}, {std::move(child)}, d, temporal}));
}

Formula Formula::binary(Op op, Formula lhs, Formula rhs) {
  if (arity(op) != 2) throw std::invalid_argument("operator is not binary");
  const std::size_t d = std::max(lhs.depth(), rhs.depth()) + 1;
  const bool temporal = is_temporal(op) || lhs.has_temporal() || rhs.has_temporal();
  return Formula(std::make_shared<const Node>(
      Node{op, {}, {std::move(lhs), std::move(rhs)}, d, temporal}));
}

Op Formula::op() const { return node_->op; }
const Predicate& Formula::predicate() const {
  if (node_->op != Op::Pred) throw std::logic_error("not a predicate node");
  return node_->pred;
}
const Formula& Formula::child(std::size_t k) const { return node_->args.at(k); }
std::size_t Formula::depth() const { return node_->depth; }
bool Formula::has_temporal() const { return node_->temporal; }

bool structurally_equal(const Formula& a, const Formula& b) {
  if (a.op() != b.op()) return false;
  if (a.op() == Op::Pred) {
    return a.predicate().name == b.predicate().name && a.predicate().slot == b.predicate().slot;
  }
  for (int k = 0; k < arity(a.op()); ++k) {
    if (!structurally_equal(a.child(k), b.child(k))) return false;
  }
  return true;
}

namespace {

const char* op_token(Op op) {
  switch (op) {
    case Op::Not: return "!";
    case Op::And: return "&&";
    case Op::Or: return "||";
    case Op::Imply: return "->";
    case Op::Next: return "X ";
    case Op::Eventually: return "<>";
    case Op::Always: return "[]";
    case Op::Until: return "U";
    case Op::Then: return "T";
    default: return "";
  }
}

void print(const Formula& f, std::string& out) {
  switch (arity(f.op())) {
    case 0:
      out += f.op() == Op::True ? "top" : f.predicate().name;
      return;
    case 1:
      out += op_token(f.op());
      print(f.child(0), out);
      return;
    default:
      out += '(';
      print(f.child(0), out);
      out += ' ';
      out += op_token(f.op());
      out += ' ';
      print(f.child(1), out);
      out += ')';
  }
}

}  // namespace

std::string to_string(const Formula& f) {
  std::string out;
  print(f, out);
  return out;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

enum class Tok { End, Ident, Top, Not, And, Or, Imply, Next, Eventually, Always, Until, Then, LParen, RParen };

struct Token {
  Tok kind;
  std::string text;
  std::size_t pos;
};

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto ident_char = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    auto two = [&](std::string_view t) { return s.substr(i, 2) == t; };
    if (two("&&")) { out.push_back({Tok::And, "&&", start}); i += 2; }
    else if (two("||")) { out.push_back({Tok::Or, "||", start}); i += 2; }
    else if (two("->")) { out.push_back({Tok::Imply, "->", start}); i += 2; }
    else if (two("<>")) { out.push_back({Tok::Eventually, "<>", start}); i += 2; }
    else if (two("[]")) { out.push_back({Tok::Always, "[]", start}); i += 2; }
    else if (c == '!') { out.push_back({Tok::Not, "!", start}); ++i; }
    else if (c == '(') { out.push_back({Tok::LParen, "(", start}); ++i; }
    else if (c == ')') { out.push_back({Tok::RParen, ")", start}); ++i; }
    else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < s.size() && ident_char(s[i])) ++i;
      std::string word(s.substr(start, i - start));
      Tok kind = Tok::Ident;
      if (word == "top") kind = Tok::Top;
      else if (word == "X") kind = Tok::Next;
      else if (word == "U") kind = Tok::Until;
      else if (word == "T") kind = Tok::Then;
      out.push_back({kind, std::move(word), start});
    } else {
      throw ParseError(std::string("unexpected character '") + c + "'", start);
    }
  }
  out.push_back({Tok::End, "", s.size()});
  return out;
}

class Parser {
 public:
  Parser(std::string_view text, const PredicateTable& predicates, bool guard)
      : tokens_(tokenize(text)), predicates_(predicates), guard_(guard) {}

  Formula run() {
    Formula f = implication();
    if (peek().kind != Tok::End) fail("unexpected '" + peek().text + "'");
    return f;
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  const Token& take() { return tokens_[pos_++]; }
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, peek().pos); }

  void check_temporal(const Token& t) const {
    if (guard_) throw ParseError("temporal operator '" + t.text + "' in guard", t.pos);
  }

  Formula implication() {
    Formula lhs = disjunction();
    if (peek().kind == Tok::Imply) {
      take();
      return Formula::binary(Op::Imply, std::move(lhs), implication());
    }
    return lhs;
  }

  Formula disjunction() {
    Formula f = conjunction();
    while (peek().kind == Tok::Or) {
      take();
      f = Formula::disj(std::move(f), conjunction());
    }
    return f;
  }

  Formula conjunction() {
    Formula f = temporal_infix();
    while (peek().kind == Tok::And) {
      take();
      f = Formula::conj(std::move(f), temporal_infix());
    }
    return f;
  }

  Formula temporal_infix() {
    Formula lhs = prefix();
    const Tok k = peek().kind;
    if (k == Tok::Until || k == Tok::Then) {
      check_temporal(take());
      return Formula::binary(k == Tok::Until ? Op::Until : Op::Then, std::move(lhs), temporal_infix());
    }
    return lhs;
  }

  Formula prefix() {
    switch (peek().kind) {
      case Tok::Not:
        take();
        return Formula::negate(prefix());
      case Tok::Next:
        check_temporal(take());
        return Formula::unary(Op::Next, prefix());
      case Tok::Eventually:
        check_temporal(take());
        return Formula::unary(Op::Eventually, prefix());
      case Tok::Always:
        check_temporal(take());
        return Formula::unary(Op::Always, prefix());
      default:
        return atom();
    }
  }

  Formula atom() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Top:
        take();
        return Formula::top();
      case Tok::Ident: {
        const Predicate* p = predicates_.find(t.text);
        if (p == nullptr) fail("unknown predicate '" + t.text + "'");
        take();
        return Formula::pred(*p);
      }
      case Tok::LParen: {
        take();
        Formula f = implication();
        if (peek().kind != Tok::RParen) fail("expected ')'");
        take();
        return f;
      }
      case Tok::End:
        fail("unexpected end of formula");
      default:
        fail("unexpected '" + t.text + "'");
    }
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  const PredicateTable& predicates_;
  bool guard_;
};

}  // namespace

Formula parse_formula(std::string_view text, const PredicateTable& predicates) {
  return Parser(text, predicates, false).run();
}

Formula parse_guard(std::string_view text, const PredicateTable& predicates) {
  return Parser(text, predicates, true).run();
}

// ---------------------------------------------------------------------------
// Semantics

void Signal::push_back(std::span<const double> row) {
  if (row.size() != width_) throw std::invalid_argument("signal row has wrong width");
  data_.insert(data_.end(), row.begin(), row.end());
  ++rows_;
}

namespace {

// Every series below is indexed by the suffix start t and obeys the backward
// recurrences of the truncated min/max semantics:
//   <>f[t]    = max(f[t], <>f[t+1])
//   []f[t]    = min(f[t], []f[t+1])
//   (f U g)[t] = max(g[t], min(f[t], (f U g)[t+1]))
//   (f T g)[t] = max(min(f[t], max_{t' > t} g[t']), (f T g)[t+1])
std::vector<double> series(const Signal& x, const Formula& f) {
  const std::size_t n = x.length();
  std::vector<double> out(n);
  switch (f.op()) {
    case Op::True:
      std::fill(out.begin(), out.end(), kRhoMax);
      return out;
    case Op::Pred: {
      const std::size_t slot = f.predicate().slot;
      for (std::size_t t = 0; t < n; ++t) out[t] = x.at(t, slot);
      return out;
    }
    default:
      break;
  }

  std::vector<double> a = series(x, f.child(0));
  switch (f.op()) {
    case Op::Not:
      for (std::size_t t = 0; t < n; ++t) out[t] = -a[t];
      return out;
    case Op::Next:
      for (std::size_t t = 0; t < n; ++t) out[t] = t + 1 < n ? a[t + 1] : -kRhoMax;
      return out;
    case Op::Eventually:
      for (std::size_t t = n; t-- > 0;) out[t] = t + 1 < n ? std::max(a[t], out[t + 1]) : a[t];
      return out;
    case Op::Always:
      for (std::size_t t = n; t-- > 0;) out[t] = t + 1 < n ? std::min(a[t], out[t + 1]) : a[t];
      return out;
    default:
      break;
  }

  std::vector<double> b = series(x, f.child(1));
  switch (f.op()) {
    case Op::And:
      for (std::size_t t = 0; t < n; ++t) out[t] = std::min(a[t], b[t]);
      break;
    case Op::Or:
      for (std::size_t t = 0; t < n; ++t) out[t] = std::max(a[t], b[t]);
      break;
    case Op::Imply:
      for (std::size_t t = 0; t < n; ++t) out[t] = std::max(-a[t], b[t]);
      break;
    case Op::Until:
      for (std::size_t t = n; t-- > 0;) {
        out[t] = t + 1 < n ? std::max(b[t], std::min(a[t], out[t + 1])) : b[t];
      }
      break;
    case Op::Then: {
      // The first disjunct (t' = t) has an empty "before" window.
      double later_b = -kRhoMax;
      for (std::size_t t = n; t-- > 0;) {
        const double next = t + 1 < n ? out[t + 1] : -kRhoMax;
        out[t] = std::max({-kRhoMax, std::min(a[t], later_b), next});
        later_b = std::max(later_b, b[t]);
      }
      break;
    }
    default:
      throw std::logic_error("unhandled operator");
  }
  return out;
}

}  // namespace

std::vector<double> robustness_series(const Signal& signal, const Formula& phi) {
  return series(signal, phi);
}

double robustness(const Signal& signal, const Formula& phi, std::size_t t) {
  if (t >= signal.length()) throw std::out_of_range("trajectory index out of range");
  return series(signal, phi)[t];
}

bool satisfies(const Signal& signal, const Formula& phi) {
  return robustness(signal, phi, 0) > 0.0;
}

double eval_guard(std::span<const double> row, const Formula& psi) {
  switch (psi.op()) {
    case Op::True:
      return kRhoMax;
    case Op::Pred:
      return row[psi.predicate().slot];
    case Op::Not:
      return -eval_guard(row, psi.child(0));
    case Op::And:
      return std::min(eval_guard(row, psi.child(0)), eval_guard(row, psi.child(1)));
    case Op::Or:
      return std::max(eval_guard(row, psi.child(0)), eval_guard(row, psi.child(1)));
    case Op::Imply:
      return std::max(-eval_guard(row, psi.child(0)), eval_guard(row, psi.child(1)));
    default:
      throw std::logic_error("temporal operator in guard");
  }
}

}  // namespace tlmarl
