#pragma once

// TLTL formulas over named predicates, their concrete text syntax, and the
// quantitative (robustness) and Boolean semantics over finite signals.

#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tlmarl {

/// Finite stand-in for +infinity (robustness of `top`, out-of-range Next).
inline constexpr double kRhoMax = 1.0e6;

enum class PredicateKind { Go, Do, Custom };

struct Predicate {
  std::string name;
  PredicateKind kind = PredicateKind::Custom;
  std::string request;  // request id for go/do predicates
  double constant = 0.0;
  std::size_t slot = 0;  // column in a Signal row
};

/// Registry of the predicates a formula may mention. Slots are dense and
/// assigned in insertion order.
class PredicateTable {
 public:
  const Predicate& add(std::string name, PredicateKind kind,
                       std::string request = {}, double constant = 0.0);
  const Predicate* find(std::string_view name) const;
  const Predicate& at(std::size_t slot) const { return predicates_.at(slot); }
  std::size_t size() const { return predicates_.size(); }
  auto begin() const { return predicates_.begin(); }
  auto end() const { return predicates_.end(); }

  /// Convenience for scalar-signal work: custom predicates named by `names`.
  static PredicateTable custom(const std::vector<std::string>& names);

 private:
  std::vector<Predicate> predicates_;
  std::unordered_map<std::string, std::size_t> by_name_;
};

enum class Op {
  True,
  Pred,
  Not,
  And,
  Or,
  Imply,
  Next,
  Eventually,
  Always,
  Until,
  Then,
};

bool is_temporal(Op op);
int arity(Op op);

/// Immutable formula tree with shared structure. Copies are cheap.
class Formula {
 public:
  static Formula top();
  static Formula pred(const Predicate& p);
  static Formula unary(Op op, Formula child);
  static Formula binary(Op op, Formula lhs, Formula rhs);

  static Formula negate(Formula f) { return unary(Op::Not, std::move(f)); }
  static Formula conj(Formula a, Formula b) { return binary(Op::And, std::move(a), std::move(b)); }
  static Formula disj(Formula a, Formula b) { return binary(Op::Or, std::move(a), std::move(b)); }
  static Formula falsum() { return negate(top()); }

  Op op() const;
  const Predicate& predicate() const;
  const Formula& child(std::size_t k) const;
  std::size_t depth() const;

  /// True if any node of the tree is a temporal operator.
  bool has_temporal() const;

 private:
  struct Node;
  explicit Formula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

bool structurally_equal(const Formula& a, const Formula& b);

/// Fully parenthesized text that parses back to the same tree.
std::string to_string(const Formula& f);

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : std::runtime_error(what + " at offset " + std::to_string(position)),
        position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Parses the ASCII formula syntax:
///   top  !  &&  ||  ->  X  <>  []  U  T  ( )  identifiers
/// Precedence from loosest: `->` (right assoc), `||`, `&&`, `U`/`T` (right
/// assoc), prefix operators.
Formula parse_formula(std::string_view text, const PredicateTable& predicates);

/// As parse_formula, but rejects temporal operators.
Formula parse_guard(std::string_view text, const PredicateTable& predicates);

/// Predicate values over time: row t holds the value of every predicate slot
/// at step t.
class Signal {
 public:
  explicit Signal(std::size_t width) : width_(width) {}

  void push_back(std::span<const double> row);
  std::size_t length() const { return rows_; }
  std::size_t width() const { return width_; }
  bool empty() const { return length() == 0; }
  double at(std::size_t t, std::size_t slot) const { return data_[t * width_ + slot]; }
  std::span<const double> row(std::size_t t) const {
    return {data_.data() + t * width_, width_};
  }

 private:
  std::size_t width_;
  std::size_t rows_ = 0;
  std::vector<double> data_;
};

/// rho(x_{t:T}, phi). Throws std::out_of_range unless t < signal.length().
double robustness(const Signal& signal, const Formula& phi, std::size_t t = 0);

/// rho(x_{t:T}, phi) for every t.
std::vector<double> robustness_series(const Signal& signal, const Formula& phi);

/// robustness(signal, phi, 0) > 0.
bool satisfies(const Signal& signal, const Formula& phi);

/// Robustness of a temporal-free formula at a single state. A temporal node
/// is a contract violation and throws std::logic_error.
double eval_guard(std::span<const double> row, const Formula& psi);

}  // namespace tlmarl
