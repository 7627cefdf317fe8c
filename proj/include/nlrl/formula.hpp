#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nlrl {

enum class Op { Var, Const, Not, And, Or, Xor, Implies, Equiv };

/// Boolean formula tree with value semantics.
///
/// And/Or take one or more children; a single-child node evaluates to that
/// child. Xor/Implies/Equiv are binary and can be rewritten into the
/// Not/And/Or basis with lower().
class Formula {
 public:
  static Formula var(std::size_t index);
  static Formula constant(bool value);
  static Formula negate(Formula child);
  static Formula conj(std::vector<Formula> children);
  static Formula disj(std::vector<Formula> children);
  static Formula exclusive_or(Formula left, Formula right);
  static Formula implies(Formula left, Formula right);
  static Formula equiv(Formula left, Formula right);

  Op op() const noexcept { return op_; }
  std::size_t index() const noexcept { return index_; }
  bool value() const noexcept { return value_; }
  const std::vector<Formula>& children() const noexcept { return children_; }

  /// One past the largest variable index used; 0 for variable-free formulas.
  std::size_t arity() const;

  bool operator==(const Formula&) const = default;

 private:
  Formula(Op op, std::size_t index, bool value, std::vector<Formula> children)
      : op_(op), index_(index), value_(value), children_(std::move(children)) {}

  Op op_;
  std::size_t index_ = 0;
  bool value_ = false;
  std::vector<Formula> children_;
};

/// How exclusive-or is expressed in the Not/And/Or basis. On {0,1} both agree;
/// under the product-logic extension they differ inside the unit square.
enum class XorLowering {
  Dnf,             // (x & !y) | (!x & y)
  ConjunctiveForm  // (x | y) & !(x & y)
};

/// Rewrites Xor/Implies/Equiv into Not/And/Or. Equiv becomes !(lowered xor).
Formula lower(const Formula& f, XorLowering mode = XorLowering::Dnf);
bool is_lowered(const Formula& f);

/// Boolean evaluation; assignment[i] != 0 means x_i is true.
bool eval_boolean(const Formula& f, std::span<const std::uint8_t> assignment);

/// Product-logic evaluation: And is the product, Or the probabilistic sum,
/// Not the complement. Throws DomainError for points outside [0,1].
double eval_algebraic(const Formula& f, std::span<const double> point,
                      XorLowering mode = XorLowering::Dnf);

inline constexpr std::size_t kMaxTruthTableArity = 20;

/// 2^arity output bits; entry k belongs to the k-th assignment in
/// lexicographic order with x0 as the most significant bit.
struct TruthTable {
  std::size_t arity = 0;
  std::vector<std::uint8_t> bits;

  bool operator==(const TruthTable&) const = default;
};

/// Assignment number k expanded to n bits, x0 first.
std::vector<std::uint8_t> assignment_bits(std::uint64_t k, std::size_t n);

TruthTable truth_table(const Formula& f, std::size_t n);
bool equivalent(const Formula& f, const Formula& g, std::size_t n);

/// Text syntax: x0, 0, 1, !e, (e & e & ...), (e | e | ...), (e ^ e),
/// (e -> e), (e <-> e). Whitespace is ignored. The outermost parentheses
/// may be omitted.
Formula parse_formula(std::string_view text);
std::string to_string(const Formula& f);

}  // namespace nlrl
