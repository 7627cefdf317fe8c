#include "nlrl/formula.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "nlrl/errors.hpp"

namespace nlrl {

Formula Formula::var(std::size_t index) { return Formula(Op::Var, index, false, {}); }

Formula Formula::constant(bool value) { return Formula(Op::Const, 0, value, {}); }

Formula Formula::negate(Formula child) {
  std::vector<Formula> children;
  children.push_back(std::move(child));
  return Formula(Op::Not, 0, false, std::move(children));
}

Formula Formula::conj(std::vector<Formula> children) {
  if (children.empty()) throw std::invalid_argument("And needs at least one child");
  return Formula(Op::And, 0, false, std::move(children));
}

Formula Formula::disj(std::vector<Formula> children) {
  if (children.empty()) throw std::invalid_argument("Or needs at least one child");
  return Formula(Op::Or, 0, false, std::move(children));
}

Formula Formula::exclusive_or(Formula left, Formula right) {
  return Formula(Op::Xor, 0, false, {std::move(left), std::move(right)});
}

Formula Formula::implies(Formula left, Formula right) {
  return Formula(Op::Implies, 0, false, {std::move(left), std::move(right)});
}

Formula Formula::equiv(Formula left, Formula right) {
  return Formula(Op::Equiv, 0, false, {std::move(left), std::move(right)});
}

std::size_t Formula::arity() const {
  if (op_ == Op::Var) return index_ + 1;
  std::size_t n = 0;
  for (const auto& c : children_) n = std::max(n, c.arity());
  return n;
}

namespace {

Formula lower_xor(Formula a, Formula b, XorLowering mode) {
  using F = Formula;
  if (mode == XorLowering::Dnf) {
    return F::disj({F::conj({a, F::negate(b)}), F::conj({F::negate(a), b})});
  }
  return F::conj({F::disj({a, b}), F::negate(F::conj({a, b}))});
}

// x + y - xy, the algebraic OR of two values.
double prob_sum(double p, double q) { return p + q - p * q; }

double xor_algebraic(double p, double q, XorLowering mode) {
  if (mode == XorLowering::Dnf) return prob_sum(p * (1.0 - q), (1.0 - p) * q);
  return prob_sum(p, q) * (1.0 - p * q);
}

}  // namespace

Formula lower(const Formula& f, XorLowering mode) {
  using F = Formula;
  switch (f.op()) {
    case Op::Var:
    case Op::Const:
      return f;
    case Op::Not:
      return F::negate(lower(f.children()[0], mode));
    case Op::And:
    case Op::Or: {
      std::vector<Formula> kids;
      kids.reserve(f.children().size());
      for (const auto& c : f.children()) kids.push_back(lower(c, mode));
      return f.op() == Op::And ? F::conj(std::move(kids)) : F::disj(std::move(kids));
    }
    case Op::Xor:
      return lower_xor(lower(f.children()[0], mode), lower(f.children()[1], mode), mode);
    case Op::Implies:
      return F::disj({F::negate(lower(f.children()[0], mode)), lower(f.children()[1], mode)});
    case Op::Equiv:
      return F::negate(
          lower_xor(lower(f.children()[0], mode), lower(f.children()[1], mode), mode));
  }
  return f;
}

bool is_lowered(const Formula& f) {
  if (f.op() == Op::Xor || f.op() == Op::Implies || f.op() == Op::Equiv) return false;
  return std::all_of(f.children().begin(), f.children().end(),
                     [](const Formula& c) { return is_lowered(c); });
}

bool eval_boolean(const Formula& f, std::span<const std::uint8_t> assignment) {
  const auto& kids = f.children();
  switch (f.op()) {
    case Op::Var:
      if (f.index() >= assignment.size()) {
        throw ArityError("variable x" + std::to_string(f.index()) + " outside assignment of length " +
                         std::to_string(assignment.size()));
      }
      return assignment[f.index()] != 0;
    case Op::Const:
      return f.value();
    case Op::Not:
      return !eval_boolean(kids[0], assignment);
    case Op::And: {
      bool out = true;
      // Evaluate every child so arity errors surface regardless of values.
      for (const auto& c : kids) out = eval_boolean(c, assignment) && out;
      return out;
    }
    case Op::Or: {
      bool out = false;
      for (const auto& c : kids) out = eval_boolean(c, assignment) || out;
      return out;
    }
    case Op::Xor:
      return eval_boolean(kids[0], assignment) != eval_boolean(kids[1], assignment);
    case Op::Implies: {
      bool a = eval_boolean(kids[0], assignment);
      bool b = eval_boolean(kids[1], assignment);
      return !a || b;
    }
    case Op::Equiv:
      return eval_boolean(kids[0], assignment) == eval_boolean(kids[1], assignment);
  }
  return false;
}

namespace {

double eval_alg(const Formula& f, std::span<const double> point, XorLowering mode) {
  const auto& kids = f.children();
  switch (f.op()) {
    case Op::Var:
      if (f.index() >= point.size()) {
        throw ArityError("variable x" + std::to_string(f.index()) + " outside point of length " +
                         std::to_string(point.size()));
      }
      return point[f.index()];
    case Op::Const:
      return f.value() ? 1.0 : 0.0;
    case Op::Not:
      return 1.0 - eval_alg(kids[0], point, mode);
    case Op::And: {
      double prod = 1.0;
      for (const auto& c : kids) prod *= eval_alg(c, point, mode);
      return prod;
    }
    case Op::Or: {
      double miss = 1.0;
      for (const auto& c : kids) miss *= 1.0 - eval_alg(c, point, mode);
      return 1.0 - miss;
    }
    case Op::Xor:
      return xor_algebraic(eval_alg(kids[0], point, mode), eval_alg(kids[1], point, mode), mode);
    case Op::Implies:
      return prob_sum(1.0 - eval_alg(kids[0], point, mode), eval_alg(kids[1], point, mode));
    case Op::Equiv:
      return 1.0 -
             xor_algebraic(eval_alg(kids[0], point, mode), eval_alg(kids[1], point, mode), mode);
  }
  return 0.0;
}

}  // namespace

double eval_algebraic(const Formula& f, std::span<const double> point, XorLowering mode) {
  for (std::size_t i = 0; i < point.size(); ++i) {
    if (!(point[i] >= 0.0 && point[i] <= 1.0)) {
      throw DomainError("point coordinate " + std::to_string(i) + " outside [0,1]");
    }
  }
  return eval_alg(f, point, mode);
}

std::vector<std::uint8_t> assignment_bits(std::uint64_t k, std::size_t n) {
  std::vector<std::uint8_t> bits(n);
  for (std::size_t i = 0; i < n; ++i) bits[i] = static_cast<std::uint8_t>((k >> (n - 1 - i)) & 1U);
  return bits;
}

TruthTable truth_table(const Formula& f, std::size_t n) {
  if (n > kMaxTruthTableArity) {
    throw ResourceError("truth table arity " + std::to_string(n) + " exceeds " +
                        std::to_string(kMaxTruthTableArity));
  }
  if (f.arity() > n) {
    throw ArityError("formula uses x" + std::to_string(f.arity() - 1) + " but arity is " +
                     std::to_string(n));
  }
  TruthTable table{n, std::vector<std::uint8_t>(std::size_t{1} << n)};
  for (std::uint64_t k = 0; k < table.bits.size(); ++k) {
    table.bits[k] = eval_boolean(f, assignment_bits(k, n)) ? 1 : 0;
  }
  return table;
}

bool equivalent(const Formula& f, const Formula& g, std::size_t n) {
  return truth_table(f, n) == truth_table(g, n);
}

// ---------------------------------------------------------------------------
// Text syntax

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Formula parse() {
    Formula f = sequence();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return f;
  }

 private:
  enum class Tok { And, Or, Xor, Implies, Equiv, None };

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("formula parse error at offset " + std::to_string(pos_) + ": " + msg);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool consume(std::string_view lit) {
    if (text_.substr(pos_, lit.size()) == lit) {
      pos_ += lit.size();
      return true;
    }
    return false;
  }

  Tok binary_op() {
    skip_ws();
    if (consume("&")) return Tok::And;
    if (consume("|")) return Tok::Or;
    if (consume("^")) return Tok::Xor;
    if (consume("->")) return Tok::Implies;
    if (consume("<->")) return Tok::Equiv;
    return Tok::None;
  }

  // operand (op operand)*, all operators identical.
  Formula sequence() {
    std::vector<Formula> operands;
    operands.push_back(operand());
    Tok op = Tok::None;
    for (;;) {
      std::size_t save = pos_;
      Tok next = binary_op();
      if (next == Tok::None) {
        pos_ = save;
        break;
      }
      if (op != Tok::None && next != op) fail("mixed operators need explicit parentheses");
      op = next;
      operands.push_back(operand());
    }
    switch (op) {
      case Tok::None:
        return std::move(operands.front());
      case Tok::And:
        return Formula::conj(std::move(operands));
      case Tok::Or:
        return Formula::disj(std::move(operands));
      default:
        break;
    }
    if (operands.size() != 2) fail("^, -> and <-> take exactly two operands");
    if (op == Tok::Xor) return Formula::exclusive_or(operands[0], operands[1]);
    if (op == Tok::Implies) return Formula::implies(operands[0], operands[1]);
    return Formula::equiv(operands[0], operands[1]);
  }

  Formula operand() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    char c = text_[pos_];
    if (c == '!') {
      ++pos_;
      return Formula::negate(operand());
    }
    if (c == '(') {
      ++pos_;
      Formula inner = sequence();
      skip_ws();
      if (!consume(")")) fail("expected ')'");
      return inner;
    }
    if (c == '0' || c == '1') {
      ++pos_;
      return Formula::constant(c == '1');
    }
    if (c == 'x') {
      ++pos_;
      std::size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (start == pos_) fail("expected variable index after 'x'");
      return Formula::var(std::stoul(std::string(text_.substr(start, pos_ - start))));
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

void print(const Formula& f, std::ostream& os) {
  const auto& kids = f.children();
  auto infix = [&](const char* sep) {
    os << '(';
    for (std::size_t i = 0; i < kids.size(); ++i) {
      if (i) os << sep;
      print(kids[i], os);
    }
    os << ')';
  };
  switch (f.op()) {
    case Op::Var:
      os << 'x' << f.index();
      return;
    case Op::Const:
      os << (f.value() ? '1' : '0');
      return;
    case Op::Not:
      os << '!';
      print(kids[0], os);
      return;
    case Op::And:
    case Op::Or:
      if (kids.size() == 1) {
        print(kids[0], os);
        return;
      }
      infix(f.op() == Op::And ? " & " : " | ");
      return;
    case Op::Xor:
      infix(" ^ ");
      return;
    case Op::Implies:
      infix(" -> ");
      return;
    case Op::Equiv:
      infix(" <-> ");
      return;
  }
}

}  // namespace

Formula parse_formula(std::string_view text) { return Parser(text).parse(); }

std::string to_string(const Formula& f) {
  std::ostringstream os;
  print(f, os);
  return os.str();
}

}  // namespace nlrl
