#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nlrl {

/// Which connectors a layer evaluates after input negation.
enum class Variant {
  AndOr,    // AND and OR share weights, a per-neuron gate blends them
  AndNeg,   // AND only, with a per-neuron output negation gate
  AndNoNeg  // AND only, no output gate
};

/// Shape of the input negation logits.
enum class NegationMode {
  PerInput,        // one logit per input, shared by every rule
  PerInputPerRule  // one logit per (rule, input)
};

std::string_view to_string(Variant v);
std::string_view to_string(NegationMode m);
/// Accepts "and-or", "and-neg", "and-noneg".
Variant parse_variant(std::string_view text);
/// Accepts "per-input", "per-input-per-rule".
NegationMode parse_negation_mode(std::string_view text);

/// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), values(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }
  std::span<double> row(std::size_t r) { return {values.data() + r * cols, cols}; }

  bool operator==(const Matrix&) const = default;
};

/// Logit magnitude at which the logistic function is 0 or 1 to double precision.
inline constexpr double kSaturatedLogit = 40.0;

/// Unconstrained parameters of one layer with n inputs and m rules. Every
/// weight the layer uses is the logistic squash of the stored logit.
struct LayerParams {
  Variant variant = Variant::AndNoNeg;
  NegationMode negation_mode = NegationMode::PerInput;
  Matrix rule_logits;               // m x n, squashed: rule membership A
  Matrix negation_logits;           // 1 x n or m x n, squashed: input negation gate
  std::vector<double> gate_logits;  // m (AndOr blend / AndNeg output negation), empty for AndNoNeg

  static LayerParams zeros(Variant variant, NegationMode mode, std::size_t inputs,
                           std::size_t rules);

  std::size_t inputs() const noexcept { return rule_logits.cols; }
  std::size_t rules() const noexcept { return rule_logits.rows; }
  bool has_gate() const noexcept { return variant != Variant::AndNoNeg; }

  /// Throws ShapeError if the tensors disagree with (inputs, rules, variant, mode).
  void validate() const;

  /// Every parameter tensor in a fixed order: rule, negation, gate.
  std::vector<std::span<double>> blocks();
  std::vector<std::span<const double>> blocks() const;

  bool operator==(const LayerParams&) const = default;
};

/// Logistic function 1 / (1 + exp(-raw)).
double squash(double raw);

/// x_hat = (1 - s) x + s (1 - x) with s = squash(logit), elementwise.
std::vector<double> negation_gate(std::span<const double> x, std::span<const double> logits);
/// Row-wise version; logits is 1 x n (shared) or m x n (one row per rule).
Matrix negation_gate(std::span<const double> x, const Matrix& logits);

/// prod_i (x_hat_i + eps)^squash(logit_i), evaluated as exp(sum a_i log(x_hat_i + eps)).
double and_rule(std::span<const double> x_hat, std::span<const double> logits, double epsilon);
/// 1 - prod_i (1 - squash(logit_i) x_hat_i).
double or_rule(std::span<const double> x_hat, std::span<const double> logits);
/// Literal signed Kronecker expansion of the disjunction for already squashed
/// weights `a`; costs 2^n. Reference for tests only. Throws ResourceError for n > 16.
double or_rule_kronecker(std::span<const double> x_hat, std::span<const double> a);

/// y = (1 - s) AND + s OR with s = squash(logit), elementwise.
std::vector<double> output_gate(std::span<const double> and_values,
                                std::span<const double> or_values,
                                std::span<const double> logits);

/// Cached intermediates of one forward pass through a layer.
struct LayerTrace {
  std::vector<double> input;
  Matrix negated_input;  // rows match the negation logits
  std::vector<double> and_values;
  std::vector<double> or_values;  // AndOr only
  std::vector<double> output;
};

LayerTrace layer_forward(std::span<const double> x, const LayerParams& params, double epsilon);

struct LayerGradients {
  std::vector<double> input;
  LayerParams params;  // same shapes as the layer, holding dL/dlogit
};

/// Exact gradients of a scalar loss given dL/dy for the traced forward pass.
LayerGradients layer_backward(const LayerParams& params, const LayerTrace& trace,
                              std::span<const double> upstream, double epsilon);

}  // namespace nlrl
