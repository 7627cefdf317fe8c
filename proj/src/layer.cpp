#include "nlrl/layer.hpp"

#include <algorithm>
#include <cmath>

#include "nlrl/errors.hpp"

namespace nlrl {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::AndOr:
      return "and-or";
    case Variant::AndNeg:
      return "and-neg";
    case Variant::AndNoNeg:
      return "and-noneg";
  }
  return "?";
}

std::string_view to_string(NegationMode m) {
  return m == NegationMode::PerInput ? "per-input" : "per-input-per-rule";
}

Variant parse_variant(std::string_view text) {
  for (Variant v : {Variant::AndOr, Variant::AndNeg, Variant::AndNoNeg}) {
    if (text == to_string(v)) return v;
  }
  throw std::invalid_argument("unknown variant '" + std::string(text) +
                              "' (expected and-or, and-neg or and-noneg)");
}

NegationMode parse_negation_mode(std::string_view text) {
  for (NegationMode m : {NegationMode::PerInput, NegationMode::PerInputPerRule}) {
    if (text == to_string(m)) return m;
  }
  throw std::invalid_argument("unknown negation mode '" + std::string(text) +
                              "' (expected per-input or per-input-per-rule)");
}

LayerParams LayerParams::zeros(Variant variant, NegationMode mode, std::size_t inputs,
                               std::size_t rules) {
  LayerParams p;
  p.variant = variant;
  p.negation_mode = mode;
  p.rule_logits = Matrix(rules, inputs);
  p.negation_logits = Matrix(mode == NegationMode::PerInput ? 1 : rules, inputs);
  if (variant != Variant::AndNoNeg) p.gate_logits.assign(rules, 0.0);
  return p;
}

void LayerParams::validate() const {
  const std::size_t m = rules();
  const std::size_t n = inputs();
  if (m == 0 || n == 0) throw ShapeError("layer needs at least one input and one rule");
  if (rule_logits.values.size() != m * n) throw ShapeError("rule logits storage size mismatch");
  const std::size_t neg_rows = negation_mode == NegationMode::PerInput ? 1 : m;
  if (negation_logits.rows != neg_rows || negation_logits.cols != n ||
      negation_logits.values.size() != neg_rows * n) {
    throw ShapeError("negation logits must be " + std::to_string(neg_rows) + "x" +
                     std::to_string(n));
  }
  const std::size_t gates = has_gate() ? m : 0;
  if (gate_logits.size() != gates) {
    throw ShapeError("gate logits must have length " + std::to_string(gates));
  }
}

std::vector<std::span<double>> LayerParams::blocks() {
  return {rule_logits.values, negation_logits.values, gate_logits};
}

std::vector<std::span<const double>> LayerParams::blocks() const {
  return {rule_logits.values, negation_logits.values, gate_logits};
}

double squash(double raw) {
  // Split by sign so exp never overflows.
  if (raw >= 0.0) return 1.0 / (1.0 + std::exp(-raw));
  const double e = std::exp(raw);
  return e / (1.0 + e);
}

namespace {

double dsquash(double s) { return s * (1.0 - s); }

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw ShapeError(std::string(what) + ": length " + std::to_string(a) + " vs " +
                     std::to_string(b));
  }
}

}  // namespace

std::vector<double> negation_gate(std::span<const double> x, std::span<const double> logits) {
  require_same_length(x.size(), logits.size(), "negation_gate");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double s = squash(logits[i]);
    out[i] = (1.0 - s) * x[i] + s * (1.0 - x[i]);
  }
  return out;
}

Matrix negation_gate(std::span<const double> x, const Matrix& logits) {
  require_same_length(x.size(), logits.cols, "negation_gate");
  Matrix out(logits.rows, logits.cols);
  for (std::size_t r = 0; r < logits.rows; ++r) {
    auto row = negation_gate(x, logits.row(r));
    std::copy(row.begin(), row.end(), out.row(r).begin());
  }
  return out;
}

double and_rule(std::span<const double> x_hat, std::span<const double> logits, double epsilon) {
  require_same_length(x_hat.size(), logits.size(), "and_rule");
  double log_sum = 0.0;
  for (std::size_t i = 0; i < x_hat.size(); ++i) {
    log_sum += squash(logits[i]) * std::log(std::max(x_hat[i], 0.0) + epsilon);
  }
  return std::exp(log_sum);
}

double or_rule(std::span<const double> x_hat, std::span<const double> logits) {
  require_same_length(x_hat.size(), logits.size(), "or_rule");
  double miss = 1.0;
  for (std::size_t i = 0; i < x_hat.size(); ++i) miss *= 1.0 - squash(logits[i]) * x_hat[i];
  return 1.0 - miss;
}

double or_rule_kronecker(std::span<const double> x_hat, std::span<const double> a) {
  require_same_length(x_hat.size(), a.size(), "or_rule_kronecker");
  if (x_hat.empty()) return 0.0;
  if (x_hat.size() > 16) {
    throw ResourceError("Kronecker expansion limited to 16 inputs, got " +
                        std::to_string(x_hat.size()));
  }
  // Innermost factor (-1, a_1 x_1); each further input contributes (1, -a_i x_i)
  // from the left.
  std::vector<double> expansion{-1.0, a[0] * x_hat[0]};
  for (std::size_t i = 1; i < x_hat.size(); ++i) {
    const double factor[2] = {1.0, -a[i] * x_hat[i]};
    std::vector<double> next;
    next.reserve(expansion.size() * 2);
    for (double f : factor) {
      for (double e : expansion) next.push_back(f * e);
    }
    expansion = std::move(next);
  }
  double sum = 0.0;
  for (double e : expansion) sum += e;
  return sum + 1.0;
}

std::vector<double> output_gate(std::span<const double> and_values,
                                std::span<const double> or_values,
                                std::span<const double> logits) {
  require_same_length(and_values.size(), or_values.size(), "output_gate");
  require_same_length(and_values.size(), logits.size(), "output_gate");
  std::vector<double> y(and_values.size());
  for (std::size_t j = 0; j < y.size(); ++j) {
    const double s = squash(logits[j]);
    y[j] = (1.0 - s) * and_values[j] + s * or_values[j];
  }
  return y;
}

LayerTrace layer_forward(std::span<const double> x, const LayerParams& params, double epsilon) {
  params.validate();
  if (x.size() != params.inputs()) {
    throw ShapeError("layer expects " + std::to_string(params.inputs()) + " inputs, got " +
                     std::to_string(x.size()));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw DomainError("non-finite layer input");
  }
  const std::size_t m = params.rules();
  const bool shared = params.negation_mode == NegationMode::PerInput;

  LayerTrace t;
  t.input.assign(x.begin(), x.end());
  t.negated_input = negation_gate(x, params.negation_logits);
  t.and_values.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    t.and_values[j] =
        and_rule(t.negated_input.row(shared ? 0 : j), params.rule_logits.row(j), epsilon);
  }

  switch (params.variant) {
    case Variant::AndOr:
      t.or_values.resize(m);
      for (std::size_t j = 0; j < m; ++j) {
        t.or_values[j] = or_rule(t.negated_input.row(shared ? 0 : j), params.rule_logits.row(j));
      }
      t.output = output_gate(t.and_values, t.or_values, params.gate_logits);
      break;
    case Variant::AndNeg: {
      t.output.resize(m);
      for (std::size_t j = 0; j < m; ++j) {
        const double s = squash(params.gate_logits[j]);
        t.output[j] = (1.0 - s) * t.and_values[j] + s * (1.0 - t.and_values[j]);
      }
      break;
    }
    case Variant::AndNoNeg:
      t.output = t.and_values;
      break;
  }
  return t;
}

LayerGradients layer_backward(const LayerParams& params, const LayerTrace& trace,
                              std::span<const double> upstream, double epsilon) {
  params.validate();
  const std::size_t m = params.rules();
  const std::size_t n = params.inputs();
  const bool shared = params.negation_mode == NegationMode::PerInput;
  if (trace.input.size() != n || trace.and_values.size() != m || trace.output.size() != m ||
      trace.negated_input.rows != params.negation_logits.rows ||
      trace.negated_input.cols != n ||
      (params.variant == Variant::AndOr && trace.or_values.size() != m)) {
    throw ShapeError("trace does not belong to this layer");
  }
  require_same_length(upstream.size(), m, "layer_backward upstream");

  LayerGradients g;
  g.input.assign(n, 0.0);
  g.params = LayerParams::zeros(params.variant, params.negation_mode, n, m);

  // dL/dAND and dL/dOR per rule.
  std::vector<double> d_and(m, 0.0);
  std::vector<double> d_or(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    switch (params.variant) {
      case Variant::AndOr: {
        const double s = squash(params.gate_logits[j]);
        d_and[j] = upstream[j] * (1.0 - s);
        d_or[j] = upstream[j] * s;
        g.params.gate_logits[j] = upstream[j] * (trace.or_values[j] - trace.and_values[j]) * dsquash(s);
        break;
      }
      case Variant::AndNeg: {
        const double s = squash(params.gate_logits[j]);
        d_and[j] = upstream[j] * (1.0 - 2.0 * s);
        g.params.gate_logits[j] = upstream[j] * (1.0 - 2.0 * trace.and_values[j]) * dsquash(s);
        break;
      }
      case Variant::AndNoNeg:
        d_and[j] = upstream[j];
        break;
    }
  }

  Matrix d_xhat(trace.negated_input.rows, n);
  std::vector<double> prefix(n + 1);
  std::vector<double> suffix(n + 1);
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t r = shared ? 0 : j;
    const auto xh = trace.negated_input.row(r);
    const auto logits = params.rule_logits.row(j);

    if (d_and[j] != 0.0) {
      const double and_j = trace.and_values[j];
      for (std::size_t i = 0; i < n; ++i) {
        const double a = squash(logits[i]);
        // The clamp in and_rule cuts the gradient for negative x_hat.
        const double base = std::max(xh[i], 0.0) + epsilon;
        g.params.rule_logits(j, i) += d_and[j] * and_j * std::log(base) * dsquash(a);
        if (xh[i] >= 0.0) d_xhat(r, i) += d_and[j] * and_j * a / base;
      }
    }

    if (params.variant == Variant::AndOr && d_or[j] != 0.0) {
      // Products of (1 - a_k x_k) excluding index i, without division.
      prefix[0] = 1.0;
      for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] * (1.0 - squash(logits[i]) * xh[i]);
      suffix[n] = 1.0;
      for (std::size_t i = n; i-- > 0;) suffix[i] = suffix[i + 1] * (1.0 - squash(logits[i]) * xh[i]);
      for (std::size_t i = 0; i < n; ++i) {
        const double a = squash(logits[i]);
        const double others = prefix[i] * suffix[i + 1];
        g.params.rule_logits(j, i) += d_or[j] * others * xh[i] * dsquash(a);
        d_xhat(r, i) += d_or[j] * others * a;
      }
    }
  }

  for (std::size_t r = 0; r < d_xhat.rows; ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      const double s = squash(params.negation_logits(r, i));
      const double x = trace.input[i];
      g.input[i] += d_xhat(r, i) * (1.0 - 2.0 * s);
      g.params.negation_logits(r, i) = d_xhat(r, i) * (1.0 - 2.0 * x) * dsquash(s);
    }
  }
  return g;
}

}  // namespace nlrl
