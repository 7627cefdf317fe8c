#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nlrl/network.hpp"

namespace nlrl {

using ScalarFunctional = std::function<double(std::span<const double>)>;

/// Central differences (L(theta + h e_k) - L(theta - h e_k)) / 2h for every k.
/// Throws DomainError when the functional returns a non-finite value.
std::vector<double> finite_diff_grad(const ScalarFunctional& loss, std::span<const double> theta,
                                     double h);

/// Same, for loss(outputs of net at x), with respect to every logit and input.
NetworkGradients finite_diff_grad(const Network& net, std::span<const double> x,
                                  const ScalarFunctional& loss_of_outputs, double h);

struct GradCheckOptions {
  std::size_t trials = 100;
  double h = 1e-5;
  double relative_tolerance = 1e-4;
  double absolute_tolerance = 1e-8;
  std::uint64_t seed = 0;
};

/// Result for one (variant, negation mode) combination.
struct GradCheckCase {
  Variant variant{};
  NegationMode negation_mode{};
  std::size_t trials = 0;
  std::size_t comparisons = 0;
  std::size_t failures = 0;
  double worst_error = 0.0;     // relative error of the worst coordinate
  std::string worst_coordinate;  // e.g. "trial 4 (2-3-1) layer 1 rule_logits[0][2]"
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckCase> cases;
  bool passed() const;
};

/// |a - b| / max(|a|, |b|, abs_tol / rel_tol). Below the floor magnitude the
/// comparison degrades to |a - b| <= abs_tol, so values that are both tiny pass.
double gradient_error(double analytic, double numeric, double relative_tolerance,
                      double absolute_tolerance);

/// Random networks (depth 1-3, widths 1-5), logits in [-3, 3], inputs in
/// [0.05, 0.95] and an MSE loss against random targets, for every variant and
/// negation mode.
GradCheckReport run_gradient_check(const GradCheckOptions& options);

}  // namespace nlrl
