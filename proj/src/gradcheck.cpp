#include "nlrl/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "nlrl/errors.hpp"
#include "nlrl/prng.hpp"

namespace nlrl {

std::vector<double> finite_diff_grad(const ScalarFunctional& loss, std::span<const double> theta,
                                     double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  std::vector<double> point(theta.begin(), theta.end());
  std::vector<double> grad(point.size());
  for (std::size_t k = 0; k < point.size(); ++k) {
    const double saved = point[k];
    point[k] = saved + h;
    const double up = loss(point);
    point[k] = saved - h;
    const double down = loss(point);
    point[k] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw DomainError("non-finite loss while differencing coordinate " + std::to_string(k));
    }
    grad[k] = (up - down) / (2.0 * h);
  }
  return grad;
}

NetworkGradients finite_diff_grad(const Network& net, std::span<const double> x,
                                  const ScalarFunctional& loss_of_outputs, double h) {
  NetworkGradients g = NetworkGradients::zeros_like(net);

  std::vector<double> input(x.begin(), x.end());
  g.input = finite_diff_grad(
      [&](std::span<const double> xs) { return loss_of_outputs(predict(net, xs)); }, input, h);

  Network probe = net;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    auto probe_blocks = probe.layers[l].blocks();
    auto grad_blocks = g.layers[l].blocks();
    for (std::size_t b = 0; b < probe_blocks.size(); ++b) {
      std::span<double> block = probe_blocks[b];
      std::vector<double> original(block.begin(), block.end());
      auto d = finite_diff_grad(
          [&](std::span<const double> theta) {
            std::copy(theta.begin(), theta.end(), block.begin());
            return loss_of_outputs(predict(probe, input));
          },
          original, h);
      std::copy(original.begin(), original.end(), block.begin());
      std::copy(d.begin(), d.end(), grad_blocks[b].begin());
    }
  }
  return g;
}

double gradient_error(double analytic, double numeric, double relative_tolerance,
                      double absolute_tolerance) {
  const double floor = absolute_tolerance / relative_tolerance;
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), floor});
}

bool GradCheckReport::passed() const {
  return std::all_of(cases.begin(), cases.end(),
                     [](const GradCheckCase& c) { return c.failures == 0; });
}

namespace {

const char* block_name(std::size_t b) {
  static const char* names[] = {"rule_logits", "negation_logits", "gate_logits"};
  return names[b];
}

void check_case(GradCheckCase& result, const GradCheckOptions& opt, SplitMix64& rng) {
  for (std::size_t trial = 0; trial < opt.trials; ++trial) {
    NetworkSpec spec;
    spec.variant = result.variant;
    spec.negation_mode = result.negation_mode;
    const std::size_t depth = 1 + rng.below(3);
    for (std::size_t l = 0; l <= depth; ++l) spec.sizes.push_back(1 + rng.below(5));

    Network net = Network::zeros(spec);
    for (auto& layer : net.layers) {
      for (auto block : layer.blocks()) {
        for (double& v : block) v = rng.uniform(-3.0, 3.0);
      }
    }
    std::vector<double> x(spec.input_width());
    for (double& v : x) v = rng.uniform(0.05, 0.95);
    std::vector<double> target(spec.output_width());
    for (double& v : target) v = rng.uniform();

    auto loss = [&](std::span<const double> out) {
      double sum = 0.0;
      for (std::size_t k = 0; k < out.size(); ++k) sum += (out[k] - target[k]) * (out[k] - target[k]);
      return sum / static_cast<double>(out.size());
    };

    const auto trace = network_forward(net, x);
    std::vector<double> upstream(target.size());
    for (std::size_t k = 0; k < target.size(); ++k) {
      upstream[k] = 2.0 * (trace.outputs()[k] - target[k]) / static_cast<double>(target.size());
    }
    const auto analytic = network_backward(net, trace, upstream);
    const auto numeric = finite_diff_grad(net, x, loss, opt.h);

    auto compare = [&](double a, double n, const std::string& where) {
      ++result.comparisons;
      const double err = gradient_error(a, n, opt.relative_tolerance, opt.absolute_tolerance);
      if (err > opt.relative_tolerance) ++result.failures;
      if (err > result.worst_error || result.worst_coordinate.empty()) {
        result.worst_error = err;
        result.worst_coordinate = "trial " + std::to_string(trial) + " (" + spec.architecture() + ") " + where;
        result.worst_analytic = a;
        result.worst_numeric = n;
      }
    };

    for (std::size_t i = 0; i < x.size(); ++i) {
      compare(analytic.input[i], numeric.input[i], "input[" + std::to_string(i) + "]");
    }
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      auto a_blocks = analytic.layers[l].blocks();
      auto n_blocks = numeric.layers[l].blocks();
      for (std::size_t b = 0; b < a_blocks.size(); ++b) {
        for (std::size_t k = 0; k < a_blocks[b].size(); ++k) {
          compare(a_blocks[b][k], n_blocks[b][k],
                  "layer " + std::to_string(l + 1) + " " + block_name(b) + "[" + std::to_string(k) + "]");
        }
      }
    }
    ++result.trials;
  }
}

}  // namespace

GradCheckReport run_gradient_check(const GradCheckOptions& options) {
  GradCheckReport report;
  std::uint64_t combo = 0;
  for (Variant v : {Variant::AndOr, Variant::AndNeg, Variant::AndNoNeg}) {
    for (NegationMode m : {NegationMode::PerInput, NegationMode::PerInputPerRule}) {
      GradCheckCase c;
      c.variant = v;
      c.negation_mode = m;
      SplitMix64 rng(derive_seed(options.seed, combo++));
      check_case(c, options, rng);
      report.cases.push_back(std::move(c));
    }
  }
  return report;
}

}  // namespace nlrl
