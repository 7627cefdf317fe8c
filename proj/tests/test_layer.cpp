#include <doctest.h>

#include <cmath>
#include <limits>

#include "nlrl/errors.hpp"
#include "nlrl/gradcheck.hpp"
#include "nlrl/layer.hpp"
#include "nlrl/network.hpp"
#include "support.hpp"

using namespace nlrl;

namespace {
constexpr double kEps = 1e-5;
constexpr double kOn = kSaturatedLogit;
constexpr double kOff = -kSaturatedLogit;
}  // namespace

TEST_CASE("squash") {
  CHECK(squash(0.0) == 0.5);
  CHECK(squash(kOn) == 1.0);
  CHECK(squash(kOff) > 0.0);
  CHECK(squash(kOff) < 1e-17);
  CHECK(squash(-1000.0) == 0.0);
  CHECK(squash(1000.0) == 1.0);
  CHECK(squash(2.0) + squash(-2.0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("negation gate") {
  const double x[] = {0.3};
  const double zero[] = {0.0};
  const double on[] = {kOn};
  const double off[] = {kOff};
  CHECK(negation_gate(x, zero)[0] == doctest::Approx(0.5));
  CHECK(negation_gate(x, on)[0] == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(negation_gate(x, off)[0] == doctest::Approx(0.3).epsilon(1e-15));
  const double two[] = {0.0, 0.0};
  CHECK_THROWS_AS(negation_gate(x, two), ShapeError);
}

TEST_CASE("and rule") {
  const double half[] = {0.5, 0.5};
  const double on2[] = {kOn, kOn};
  CHECK(and_rule(half, on2, kEps) == doctest::Approx(std::pow(0.5 + kEps, 2)).epsilon(1e-14));

  // Excluded input contributes a factor of one.
  const double mixed[] = {0.3, 0.0};
  const double on_off[] = {kOn, kOff};
  CHECK(and_rule(mixed, on_off, kEps) == doctest::Approx(0.3 + kEps).epsilon(1e-14));

  // Negative x_hat is clamped before the log.
  const double neg[] = {-1e-3};
  const double on1[] = {kOn};
  CHECK(and_rule(neg, on1, kEps) == doctest::Approx(kEps).epsilon(1e-12));

  const double none[] = {0.0, 0.0};
  const double zero2[] = {0.0, 0.0};
  CHECK(and_rule(none, zero2, kEps) == doctest::Approx(kEps).epsilon(1e-12));
}

TEST_CASE("or rule") {
  const double half2[] = {0.5, 0.5};
  const double half3[] = {0.5, 0.5, 0.5};
  const double zeros[] = {0.0, 0.0};
  const double on2[] = {kOn, kOn};
  const double on3[] = {kOn, kOn, kOn};
  CHECK(or_rule(half2, on2) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(or_rule(zeros, on2) == 0.0);
  CHECK(or_rule(half3, on3) == doctest::Approx(0.875).epsilon(1e-15));
}

TEST_CASE("Kronecker expansion matches the product form") {
  const double x1[] = {0.4};
  const double a1[] = {1.0};
  CHECK(or_rule_kronecker(x1, a1) == doctest::Approx(0.4).epsilon(1e-15));
  const double x2[] = {0.5, 0.5};
  const double a2[] = {1.0, 1.0};
  CHECK(or_rule_kronecker(x2, a2) == doctest::Approx(0.75).epsilon(1e-15));

  SplitMix64 rng(21);
  for (std::size_t n = 1; n <= 6; ++n) {
    for (int draw = 0; draw < 200; ++draw) {
      const auto x = testing::random_point(rng, n);
      const auto logits = testing::random_point(rng, n, -6.0, 6.0);
      std::vector<double> a(n);
      for (std::size_t i = 0; i < n; ++i) a[i] = squash(logits[i]);
      REQUIRE(std::abs(or_rule_kronecker(x, a) - or_rule(x, logits)) <= 1e-12);
    }
  }
  std::vector<double> big(17, 0.5);
  CHECK_THROWS_AS(or_rule_kronecker(big, big), ResourceError);
}

TEST_CASE("unit-weight De Morgan") {
  SplitMix64 rng(22);
  for (std::size_t n = 1; n <= 6; ++n) {
    const std::vector<double> on(n, kOn);
    for (int draw = 0; draw < 200; ++draw) {
      const auto x = testing::random_point(rng, n);
      std::vector<double> complement(n);
      for (std::size_t i = 0; i < n; ++i) complement[i] = 1.0 - x[i];
      const double gap = std::abs(and_rule(x, on, kEps) - (1.0 - or_rule(complement, on)));
      REQUIRE(gap <= static_cast<double>(n) * 2.0 * kEps);
    }
  }
}

TEST_CASE("output gate") {
  const double and_v[] = {0.2};
  const double or_v[] = {0.8};
  const double zero[] = {0.0};
  const double on[] = {kOn};
  const double off[] = {kOff};
  CHECK(output_gate(and_v, or_v, zero)[0] == doctest::Approx(0.5));
  CHECK(output_gate(and_v, or_v, on)[0] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(output_gate(and_v, or_v, off)[0] == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("saturated gates reduce the variants to each other") {
  SplitMix64 rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(4);
    const std::size_t m = 1 + rng.below(4);
    auto base = LayerParams::zeros(Variant::AndNoNeg, NegationMode::PerInputPerRule, n, m);
    for (double& v : base.rule_logits.values) v = rng.uniform(-3, 3);
    for (double& v : base.negation_logits.values) v = rng.uniform(-3, 3);
    const auto x = testing::random_point(rng, n);
    const auto plain = layer_forward(x, base, kEps).output;

    LayerParams and_or = base;
    and_or.variant = Variant::AndOr;
    and_or.gate_logits.assign(m, kOff);
    LayerParams and_neg = base;
    and_neg.variant = Variant::AndNeg;
    and_neg.gate_logits.assign(m, kOff);
    LayerParams flipped = and_neg;
    flipped.gate_logits.assign(m, kOn);

    const auto y_or = layer_forward(x, and_or, kEps).output;
    const auto y_neg = layer_forward(x, and_neg, kEps).output;
    const auto y_flip = layer_forward(x, flipped, kEps).output;
    for (std::size_t j = 0; j < m; ++j) {
      REQUIRE(std::abs(y_or[j] - plain[j]) <= 1e-12);
      REQUIRE(std::abs(y_neg[j] - plain[j]) <= 1e-12);
      REQUIRE(std::abs(y_flip[j] - (1.0 - plain[j])) <= 1e-12);
    }
  }
}

TEST_CASE("per-input mode shares negation across rules") {
  auto p = LayerParams::zeros(Variant::AndNoNeg, NegationMode::PerInput, 2, 3);
  CHECK(p.negation_logits.rows == 1);
  p.rule_logits.values.assign(6, kOn);
  p.negation_logits.values = {kOn, kOff};
  const double x[] = {0.2, 0.6};
  const auto t = layer_forward(x, p, kEps);
  for (double y : t.output) CHECK(y == doctest::Approx((0.8 + kEps) * (0.6 + kEps)).epsilon(1e-12));
}

TEST_CASE("layer shape errors") {
  auto p = LayerParams::zeros(Variant::AndOr, NegationMode::PerInput, 2, 3);
  const double x3[] = {0.1, 0.2, 0.3};
  CHECK_THROWS_AS(layer_forward(x3, p, kEps), ShapeError);
  p.gate_logits.pop_back();
  const double x2[] = {0.1, 0.2};
  CHECK_THROWS_AS(layer_forward(x2, p, kEps), ShapeError);
  const double bad[] = {std::numeric_limits<double>::infinity(), 0.0};
  CHECK_THROWS_AS(layer_forward(bad, LayerParams::zeros(Variant::AndNoNeg, NegationMode::PerInput, 2, 1), kEps),
                  DomainError);
}

TEST_CASE("gate gradient equals (OR - AND) s (1 - s) times upstream") {
  SplitMix64 rng(24);
  for (int trial = 0; trial < 50; ++trial) {
    auto p = LayerParams::zeros(Variant::AndOr, NegationMode::PerInput, 3, 2);
    for (auto block : p.blocks()) {
      for (double& v : block) v = rng.uniform(-2, 2);
    }
    const auto x = testing::random_point(rng, 3);
    const auto t = layer_forward(x, p, kEps);
    const double upstream[] = {0.7, -1.3};
    const auto g = layer_backward(p, t, upstream, kEps);
    for (std::size_t j = 0; j < 2; ++j) {
      const double s = squash(p.gate_logits[j]);
      const double expect = (t.or_values[j] - t.and_values[j]) * s * (1.0 - s) * upstream[j];
      REQUIRE(g.params.gate_logits[j] == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("saturated logits carry vanishing gradient") {
  auto p = LayerParams::zeros(Variant::AndOr, NegationMode::PerInputPerRule, 3, 2);
  SplitMix64 rng(25);
  for (auto block : p.blocks()) {
    for (double& v : block) v = rng.below(2) ? kOn : kOff;
  }
  const auto x = testing::random_point(rng, 3, 0.1, 0.9);
  const auto t = layer_forward(x, p, kEps);
  const double upstream[] = {1.0, 1.0};
  const auto g = layer_backward(p, t, upstream, kEps);
  for (auto block : g.params.blocks()) {
    for (double v : block) CHECK(std::abs(v) <= 1e-15);
  }
}

TEST_CASE("single-layer backward agrees with central differences") {
  SplitMix64 rng(26);
  for (int trial = 0; trial < 100; ++trial) {
    NetworkSpec spec;
    spec.sizes = {1 + rng.below(4), 1 + rng.below(4)};
    spec.variant = static_cast<Variant>(rng.below(3));
    spec.negation_mode = static_cast<NegationMode>(rng.below(2));
    const Network net = testing::random_network(rng, spec, 3.0);
    const auto x = testing::random_point(rng, spec.sizes[0], 0.05, 0.95);
    const auto trace = network_forward(net, x);
    std::vector<double> upstream(spec.sizes[1]);
    for (double& v : upstream) v = rng.uniform(-1, 1);
    const auto analytic = network_backward(net, trace, upstream);
    const auto numeric = finite_diff_grad(
        net, x,
        [&](std::span<const double> y) {
          double s = 0.0;
          for (std::size_t j = 0; j < y.size(); ++j) s += upstream[j] * y[j];
          return s;
        },
        1e-5);
    for (std::size_t i = 0; i < x.size(); ++i) {
      REQUIRE(gradient_error(analytic.input[i], numeric.input[i], 1e-4, 1e-8) <= 1e-4);
    }
    const auto a_blocks = analytic.layers[0].blocks();
    const auto n_blocks = numeric.layers[0].blocks();
    for (std::size_t b = 0; b < a_blocks.size(); ++b) {
      for (std::size_t k = 0; k < a_blocks[b].size(); ++k) {
        REQUIRE(gradient_error(a_blocks[b][k], n_blocks[b][k], 1e-4, 1e-8) <= 1e-4);
      }
    }
  }
}

TEST_CASE("variant and mode names") {
  for (Variant v : {Variant::AndOr, Variant::AndNeg, Variant::AndNoNeg}) {
    CHECK(parse_variant(to_string(v)) == v);
  }
  CHECK(parse_negation_mode("per-input-per-rule") == NegationMode::PerInputPerRule);
  CHECK_THROWS(parse_variant("and"));
}
