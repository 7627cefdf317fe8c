#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlrl/formula.hpp"
#include "nlrl/network.hpp"

namespace nlrl {

inline constexpr double kDefaultSaturationThreshold = 0.9;
inline constexpr double kDefaultFiringThreshold = 0.5;
/// Largest input width for which rules are compiled into weights.
inline constexpr std::size_t kMaxInjectionArity = 12;

/// Builds a network whose every output neuron computes `f` on boolean inputs.
/// All logits are +-kSaturatedLogit. Throws CapacityError when the layout
/// cannot host the rule.
Network init_from_formula(const Formula& f, const NetworkSpec& spec);

/// One formula per output neuron.
Network init_from_formulas(std::span<const Formula> outputs, const NetworkSpec& spec);

struct NeuronExtraction {
  std::optional<Formula> formula;                    // empty when unsaturated
  std::vector<std::string> unsaturated;              // e.g. "L2.A[0][3]", "L1.neg[0][1]", "L3.gate[4]"
  std::optional<double> max_corner_deviation;        // set when a formula was extracted
};

struct ExtractionReport {
  double theta = kDefaultSaturationThreshold;
  std::vector<NeuronExtraction> outputs;

  std::size_t unsaturated_count() const;
  /// One line per output neuron: the formula or UNSATURATED(coords...).
  std::string to_text() const;
  nlohmann::json to_json() const;
};

/// Reads rules back out of the weights. A squashed weight >= theta reads as 1,
/// <= 1 - theta as 0; anything in between marks the neuron unsaturated.
ExtractionReport extract(const Network& net, double theta = kDefaultSaturationThreshold);

/// Max over boolean input corners and all output neurons of |net - f|.
double verify(const Formula& f, const Network& net);
/// Same for a single output neuron.
double verify_output(const Formula& f, const Network& net, std::size_t output);

struct FiredRules {
  std::vector<bool> fired;
  bool none_fired = true;
};

/// Output k fires when outputs[k] >= threshold; none_fired flags an
/// unclassified input.
FiredRules fired(std::span<const double> outputs, double threshold = kDefaultFiringThreshold);

}  // namespace nlrl
