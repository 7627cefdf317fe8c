#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "nlrl/layer.hpp"

namespace nlrl {

/// Layer widths [d0, d1, ..., dL]; d0 is the input width.
struct NetworkSpec {
  std::vector<std::size_t> sizes;
  Variant variant = Variant::AndNoNeg;
  NegationMode negation_mode = NegationMode::PerInput;
  double epsilon = 1e-5;

  std::size_t depth() const noexcept { return sizes.empty() ? 0 : sizes.size() - 1; }
  std::size_t input_width() const { return sizes.front(); }
  std::size_t output_width() const { return sizes.back(); }

  void validate() const;
  /// "2-4-4-10"
  std::string architecture() const;

  bool operator==(const NetworkSpec&) const = default;
};

/// Parses "2-4-4-10" into layer widths; throws std::invalid_argument.
std::vector<std::size_t> parse_architecture(std::string_view text);

struct Network {
  NetworkSpec spec;
  std::vector<LayerParams> layers;

  /// All logits zero: every squashed weight is 0.5.
  static Network zeros(const NetworkSpec& spec);

  void validate() const;
  std::size_t parameter_count() const;

  bool operator==(const Network&) const = default;
};

struct ForwardTrace {
  std::vector<LayerTrace> layers;

  const std::vector<double>& outputs() const { return layers.back().output; }
};

/// Layer outputs feed the next layer unchanged.
ForwardTrace network_forward(const Network& net, std::span<const double> x);
std::vector<double> predict(const Network& net, std::span<const double> x);

struct NetworkGradients {
  std::vector<double> input;
  std::vector<LayerParams> layers;

  /// Zero gradients shaped like `net`.
  static NetworkGradients zeros_like(const Network& net);
  /// this += scale * other
  void accumulate(const NetworkGradients& other, double scale = 1.0);
};

NetworkGradients network_backward(const Network& net, const ForwardTrace& trace,
                                  std::span<const double> upstream);

// Checkpoints: self-describing JSON with row-major matrices and explicit shapes.
nlohmann::json to_json(const Network& net);
Network network_from_json(const nlohmann::json& doc);
void save_checkpoint(const Network& net, const std::filesystem::path& path);
Network load_checkpoint(const std::filesystem::path& path);

}  // namespace nlrl
