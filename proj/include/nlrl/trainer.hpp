#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "nlrl/dataset.hpp"
#include "nlrl/network.hpp"

namespace nlrl {

struct TrainConfig {
  double learning_rate = 10.0;
  std::size_t batch_size = 20;
  std::size_t max_epochs = 50;
  std::size_t early_stop_patience = 5;
  double accuracy_tolerance = 0.1;  // |pred - target| <= tau counts as correct
  double init_range = 0.5;          // logits ~ U[-init_range, init_range]
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// One evaluation point. Accuracies are percentages.
struct MetricsRecord {
  std::size_t epoch = 0;
  std::size_t iteration = 0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
  Targets accuracy{};
  double overall_accuracy = 0.0;
  double elapsed_seconds = 0.0;
};

struct LossValue {
  double loss = 0.0;
  std::vector<double> gradient;
};

/// Mean squared error and its gradient 2 (pred - target) / n.
LossValue mse_loss(std::span<const double> pred, std::span<const double> target);

/// Every logit i.i.d. uniform in [-range, range], drawn from SplitMix64(seed)
/// layer by layer in block order (rule, negation, gate).
Network init_params(const NetworkSpec& spec, std::uint64_t seed, double range);

/// logits -= learning_rate * grads. Throws DivergenceError on a non-finite gradient.
Network sgd_step(Network params, const NetworkGradients& grads, double learning_rate);

/// Patience counter over validation losses; only strict decreases count.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience);

  /// Records a loss; returns true if it is a new best.
  bool update(double loss);
  bool should_stop() const noexcept { return stale_ >= patience_; }
  double best() const noexcept { return best_; }

 private:
  std::size_t patience_;
  std::size_t stale_ = 0;
  double best_;
};

/// Accuracy per target and MSE over `samples`. Throws for an empty set.
MetricsRecord evaluate(const Network& net, std::span<const Sample> samples, double tolerance);

struct TrainResult {
  Network best;  // parameters with the lowest validation loss
  std::vector<MetricsRecord> history;  // epoch 0 is the initialization
  std::size_t best_epoch = 0;
  std::size_t stopped_epoch = 0;
};

using EpochCallback = std::function<void(const MetricsRecord&)>;

/// Minibatch SGD on the train split, validating on the test split after every
/// epoch. Throws DivergenceError if the loss becomes non-finite.
TrainResult train(const NetworkSpec& spec, const Dataset& data, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

/// The ten architectures of the reference experiment grid.
const std::vector<std::string>& standard_architectures();

struct GridCell {
  std::string architecture;
  Variant variant{};
  std::uint64_t seed = 0;
  std::string status = "ok";
  MetricsRecord metrics;  // test-split evaluation of the best parameters
  double train_seconds = 0.0;
  std::size_t stopped_epoch = 0;
};

struct GridOptions {
  NegationMode negation_mode = NegationMode::PerInput;
  double epsilon = 1e-5;
  std::size_t parallel = 1;
};

/// Trains and evaluates every (architecture, variant) cell. Cell seeds are
/// derived from config.seed and the cell index; divergence is recorded in
/// the cell status.
std::vector<GridCell> run_grid(const std::vector<std::string>& architectures,
                               const std::vector<Variant>& variants, const Dataset& data,
                               const TrainConfig& config, const GridOptions& options = {});

/// Median seconds of one forward+backward pass over `repetitions` timed blocks.
double measure_step_time(const NetworkSpec& spec, std::size_t repetitions,
                         std::uint64_t seed = 0);

void write_metrics_csv(std::ostream& out, std::span<const MetricsRecord> history);
void write_grid_csv(std::ostream& out, std::span<const GridCell> cells);

}  // namespace nlrl
