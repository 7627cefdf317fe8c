#include "nlrl/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "nlrl/errors.hpp"
#include "nlrl/prng.hpp"

namespace nlrl {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("learning_rate must be positive");
  }
  if (batch_size < 1) throw std::invalid_argument("batch_size must be at least 1");
  if (max_epochs < 1) throw std::invalid_argument("max_epochs must be at least 1");
  if (early_stop_patience < 1) throw std::invalid_argument("early_stop_patience must be at least 1");
  if (!(accuracy_tolerance > 0.0 && accuracy_tolerance < 1.0)) {
    throw std::invalid_argument("accuracy_tolerance must lie in (0, 1)");
  }
  if (!(init_range >= 0.0) || !std::isfinite(init_range)) {
    throw std::invalid_argument("init_range must be non-negative");
  }
}

LossValue mse_loss(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size() || pred.empty()) {
    throw ShapeError("mse_loss: length " + std::to_string(pred.size()) + " vs " +
                     std::to_string(target.size()));
  }
  const double n = static_cast<double>(pred.size());
  LossValue out;
  out.gradient.resize(pred.size());
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const double diff = pred[k] - target[k];
    out.loss += diff * diff;
    out.gradient[k] = 2.0 * diff / n;
  }
  out.loss /= n;
  return out;
}

Network init_params(const NetworkSpec& spec, std::uint64_t seed, double range) {
  Network net = Network::zeros(spec);
  SplitMix64 rng(seed);
  for (auto& layer : net.layers) {
    for (auto block : layer.blocks()) {
      for (double& v : block) v = rng.uniform(-range, range);
    }
  }
  return net;
}

Network sgd_step(Network params, const NetworkGradients& grads, double learning_rate) {
  if (grads.layers.size() != params.layers.size()) throw ShapeError("gradient depth mismatch");
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto dst = params.layers[l].blocks();
    auto src = grads.layers[l].blocks();
    for (std::size_t b = 0; b < dst.size(); ++b) {
      if (dst[b].size() != src[b].size()) throw ShapeError("gradient shape mismatch");
      for (std::size_t k = 0; k < dst[b].size(); ++k) {
        if (!std::isfinite(src[b][k])) {
          throw DivergenceError("non-finite gradient in layer " + std::to_string(l + 1) +
                                    " block " + std::to_string(b) + " entry " + std::to_string(k),
                                0);
        }
        dst[b][k] -= learning_rate * src[b][k];
        if (!std::isfinite(dst[b][k])) {
          throw DivergenceError("parameter overflow in layer " + std::to_string(l + 1) + " block " +
                                    std::to_string(b) + " entry " + std::to_string(k),
                                0);
        }
      }
    }
  }
  return params;
}

EarlyStopping::EarlyStopping(std::size_t patience)
    : patience_(patience), best_(std::numeric_limits<double>::infinity()) {
  if (patience < 1) throw std::invalid_argument("patience must be at least 1");
}

bool EarlyStopping::update(double loss) {
  if (loss < best_) {
    best_ = loss;
    stale_ = 0;
    return true;
  }
  ++stale_;
  return false;
}

namespace {

std::array<double, 2> inputs_of(const Sample& s) { return {s.x, s.y}; }

void require_dataset_shape(const NetworkSpec& spec) {
  if (spec.input_width() != 2 || spec.output_width() != kTargetCount) {
    throw ShapeError("network " + spec.architecture() + " does not map 2 inputs to " +
                     std::to_string(kTargetCount) + " targets");
  }
}

double mean_loss(const Network& net, std::span<const Sample> samples) {
  double total = 0.0;
  for (const auto& s : samples) {
    const auto in = inputs_of(s);
    total += mse_loss(predict(net, in), s.targets).loss;
  }
  return total / static_cast<double>(samples.size());
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

MetricsRecord evaluate(const Network& net, std::span<const Sample> samples, double tolerance) {
  if (samples.empty()) throw std::invalid_argument("evaluate: empty sample set");
  if (!(tolerance > 0.0 && tolerance <= 1.0)) throw std::invalid_argument("evaluate: tau must lie in (0, 1]");
  require_dataset_shape(net.spec);
  std::array<std::size_t, kTargetCount> hits{};
  double total_loss = 0.0;
  for (const auto& s : samples) {
    const auto in = inputs_of(s);
    const auto out = predict(net, in);
    total_loss += mse_loss(out, s.targets).loss;
    for (std::size_t k = 0; k < kTargetCount; ++k) {
      if (std::abs(out[k] - s.targets[k]) <= tolerance) ++hits[k];
    }
  }
  MetricsRecord r;
  const double n = static_cast<double>(samples.size());
  r.validation_loss = total_loss / n;
  double sum = 0.0;
  for (std::size_t k = 0; k < kTargetCount; ++k) {
    r.accuracy[k] = 100.0 * static_cast<double>(hits[k]) / n;
    sum += r.accuracy[k];
  }
  r.overall_accuracy = sum / static_cast<double>(kTargetCount);
  return r;
}

TrainResult train(const NetworkSpec& spec, const Dataset& data, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  spec.validate();
  require_dataset_shape(spec);
  if (data.train_count == 0 || data.test_count() == 0) {
    throw std::invalid_argument("training needs non-empty train and test splits");
  }
  const auto start = Clock::now();
  const auto train_set = data.train();
  const auto test_set = data.test();

  Network params = init_params(spec, config.seed, config.init_range);
  TrainResult result;
  result.best = params;

  MetricsRecord initial = evaluate(params, test_set, config.accuracy_tolerance);
  initial.train_loss = mean_loss(params, train_set);
  initial.elapsed_seconds = seconds_since(start);
  result.history.push_back(initial);
  if (on_epoch) on_epoch(initial);

  EarlyStopping stopper(config.early_stop_patience);
  std::vector<std::size_t> order(train_set.size());
  std::size_t iteration = 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    SplitMix64 shuffle_rng(derive_seed(config.seed, epoch));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    }

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const double scale = 1.0 / static_cast<double>(end - begin);
      NetworkGradients grads = NetworkGradients::zeros_like(params);
      double batch_loss = 0.0;
      for (std::size_t b = begin; b < end; ++b) {
        const Sample& s = train_set[order[b]];
        const auto in = inputs_of(s);
        const auto trace = network_forward(params, in);
        const auto loss = mse_loss(trace.outputs(), s.targets);
        batch_loss += loss.loss * scale;
        grads.accumulate(network_backward(params, trace, loss.gradient), scale);
      }
      if (!std::isfinite(batch_loss)) {
        throw DivergenceError("non-finite training loss in epoch " + std::to_string(epoch) +
                                  " at iteration " + std::to_string(iteration + 1),
                              epoch - 1);
      }
      try {
        params = sgd_step(std::move(params), grads, config.learning_rate);
      } catch (const DivergenceError& e) {
        throw DivergenceError(std::string(e.what()) + " in epoch " + std::to_string(epoch), epoch - 1);
      }
      loss_sum += batch_loss;
      ++batches;
      ++iteration;
    }

    MetricsRecord record = evaluate(params, test_set, config.accuracy_tolerance);
    if (!std::isfinite(record.validation_loss)) {
      throw DivergenceError("non-finite validation loss in epoch " + std::to_string(epoch), epoch - 1);
    }
    record.epoch = epoch;
    record.iteration = iteration;
    record.train_loss = loss_sum / static_cast<double>(batches);
    record.elapsed_seconds = seconds_since(start);
    result.history.push_back(record);
    result.stopped_epoch = epoch;
    if (on_epoch) on_epoch(record);

    if (stopper.update(record.validation_loss)) {
      result.best = params;
      result.best_epoch = epoch;
    }
    if (stopper.should_stop()) break;
  }
  return result;
}

const std::vector<std::string>& standard_architectures() {
  static const std::vector<std::string> archs = {
      "2-2-2-10", "2-2-2-2-10", "2-4-4-10",    "2-4-4-4-10", "2-6-6-10",
      "2-6-6-6-10", "2-8-8-10", "2-8-8-8-10", "2-10-10-10", "2-10-10-10-10"};
  return archs;
}

std::vector<GridCell> run_grid(const std::vector<std::string>& architectures,
                               const std::vector<Variant>& variants, const Dataset& data,
                               const TrainConfig& config, const GridOptions& options) {
  config.validate();
  std::vector<GridCell> cells;
  std::vector<NetworkSpec> specs;
  for (const auto& arch : architectures) {
    for (Variant v : variants) {
      NetworkSpec spec{parse_architecture(arch), v, options.negation_mode, options.epsilon};
      spec.validate();
      require_dataset_shape(spec);
      GridCell cell;
      cell.architecture = arch;
      cell.variant = v;
      cell.seed = derive_seed(config.seed, cells.size());
      cells.push_back(std::move(cell));
      specs.push_back(std::move(spec));
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      GridCell& cell = cells[i];
      TrainConfig cfg = config;
      cfg.seed = cell.seed;
      const auto start = Clock::now();
      try {
        auto result = train(specs[i], data, cfg);
        cell.train_seconds = seconds_since(start);
        cell.stopped_epoch = result.stopped_epoch;
        cell.metrics = evaluate(result.best, data.test(), cfg.accuracy_tolerance);
        cell.metrics.epoch = result.best_epoch;
      } catch (const DivergenceError& e) {
        cell.train_seconds = seconds_since(start);
        cell.stopped_epoch = e.last_finite_epoch();
        cell.status = std::string("diverged: ") + e.what();
      }
    }
  };

  const std::size_t threads = std::clamp<std::size_t>(options.parallel, 1, std::max<std::size_t>(cells.size(), 1));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  return cells;
}

double measure_step_time(const NetworkSpec& spec, std::size_t repetitions, std::uint64_t seed) {
  if (repetitions < 100) throw std::invalid_argument("repetitions must be at least 100");
  constexpr std::size_t kStepsPerBlock = 32;
  const Network net = init_params(spec, seed, 0.5);
  SplitMix64 rng(seed ^ 0x5EEDULL);
  std::vector<double> x(spec.input_width());
  for (double& v : x) v = rng.uniform();
  std::vector<double> target(spec.output_width());
  for (double& v : target) v = rng.uniform();

  double sink = 0.0;
  auto step = [&] {
    const auto trace = network_forward(net, x);
    const auto loss = mse_loss(trace.outputs(), target);
    const auto grads = network_backward(net, trace, loss.gradient);
    sink += grads.input[0];
  };
  for (std::size_t i = 0; i < kStepsPerBlock; ++i) step();

  std::vector<double> samples(repetitions);
  for (auto& s : samples) {
    const auto start = Clock::now();
    for (std::size_t i = 0; i < kStepsPerBlock; ++i) step();
    s = seconds_since(start) / kStepsPerBlock;
  }
  // Keeps the work observable.
  if (sink == std::numeric_limits<double>::max()) std::fputc(' ', stderr);
  std::nth_element(samples.begin(), samples.begin() + samples.size() / 2, samples.end());
  return samples[samples.size() / 2];
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_metrics_csv(std::ostream& out, std::span<const MetricsRecord> history) {
  out << "epoch,iteration,train_loss,val_loss";
  for (std::size_t k = 0; k < kTargetCount; ++k) out << ",acc_f" << k;
  out << ",acc_overall,elapsed_s\n";
  for (const auto& r : history) {
    out << r.epoch << ',' << r.iteration << ',' << fmt(r.train_loss) << ',' << fmt(r.validation_loss);
    for (double a : r.accuracy) out << ',' << fmt(a);
    out << ',' << fmt(r.overall_accuracy) << ',' << fmt(r.elapsed_seconds) << '\n';
  }
}

void write_grid_csv(std::ostream& out, std::span<const GridCell> cells) {
  out << "architecture,variant,overall_acc";
  for (std::size_t k = 0; k < kTargetCount; ++k) out << ",acc_f" << k;
  out << ",train_seconds,stopped_epoch,status\n";
  for (const auto& c : cells) {
    out << c.architecture << ',' << to_string(c.variant) << ',' << fmt(c.metrics.overall_accuracy);
    for (double a : c.metrics.accuracy) out << ',' << fmt(a);
    std::string status = c.status;
    std::replace(status.begin(), status.end(), ',', ';');
    out << ',' << fmt(c.train_seconds) << ',' << c.stopped_epoch << ',' << status << '\n';
  }
}

}  // namespace nlrl
