#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "nlrl/dataset.hpp"
#include "nlrl/errors.hpp"
#include "nlrl/gradcheck.hpp"
#include "nlrl/network.hpp"
#include "nlrl/rulekit.hpp"
#include "nlrl/trainer.hpp"

#ifndef NLRL_VERSION
#define NLRL_VERSION "unknown"
#endif

namespace nlrl::cli {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

std::string fmt_percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f%%", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Run manifests

nlohmann::json resolved_options(const CLI::App& sub) {
  nlohmann::json config = nlohmann::json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name.empty()) continue;
    std::string value;
    if (opt->count() > 0) {
      const auto& results = opt->results();
      for (std::size_t i = 0; i < results.size(); ++i) value += (i ? "," : "") + results[i];
    } else {
      value = opt->get_default_str();
    }
    config[name] = value;
  }
  return config;
}

void write_manifest(const CLI::App& sub, const std::vector<std::string>& args,
                    const std::vector<std::string>& outputs, const nlohmann::json& seeds) {
  if (outputs.empty()) return;
  nlohmann::json doc = {
      {"command", sub.get_name()},
      {"arguments", args},
      {"config", resolved_options(sub)},
      {"seeds", seeds},
      {"version", NLRL_VERSION},
      {"outputs", outputs},
  };
  const std::string path = outputs.front() + ".manifest.json";
  std::ofstream out(path);
  out << doc.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write manifest " + path);
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

void print_metrics(std::ostream& out, const MetricsRecord& m) {
  for (std::size_t k = 0; k < kTargetCount; ++k) {
    char line[96];
    std::snprintf(line, sizeof line, "  f%zu %-9s %s\n", k, std::string(kTargetNames[k]).c_str(),
                  fmt_percent(m.accuracy[k]).c_str());
    out << line;
  }
  out << "overall accuracy: " << fmt_percent(m.overall_accuracy) << '\n';
}

Dataset load_dataset(const std::string& path) {
  try {
    return load_csv(path);
  } catch (const ParseError& e) {
    throw UsageError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Shared training flags

struct TrainFlags {
  std::string variant = "and-noneg";
  std::string negation_mode = "per-input";
  double learning_rate = 10.0;
  std::size_t batch = 20;
  std::size_t epochs = 50;
  std::size_t patience = 5;
  double tau = 0.1;
  double init_range = 0.5;
  double epsilon = 1e-5;
  std::uint64_t seed = 0;
};

void add_train_flags(CLI::App* sub, TrainFlags& f) {
  sub->add_option("--seed", f.seed, "Training seed")->envname("NLRL_SEED");
  sub->add_option("--lr", f.learning_rate, "SGD learning rate");
  sub->add_option("--batch", f.batch, "Minibatch size");
  sub->add_option("--epochs", f.epochs, "Maximum number of epochs");
  sub->add_option("--patience", f.patience, "Early-stopping patience in epochs");
  sub->add_option("--tau", f.tau, "Accuracy tolerance |pred - target| <= tau");
  sub->add_option("--init-range", f.init_range, "Logits are drawn from U[-r, r]");
  sub->add_option("--negation-mode", f.negation_mode, "per-input or per-input-per-rule");
  sub->add_option("--epsilon", f.epsilon, "Offset inside the AND logarithm");
}

TrainConfig train_config(const TrainFlags& f) {
  TrainConfig c;
  c.learning_rate = f.learning_rate;
  c.batch_size = f.batch;
  c.max_epochs = f.epochs;
  c.early_stop_patience = f.patience;
  c.accuracy_tolerance = f.tau;
  c.init_range = f.init_range;
  c.seed = f.seed;
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return c;
}

NetworkSpec network_spec(const std::string& arch, const std::string& variant, const TrainFlags& f) {
  try {
    NetworkSpec spec{parse_architecture(arch), parse_variant(variant),
                     parse_negation_mode(f.negation_mode), f.epsilon};
    spec.validate();
    return spec;
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

// ---------------------------------------------------------------------------
// Commands

struct Context {
  const CLI::App* sub = nullptr;
  std::vector<std::string> args;
  std::ostream& out;
  std::ostream& err;
};

struct GenDataFlags {
  std::uint64_t seed = 0;
  std::size_t count = 100000;
  std::string out;
};

int cmd_gen_data(const Context& ctx, const GenDataFlags& f) {
  if (f.count < 2) throw UsageError("--count must be at least 2");
  const Dataset d = generate(f.seed, f.count);
  save_csv(d, f.out);
  write_manifest(*ctx.sub, ctx.args, {f.out}, {{"data", f.seed}});
  ctx.out << "wrote " << d.samples.size() << " samples (" << d.train_count << " train, "
          << d.test_count() << " test) to " << f.out << '\n';
  return kSuccess;
}

struct TrainCmdFlags {
  TrainFlags train;
  std::string arch;
  std::string data;
  std::string checkpoint = "model.json";
  std::string metrics = "metrics.csv";
};

int cmd_train(const Context& ctx, const TrainCmdFlags& f) {
  const TrainConfig config = train_config(f.train);
  const NetworkSpec spec = network_spec(f.arch, f.train.variant, f.train);
  const Dataset data = load_dataset(f.data);

  auto metrics_out = open_output(f.metrics);
  TrainResult result;
  try {
    result = train(spec, data, config, [&](const MetricsRecord& m) {
      char line[160];
      std::snprintf(line, sizeof line, "epoch %3zu  iter %8zu  train_loss %.6g  val_loss %.6g  overall %s\n",
                    m.epoch, m.iteration, m.train_loss, m.validation_loss,
                    fmt_percent(m.overall_accuracy).c_str());
      ctx.out << line << std::flush;
    });
  } catch (const ShapeError& e) {
    throw UsageError(e.what());
  }
  write_metrics_csv(metrics_out, result.history);
  save_checkpoint(result.best, f.checkpoint);
  write_manifest(*ctx.sub, ctx.args, {f.checkpoint, f.metrics}, {{"train", config.seed}});

  const MetricsRecord final_metrics = evaluate(result.best, data.test(), config.accuracy_tolerance);
  ctx.out << "best epoch " << result.best_epoch << " of " << result.stopped_epoch << '\n';
  print_metrics(ctx.out, final_metrics);
  return kSuccess;
}

struct EvalFlags {
  std::string checkpoint;
  std::string data;
  double tau = 0.1;
  std::string split = "test";
  std::string out;
};

int cmd_eval(const Context& ctx, const EvalFlags& f) {
  if (!(f.tau > 0.0 && f.tau <= 1.0)) throw UsageError("--tau must lie in (0, 1]");
  Network net;
  try {
    net = load_checkpoint(f.checkpoint);
  } catch (const ShapeError& e) {
    throw UsageError(e.what());
  }
  const Dataset data = load_dataset(f.data);
  std::span<const Sample> samples = data.samples;
  if (f.split == "test") {
    samples = data.test();
  } else if (f.split == "train") {
    samples = data.train();
  } else if (f.split != "all") {
    throw UsageError("--split must be test, train or all");
  }
  if (samples.empty()) throw UsageError("selected split of " + f.data + " is empty");
  MetricsRecord m;
  try {
    m = evaluate(net, samples, f.tau);
  } catch (const ShapeError& e) {
    throw UsageError(e.what());
  }
  print_metrics(ctx.out, m);
  if (!f.out.empty()) {
    auto csv = open_output(f.out);
    write_metrics_csv(csv, std::span<const MetricsRecord>(&m, 1));
    write_manifest(*ctx.sub, ctx.args, {f.out}, nlohmann::json::object());
  }
  return kSuccess;
}

struct GridFlags {
  TrainFlags train;
  std::string data;
  std::string archs;
  std::string variants = "and-or,and-neg,and-noneg";
  std::size_t parallel = 1;
  std::size_t timing_reps = 200;
  std::string out = "grid.csv";
  std::string timing_out = "timing.csv";
  std::string table_out;
};

int cmd_grid(const Context& ctx, const GridFlags& f) {
  const TrainConfig config = train_config(f.train);
  std::vector<std::string> archs = f.archs.empty() ? standard_architectures() : split_list(f.archs);
  std::vector<Variant> variants;
  std::vector<NetworkSpec> specs;
  try {
    for (const auto& v : split_list(f.variants)) variants.push_back(parse_variant(v));
    for (const auto& a : archs) {
      for (Variant v : variants) specs.push_back(network_spec(a, std::string(to_string(v)), f.train));
    }
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (archs.empty() || variants.empty()) throw UsageError("grid needs at least one architecture and variant");
  if (f.parallel < 1) throw UsageError("--parallel must be at least 1");
  if (f.timing_reps < 100) throw UsageError("--timing-reps must be at least 100");

  const Dataset data = load_dataset(f.data);
  auto grid_out = open_output(f.out);
  auto timing_out = open_output(f.timing_out);

  GridOptions options;
  options.negation_mode = specs.front().negation_mode;
  options.epsilon = f.train.epsilon;
  options.parallel = f.parallel;
  std::vector<GridCell> cells;
  try {
    cells = run_grid(archs, variants, data, config, options);
  } catch (const ShapeError& e) {
    throw UsageError(e.what());
  }
  write_grid_csv(grid_out, cells);

  // Timings run after training so each measurement has the machine to itself.
  timing_out << "architecture,variant,cs,step_seconds\n";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const double t = measure_step_time(specs[i], f.timing_reps, config.seed);
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", t);
    timing_out << cells[i].architecture << ',' << to_string(cells[i].variant) << ','
               << specs[i].sizes[1] << ',' << buf << '\n';
  }

  std::vector<std::string> outputs{f.out, f.timing_out};
  if (!f.table_out.empty()) {
    auto table = open_output(f.table_out);
    table << "architecture";
    for (Variant v : variants) table << ',' << to_string(v);
    table << '\n';
    for (std::size_t a = 0; a < archs.size(); ++a) {
      table << archs[a];
      for (std::size_t v = 0; v < variants.size(); ++v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", cells[a * variants.size() + v].metrics.overall_accuracy);
        table << ',' << buf;
      }
      table << '\n';
    }
    outputs.push_back(f.table_out);
  }
  nlohmann::json seeds = {{"master", config.seed}};
  for (const auto& c : cells) seeds[c.architecture + "/" + std::string(to_string(c.variant))] = c.seed;
  write_manifest(*ctx.sub, ctx.args, outputs, seeds);

  std::size_t failed = 0;
  for (const auto& c : cells) {
    ctx.out << c.architecture << ' ' << to_string(c.variant) << "  overall "
            << fmt_percent(c.metrics.overall_accuracy) << "  " << c.status << '\n';
    if (c.status != "ok") ++failed;
  }
  ctx.out << cells.size() << " cells, " << failed << " failed\n";
  return kSuccess;
}

struct SurfaceFlags {
  std::string checkpoint;
  double step = 0.01;
  std::string out = "surface.csv";
};

int cmd_surface(const Context& ctx, const SurfaceFlags& f) {
  if (!(f.step > 0.0 && f.step <= 0.5)) throw UsageError("--step must lie in (0, 0.5]");
  Network net;
  try {
    net = load_checkpoint(f.checkpoint);
  } catch (const ShapeError& e) {
    throw UsageError(e.what());
  }
  if (net.spec.input_width() != 2) throw UsageError("surface needs a network with 2 inputs");
  const auto points = static_cast<std::size_t>(std::floor(1.0 / f.step + 1e-9)) + 1;
  auto out = open_output(f.out);
  out << "x,y";
  for (std::size_t k = 0; k < net.spec.output_width(); ++k) out << ",pred_f" << k;
  out << '\n';
  char buf[40];
  for (std::size_t i = 0; i < points; ++i) {
    for (std::size_t j = 0; j < points; ++j) {
      const double x[2] = {std::min(1.0, static_cast<double>(i) * f.step),
                           std::min(1.0, static_cast<double>(j) * f.step)};
      std::snprintf(buf, sizeof buf, "%.17g", x[0]);
      out << buf;
      std::snprintf(buf, sizeof buf, ",%.17g", x[1]);
      out << buf;
      for (double v : predict(net, x)) {
        std::snprintf(buf, sizeof buf, ",%.17g", v);
        out << buf;
      }
      out << '\n';
    }
  }
  write_manifest(*ctx.sub, ctx.args, {f.out}, nlohmann::json::object());
  ctx.out << "wrote " << points * points << " surface rows to " << f.out << '\n';
  return kSuccess;
}

struct ExtractFlags {
  std::string checkpoint;
  double theta = kDefaultSaturationThreshold;
  std::string json_out;
};

int cmd_extract(const Context& ctx, const ExtractFlags& f) {
  if (!(f.theta > 0.5 && f.theta < 1.0)) throw UsageError("--theta must lie in (0.5, 1)");
  Network net;
  try {
    net = load_checkpoint(f.checkpoint);
  } catch (const ShapeError& e) {
    throw UsageError(e.what());
  }
  const ExtractionReport report = extract(net, f.theta);
  ctx.out << report.to_text();
  if (!f.json_out.empty()) {
    auto out = open_output(f.json_out);
    out << report.to_json().dump(2) << '\n';
    write_manifest(*ctx.sub, ctx.args, {f.json_out}, nlohmann::json::object());
  }
  return kSuccess;
}

struct GradCheckFlags {
  std::size_t trials = 100;
  double h = 1e-5;
  std::uint64_t seed = 0;
};

int cmd_grad_check(const Context& ctx, const GradCheckFlags& f) {
  if (f.trials < 1) throw UsageError("--trials must be at least 1");
  if (!(f.h > 0.0)) throw UsageError("--h must be positive");
  GradCheckOptions options;
  options.trials = f.trials;
  options.h = f.h;
  options.seed = f.seed;
  const GradCheckReport report = run_gradient_check(options);
  for (const auto& c : report.cases) {
    char line[256];
    std::snprintf(line, sizeof line, "%-9s %-18s trials %zu  comparisons %zu  failures %zu  worst %.3g\n",
                  std::string(to_string(c.variant)).c_str(),
                  std::string(to_string(c.negation_mode)).c_str(), c.trials, c.comparisons,
                  c.failures, c.worst_error);
    ctx.out << line;
    if (c.failures > 0) {
      std::snprintf(line, sizeof line, "  worst offender: %s analytic %.10g numeric %.10g\n",
                    c.worst_coordinate.c_str(), c.worst_analytic, c.worst_numeric);
      ctx.out << line;
    }
  }
  const bool ok = report.passed();
  ctx.out << (ok ? "PASS" : "FAIL") << " gradient check (relative error <= "
          << options.relative_tolerance << ")\n";
  return ok ? kSuccess : kCheckFailed;
}

}  // namespace

std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> result;
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config needs a file");
      config_path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    } else {
      result.push_back(args[i]);
    }
  }
  if (config_path.empty()) return result;

  std::ifstream in(config_path);
  if (!in) throw UsageError("cannot read config file " + config_path);
  auto given = [&](const std::string& flag) {
    return std::any_of(result.begin(), result.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
  };
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(config_path + ":" + std::to_string(line_no) + ": expected key=value");
    }
    std::string key = trim(line.substr(0, eq));
    while (!key.empty() && key[0] == '-') key.erase(0, 1);
    const std::string flag = "--" + key;
    if (!given(flag)) {
      result.push_back(flag);
      result.push_back(trim(line.substr(eq + 1)));
    }
  }
  return result;
}

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Neural logic rule layers: data generation, training, evaluation and rule extraction",
               "nlrl"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.set_version_flag("--version", std::string(NLRL_VERSION));

  std::function<int(const Context&)> action;
  auto bind = [&](CLI::App* sub, auto& flags, auto fn) {
    sub->callback([&action, &flags, fn] { action = [&flags, fn](const Context& c) { return fn(c, flags); }; });
  };

  GenDataFlags gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate the synthetic ten-function dataset");
  gen_cmd->add_option("--seed", gen.seed, "Dataset seed")->envname("NLRL_SEED");
  gen_cmd->add_option("--count", gen.count, "Number of samples");
  gen_cmd->add_option("--out", gen.out, "Output CSV")->required();
  bind(gen_cmd, gen, cmd_gen_data);

  TrainCmdFlags train_flags;
  auto* train_cmd = app.add_subcommand("train", "Train a network and write checkpoint + metrics");
  train_cmd->add_option("--arch", train_flags.arch, "Layer widths, e.g. 2-4-4-10")->required();
  train_cmd->add_option("--variant", train_flags.train.variant, "and-or, and-neg or and-noneg");
  train_cmd->add_option("--data", train_flags.data, "Dataset CSV")->required();
  add_train_flags(train_cmd, train_flags.train);
  train_cmd->add_option("--checkpoint", train_flags.checkpoint, "Checkpoint JSON output");
  train_cmd->add_option("--metrics", train_flags.metrics, "Metrics CSV output");
  bind(train_cmd, train_flags, cmd_train);

  EvalFlags eval_flags;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  eval_cmd->add_option("--checkpoint", eval_flags.checkpoint, "Checkpoint JSON")->required();
  eval_cmd->add_option("--data", eval_flags.data, "Dataset CSV")->required();
  eval_cmd->add_option("--tau", eval_flags.tau, "Accuracy tolerance");
  eval_cmd->add_option("--split", eval_flags.split, "test, train or all");
  eval_cmd->add_option("--out", eval_flags.out, "Optional metrics CSV output");
  bind(eval_cmd, eval_flags, cmd_eval);

  GridFlags grid_flags;
  auto* grid_cmd = app.add_subcommand("grid", "Train the architecture x variant grid");
  grid_cmd->add_option("--data", grid_flags.data, "Dataset CSV")->required();
  grid_cmd->add_option("--archs", grid_flags.archs, "Comma-separated architectures (default: all ten)");
  grid_cmd->add_option("--variants", grid_flags.variants, "Comma-separated variants");
  grid_cmd->add_option("--parallel", grid_flags.parallel, "Cells trained concurrently");
  grid_cmd->add_option("--timing-reps", grid_flags.timing_reps, "Timed blocks per step-time measurement");
  add_train_flags(grid_cmd, grid_flags.train);
  grid_cmd->add_option("--out", grid_flags.out, "Grid CSV output");
  grid_cmd->add_option("--timing-out", grid_flags.timing_out, "Step-time CSV output");
  grid_cmd->add_option("--table-out", grid_flags.table_out, "Optional architecture x variant accuracy table");
  bind(grid_cmd, grid_flags, cmd_grid);

  SurfaceFlags surface_flags;
  auto* surface_cmd = app.add_subcommand("surface", "Sample the learned surfaces on a regular grid");
  surface_cmd->add_option("--checkpoint", surface_flags.checkpoint, "Checkpoint JSON")->required();
  surface_cmd->add_option("--step", surface_flags.step, "Grid spacing in (0, 0.5]");
  surface_cmd->add_option("--out", surface_flags.out, "Surface CSV output");
  bind(surface_cmd, surface_flags, cmd_surface);

  ExtractFlags extract_flags;
  auto* extract_cmd = app.add_subcommand("extract", "Read logic rules out of a checkpoint");
  extract_cmd->add_option("--checkpoint", extract_flags.checkpoint, "Checkpoint JSON")->required();
  extract_cmd->add_option("--theta", extract_flags.theta, "Saturation threshold in (0.5, 1)");
  extract_cmd->add_option("--json-out", extract_flags.json_out, "Optional JSON report output");
  bind(extract_cmd, extract_flags, cmd_extract);

  GradCheckFlags grad_flags;
  auto* grad_cmd = app.add_subcommand("grad-check", "Compare analytic gradients with finite differences");
  grad_cmd->set_help_flag("--help", "Print this help message and exit");
  grad_cmd->add_option("--trials", grad_flags.trials, "Random networks per variant and negation mode");
  grad_cmd->add_option("--h", grad_flags.h, "Central-difference step");
  grad_cmd->add_option("--seed", grad_flags.seed, "Seed")->envname("NLRL_SEED");
  bind(grad_cmd, grad_flags, cmd_grad_check);

  std::vector<std::string> args;
  try {
    args = expand_config(raw_args);
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::CallForVersion&) {
    out << NLRL_VERSION << '\n';
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    if (e.get_exit_code() != 0) err << "run with --help for usage\n";
    return kUsageError;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }

  const CLI::App* sub = app.get_subcommands().front();
  Context ctx{sub, args, out, err};
  try {
    return action(ctx);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const DivergenceError& e) {
    err << "diverged: " << e.what() << " (last finite epoch " << e.last_finite_epoch() << ")\n";
    return kDiverged;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }
}

}  // namespace nlrl::cli
