#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "nlrl/dataset.hpp"
#include "nlrl/rulekit.hpp"

using namespace nlrl;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

std::string last_line_with(const std::string& text, const std::string& prefix) {
  std::istringstream in(text);
  std::string found;
  for (std::string line; std::getline(in, line);) {
    if (line.rfind(prefix, 0) == 0) found = line;
  }
  return found;
}

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("nlrl_cli_" + std::to_string(counter_++))) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  static inline int counter_ = 0;
  fs::path path_;
};

void write_corner_data(const std::string& path) {
  Dataset d;
  for (int rep = 0; rep < 2; ++rep) {
    for (double x : {0.0, 1.0}) {
      for (double y : {0.0, 1.0}) d.samples.push_back({x, y, target_vector(x, y)});
    }
  }
  d.train_count = 4;
  save_csv(d, path);
}

void write_injected(const Formula& f, const std::string& path) {
  NetworkSpec spec;
  spec.sizes = {2, 10};
  spec.variant = Variant::AndNoNeg;
  save_checkpoint(init_from_formula(f, spec), path);
}

}  // namespace

TEST_CASE("gen-data") {
  TempDir dir;
  const auto a = dir / "a.csv";
  const auto b = dir / "b.csv";
  auto r = run({"gen-data", "--seed", "7", "--count", "1000", "--out", a});
  CHECK(r.code == 0);
  CHECK(line_count(a) == 1001);
  CHECK(r.out.find("900 train, 100 test") != std::string::npos);
  CHECK(run({"gen-data", "--seed", "7", "--count", "1000", "--out", b}).code == 0);
  CHECK(slurp(a) == slurp(b));

  const auto manifest = nlohmann::json::parse(slurp(a + ".manifest.json"));
  CHECK(manifest["command"] == "gen-data");
  CHECK(manifest["config"]["count"] == "1000");
  CHECK(manifest["config"]["seed"] == "7");
  CHECK(manifest["outputs"][0] == a);
  CHECK(manifest.contains("version"));

  CHECK(run({"gen-data", "--seed", "7", "--count", "1", "--out", a}).code == 2);
  CHECK(run({"gen-data", "--count", "10", "--out", dir / "missing/dir/x.csv"}).code == 2);
  CHECK(run({"gen-data", "--count", "10"}).code == 2);
}

TEST_CASE("usage errors") {
  CHECK(run({}).code == 2);
  CHECK(run({"bogus"}).code == 2);
  CHECK(run({"--version"}).code == 0);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("train then eval") {
  TempDir dir;
  const auto data = dir / "d.csv";
  REQUIRE(run({"gen-data", "--seed", "7", "--count", "2000", "--out", data}).code == 0);
  const auto ckpt = dir / "m.json";
  const auto metrics = dir / "metrics.csv";
  const auto r = run({"train", "--arch", "2-4-4-10", "--variant", "and-noneg", "--data", data, "--seed", "0",
                      "--epochs", "2", "--checkpoint", ckpt, "--metrics", metrics});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(ckpt));
  CHECK(fs::exists(ckpt + ".manifest.json"));
  CHECK(line_count(metrics) == 4);
  const std::string trained = last_line_with(r.out, "overall accuracy:");
  CHECK_FALSE(trained.empty());

  const auto e = run({"eval", "--checkpoint", ckpt, "--data", data});
  CHECK(e.code == 0);
  CHECK(last_line_with(e.out, "overall accuracy:") == trained);

  const auto all = run({"eval", "--checkpoint", ckpt, "--data", data, "--tau", "1.0"});
  CHECK(last_line_with(all.out, "overall accuracy:") == "overall accuracy: 100.0000%");

  const auto csv = dir / "eval.csv";
  CHECK(run({"eval", "--checkpoint", ckpt, "--data", data, "--split", "all", "--out", csv}).code == 0);
  CHECK(line_count(csv) == 2);
  CHECK(run({"eval", "--checkpoint", ckpt, "--data", data, "--split", "none"}).code == 2);
  CHECK(run({"eval", "--checkpoint", ckpt, "--data", data, "--tau", "0"}).code == 2);

  CHECK(run({"train", "--arch", "2-x-10", "--data", data}).code == 2);
  CHECK(run({"train", "--arch", "2-4-10", "--data", data, "--epochs", "0"}).code == 2);
  CHECK(run({"train", "--arch", "2-4-3", "--data", data, "--epochs", "1"}).code == 2);
  CHECK(run({"train", "--arch", "2-4-10", "--variant", "and", "--data", data}).code == 2);

  // Mismatched checkpoint and data.
  NetworkSpec wide;
  wide.sizes = {3, 10};
  save_checkpoint(Network::zeros(wide), dir / "wide.json");
  CHECK(run({"eval", "--checkpoint", dir / "wide.json", "--data", data}).code == 2);
}

TEST_CASE("divergence exits with 3") {
  TempDir dir;
  const auto data = dir / "d.csv";
  {
    std::ofstream csv(data);
    csv << "x,y,f0,f1,f2,f3,f4,f5,f6,f7,f8,f9,split\n";
    for (int i = 0; i < 10; ++i) csv << "0.5,0.5,1e300,0.25,0.25,0.75,0.4375,0.5,0.5,0.5,0.5,0.7," << (i < 9 ? "train" : "test") << "\n";
  }
  const auto r = run({"train", "--arch", "2-3-10", "--variant", "and-or", "--data", data, "--checkpoint",
                      dir / "m.json", "--metrics", dir / "m.csv"});
  CHECK_MESSAGE(r.code == 3, r.err);
  CHECK(r.err.find("last finite epoch") != std::string::npos);
}

TEST_CASE("config file, flags win") {
  TempDir dir;
  const auto cfg = dir / "run.cfg";
  std::ofstream(cfg) << "# comment\nseed = 5\ncount=30\n";
  const auto out = dir / "c.csv";
  CHECK(run({"gen-data", "--config", cfg, "--out", out}).code == 0);
  CHECK(line_count(out) == 31);
  auto manifest = nlohmann::json::parse(slurp(out + ".manifest.json"));
  CHECK(manifest["config"]["seed"] == "5");
  CHECK(run({"gen-data", "--config", cfg, "--count", "40", "--out", out}).code == 0);
  CHECK(line_count(out) == 41);
  CHECK(run({"gen-data", "--config", dir / "none.cfg", "--out", out}).code == 2);

  const auto expanded = cli::expand_config({"gen-data", "--count", "40", "--config", cfg});
  CHECK(std::count(expanded.begin(), expanded.end(), "--count") == 1);
  CHECK(std::count(expanded.begin(), expanded.end(), "--seed") == 1);
}

TEST_CASE("eval of an injected conjunction on corner data") {
  TempDir dir;
  write_corner_data(dir / "corners.csv");
  write_injected(Formula::conj({Formula::var(0), Formula::var(1)}), dir / "and.json");
  const auto r = run({"eval", "--checkpoint", dir / "and.json", "--data", dir / "corners.csv", "--split", "all"});
  CHECK(r.code == 0);
  CHECK(r.out.find("f2 x AND y   100.0000%") != std::string::npos);
}

TEST_CASE("surface") {
  TempDir dir;
  write_injected(Formula::conj({Formula::var(0), Formula::var(1)}), dir / "and.json");
  const auto coarse = dir / "s.csv";
  CHECK(run({"surface", "--checkpoint", dir / "and.json", "--step", "0.5", "--out", coarse}).code == 0);
  CHECK(line_count(coarse) == 10);
  std::ifstream in(coarse);
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("x,y,pred_f0,", 0) == 0);
  int corners = 0;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::vector<double> v;
    for (std::string cell; std::getline(row, cell, ',');) v.push_back(std::stod(cell));
    REQUIRE(v.size() == 12);
    const bool corner = (v[0] == 0 || v[0] == 1) && (v[1] == 0 || v[1] == 1);
    if (corner) {
      ++corners;
      CHECK(std::abs(v[2] - v[0] * v[1]) <= 1e-2);
    }
  }
  CHECK(corners == 4);

  write_injected(Formula::var(1), dir / "y.json");
  const auto fine = dir / "y.csv";
  CHECK(run({"surface", "--checkpoint", dir / "y.json", "--out", fine}).code == 0);
  CHECK(line_count(fine) == 101 * 101 + 1);
  std::ifstream yin(fine);
  std::getline(yin, line);
  while (std::getline(yin, line)) {
    std::istringstream row(line);
    std::vector<double> v;
    for (std::string cell; std::getline(row, cell, ',');) v.push_back(std::stod(cell));
    REQUIRE(std::abs(v[2 + 6] - v[1]) <= 1e-2);
  }

  CHECK(run({"surface", "--checkpoint", dir / "y.json", "--step", "0.6", "--out", fine}).code == 2);
  CHECK(run({"surface", "--checkpoint", dir / "y.json", "--step", "0", "--out", fine}).code == 2);
}

TEST_CASE("extract") {
  TempDir dir;
  NetworkSpec spec;
  spec.sizes = {2, 1};
  save_checkpoint(init_from_formula(Formula::conj({Formula::var(0), Formula::negate(Formula::var(1))}), spec),
                  dir / "inj.json");
  auto r = run({"extract", "--checkpoint", dir / "inj.json", "--json-out", dir / "rep.json"});
  CHECK(r.code == 0);
  CHECK(r.out == "(x0 & !x1)\n");
  const auto rep = nlohmann::json::parse(slurp(dir / "rep.json"));
  CHECK(rep["outputs"][0]["formula"] == "(x0 & !x1)");

  spec.sizes = {2, 3, 2};
  spec.variant = Variant::AndOr;
  save_checkpoint(Network::zeros(spec), dir / "zero.json");
  r = run({"extract", "--checkpoint", dir / "zero.json"});
  CHECK(r.code == 0);
  CHECK(r.out.rfind("UNSATURATED(", 0) == 0);
  CHECK(r.out.find("\nUNSATURATED(") != std::string::npos);

  CHECK(run({"extract", "--checkpoint", dir / "zero.json", "--theta", "0.5"}).code == 2);
  CHECK(run({"extract", "--checkpoint", dir / "nope.json"}).code == 2);
}

TEST_CASE("extract threshold monotonicity through the CLI") {
  TempDir dir;
  NetworkSpec spec;
  spec.sizes = {2, 3, 1};
  spec.variant = Variant::AndOr;
  Network net = Network::zeros(spec);
  double v = -3.0;
  for (auto& layer : net.layers) {
    for (auto block : layer.blocks()) {
      for (double& x : block) x = (v += 0.37);
    }
  }
  save_checkpoint(net, dir / "n.json");
  auto count = [&](const std::string& theta) {
    const auto r = run({"extract", "--checkpoint", dir / "n.json", "--theta", theta});
    return std::count(r.out.begin(), r.out.end(), '[') / 2;
  };
  CHECK(count("0.51") <= count("0.9"));
}

TEST_CASE("grid") {
  TempDir dir;
  const auto data = dir / "d.csv";
  REQUIRE(run({"gen-data", "--count", "300", "--out", data}).code == 0);
  const auto grid = dir / "grid.csv";
  const auto timing = dir / "timing.csv";
  const auto table = dir / "table.csv";
  const auto r = run({"grid", "--data", data, "--archs", "2-2-2-10,2-4-4-10", "--variants", "and-or,and-noneg",
                      "--epochs", "1", "--timing-reps", "100", "--out", grid, "--timing-out", timing,
                      "--table-out", table});
  CHECK(r.code == 0);
  CHECK(line_count(grid) == 5);
  CHECK(line_count(timing) == 5);
  CHECK(fs::exists(grid + ".manifest.json"));
  CHECK(slurp(grid).rfind("architecture,variant,overall_acc,", 0) == 0);
  CHECK(slurp(grid).find(",status\n") != std::string::npos);

  CHECK(run({"grid", "--data", data, "--archs", "2-x-10", "--out", grid}).code == 2);
  CHECK(run({"grid", "--data", data, "--archs", "2-2-2-10", "--timing-reps", "5", "--out", grid}).code == 2);
}

TEST_CASE("single-cell grid matches train + eval") {
  TempDir dir;
  const auto data = dir / "d.csv";
  REQUIRE(run({"gen-data", "--count", "300", "--out", data}).code == 0);
  const auto grid = dir / "grid.csv";
  REQUIRE(run({"grid", "--data", data, "--archs", "2-2-2-10", "--variants", "and-or", "--epochs", "2", "--seed",
               "4", "--out", grid, "--timing-out", dir / "t.csv"})
              .code == 0);
  const auto manifest = nlohmann::json::parse(slurp(grid + ".manifest.json"));
  const auto cell_seed = manifest["seeds"]["2-2-2-10/and-or"].get<std::uint64_t>();
  const auto r = run({"train", "--arch", "2-2-2-10", "--variant", "and-or", "--data", data, "--epochs", "2",
                      "--seed", std::to_string(cell_seed), "--checkpoint", dir / "m.json", "--metrics",
                      dir / "m.csv"});
  REQUIRE(r.code == 0);
  std::ifstream in(grid);
  std::string header;
  std::string row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(row.rfind("2-2-2-10,and-or,", 0) == 0);
  const std::size_t start = std::string("2-2-2-10,and-or,").size();
  const double grid_acc = std::stod(row.substr(start, row.find(',', start) - start));
  const auto printed = last_line_with(r.out, "overall accuracy:");
  const double train_acc = std::stod(printed.substr(std::string("overall accuracy: ").size()));
  CHECK(std::abs(grid_acc - train_acc) <= 5e-5);
}

TEST_CASE("grad-check") {
  auto r = run({"grad-check", "--trials", "20"});
  CHECK(r.code == 0);
  CHECK(r.out.find("PASS") != std::string::npos);
  r = run({"grad-check", "--trials", "20", "--h", "1e-1"});
  CHECK(r.code == 1);
  CHECK(r.out.find("worst offender") != std::string::npos);
  CHECK(run({"grad-check", "--trials", "0"}).code == 2);
  CHECK(run({"grad-check", "--h", "-1"}).code == 2);
}
