#include "nlrl/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "nlrl/errors.hpp"
#include "nlrl/prng.hpp"

namespace nlrl {

Targets target_vector(double x, double y) {
  if (!(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0)) {
    throw DomainError("target_vector inputs must lie in [0,1]");
  }
  const double u = x * (1.0 - y);
  const double v = (1.0 - x) * y;
  return {x / 2.0 + y / 2.0, x * (1.0 - y), x * y, x + y - x * y, u + v - u * v,
          x,                 y,             1.0 - x, 1.0 - y,      0.7};
}

std::size_t test_split_size(std::size_t n) {
  const auto rounded = static_cast<std::size_t>(std::llround(static_cast<double>(n) / 10.0));
  return std::max<std::size_t>(rounded, 1);
}

Dataset generate(std::uint64_t seed, std::size_t n) {
  if (n < 2) throw std::invalid_argument("dataset needs at least 2 samples");
  SplitMix64 rng(seed);
  Dataset d;
  d.seed = seed;
  d.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Sample s;
    s.x = rng.uniform();
    s.y = rng.uniform();
    s.targets = target_vector(s.x, s.y);
    d.samples.push_back(s);
  }
  d.train_count = n - test_split_size(n);
  return d;
}

namespace {

void put(std::string& line, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  line += buf;
}

std::string header() {
  std::string h = "x,y";
  for (std::size_t k = 0; k < kTargetCount; ++k) h += ",f" + std::to_string(k);
  return h + ",split";
}

}  // namespace

void write_csv(const Dataset& d, std::ostream& out) {
  out << header() << '\n';
  std::string line;
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    const auto& s = d.samples[i];
    line.clear();
    put(line, s.x);
    line += ',';
    put(line, s.y);
    for (double t : s.targets) {
      line += ',';
      put(line, t);
    }
    line += i < d.train_count ? ",train\n" : ",test\n";
    out << line;
  }
}

void save_csv(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_csv(d, out);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Dataset read_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError("line 1: empty dataset file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header()) throw ParseError("line 1: unexpected header '" + line + "'");

  Dataset d;
  bool seen_test = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fail = [&](const std::string& msg) {
      throw ParseError("line " + std::to_string(line_no) + ": " + msg);
    };

    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 3 + kTargetCount) {
      fail("expected " + std::to_string(3 + kTargetCount) + " fields, got " +
           std::to_string(fields.size()));
    }
    double values[2 + kTargetCount];
    for (std::size_t k = 0; k < 2 + kTargetCount; ++k) {
      const std::string& f = fields[k];
      char* end = nullptr;
      values[k] = std::strtod(f.c_str(), &end);
      if (f.empty() || end != f.c_str() + f.size() || !std::isfinite(values[k])) {
        fail("bad number '" + f + "' in column " + std::to_string(k + 1));
      }
    }
    Sample s;
    s.x = values[0];
    s.y = values[1];
    for (std::size_t k = 0; k < kTargetCount; ++k) s.targets[k] = values[2 + k];

    const std::string& split = fields.back();
    if (split == "train") {
      if (seen_test) fail("train row after test rows");
      ++d.train_count;
    } else if (split == "test") {
      seen_test = true;
    } else {
      fail("split must be 'train' or 'test', got '" + split + "'");
    }
    d.samples.push_back(s);
  }
  return d;
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return read_csv(in);
}

std::vector<std::size_t> validate_targets(const Dataset& d) {
  std::vector<std::size_t> bad;
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    const auto& s = d.samples[i];
    if (!(s.x >= 0.0 && s.x <= 1.0 && s.y >= 0.0 && s.y <= 1.0) ||
        s.targets != target_vector(s.x, s.y)) {
      bad.push_back(i);
    }
  }
  return bad;
}

}  // namespace nlrl
