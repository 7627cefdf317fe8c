#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace nlrl {

inline constexpr std::size_t kTargetCount = 10;
using Targets = std::array<double, kTargetCount>;

/// Column labels of the ten target functions, in target order.
inline constexpr std::array<std::string_view, kTargetCount> kTargetNames = {
    "x/2+y/2", "x*!y", "x AND y", "x OR y", "x XOR y", "x", "y", "!x", "!y", "0.7"};

/// [x/2+y/2, x(1-y), xy, x+y-xy, xor, x, y, 1-x, 1-y, 0.7], where xor is the
/// product-logic value of (x & !y) | (!x & y). Throws DomainError outside [0,1].
Targets target_vector(double x, double y);

struct Sample {
  double x = 0.0;
  double y = 0.0;
  Targets targets{};

  bool operator==(const Sample&) const = default;
};

struct Dataset {
  std::vector<Sample> samples;
  std::uint64_t seed = 0;
  std::size_t train_count = 0;  // samples[0, train_count) train, the rest test

  std::span<const Sample> train() const { return {samples.data(), train_count}; }
  std::span<const Sample> test() const {
    return {samples.data() + train_count, samples.size() - train_count};
  }
  std::size_t test_count() const { return samples.size() - train_count; }

  bool operator==(const Dataset&) const = default;
};

/// Number of held-out samples for a dataset of n: 10% rounded, at least one.
std::size_t test_split_size(std::size_t n);

/// n samples with x then y drawn per sample from SplitMix64(seed); the last
/// test_split_size(n) samples form the test split. Throws for n < 2.
Dataset generate(std::uint64_t seed, std::size_t n = 100000);

/// Header `x,y,f0,...,f9,split`; values as 17 significant digits.
void save_csv(const Dataset& d, const std::filesystem::path& path);
void write_csv(const Dataset& d, std::ostream& out);
/// Throws ParseError naming the line on malformed rows. Train rows must
/// precede test rows. The seed is not stored and loads as 0.
Dataset load_csv(const std::filesystem::path& path);
Dataset read_csv(std::istream& in);

/// Indices of samples whose targets differ from target_vector(x, y).
std::vector<std::size_t> validate_targets(const Dataset& d);

}  // namespace nlrl
