#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "nlrl/formula.hpp"
#include "nlrl/network.hpp"
#include "nlrl/prng.hpp"

namespace nlrl::testing {

/// Random formula over variables [0, vars). `derived` admits Xor/Implies/Equiv.
inline Formula random_formula(SplitMix64& rng, std::size_t vars, int depth, bool derived = true) {
  if (depth <= 0 || rng.below(4) == 0) {
    if (rng.below(8) == 0) return Formula::constant(rng.below(2) == 1);
    return Formula::var(rng.below(vars));
  }
  const std::uint64_t kinds = derived ? 6 : 3;
  switch (rng.below(kinds)) {
    case 0:
      return Formula::negate(random_formula(rng, vars, depth - 1, derived));
    case 1:
    case 2: {
      std::vector<Formula> kids;
      const std::size_t count = 2 + rng.below(2);
      for (std::size_t i = 0; i < count; ++i) kids.push_back(random_formula(rng, vars, depth - 1, derived));
      return rng.below(2) ? Formula::conj(std::move(kids)) : Formula::disj(std::move(kids));
    }
    case 3:
      return Formula::exclusive_or(random_formula(rng, vars, depth - 1, derived),
                                   random_formula(rng, vars, depth - 1, derived));
    case 4:
      return Formula::implies(random_formula(rng, vars, depth - 1, derived),
                              random_formula(rng, vars, depth - 1, derived));
    default:
      return Formula::equiv(random_formula(rng, vars, depth - 1, derived),
                            random_formula(rng, vars, depth - 1, derived));
  }
}

inline Network random_network(SplitMix64& rng, const NetworkSpec& spec, double range) {
  Network net = Network::zeros(spec);
  for (auto& layer : net.layers) {
    for (auto block : layer.blocks()) {
      for (double& v : block) v = rng.uniform(-range, range);
    }
  }
  return net;
}

inline std::vector<double> random_point(SplitMix64& rng, std::size_t n, double lo = 0.0, double hi = 1.0) {
  std::vector<double> x(n);
  for (double& v : x) v = rng.uniform(lo, hi);
  return x;
}

}  // namespace nlrl::testing
