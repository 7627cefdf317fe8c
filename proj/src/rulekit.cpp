#include "nlrl/rulekit.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "nlrl/errors.hpp"

namespace nlrl {

namespace {

// ---------------------------------------------------------------------------
// Two-level covers

struct Literal {
  std::size_t var = 0;
  bool negated = false;
  auto operator<=>(const Literal&) const = default;
};

// Conjunction of literals sorted by variable; empty means constant 1.
using Term = std::vector<Literal>;

struct Implicant {
  std::uint32_t mask = 0;   // bit set = variable appears
  std::uint32_t value = 0;  // polarity for the cared bits
  auto operator<=>(const Implicant&) const = default;
};

std::uint32_t var_bit(std::size_t var, std::size_t n) { return std::uint32_t{1} << (n - 1 - var); }

bool covers(const Implicant& imp, std::uint32_t minterm) {
  return (minterm & imp.mask) == imp.value;
}

Term to_term(const Implicant& imp, std::size_t n) {
  Term t;
  for (std::size_t v = 0; v < n; ++v) {
    const auto bit = var_bit(v, n);
    if (imp.mask & bit) t.push_back({v, (imp.value & bit) == 0});
  }
  return t;
}

// Prime implicants of the ones of `bits`, then a greedy cover. Deterministic.
std::vector<Term> implicant_cover(const std::vector<std::uint8_t>& bits, std::size_t n) {
  const std::uint32_t full = n == 0 ? 0 : (std::uint32_t{1} << n) - 1;
  std::vector<std::uint32_t> ones;
  for (std::uint32_t k = 0; k < bits.size(); ++k) {
    if (bits[k]) ones.push_back(k);
  }
  if (ones.empty()) return {};

  std::set<Implicant> current;
  for (auto m : ones) current.insert({full, m});
  std::set<Implicant> primes;
  while (!current.empty()) {
    std::set<Implicant> merged;
    std::set<Implicant> used;
    for (auto a = current.begin(); a != current.end(); ++a) {
      for (auto b = std::next(a); b != current.end(); ++b) {
        if (a->mask != b->mask) continue;
        const auto diff = a->value ^ b->value;
        if (diff && (diff & (diff - 1)) == 0) {
          merged.insert({a->mask & ~diff, a->value & ~diff});
          used.insert(*a);
          used.insert(*b);
        }
      }
    }
    for (const auto& imp : current) {
      if (!used.count(imp)) primes.insert(imp);
    }
    current = std::move(merged);
  }

  std::vector<Implicant> candidates(primes.begin(), primes.end());
  std::set<std::uint32_t> uncovered(ones.begin(), ones.end());
  std::vector<Term> cover;
  while (!uncovered.empty()) {
    std::size_t best = 0;
    std::size_t best_gain = 0;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      std::size_t gain = 0;
      for (auto m : uncovered) gain += covers(candidates[c], m) ? 1 : 0;
      const int pop_c = std::popcount(candidates[c].mask);
      const int pop_b = std::popcount(candidates[best].mask);
      if (gain > best_gain || (gain == best_gain && gain > 0 && pop_c < pop_b)) {
        best = c;
        best_gain = gain;
      }
    }
    for (auto it = uncovered.begin(); it != uncovered.end();) {
      it = covers(candidates[best], *it) ? uncovered.erase(it) : std::next(it);
    }
    cover.push_back(to_term(candidates[best], n));
  }
  return cover;
}

std::vector<std::uint8_t> complement(std::vector<std::uint8_t> bits) {
  for (auto& b : bits) b = b ? 0 : 1;
  return bits;
}

// The formula as a single conjunction of literals, if it is one.
std::optional<Term> as_conjunction(const std::vector<std::uint8_t>& bits, std::size_t n) {
  auto cover = implicant_cover(bits, n);
  if (cover.size() != 1) return std::nullopt;
  return cover.front();
}

// ---------------------------------------------------------------------------
// Layer plans

enum class NeuronKind { And, Or, Nand };

struct NeuronPlan {
  NeuronKind kind = NeuronKind::And;
  std::vector<std::pair<std::size_t, bool>> inputs;  // (input index, negated)
};

using LayerPlan = std::vector<NeuronPlan>;

constexpr double kOn = kSaturatedLogit;
constexpr double kOff = -kSaturatedLogit;

LayerParams materialize(const LayerPlan& plan, const NetworkSpec& spec, std::size_t layer) {
  const std::size_t n = spec.sizes[layer];
  const std::size_t m = spec.sizes[layer + 1];
  LayerParams p = LayerParams::zeros(spec.variant, spec.negation_mode, n, m);
  std::fill(p.rule_logits.values.begin(), p.rule_logits.values.end(), kOff);
  std::fill(p.negation_logits.values.begin(), p.negation_logits.values.end(), kOff);
  std::fill(p.gate_logits.begin(), p.gate_logits.end(), kOff);

  std::vector<int> shared(n, -1);  // PerInput: -1 unset, 0 plain, 1 negated
  for (std::size_t j = 0; j < plan.size(); ++j) {
    const auto& neuron = plan[j];
    for (auto [i, negated] : neuron.inputs) {
      p.rule_logits(j, i) = kOn;
      if (spec.negation_mode == NegationMode::PerInputPerRule) {
        p.negation_logits(j, i) = negated ? kOn : kOff;
      } else {
        const int want = negated ? 1 : 0;
        if (shared[i] != -1 && shared[i] != want) {
          throw CapacityError("layer " + std::to_string(layer + 1) + " needs input " +
                              std::to_string(i) +
                              " both plain and negated; per-input negation cannot express "
                              "this (use per-input-per-rule negation or a deeper network)");
        }
        shared[i] = want;
        p.negation_logits(0, i) = negated ? kOn : kOff;
      }
    }
    switch (neuron.kind) {
      case NeuronKind::And:
        break;
      case NeuronKind::Or:
        if (spec.variant != Variant::AndOr) throw std::logic_error("OR neuron outside and-or");
        p.gate_logits[j] = kOn;
        break;
      case NeuronKind::Nand:
        if (spec.variant != Variant::AndNeg) throw std::logic_error("NAND neuron outside and-neg");
        p.gate_logits[j] = kOn;
        break;
    }
  }
  return p;
}

void require_width(const NetworkSpec& spec, std::size_t layer, std::size_t needed,
                   const char* purpose) {
  if (spec.sizes[layer + 1] < needed) {
    throw CapacityError("layer " + std::to_string(layer + 1) + " needs " + std::to_string(needed) +
                        " rules for " + purpose + " but has width " +
                        std::to_string(spec.sizes[layer + 1]));
  }
}

// Single neuron over the raw inputs computing the table, if the variant allows.
std::optional<NeuronPlan> single_neuron(const std::vector<std::uint8_t>& bits, std::size_t n,
                                        Variant variant) {
  if (auto term = as_conjunction(bits, n)) {
    NeuronPlan plan;
    for (auto lit : *term) plan.inputs.emplace_back(lit.var, lit.negated);
    return plan;
  }
  if (variant == Variant::AndNoNeg) return std::nullopt;
  // Disjunction: the complement is a conjunction c, f = !c.
  auto comp = as_conjunction(complement(bits), n);
  if (!comp) return std::nullopt;
  NeuronPlan plan;
  if (variant == Variant::AndOr) {
    plan.kind = NeuronKind::Or;
    for (auto lit : *comp) plan.inputs.emplace_back(lit.var, !lit.negated);
  } else {
    plan.kind = NeuronKind::Nand;
    for (auto lit : *comp) plan.inputs.emplace_back(lit.var, lit.negated);
  }
  return plan;
}

LayerPlan neutral_plan(std::size_t width) { return LayerPlan(width); }

}  // namespace

Network init_from_formulas(std::span<const Formula> outputs, const NetworkSpec& spec) {
  spec.validate();
  const std::size_t n = spec.input_width();
  const std::size_t depth = spec.depth();
  if (outputs.size() != spec.output_width()) {
    throw ShapeError("need one formula per output neuron (" + std::to_string(spec.output_width()) +
                     "), got " + std::to_string(outputs.size()));
  }
  if (n > kMaxInjectionArity) {
    throw CapacityError("rule injection supports at most " + std::to_string(kMaxInjectionArity) +
                        " inputs");
  }
  std::vector<std::vector<std::uint8_t>> tables;
  for (const auto& f : outputs) tables.push_back(truth_table(f, n).bits);

  std::vector<LayerPlan> plans;
  for (std::size_t l = 0; l < depth; ++l) plans.push_back(neutral_plan(spec.sizes[l + 1]));

  if (depth == 1) {
    for (std::size_t k = 0; k < tables.size(); ++k) {
      auto neuron = single_neuron(tables[k], n, spec.variant);
      if (!neuron) {
        throw CapacityError("output " + std::to_string(k) + " (" + to_string(outputs[k]) +
                            ") is not a single " +
                            (spec.variant == Variant::AndNoNeg ? "conjunction" : "clause") +
                            "; it needs at least 2 layers");
      }
      plans[0][k] = std::move(*neuron);
    }
  } else {
    // AND-only networks use the complement's implicants as negated clauses.
    const bool clauses = spec.variant == Variant::AndNoNeg;
    std::map<Term, std::size_t> term_index;
    std::vector<Term> terms;
    std::vector<std::vector<std::size_t>> output_terms(tables.size());
    for (std::size_t k = 0; k < tables.size(); ++k) {
      for (auto& t : implicant_cover(clauses ? complement(tables[k]) : tables[k], n)) {
        auto [it, inserted] = term_index.emplace(t, terms.size());
        if (inserted) terms.push_back(t);
        output_terms[k].push_back(it->second);
      }
    }
    const std::size_t term_layer = depth - 2;
    require_width(spec, term_layer, terms.size(), "the normal-form terms");

    std::set<Literal> literal_set;
    for (const auto& t : terms) literal_set.insert(t.begin(), t.end());
    const std::vector<Literal> literals(literal_set.begin(), literal_set.end());
    auto literal_pos = [&](Literal lit) {
      return static_cast<std::size_t>(std::lower_bound(literals.begin(), literals.end(), lit) -
                                      literals.begin());
    };

    // Routing layers carry one signal per literal; the last one applies polarity.
    const std::size_t routing = depth - 2;
    for (std::size_t l = 0; l < routing; ++l) {
      require_width(spec, l, literals.size(), "literal routing");
      const bool last = l + 1 == routing;
      for (std::size_t s = 0; s < literals.size(); ++s) {
        const std::size_t source = l == 0 ? literals[s].var : s;
        NeuronPlan& neuron = plans[l][s];
        if (last && literals[s].negated && spec.variant == Variant::AndNeg) {
          neuron.kind = NeuronKind::Nand;
          neuron.inputs.emplace_back(source, false);
        } else {
          neuron.inputs.emplace_back(source, last && literals[s].negated);
        }
      }
    }

    for (std::size_t t = 0; t < terms.size(); ++t) {
      for (auto lit : terms[t]) {
        if (routing == 0) {
          plans[term_layer][t].inputs.emplace_back(lit.var, lit.negated);
        } else {
          plans[term_layer][t].inputs.emplace_back(literal_pos(lit), false);
        }
      }
    }

    for (std::size_t k = 0; k < tables.size(); ++k) {
      NeuronPlan& top = plans[depth - 1][k];
      switch (spec.variant) {
        case Variant::AndOr:
          top.kind = NeuronKind::Or;
          for (auto t : output_terms[k]) top.inputs.emplace_back(t, false);
          break;
        case Variant::AndNeg:
          top.kind = NeuronKind::Nand;
          for (auto t : output_terms[k]) top.inputs.emplace_back(t, true);
          break;
        case Variant::AndNoNeg:
          for (auto t : output_terms[k]) top.inputs.emplace_back(t, true);
          break;
      }
    }
  }

  Network net{spec, {}};
  for (std::size_t l = 0; l < depth; ++l) net.layers.push_back(materialize(plans[l], spec, l));
  return net;
}

Network init_from_formula(const Formula& f, const NetworkSpec& spec) {
  spec.validate();
  std::vector<Formula> outputs(spec.output_width(), f);
  return init_from_formulas(outputs, spec);
}

// ---------------------------------------------------------------------------
// Extraction

namespace {

enum class Bit { Zero, One, Unsaturated };

Bit classify(double logit, double theta) {
  const double s = squash(logit);
  if (s >= theta) return Bit::One;
  if (s <= 1.0 - theta) return Bit::Zero;
  return Bit::Unsaturated;
}

class Extractor {
 public:
  Extractor(const Network& net, double theta) : net_(net), theta_(theta) {}

  // Formula computed by neuron j of layer l (0-based), collecting every
  // unsaturated coordinate in its cone.
  std::optional<Formula> neuron(std::size_t l, std::size_t j, std::vector<std::string>& unsat,
                                std::set<std::string>& seen) {
    const LayerParams& p = net_.layers[l];
    const std::string tag = "L" + std::to_string(l + 1);
    auto note = [&](std::string coord) {
      if (seen.insert(coord).second) unsat.push_back(std::move(coord));
    };
    bool ok = true;
    std::vector<Formula> children;
    const std::size_t neg_row = p.negation_mode == NegationMode::PerInput ? 0 : j;
    for (std::size_t i = 0; i < p.inputs(); ++i) {
      const Bit member = classify(p.rule_logits(j, i), theta_);
      if (member == Bit::Zero) continue;
      if (member == Bit::Unsaturated) {
        note(tag + ".A[" + std::to_string(j) + "][" + std::to_string(i) + "]");
        ok = false;
      }
      const Bit negation = classify(p.negation_logits(neg_row, i), theta_);
      if (negation == Bit::Unsaturated) {
        note(tag + ".neg[" + std::to_string(neg_row) + "][" + std::to_string(i) + "]");
        ok = false;
      }
      std::optional<Formula> child =
          l == 0 ? std::optional<Formula>(Formula::var(i)) : neuron(l - 1, i, unsat, seen);
      if (!child) ok = false;
      if (ok) children.push_back(negation == Bit::One ? Formula::negate(*child) : *child);
    }

    Bit gate = Bit::Zero;
    if (p.has_gate()) {
      gate = classify(p.gate_logits[j], theta_);
      if (gate == Bit::Unsaturated) {
        note(tag + ".gate[" + std::to_string(j) + "]");
        ok = false;
      }
    }
    if (!ok) return std::nullopt;

    const bool disjunction = p.variant == Variant::AndOr && gate == Bit::One;
    Formula body = children.empty()
                       ? Formula::constant(!disjunction)
                       : (children.size() == 1
                              ? children.front()
                              : (disjunction ? Formula::disj(std::move(children))
                                             : Formula::conj(std::move(children))));
    if (p.variant == Variant::AndNeg && gate == Bit::One) return Formula::negate(std::move(body));
    return body;
  }

 private:
  const Network& net_;
  double theta_;
};

}  // namespace

ExtractionReport extract(const Network& net, double theta) {
  if (!(theta > 0.5 && theta < 1.0)) throw std::invalid_argument("theta must lie in (0.5, 1)");
  net.validate();
  ExtractionReport report;
  report.theta = theta;
  Extractor extractor(net, theta);
  const bool can_verify = net.spec.input_width() <= kMaxTruthTableArity;
  for (std::size_t k = 0; k < net.spec.output_width(); ++k) {
    NeuronExtraction out;
    std::set<std::string> seen;
    out.formula = extractor.neuron(net.layers.size() - 1, k, out.unsaturated, seen);
    if (out.formula && can_verify) out.max_corner_deviation = verify_output(*out.formula, net, k);
    report.outputs.push_back(std::move(out));
  }
  return report;
}

std::size_t ExtractionReport::unsaturated_count() const {
  std::size_t count = 0;
  for (const auto& o : outputs) count += o.unsaturated.size();
  return count;
}

std::string ExtractionReport::to_text() const {
  std::ostringstream os;
  for (const auto& o : outputs) {
    if (o.formula) {
      os << to_string(*o.formula) << '\n';
      continue;
    }
    os << "UNSATURATED(";
    for (std::size_t i = 0; i < o.unsaturated.size(); ++i) os << (i ? ", " : "") << o.unsaturated[i];
    os << ")\n";
  }
  return os.str();
}

nlohmann::json ExtractionReport::to_json() const {
  nlohmann::json outs = nlohmann::json::array();
  for (std::size_t k = 0; k < outputs.size(); ++k) {
    const auto& o = outputs[k];
    outs.push_back({
        {"output", k},
        {"formula", o.formula ? nlohmann::json(to_string(*o.formula)) : nlohmann::json(nullptr)},
        {"unsaturated", o.unsaturated},
        {"max_corner_deviation",
         o.max_corner_deviation ? nlohmann::json(*o.max_corner_deviation) : nlohmann::json(nullptr)},
    });
  }
  return {{"theta", theta}, {"outputs", outs}};
}

// ---------------------------------------------------------------------------
// Verification and firing

namespace {

double corner_deviation(const Formula& f, const Network& net, std::optional<std::size_t> only) {
  net.validate();
  const std::size_t n = net.spec.input_width();
  if (f.arity() > n) {
    throw ArityError("formula uses x" + std::to_string(f.arity() - 1) + " but the network has " +
                     std::to_string(n) + " inputs");
  }
  if (n > kMaxTruthTableArity) throw ResourceError("too many inputs to enumerate corners");
  if (only && *only >= net.spec.output_width()) throw ShapeError("output index out of range");
  double worst = 0.0;
  std::vector<double> x(n);
  for (std::uint64_t k = 0; k < (std::uint64_t{1} << n); ++k) {
    const auto bits = assignment_bits(k, n);
    for (std::size_t i = 0; i < n; ++i) x[i] = bits[i];
    const double expected = eval_boolean(f, bits) ? 1.0 : 0.0;
    const auto out = predict(net, x);
    for (std::size_t o = 0; o < out.size(); ++o) {
      if (only && o != *only) continue;
      worst = std::max(worst, std::abs(out[o] - expected));
    }
  }
  return worst;
}

}  // namespace

double verify(const Formula& f, const Network& net) { return corner_deviation(f, net, std::nullopt); }

double verify_output(const Formula& f, const Network& net, std::size_t output) {
  return corner_deviation(f, net, output);
}

FiredRules fired(std::span<const double> outputs, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("firing threshold must lie in (0, 1)");
  }
  FiredRules r;
  r.fired.reserve(outputs.size());
  for (double v : outputs) {
    const bool on = v >= threshold;
    r.fired.push_back(on);
    if (on) r.none_fired = false;
  }
  return r;
}

}  // namespace nlrl
