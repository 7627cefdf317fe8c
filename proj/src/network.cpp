#include "nlrl/network.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "nlrl/errors.hpp"

namespace nlrl {

void NetworkSpec::validate() const {
  if (sizes.size() < 2) throw ShapeError("network needs an input width and at least one layer");
  for (std::size_t s : sizes) {
    if (s == 0) throw ShapeError("layer widths must be positive");
  }
  if (!(epsilon > 0.0)) throw ShapeError("epsilon must be positive");
}

std::string NetworkSpec::architecture() const {
  std::string out;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (i) out += '-';
    out += std::to_string(sizes[i]);
  }
  return out;
}

std::vector<std::size_t> parse_architecture(std::string_view text) {
  std::vector<std::size_t> sizes;
  std::size_t pos = 0;
  while (true) {
    std::size_t dash = text.find('-', pos);
    std::string_view part = text.substr(pos, dash == std::string_view::npos ? text.npos : dash - pos);
    std::size_t value = 0;
    auto [end, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
    if (part.empty() || ec != std::errc() || end != part.data() + part.size() || value == 0) {
      throw std::invalid_argument("bad architecture '" + std::string(text) +
                                  "' (expected widths like 2-4-4-10)");
    }
    sizes.push_back(value);
    if (dash == std::string_view::npos) break;
    pos = dash + 1;
  }
  if (sizes.size() < 2) {
    throw std::invalid_argument("architecture '" + std::string(text) + "' has no layers");
  }
  return sizes;
}

Network Network::zeros(const NetworkSpec& spec) {
  spec.validate();
  Network net{spec, {}};
  for (std::size_t l = 0; l + 1 < spec.sizes.size(); ++l) {
    net.layers.push_back(
        LayerParams::zeros(spec.variant, spec.negation_mode, spec.sizes[l], spec.sizes[l + 1]));
  }
  return net;
}

void Network::validate() const {
  spec.validate();
  if (layers.size() != spec.depth()) {
    throw ShapeError("network has " + std::to_string(layers.size()) + " layers, spec says " +
                     std::to_string(spec.depth()));
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& p = layers[l];
    p.validate();
    if (p.inputs() != spec.sizes[l] || p.rules() != spec.sizes[l + 1] ||
        p.variant != spec.variant || p.negation_mode != spec.negation_mode) {
      throw ShapeError("layer " + std::to_string(l + 1) + " does not match the network spec");
    }
  }
}

std::size_t Network::parameter_count() const {
  std::size_t count = 0;
  for (const auto& p : layers) {
    for (auto block : p.blocks()) count += block.size();
  }
  return count;
}

ForwardTrace network_forward(const Network& net, std::span<const double> x) {
  if (net.layers.size() != net.spec.depth()) throw ShapeError("network/spec depth mismatch");
  if (x.size() != net.spec.input_width()) {
    throw ShapeError("network expects " + std::to_string(net.spec.input_width()) +
                     " inputs, got " + std::to_string(x.size()));
  }
  ForwardTrace trace;
  trace.layers.reserve(net.layers.size());
  std::span<const double> current = x;
  for (const auto& layer : net.layers) {
    trace.layers.push_back(layer_forward(current, layer, net.spec.epsilon));
    current = trace.layers.back().output;
  }
  return trace;
}

std::vector<double> predict(const Network& net, std::span<const double> x) {
  return network_forward(net, x).outputs();
}

NetworkGradients NetworkGradients::zeros_like(const Network& net) {
  NetworkGradients g;
  g.input.assign(net.spec.input_width(), 0.0);
  for (const auto& p : net.layers) {
    g.layers.push_back(LayerParams::zeros(p.variant, p.negation_mode, p.inputs(), p.rules()));
  }
  return g;
}

void NetworkGradients::accumulate(const NetworkGradients& other, double scale) {
  if (other.layers.size() != layers.size() || other.input.size() != input.size()) {
    throw ShapeError("gradient shapes differ");
  }
  for (std::size_t i = 0; i < input.size(); ++i) input[i] += scale * other.input[i];
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto dst = layers[l].blocks();
    auto src = other.layers[l].blocks();
    for (std::size_t b = 0; b < dst.size(); ++b) {
      if (dst[b].size() != src[b].size()) throw ShapeError("gradient shapes differ");
      for (std::size_t k = 0; k < dst[b].size(); ++k) dst[b][k] += scale * src[b][k];
    }
  }
}

NetworkGradients network_backward(const Network& net, const ForwardTrace& trace,
                                  std::span<const double> upstream) {
  if (trace.layers.size() != net.layers.size()) {
    throw ShapeError("trace depth does not match the network");
  }
  NetworkGradients g;
  g.layers.resize(net.layers.size());
  std::vector<double> grad(upstream.begin(), upstream.end());
  for (std::size_t l = net.layers.size(); l-- > 0;) {
    auto lg = layer_backward(net.layers[l], trace.layers[l], grad, net.spec.epsilon);
    g.layers[l] = std::move(lg.params);
    grad = std::move(lg.input);
  }
  g.input = std::move(grad);
  return g;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr const char* kFormat = "nlrl-checkpoint";
constexpr int kFormatVersion = 1;

nlohmann::json matrix_json(std::size_t rows, std::size_t cols, std::span<const double> values) {
  return {{"rows", rows}, {"cols", cols}, {"data", std::vector<double>(values.begin(), values.end())}};
}

Matrix matrix_from_json(const nlohmann::json& j, const char* name) {
  Matrix m;
  m.rows = j.at("rows").get<std::size_t>();
  m.cols = j.at("cols").get<std::size_t>();
  m.values = j.at("data").get<std::vector<double>>();
  if (m.values.size() != m.rows * m.cols) {
    throw ShapeError(std::string(name) + ": data length does not match rows*cols");
  }
  return m;
}

}  // namespace

nlohmann::json to_json(const Network& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& p : net.layers) {
    layers.push_back({
        {"inputs", p.inputs()},
        {"rules", p.rules()},
        {"rule_logits", matrix_json(p.rule_logits.rows, p.rule_logits.cols, p.rule_logits.values)},
        {"negation_logits",
         matrix_json(p.negation_logits.rows, p.negation_logits.cols, p.negation_logits.values)},
        {"gate_logits", matrix_json(p.gate_logits.empty() ? 0 : 1, p.gate_logits.size(), p.gate_logits)},
    });
  }
  return {
      {"format", kFormat},
      {"version", kFormatVersion},
      {"spec",
       {{"sizes", net.spec.sizes},
        {"variant", std::string(to_string(net.spec.variant))},
        {"negation_mode", std::string(to_string(net.spec.negation_mode))},
        {"epsilon", net.spec.epsilon}}},
      {"layers", layers},
  };
}

Network network_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format").get<std::string>() != kFormat) throw ShapeError("not an nlrl checkpoint");
    if (doc.at("version").get<int>() != kFormatVersion) {
      throw ShapeError("unsupported checkpoint version");
    }
    const auto& js = doc.at("spec");
    NetworkSpec spec;
    spec.sizes = js.at("sizes").get<std::vector<std::size_t>>();
    spec.variant = parse_variant(js.at("variant").get<std::string>());
    spec.negation_mode = parse_negation_mode(js.at("negation_mode").get<std::string>());
    spec.epsilon = js.at("epsilon").get<double>();

    Network net{spec, {}};
    for (const auto& jl : doc.at("layers")) {
      LayerParams p;
      p.variant = spec.variant;
      p.negation_mode = spec.negation_mode;
      p.rule_logits = matrix_from_json(jl.at("rule_logits"), "rule_logits");
      p.negation_logits = matrix_from_json(jl.at("negation_logits"), "negation_logits");
      p.gate_logits = matrix_from_json(jl.at("gate_logits"), "gate_logits").values;
      if (jl.at("inputs").get<std::size_t>() != p.inputs() ||
          jl.at("rules").get<std::size_t>() != p.rules()) {
        throw ShapeError("layer shape fields disagree with the stored matrices");
      }
      net.layers.push_back(std::move(p));
    }
    net.validate();
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw ShapeError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Network& net, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << to_json(net).dump(2) << '\n';
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

Network load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ShapeError("malformed checkpoint " + path.string() + ": " + e.what());
  }
  return network_from_json(doc);
}

}  // namespace nlrl
