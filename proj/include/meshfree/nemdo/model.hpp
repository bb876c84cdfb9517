#pragma once

// Network configuration and the flat parameter vector layout.

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "meshfree/errors.hpp"
#include "meshfree/rng.hpp"
#include "meshfree/taylor.hpp"

namespace meshfree::nemdo {

struct ModelConfig {
  std::size_t stencil_n = 10;
  int order_p = 2;
  OperatorKind kind = OperatorKind::Dx;
  std::size_t latent = 32;        ///< F_h
  std::size_t graph_layers = 2;   ///< L
  std::size_t mlp_hidden = 1;     ///< hidden layers in every MLP (embed/message/update/output)

  void validate() const {
    require(stencil_n >= 1, "stencil_n must be >= 1");
    require(latent >= 1, "latent width must be >= 1");
    require(graph_layers >= 1, "need at least one graph layer");
    if (order_p < minimum_order(kind))
      fail(ErrorCode::InvalidArgument, "order_p too low for operator");
  }

  nlohmann::json to_json() const {
    return {{"stencil_n", stencil_n},   {"order_p", order_p},           {"operator", std::string(to_string(kind))},
            {"latent", latent},         {"graph_layers", graph_layers}, {"mlp_hidden", mlp_hidden},
            {"activation", "tanh"},     {"aggregation", "dot-product-attention"}};
  }

  static ModelConfig from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.stencil_n = j.at("stencil_n").get<std::size_t>();
    c.order_p = j.at("order_p").get<int>();
    c.kind = parse_operator_kind(j.at("operator").get<std::string>());
    c.latent = j.at("latent").get<std::size_t>();
    c.graph_layers = j.at("graph_layers").get<std::size_t>();
    c.mlp_hidden = j.at("mlp_hidden").get<std::size_t>();
    c.validate();
    return c;
  }

  /// FNV-1a over the canonical JSON text.
  std::uint64_t hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : to_json().dump()) {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
    return h;
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// One dense layer: weight is out x in (row-major), followed by out biases.
struct DenseSlice {
  std::size_t offset = 0;  ///< start of the weight block
  std::size_t in = 0;
  std::size_t out = 0;

  std::size_t weight_count() const { return in * out; }
  std::size_t bias_offset() const { return offset + weight_count(); }
  std::size_t end() const { return bias_offset() + out; }
};

struct MlpLayout {
  std::string name;
  std::vector<DenseSlice> layers;

  std::size_t in() const { return layers.front().in; }
  std::size_t out() const { return layers.back().out; }
};

/// Named, contiguous slices of the flat parameter vector:
///   embed, then (message.l, update.l) for each graph layer, then output.
class ParameterLayout {
 public:
  struct Entry {
    std::string name;
    std::size_t offset;
    std::size_t count;
  };

  explicit ParameterLayout(const ModelConfig& cfg) {
    cfg.validate();
    const std::size_t f = cfg.latent;
    embed_ = make("embed", 2, f, f, cfg.mlp_hidden);
    for (std::size_t l = 0; l < cfg.graph_layers; ++l) {
      message_.push_back(make("message." + std::to_string(l), f, f, f, cfg.mlp_hidden));
      update_.push_back(make("update." + std::to_string(l), 2 * f, f, f, cfg.mlp_hidden));
    }
    output_ = make("output", f, f, 1, cfg.mlp_hidden);
  }

  std::size_t size() const { return size_; }
  const MlpLayout& embed() const { return embed_; }
  const MlpLayout& message(std::size_t l) const { return message_.at(l); }
  const MlpLayout& update(std::size_t l) const { return update_.at(l); }
  const MlpLayout& output() const { return output_; }
  std::size_t graph_layers() const { return message_.size(); }
  const std::vector<Entry>& entries() const { return entries_; }

  const Entry& find(const std::string& name) const {
    for (const auto& e : entries_)
      if (e.name == name) return e;
    fail(ErrorCode::InvalidArgument, "no parameter slice named " + name);
  }

 private:
  MlpLayout make(const std::string& name, std::size_t in, std::size_t hidden, std::size_t out, std::size_t n_hidden) {
    MlpLayout m{name, {}};
    std::size_t prev = in;
    for (std::size_t k = 0; k <= n_hidden; ++k) {
      const std::size_t width = k == n_hidden ? out : hidden;
      DenseSlice d{size_, prev, width};
      const std::string base = name + ".layer" + std::to_string(k);
      entries_.push_back({base + ".weight", d.offset, d.weight_count()});
      entries_.push_back({base + ".bias", d.bias_offset(), d.out});
      size_ = d.end();
      m.layers.push_back(d);
      prev = width;
    }
    return m;
  }

  std::size_t size_ = 0;
  MlpLayout embed_;
  std::vector<MlpLayout> message_;
  std::vector<MlpLayout> update_;
  MlpLayout output_;
  std::vector<Entry> entries_;
};

/// Configuration plus parameters theta.
struct Model {
  ModelConfig config;
  std::vector<double> params;

  ParameterLayout layout() const { return ParameterLayout(config); }

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases of every layer.
  static Model initialize(const ModelConfig& cfg, std::uint64_t seed) {
    const ParameterLayout layout(cfg);
    Model m{cfg, std::vector<double>(layout.size())};
    Rng rng(seed);
    auto fill = [&](const MlpLayout& mlp) {
      for (const auto& d : mlp.layers) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(d.in));
        for (std::size_t k = d.offset; k < d.end(); ++k) m.params[k] = rng.uniform(-bound, bound);
      }
    };
    fill(layout.embed());
    for (std::size_t l = 0; l < layout.graph_layers(); ++l) {
      fill(layout.message(l));
      fill(layout.update(l));
    }
    fill(layout.output());
    return m;
  }
};

}  // namespace meshfree::nemdo
