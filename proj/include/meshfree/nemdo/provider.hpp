#pragma once

// Physical weights from a trained network, and the provider adapter.

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "meshfree/diagnostics/provider.hpp"
#include "meshfree/errors.hpp"
#include "meshfree/geometry.hpp"
#include "meshfree/nemdo/model.hpp"
#include "meshfree/nemdo/network.hpp"
#include "meshfree/weights.hpp"

namespace meshfree::nemdo {

/// Offsets rotated so that an x-derivative model yields the y-derivative:
/// (x, y) -> (y, -x).
inline std::vector<Vec2> rotate_for_dy(std::span<const Vec2> offsets) {
  std::vector<Vec2> out;
  out.reserve(offsets.size());
  for (const auto& o : offsets) out.push_back({o.y, -o.x});
  return out;
}

/// w_ji = w_hat_ji * d_n^-m.
inline OperatorWeights infer_weights(const Model& model, const Stencil& stencil, OperatorKind kind) {
  const ModelConfig& cfg = model.config;
  if (stencil.size() != cfg.stencil_n)
    fail(ErrorCode::InvalidArgument, "stencil has " + std::to_string(stencil.size()) + " neighbors, model expects " +
                                         std::to_string(cfg.stencil_n));
  const bool rotated = kind == OperatorKind::Dy && cfg.kind == OperatorKind::Dx;
  if (kind != cfg.kind && !rotated)
    fail(ErrorCode::InvalidArgument, "model trained for " + std::string(to_string(cfg.kind)) + " cannot provide " +
                                         std::string(to_string(kind)));
  NormalizedStencil ns = normalize(stencil);
  if (rotated) ns.offsets_hat = rotate_for_dy(ns.offsets_hat);
  const RowMat w_hat = forward_batch(model, stack_features(ns.offsets_hat, cfg.stencil_n));
  const double inv = 1.0 / ns.d_n;
  double scale = 1.0;
  for (int k = 0; k < derivative_order(kind); ++k) scale *= inv;
  OperatorWeights out{std::vector<double>(cfg.stencil_n), kind, Provenance::NeMDO};
  for (std::size_t j = 0; j < cfg.stencil_n; ++j) out.weights[j] = w_hat(0, static_cast<Eigen::Index>(j)) * scale;
  return out;
}

/// Gradient from a Dx model (Dy by rotation); Laplacian from its own model.
class NemdoProvider final : public OperatorProvider {
 public:
  NemdoProvider(std::optional<Model> gradient, std::optional<Model> laplacian, std::string label = "nemdo")
      : gradient_(std::move(gradient)), laplacian_(std::move(laplacian)), label_(std::move(label)) {
    if (!gradient_ && !laplacian_) fail(ErrorCode::InvalidArgument, "NeMDO provider needs at least one model");
    if (gradient_ && gradient_->config.kind != OperatorKind::Dx)
      fail(ErrorCode::InvalidArgument, "gradient model must be trained for dx");
    if (laplacian_ && laplacian_->config.kind != OperatorKind::Laplacian)
      fail(ErrorCode::InvalidArgument, "laplacian model must be trained for laplacian");
  }

  std::string name() const override { return label_; }

  bool supports(OperatorKind kind) const override {
    switch (kind) {
      case OperatorKind::Dx:
      case OperatorKind::Dy: return gradient_.has_value();
      case OperatorKind::Laplacian: return laplacian_.has_value();
      case OperatorKind::Hyperviscous: return false;
    }
    return false;
  }

  StencilPolicy stencil_policy(OperatorKind kind) const override { return StencilPolicy::knn(model_for(kind).config.stencil_n); }

  OperatorWeights weights(const Stencil& s, OperatorKind kind, double) const override {
    return infer_weights(model_for(kind), s, kind);
  }

  const Model& model_for(OperatorKind kind) const {
    require_kind(kind);
    return kind == OperatorKind::Laplacian ? *laplacian_ : *gradient_;
  }

 private:
  std::optional<Model> gradient_;
  std::optional<Model> laplacian_;
  std::string label_;
};

}  // namespace meshfree::nemdo
