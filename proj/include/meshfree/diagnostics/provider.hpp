#pragma once

// Uniform interface over SPH, LABFM and learned weight constructors, plus a
// CSR operator that applies a provider's weights to whole fields.

#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "meshfree/errors.hpp"
#include "meshfree/geometry.hpp"
#include "meshfree/labfm.hpp"
#include "meshfree/sph.hpp"
#include "meshfree/taylor.hpp"
#include "meshfree/weights.hpp"

namespace meshfree {

/// How a provider selects its neighbors: the n nearest, or all within r = radius_over_s * s.
struct StencilPolicy {
  enum class Type { Knn, Radius };
  Type type = Type::Knn;
  std::size_t n = 0;
  double radius_over_s = 0.0;

  static StencilPolicy knn(std::size_t n) { return {Type::Knn, n, 0.0}; }
  static StencilPolicy radius(double r_over_s) { return {Type::Radius, 0, r_over_s}; }

  Stencil build(const PointCloud& cloud, std::size_t i) const {
    return type == Type::Knn ? knn_stencil(cloud, i, n) : radius_stencil(cloud, i, radius_over_s * cloud.spacing());
  }

  /// Conservative stencil radius used to keep diagnostics clear of boundaries.
  double reach(double spacing, double epsilon = 1.0) const {
    if (type == Type::Radius) return radius_over_s * spacing;
    return spacing * (std::sqrt(static_cast<double>(n) / M_PI) + 0.5 + std::max(1.0, epsilon));
  }
};

class OperatorProvider {
 public:
  virtual ~OperatorProvider() = default;

  virtual std::string name() const = 0;
  virtual bool supports(OperatorKind kind) const = 0;
  virtual StencilPolicy stencil_policy(OperatorKind kind) const = 0;

  /// Weights aligned with `stencil`, which must come from stencil_policy(kind).
  virtual OperatorWeights weights(const Stencil& stencil, OperatorKind kind, double spacing) const = 0;

  Stencil stencil(const PointCloud& cloud, std::size_t i, OperatorKind kind) const {
    return stencil_policy(kind).build(cloud, i);
  }

  std::pair<Stencil, OperatorWeights> compute(const PointCloud& cloud, std::size_t i, OperatorKind kind) const {
    require_kind(kind);
    Stencil s = stencil(cloud, i, kind);
    OperatorWeights w = weights(s, kind, cloud.spacing());
    return {std::move(s), std::move(w)};
  }

 protected:
  void require_kind(OperatorKind kind) const {
    if (!supports(kind))
      fail(ErrorCode::InvalidArgument, name() + " does not provide " + std::string(to_string(kind)));
  }
};

class SphProvider final : public OperatorProvider {
 public:
  explicit SphProvider(KernelType kernel, double h_over_s = 1.5) : kernel_(kernel), h_over_s_(h_over_s) {}

  std::string name() const override {
    return kernel_ == KernelType::QuinticSpline ? "sph-quintic" : "sph-wendland";
  }
  bool supports(OperatorKind kind) const override { return kind != OperatorKind::Hyperviscous; }
  StencilPolicy stencil_policy(OperatorKind) const override {
    return StencilPolicy::radius(kernel_support(kernel_) * h_over_s_);
  }
  OperatorWeights weights(const Stencil& s, OperatorKind kind, double spacing) const override {
    require_kind(kind);
    const SphConfig cfg = SphConfig::for_spacing(kernel_, spacing, h_over_s_);
    if (kind == OperatorKind::Laplacian) return sph_laplacian_weights(s, cfg);
    auto [wx, wy] = sph_gradient_weights(s, cfg);
    return kind == OperatorKind::Dx ? std::move(wx) : std::move(wy);
  }

  KernelType kernel() const { return kernel_; }

 private:
  KernelType kernel_;
  double h_over_s_;
};

/// Default k-nearest stencil size for a LABFM truncation order.
inline std::size_t default_labfm_stencil(int order_p) {
  switch (order_p) {
    case 1: return 8;
    case 2: return 16;
    case 3: return 28;
    case 4: return 40;
    default: return 3 * basis_size(order_p);
  }
}

class LabfmProvider final : public OperatorProvider {
 public:
  explicit LabfmProvider(LabfmConfig cfg, std::size_t stencil_n = 0)
      : cfg_(cfg), stencil_n_(stencil_n ? stencil_n : default_labfm_stencil(cfg.order_p)) {
    cfg_.validate();
  }
  explicit LabfmProvider(int order_p, std::size_t stencil_n = 0)
      : LabfmProvider(LabfmConfig{.order_p = order_p}, stencil_n) {}

  std::string name() const override { return "labfm-p" + std::to_string(cfg_.order_p); }
  bool supports(OperatorKind kind) const override { return cfg_.order_p >= minimum_order(kind); }
  StencilPolicy stencil_policy(OperatorKind) const override { return StencilPolicy::knn(stencil_n_); }
  OperatorWeights weights(const Stencil& s, OperatorKind kind, double) const override {
    require_kind(kind);
    return labfm_weights(s, cfg_, kind);
  }

  const LabfmConfig& config() const { return cfg_; }
  std::size_t stencil_n() const { return stencil_n_; }

 private:
  LabfmConfig cfg_;
  std::size_t stencil_n_;
};

/// Row-compressed discrete operator: (L phi)_i = sum_j w_ij (phi_j - phi_i).
struct SparseOperator {
  std::vector<std::size_t> row_start{0};
  std::vector<std::size_t> cols;
  std::vector<double> values;
  OperatorKind kind = OperatorKind::Dx;

  std::size_t rows() const { return row_start.size() - 1; }

  void append_row(const Stencil& s, std::span<const double> w) {
    cols.insert(cols.end(), s.neighbors.begin(), s.neighbors.end());
    values.insert(values.end(), w.begin(), w.end());
    row_start.push_back(cols.size());
  }

  void apply(std::span<const double> field, std::span<double> out) const {
    const std::size_t n = rows();
    for (std::size_t i = 0; i < n; ++i) {
      const double phi_i = field[i];
      double acc = 0.0;
      for (std::size_t k = row_start[i]; k < row_start[i + 1]; ++k) acc += (field[cols[k]] - phi_i) * values[k];
      out[i] = acc;
    }
  }

  std::vector<double> apply(std::span<const double> field) const {
    std::vector<double> out(rows());
    apply(field, out);
    return out;
  }
};

/// Builds the operator row by row over every node; failures carry the node id.
inline SparseOperator build_operator(const OperatorProvider& provider, const PointCloud& cloud, OperatorKind kind) {
  SparseOperator op;
  op.kind = kind;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    try {
      auto [s, w] = provider.compute(cloud, i, kind);
      op.append_row(s, w.weights);
    } catch (const Error& e) {
      throw Error(e.code(), provider.name() + " failed at node " + std::to_string(i) + ": " + e.what());
    }
  }
  return op;
}

}  // namespace meshfree
