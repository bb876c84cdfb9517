#pragma once

// Single-mode probes phi = exp(i k . x). For a gradient operator along x,
//   k_eff = sum_j w_ji [sin(k . x_ji) + i (1 - cos(k . x_ji))],
// which equals k_x for the exact derivative. For the Laplacian,
//   q2_eff = sum_j w_ji [(1 - cos(k . x_ji)) - i sin(k . x_ji)],
// to be compared with |k|^2.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "meshfree/diagnostics/provider.hpp"
#include "meshfree/diagnostics/report.hpp"

namespace meshfree {

struct ModalSample {
  double k_hat = 0.0;   ///< k_x / k_Nyquist
  double k = 0.0;       ///< reference value: k_x (gradient) or |k|^2 (Laplacian)
  double re = 0.0;      ///< mean Re of k_eff or q2_eff
  double im = 0.0;      ///< mean Im
};

struct ModalResponseReport {
  std::string provider;
  OperatorKind kind = OperatorKind::Dx;
  double ratio = 0.0;  ///< k_y / k_x
  std::size_t stencils = 0;
  std::string averaging = "arithmetic mean over stencils";
  std::vector<ModalSample> samples;
};

/// Per-stencil response of precomputed weights; `kind` selects the formula.
inline std::pair<double, double> modal_value(std::span<const Vec2> offsets, std::span<const double> w, Vec2 k,
                                             OperatorKind kind) {
  double sum_sin = 0.0, sum_cos = 0.0;
  for (std::size_t j = 0; j < offsets.size(); ++j) {
    const double phase = dot(k, offsets[j]);
    sum_sin += w[j] * std::sin(phase);
    sum_cos += w[j] * (1.0 - std::cos(phase));
  }
  if (kind == OperatorKind::Laplacian) return {sum_cos, -sum_sin};
  return {sum_sin, sum_cos};
}

/// Averages over every node of `cloud` (k_Nyquist = pi / s). Dy probes use the
/// mode rotated onto the y axis so the reference is again k along the operator.
inline ModalResponseReport modal_response(const OperatorProvider& provider, OperatorKind kind, const PointCloud& cloud,
                                          std::span<const double> k_hat, double ratio = 0.0) {
  require(kind != OperatorKind::Hyperviscous, "modal response covers gradient and Laplacian operators");
  require(ratio == 0.0 || ratio == 1.0, "direction ratio must be 0 or 1");
  for (double kh : k_hat) require(kh > 0.0 && kh <= 1.0, "k_hat must lie in (0, 1]");
  ModalResponseReport rep;
  rep.provider = provider.name();
  rep.kind = kind;
  rep.ratio = ratio;
  const double k_ny = M_PI / cloud.spacing();
  std::vector<Stencil> stencils;
  std::vector<OperatorWeights> weights;
  stencils.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    auto [s, w] = provider.compute(cloud, i, kind);
    stencils.push_back(std::move(s));
    weights.push_back(std::move(w));
  }
  rep.stencils = stencils.size();
  for (double kh : k_hat) {
    const double along = kh * k_ny, across = ratio * along;
    const Vec2 k = kind == OperatorKind::Dy ? Vec2{across, along} : Vec2{along, across};
    ModalSample smp{kh, kind == OperatorKind::Laplacian ? along * along + across * across : along, 0.0, 0.0};
    for (std::size_t i = 0; i < stencils.size(); ++i) {
      const auto [re, im] = modal_value(stencils[i].offsets, weights[i].weights, k, kind);
      smp.re += re;
      smp.im += im;
    }
    smp.re /= static_cast<double>(stencils.size());
    smp.im /= static_cast<double>(stencils.size());
    rep.samples.push_back(smp);
  }
  return rep;
}

inline CsvTable modal_csv(std::span<const ModalResponseReport> reports) {
  CsvTable t({"provider", "operator", "ratio", "k_hat", "k_ref", "re", "im", "re_over_ref"});
  for (const auto& r : reports)
    for (const auto& s : r.samples)
      t.row()
          .add(r.provider)
          .add(std::string(to_string(r.kind)))
          .add(r.ratio)
          .add(s.k_hat)
          .add(s.k)
          .add(s.re)
          .add(s.im)
          .add(s.re / s.k);
  return t;
}

}  // namespace meshfree
