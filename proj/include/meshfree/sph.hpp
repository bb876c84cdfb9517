#pragma once

// Anti-symmetric SPH gradient and Morris Laplacian weights.

#include <cmath>
#include <utility>

#include "meshfree/errors.hpp"
#include "meshfree/geometry.hpp"
#include "meshfree/kernels.hpp"
#include "meshfree/weights.hpp"

namespace meshfree {

struct SphConfig {
  KernelType kernel = KernelType::QuinticSpline;
  double h_over_s = 1.5;
  double spacing = 1.0;
  double volume = 0.0;  ///< particle volume V_j; 0 means s^2

  static SphConfig for_spacing(KernelType kernel, double spacing, double h_over_s = 1.5) {
    SphConfig c;
    c.kernel = kernel;
    c.h_over_s = h_over_s;
    c.spacing = spacing;
    return c;
  }

  double h() const { return h_over_s * spacing; }
  double particle_volume() const { return volume > 0.0 ? volume : spacing * spacing; }
  double support_radius() const { return kernel_support(kernel) * h(); }

  void validate() const {
    require(h_over_s > 0.0, "h_over_s must be positive");
    require(spacing > 0.0, "spacing must be positive");
    require(volume >= 0.0, "volume must be positive");
  }
};

namespace detail {

/// -dW/dr / r * V: the positive radial factor shared by both SPH operators.
inline double sph_radial_factor(const SphConfig& cfg, double r) {
  const double h = cfg.h();
  const KernelValue kv = kernel_eval(cfg.kernel, r / h, h);
  return -(kv.derivative / h) / r * cfg.particle_volume();
}

}  // namespace detail

/// w_ji = grad_i W(x_ji, h) V_j, split into x and y components.
///
/// grad_i W is taken with respect to the position of node i, which points
/// along x_ji for a monotone kernel, so sum_j x_ji w^x_ji approximates 1.
inline std::pair<OperatorWeights, OperatorWeights> sph_gradient_weights(const Stencil& stencil,
                                                                        const SphConfig& cfg) {
  cfg.validate();
  if (stencil.size() == 0) fail(ErrorCode::DegenerateGeometry, "empty SPH stencil");
  OperatorWeights wx{{}, OperatorKind::Dx, Provenance::SPH};
  OperatorWeights wy{{}, OperatorKind::Dy, Provenance::SPH};
  wx.weights.reserve(stencil.size());
  wy.weights.reserve(stencil.size());
  for (const Vec2& d : stencil.offsets) {
    const double r = norm(d);
    if (!(r > 0.0)) fail(ErrorCode::DegenerateGeometry, "zero-length SPH offset");
    const double f = detail::sph_radial_factor(cfg, r);
    wx.weights.push_back(f * d.x);
    wy.weights.push_back(f * d.y);
  }
  return {std::move(wx), std::move(wy)};
}

/// Morris Laplacian: w_ji = 2 (x_ij . grad_i W_ij) / |x_ij|^2 V_j with
/// x_ij = -x_ji, i.e. -2 dW/dr / r * V_j (non-negative).
inline OperatorWeights sph_laplacian_weights(const Stencil& stencil, const SphConfig& cfg) {
  cfg.validate();
  if (stencil.size() == 0) fail(ErrorCode::DegenerateGeometry, "empty SPH stencil");
  OperatorWeights w{{}, OperatorKind::Laplacian, Provenance::SPH};
  w.weights.reserve(stencil.size());
  for (const Vec2& d : stencil.offsets) {
    const double r = norm(d);
    if (!(r > 0.0)) fail(ErrorCode::DegenerateGeometry, "zero-length SPH offset");
    w.weights.push_back(2.0 * detail::sph_radial_factor(cfg, r));
  }
  return w;
}

}  // namespace meshfree
