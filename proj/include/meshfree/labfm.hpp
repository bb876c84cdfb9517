#pragma once

// Local anisotropic basis function weights: Hermite-polynomial ABFs windowed
// by a Wendland C2 RBF, with moments enforced through a small dense solve.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "meshfree/errors.hpp"
#include "meshfree/geometry.hpp"
#include "meshfree/kernels.hpp"
#include "meshfree/taylor.hpp"
#include "meshfree/weights.hpp"

namespace meshfree {

/// Physicists' Hermite polynomial via H_{a+1} = 2x H_a - 2a H_{a-1}.
inline double hermite(int a, double x) {
  require(a >= 0, "Hermite order must be non-negative");
  if (a == 0) return 1.0;
  double prev = 1.0, cur = 2.0 * x;
  for (int k = 1; k < a; ++k) {
    const double next = 2.0 * x * cur - 2.0 * k * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

namespace detail {

/// Unnormalized Wendland C2 window (1 - q/2)^4 (1 + 2q) on q in [0, 2].
inline double abf_window(double q) {
  if (q >= 2.0) return 0.0;
  const double t = 1.0 - 0.5 * q;
  return t * t * t * t * (1.0 + 2.0 * q);
}

inline void abf_into(Vec2 d, double h, const MonomialBasis& basis, std::span<double> out) {
  const double psi = abf_window(norm(d) / h);
  if (psi == 0.0) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const int p = basis.order();
  const double sx = d.x / (h * M_SQRT2), sy = d.y / (h * M_SQRT2);
  std::array<double, 16> hx{}, hy{}, inv_sqrt2{};
  hx[0] = hy[0] = inv_sqrt2[0] = 1.0;
  if (p >= 1) {
    hx[1] = 2.0 * sx;
    hy[1] = 2.0 * sy;
  }
  for (int k = 1; k < p; ++k) {
    hx[k + 1] = 2.0 * sx * hx[k] - 2.0 * k * hx[k - 1];
    hy[k + 1] = 2.0 * sy * hy[k] - 2.0 * k * hy[k - 1];
  }
  for (int k = 1; k <= p; ++k) inv_sqrt2[k] = inv_sqrt2[k - 1] * M_SQRT1_2;
  const auto& terms = basis.terms();
  for (std::size_t q = 0; q < terms.size(); ++q) {
    const auto [a, b] = terms[q];
    out[q] = psi * inv_sqrt2[a + b] * hx[a] * hy[b];
  }
}

}  // namespace detail

/// W_ji^q = psi(|x|/h) / sqrt(2^(a+b)) H_a(x / (h sqrt 2)) H_b(y / (h sqrt 2)),
/// with (a, b) in monomial-basis order.
inline std::vector<double> abf_vector(Vec2 offset, double h, int order_p) {
  require(h > 0.0, "ABF scale must be positive");
  MonomialBasis basis(order_p);
  std::vector<double> out(basis.size());
  detail::abf_into(offset, h, basis, out);
  return out;
}

struct LabfmConfig {
  int order_p = 2;
  KernelType psi_kernel = KernelType::WendlandC2;
  double h_over_dn = 0.5;          ///< h_i = h_over_dn * d_n
  double condition_limit = 1e12;   ///< 1-norm condition estimate of A_i
  double residual_limit = 1e-8;    ///< post-solve moment residual, normalized

  void validate() const {
    require(order_p >= 1, "LABFM order must be >= 1");
    require(psi_kernel == KernelType::WendlandC2, "LABFM windows use the Wendland C2 RBF");
    require(h_over_dn > 0.0, "h_over_dn must be positive");
    require(condition_limit > 1.0, "condition_limit must exceed 1");
  }
};

/// Normalized-coordinate LABFM weights (w_hat = w * d_n^m).
///
/// Assembles A = sum_j X_j (x) W_j in coordinates scaled by d_n, solves
/// A Psi = M^D with partially pivoted LU plus one refinement step, and
/// returns w_hat_j = W_j . Psi.
inline std::vector<double> labfm_normalized_weights(std::span<const Vec2> offsets_hat, const LabfmConfig& cfg,
                                                    OperatorKind kind) {
  cfg.validate();
  const MonomialBasis basis(cfg.order_p);
  const std::size_t nb = basis.size();
  require(offsets_hat.size() >= nb, "LABFM stencil smaller than basis (" + std::to_string(offsets_hat.size()) +
                                        " < " + std::to_string(nb) + ")");
  const std::vector<double> target = target_moments(kind, cfg.order_p);

  const std::size_t n = offsets_hat.size();
  Eigen::MatrixXd X(nb, n), W(nb, n);
  for (std::size_t j = 0; j < n; ++j) {
    basis.evaluate(offsets_hat[j], std::span<double>(X.col(static_cast<Eigen::Index>(j)).data(), nb));
    detail::abf_into(offsets_hat[j], cfg.h_over_dn, basis,
                     std::span<double>(W.col(static_cast<Eigen::Index>(j)).data(), nb));
  }
  const Eigen::MatrixXd A = X * W.transpose();
  const Eigen::Map<const Eigen::VectorXd> M(target.data(), static_cast<Eigen::Index>(nb));

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  // The estimate ignores exactly zero pivots (e.g. collinear stencils), so
  // those are checked directly.
  const Eigen::VectorXd pivots = lu.matrixLU().diagonal().cwiseAbs();
  if (!(pivots.minCoeff() > 1e-14 * pivots.maxCoeff()))
    fail(ErrorCode::IllConditionedStencil, "LABFM system is singular");
  const double rcond = lu.rcond();
  if (!(rcond > 0.0) || 1.0 / rcond > cfg.condition_limit)
    fail(ErrorCode::IllConditionedStencil, "LABFM condition estimate " + std::to_string(1.0 / rcond));
  Eigen::VectorXd psi = lu.solve(M);
  psi += lu.solve(M - A * psi);

  const Eigen::VectorXd w = W.transpose() * psi;
  const double residual = (X * w - M).lpNorm<Eigen::Infinity>();
  if (!(residual <= cfg.residual_limit))
    fail(ErrorCode::SolveFailure, "LABFM moment residual " + std::to_string(residual));
  return {w.data(), w.data() + w.size()};
}

/// Physical LABFM weights for one stencil.
inline OperatorWeights labfm_weights(const Stencil& stencil, const LabfmConfig& cfg, OperatorKind kind) {
  const NormalizedStencil ns = normalize(stencil);
  std::vector<double> w = labfm_normalized_weights(ns.offsets_hat, cfg, kind);
  double inv = 1.0;
  for (int k = 0; k < derivative_order(kind); ++k) inv *= ns.d_n;
  for (double& v : w) v /= inv;
  return {std::move(w), kind, Provenance::LABFM};
}

}  // namespace meshfree
