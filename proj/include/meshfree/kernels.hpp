#pragma once

#include <cmath>
#include <string_view>

#include "meshfree/errors.hpp"

namespace meshfree {

enum class KernelType { QuinticSpline, WendlandC2 };

inline std::string_view to_string(KernelType k) {
  return k == KernelType::QuinticSpline ? "quintic" : "wendland";
}

/// Support radius in units of h.
constexpr double kernel_support(KernelType k) { return k == KernelType::QuinticSpline ? 3.0 : 2.0; }

struct KernelValue {
  double value;       ///< W(q), units length^-2
  double derivative;  ///< dW/dq; divide by h for the derivative per unit length
};

/// 2D smoothing kernels normalized to unit integral.
///
///   quintic:  sigma [ (3-q)^5_+ - 6 (2-q)^5_+ + 15 (1-q)^5_+ ],  sigma = 7 / (478 pi h^2)
///   wendland: sigma (1 - q/2)^4 (1 + 2q) on q in [0, 2],          sigma = 7 / (4 pi h^2)
inline KernelValue kernel_eval(KernelType kernel, double q, double h) {
  if (!(q >= 0.0)) fail(ErrorCode::InvalidArgument, "kernel distance must be non-negative");
  require(h > 0.0, "smoothing length must be positive");
  const double h2 = h * h;
  if (kernel == KernelType::QuinticSpline) {
    if (q >= 3.0) return {0.0, 0.0};
    const double sigma = 7.0 / (478.0 * M_PI * h2);
    auto p5 = [](double t) { return t > 0.0 ? t * t * t * t * t : 0.0; };
    auto p4 = [](double t) { return t > 0.0 ? t * t * t * t : 0.0; };
    const double a = 3.0 - q, b = 2.0 - q, c = 1.0 - q;
    return {sigma * (p5(a) - 6.0 * p5(b) + 15.0 * p5(c)),
            sigma * (-5.0 * p4(a) + 30.0 * p4(b) - 75.0 * p4(c))};
  }
  if (q >= 2.0) return {0.0, 0.0};
  const double sigma = 7.0 / (4.0 * M_PI * h2);
  const double t = 1.0 - 0.5 * q;
  const double t3 = t * t * t;
  return {sigma * t3 * t * (1.0 + 2.0 * q), sigma * (-5.0 * q) * t3};
}

}  // namespace meshfree
