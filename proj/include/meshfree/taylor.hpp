#pragma once

// Taylor-monomial basis, target moment vectors, moment residuals and the
// analytic test function used by the convergence diagnostics.

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "meshfree/errors.hpp"
#include "meshfree/geometry.hpp"

namespace meshfree {

enum class OperatorKind { Dx, Dy, Laplacian, Hyperviscous };

/// Order m of the differential operator; weights carry units length^-m.
constexpr int derivative_order(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::Dx:
    case OperatorKind::Dy:
      return 1;
    case OperatorKind::Laplacian:
      return 2;
    case OperatorKind::Hyperviscous:
      return 4;
  }
  return 0;
}

/// Smallest truncation order for which the target moments fit in the basis.
constexpr int minimum_order(OperatorKind kind) { return derivative_order(kind); }

inline std::string_view to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::Dx: return "dx";
    case OperatorKind::Dy: return "dy";
    case OperatorKind::Laplacian: return "laplacian";
    case OperatorKind::Hyperviscous: return "hyperviscous";
  }
  return "?";
}

inline OperatorKind parse_operator_kind(std::string_view name) {
  if (name == "dx" || name == "x") return OperatorKind::Dx;
  if (name == "dy" || name == "y") return OperatorKind::Dy;
  if (name == "laplacian" || name == "lap") return OperatorKind::Laplacian;
  if (name == "hyperviscous" || name == "hyp") return OperatorKind::Hyperviscous;
  fail(ErrorCode::InvalidArgument, "unknown operator '" + std::string(name) + "'");
}

constexpr std::size_t basis_size(int order_p) {
  return static_cast<std::size_t>((order_p * order_p + 3 * order_p) / 2);
}

struct Exponent {
  int a = 0;  // power of x
  int b = 0;  // power of y
  friend bool operator==(Exponent, Exponent) = default;
};

/// Graded ordering x, y, x^2/2, xy, y^2/2, x^3/6, ... (within a degree, x
/// powers descend). Each term carries the factor 1/(a! b!).
class MonomialBasis {
 public:
  explicit MonomialBasis(int order_p) : order_(order_p) {
    require(order_p >= 1, "truncation order must be >= 1");
    for (int k = 1; k <= order_p; ++k)
      for (int a = k; a >= 0; --a) terms_.push_back({a, k - a});
    coefficients_.reserve(terms_.size());
    for (const auto& t : terms_) coefficients_.push_back(1.0 / (factorial(t.a) * factorial(t.b)));
  }

  int order() const { return order_; }
  std::size_t size() const { return terms_.size(); }
  const std::vector<Exponent>& terms() const { return terms_; }
  double coefficient(std::size_t q) const { return coefficients_[q]; }

  std::size_t index_of(int a, int b) const {
    const int k = a + b;
    require(a >= 0 && b >= 0 && k >= 1 && k <= order_, "monomial outside basis");
    return basis_size(k - 1) + static_cast<std::size_t>(k - a);
  }

  /// Writes x^a y^b / (a! b!) for every term into out (length size()).
  void evaluate(Vec2 d, std::span<double> out) const {
    // px[a] = x^a / a!, py[b] = y^b / b!
    std::array<double, 16> px{}, py{};
    require(order_ < 16, "truncation order too large");
    px[0] = py[0] = 1.0;
    for (int k = 1; k <= order_; ++k) {
      px[k] = px[k - 1] * d.x / k;
      py[k] = py[k - 1] * d.y / k;
    }
    for (std::size_t q = 0; q < terms_.size(); ++q) out[q] = px[terms_[q].a] * py[terms_[q].b];
  }

  static double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
  }

 private:
  int order_;
  std::vector<Exponent> terms_;
  std::vector<double> coefficients_;
};

inline std::vector<double> monomial_vector(Vec2 offset, int order_p) {
  MonomialBasis basis(order_p);
  std::vector<double> out(basis.size());
  basis.evaluate(offset, out);
  return out;
}

/// M^D: the action of D on each basis monomial at the origin.
inline std::vector<double> target_moments(OperatorKind kind, int order_p) {
  if (order_p < minimum_order(kind))
    fail(ErrorCode::InvalidArgument, "order " + std::to_string(order_p) + " too low for " +
                                         std::string(to_string(kind)));
  MonomialBasis basis(order_p);
  std::vector<double> m(basis.size(), 0.0);
  switch (kind) {
    case OperatorKind::Dx: m[basis.index_of(1, 0)] = 1.0; break;
    case OperatorKind::Dy: m[basis.index_of(0, 1)] = 1.0; break;
    case OperatorKind::Laplacian:
      m[basis.index_of(2, 0)] = 1.0;
      m[basis.index_of(0, 2)] = 1.0;
      break;
    case OperatorKind::Hyperviscous:
      // Biharmonic: d4/dx4 + 2 d4/dx2dy2 + d4/dy4.
      m[basis.index_of(4, 0)] = 1.0;
      m[basis.index_of(2, 2)] = 2.0;
      m[basis.index_of(0, 4)] = 1.0;
      break;
  }
  return m;
}

/// Sum_j X(x_j/scale) * (w_j * scale^m) - M^D, per basis component.
inline std::vector<double> moment_residual(std::span<const Vec2> offsets, std::span<const double> weights,
                                           OperatorKind kind, int order_p, double scale) {
  require(offsets.size() == weights.size(), "offsets and weights differ in length");
  require(scale > 0.0 && std::isfinite(scale), "scale must be positive");
  MonomialBasis basis(order_p);
  std::vector<double> r = target_moments(kind, order_p);
  for (double& v : r) v = -v;
  const int m = derivative_order(kind);
  double wscale = 1.0;
  for (int k = 0; k < m; ++k) wscale *= scale;
  std::vector<double> x(basis.size());
  for (std::size_t j = 0; j < offsets.size(); ++j) {
    basis.evaluate(offsets[j] / scale, x);
    const double w = weights[j] * wscale;
    for (std::size_t q = 0; q < x.size(); ++q) r[q] += x[q] * w;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Asymmetric polynomial test field with closed-form derivatives.

struct TestFunctionValue {
  double value;
  double dx;
  double dy;
  double laplacian;
};

inline constexpr Vec2 kTestFunctionShift{0.1453, 0.16401};

inline TestFunctionValue test_function(Vec2 p) {
  const double x = p.x - kTestFunctionShift.x;
  const double y = p.y - kTestFunctionShift.y;
  const double x2 = x * x, y2 = y * y;
  const double x3 = x2 * x, y3 = y2 * y;
  const double x4 = x2 * x2, y4 = y2 * y2;
  TestFunctionValue f{};
  f.value = 1.0 + x4 * y4;
  f.dx = 4.0 * x3 * y4;
  f.dy = 4.0 * x4 * y3;
  f.laplacian = 12.0 * x2 * y4 + 12.0 * x4 * y2;
  double xp = 1.0, yp = 1.0;        // x^(n-1), y^(n-1)
  double xpp = 0.0, ypp = 0.0;      // x^(n-2), y^(n-2)
  for (int n = 1; n <= 6; ++n) {
    f.value += xp * x + yp * y;
    f.dx += n * xp;
    f.dy += n * yp;
    if (n >= 2) f.laplacian += n * (n - 1) * (xpp + ypp);
    xpp = xp;
    ypp = yp;
    xp *= x;
    yp *= y;
  }
  return f;
}

}  // namespace meshfree
