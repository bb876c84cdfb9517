#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "meshfree/labfm.hpp"
#include "meshfree/taylor.hpp"

using namespace meshfree;

namespace {

double fact(int n) { return n <= 1 ? 1.0 : n * fact(n - 1); }

// Graded order built independently: degree d = 1..p, x-power from d down to 0.
std::vector<double> expand(Vec2 d, int p) {
  std::vector<double> out;
  for (int deg = 1; deg <= p; ++deg)
    for (int a = deg; a >= 0; --a) {
      const int b = deg - a;
      out.push_back(std::pow(d.x, a) * std::pow(d.y, b) / (fact(a) * fact(b)));
    }
  return out;
}

}  // namespace

TEST(MonomialBasis, SizeFormula) {
  for (int p = 1; p <= 6; ++p) {
    EXPECT_EQ(MonomialBasis(p).size(), static_cast<std::size_t>((p * p + 3 * p) / 2));
    EXPECT_EQ(basis_size(p), static_cast<std::size_t>((p * p + 3 * p) / 2));
  }
  EXPECT_EQ(basis_size(2), 5u);
  EXPECT_EQ(basis_size(3), 9u);
  EXPECT_EQ(basis_size(4), 14u);
}

TEST(MonomialVector, HandValue) {
  const auto v = monomial_vector({1.0, 2.0}, 2);
  const std::vector<double> expected{1.0, 2.0, 0.5, 2.0, 2.0};
  ASSERT_EQ(v.size(), expected.size());
  for (std::size_t k = 0; k < v.size(); ++k) EXPECT_DOUBLE_EQ(v[k], expected[k]);
}

TEST(MonomialVector, ZeroOffset) {
  for (double x : monomial_vector({0.0, 0.0}, 4)) EXPECT_EQ(x, 0.0);
}

TEST(MonomialVector, FactorialOracle) {
  const Vec2 d{0.3, -0.7};
  const auto v = monomial_vector(d, 4);
  const auto ref = expand(d, 4);
  ASSERT_EQ(v.size(), 14u);
  for (std::size_t k = 0; k < v.size(); ++k) EXPECT_NEAR(v[k], ref[k], 1e-15);
}

TEST(TargetMoments, Dx) {
  const auto m = target_moments(OperatorKind::Dx, 2);
  EXPECT_EQ(m, (std::vector<double>{1, 0, 0, 0, 0}));
}

TEST(TargetMoments, Laplacian) {
  const auto m = target_moments(OperatorKind::Laplacian, 2);
  EXPECT_EQ(m, (std::vector<double>{0, 0, 1, 0, 1}));
}

TEST(TargetMoments, HyperviscousMatchesBiharmonic) {
  // Applying grad^4 to x^a y^b / (a! b!) at the origin gives 1 for (4,0) and
  // (0,4) and 2 for (2,2); every other term vanishes.
  const MonomialBasis basis(4);
  const auto m = target_moments(OperatorKind::Hyperviscous, 4);
  ASSERT_EQ(m.size(), 14u);
  for (std::size_t q = 0; q < m.size(); ++q) {
    const auto [a, b] = basis.terms()[q];
    double expected = 0.0;
    if ((a == 4 && b == 0) || (a == 0 && b == 4)) expected = 1.0;
    if (a == 2 && b == 2) expected = 2.0;
    EXPECT_EQ(m[q], expected) << "term " << q;
  }
}

TEST(TargetMoments, IncompatibleOrder) {
  EXPECT_THROW(target_moments(OperatorKind::Laplacian, 1), Error);
  EXPECT_THROW(target_moments(OperatorKind::Hyperviscous, 3), Error);
}

TEST(MomentResidual, ZeroWeights) {
  const std::vector<Vec2> off{{1, 0}, {0, 1}, {-1, 0}};
  const std::vector<double> w(3, 0.0);
  const auto r = moment_residual(off, w, OperatorKind::Dx, 2, 1.0);
  EXPECT_EQ(r, (std::vector<double>{-1, 0, 0, 0, 0}));
}

TEST(MomentResidual, RejectsBadScale) {
  const std::vector<Vec2> off{{1, 0}};
  const std::vector<double> w{1.0};
  EXPECT_THROW(moment_residual(off, w, OperatorKind::Dx, 2, 0.0), Error);
}

TEST(MomentResidual, LabfmWeightsAreExact) {
  const auto cloud = generate_perturbed_grid(12, 12, 0.1, 1.0, 4);
  const auto st = knn_stencil(cloud, 70, 12);
  LabfmConfig cfg;
  const auto w = labfm_weights(st, cfg, OperatorKind::Dx);
  const auto r = moment_residual(st.offsets, w.weights, OperatorKind::Dx, 2, st.d_n);
  for (double x : r) EXPECT_LE(std::abs(x), 1e-10);
}

TEST(MomentResidual, LinearInWeights) {
  std::mt19937_64 g(3);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<Vec2> off(9);
  std::vector<double> w1(9), w2(9), w12(9);
  for (std::size_t k = 0; k < 9; ++k) {
    off[k] = {u(g), u(g)};
    w1[k] = u(g);
    w2[k] = u(g);
    w12[k] = w1[k] + w2[k];
  }
  const auto m = target_moments(OperatorKind::Laplacian, 3);
  const auto r1 = moment_residual(off, w1, OperatorKind::Laplacian, 3, 0.8);
  const auto r2 = moment_residual(off, w2, OperatorKind::Laplacian, 3, 0.8);
  const auto r12 = moment_residual(off, w12, OperatorKind::Laplacian, 3, 0.8);
  for (std::size_t q = 0; q < m.size(); ++q) EXPECT_NEAR(r12[q] + m[q], r1[q] + r2[q] + 2 * m[q], 1e-13);
}

TEST(MomentResidual, ScaleInvariance) {
  std::mt19937_64 g(5);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<Vec2> off(8), off_c(8);
  std::vector<double> w(8), w_c(8);
  const double c = 3.7;
  for (OperatorKind kind : {OperatorKind::Dx, OperatorKind::Laplacian}) {
    const int m = derivative_order(kind);
    for (std::size_t k = 0; k < 8; ++k) {
      off[k] = {u(g), u(g)};
      w[k] = u(g);
      off_c[k] = off[k] / c;
      w_c[k] = w[k] * std::pow(c, m);
    }
    const auto a = moment_residual(off, w, kind, 2, 1.3);
    const auto b = moment_residual(off_c, w_c, kind, 2, 1.3 / c);
    for (std::size_t q = 0; q < a.size(); ++q) EXPECT_NEAR(a[q], b[q], 1e-12);
  }
}

TEST(TestFunction, ValuesAtShift) {
  const auto f = test_function(kTestFunctionShift);
  EXPECT_DOUBLE_EQ(f.value, 1.0);
  EXPECT_DOUBLE_EQ(f.dx, 1.0);
  EXPECT_DOUBLE_EQ(f.dy, 1.0);
  EXPECT_DOUBLE_EQ(f.laplacian, 4.0);
}

TEST(TestFunction, DerivativesMatchFiniteDifferences) {
  std::mt19937_64 g(42);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  const double h = 1e-6;
  auto val = [](double x, double y) { return test_function({x, y}).value; };
  for (int k = 0; k < 100; ++k) {
    const double x = u(g), y = u(g);
    const auto f = test_function({x, y});
    const double fx = (val(x + h, y) - val(x - h, y)) / (2 * h);
    const double fy = (val(x, y + h) - val(x, y - h)) / (2 * h);
    EXPECT_LE(std::abs(fx - f.dx), 1e-6 * std::max(1.0, std::abs(f.dx)));
    EXPECT_LE(std::abs(fy - f.dy), 1e-6 * std::max(1.0, std::abs(f.dy)));
    // Second differences need a larger step.
    const double H = 1e-4;
    const double lap = (val(x + H, y) + val(x - H, y) + val(x, y + H) + val(x, y - H) - 4 * val(x, y)) / (H * H);
    EXPECT_LE(std::abs(lap - f.laplacian), 1e-4 * std::max(1.0, std::abs(f.laplacian)));
  }
}
