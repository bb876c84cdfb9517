#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "meshfree/diagnostics/provider.hpp"
#include "meshfree/kernels.hpp"
#include "meshfree/labfm.hpp"
#include "meshfree/sph.hpp"

using namespace meshfree;

namespace {

Stencil make_stencil(std::vector<Vec2> offsets) {
  Stencil s;
  for (std::size_t k = 0; k < offsets.size(); ++k) s.neighbors.push_back(k + 1);
  double m = 0.0;
  for (const auto& o : offsets) m = std::max(m, norm(o));
  s.offsets = std::move(offsets);
  s.d_n = m;
  return s;
}

// Composite Simpson rule for 2 pi int_0^R W(r) r dr.
double radial_integral(KernelType k, double h) {
  const double R = kernel_support(k) * h;
  const int n = 20000;
  const double dr = R / n;
  double sum = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double r = i * dr;
    const double f = kernel_eval(k, r / h, h).value * r;
    sum += (i == 0 || i == n ? 1.0 : (i % 2 ? 4.0 : 2.0)) * f;
  }
  return 2.0 * M_PI * sum * dr / 3.0;
}

}  // namespace

TEST(Kernel, QuinticCenterValue) {
  const double h = 0.7;
  // Normalized-argument form: sigma' [(1-q/3)^5 - 6 (2/3-q/3)^5 + 15 (1/3-q/3)^5], sigma' = 3^5 sigma.
  const double sigma_prime = 243.0 * 7.0 / (478.0 * M_PI * h * h);
  const double bracket = 1.0 - 6.0 * std::pow(2.0 / 3.0, 5) + 15.0 * std::pow(1.0 / 3.0, 5);
  EXPECT_NEAR(bracket, 22.0 / 81.0, 1e-15);
  EXPECT_NEAR(kernel_eval(KernelType::QuinticSpline, 0.0, h).value, sigma_prime * bracket, 1e-13);
}

TEST(Kernel, SupportEdges) {
  EXPECT_EQ(kernel_eval(KernelType::QuinticSpline, 3.0, 1.0).value, 0.0);
  EXPECT_EQ(kernel_eval(KernelType::WendlandC2, 2.0, 1.0).value, 0.0);
  EXPECT_EQ(kernel_eval(KernelType::QuinticSpline, 4.0, 1.0).derivative, 0.0);
}

TEST(Kernel, UnitIntegral) {
  for (KernelType k : {KernelType::QuinticSpline, KernelType::WendlandC2})
    for (double h : {1.0, 0.03})
      EXPECT_NEAR(radial_integral(k, h), 1.0, 1e-6) << to_string(k) << " h=" << h;
}

TEST(Kernel, DerivativeMatchesFiniteDifference) {
  const double d = 1e-6;
  for (KernelType k : {KernelType::QuinticSpline, KernelType::WendlandC2})
    for (double q : {0.2, 0.7, 1.3, 1.9, 2.5}) {
      if (q >= kernel_support(k)) continue;
      const double fd = (kernel_eval(k, q + d, 1.0).value - kernel_eval(k, q - d, 1.0).value) / (2 * d);
      EXPECT_NEAR(kernel_eval(k, q, 1.0).derivative, fd, 1e-7);
    }
}

TEST(Kernel, NegativeDistance) {
  try {
    kernel_eval(KernelType::WendlandC2, -0.1, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
  }
}

TEST(SphGradient, SymmetricCrossSumsToZero) {
  const auto st = make_stencil({{1, 0}, {-1, 0}, {0, 1}, {0, -1}});
  const auto [wx, wy] = sph_gradient_weights(st, SphConfig::for_spacing(KernelType::QuinticSpline, 1.0));
  double sx = 0.0, sy = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    sx += wx.weights[k];
    sy += wy.weights[k];
  }
  EXPECT_NEAR(sx, 0.0, 1e-15);
  EXPECT_NEAR(sy, 0.0, 1e-15);
}

TEST(SphGradient, MirrorAndRotation) {
  std::mt19937_64 g(1);
  std::uniform_real_distribution<double> u(-2, 2);
  std::vector<Vec2> off, mirrored, rotated;
  for (int k = 0; k < 15; ++k) {
    const Vec2 d{u(g), u(g)};
    off.push_back(d);
    mirrored.push_back({-d.x, d.y});
    rotated.push_back({-d.y, d.x});
  }
  for (KernelType kern : {KernelType::QuinticSpline, KernelType::WendlandC2}) {
    const SphConfig cfg = SphConfig::for_spacing(kern, 1.0);
    const auto [wx, wy] = sph_gradient_weights(make_stencil(off), cfg);
    const auto [mx, my] = sph_gradient_weights(make_stencil(mirrored), cfg);
    const auto [rx, ry] = sph_gradient_weights(make_stencil(rotated), cfg);
    for (std::size_t k = 0; k < off.size(); ++k) {
      EXPECT_EQ(mx.weights[k], -wx.weights[k]);
      EXPECT_EQ(my.weights[k], wy.weights[k]);
      // Rotation swaps the order of x^2 + y^2, which fused multiply-adds may round differently.
      EXPECT_NEAR(rx.weights[k], -wy.weights[k], 1e-14 * std::abs(wy.weights[k]));
      EXPECT_NEAR(ry.weights[k], wx.weights[k], 1e-14 * std::abs(wx.weights[k]));
    }
  }
}

TEST(SphGradient, RecoversLinearSlopeOnUniformGrid) {
  const double s = 0.02;
  const auto cloud = generate_perturbed_grid(50, 50, s, 0.0, 1, {0.0, 0.0}, false);
  const SphProvider sph(KernelType::QuinticSpline);
  std::vector<double> phi(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) phi[i] = cloud.point(i).x;
  const double margin = sph.stencil_policy(OperatorKind::Dx).reach(s);
  std::size_t checked = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.boundary_distance(i) < margin) continue;
    const auto [st, w] = sph.compute(cloud, i, OperatorKind::Dx);
    EXPECT_NEAR(apply(st, w, phi), 1.0, 1e-3);
    ++checked;
  }
  EXPECT_GT(checked, 500u);
}

TEST(SphGradient, EmptyStencil) {
  EXPECT_THROW(sph_gradient_weights(Stencil{}, SphConfig::for_spacing(KernelType::WendlandC2, 1.0)), Error);
}

TEST(MorrisLaplacian, NonNegativeOnDisorderedClouds) {
  const auto cloud = generate_perturbed_grid(32, 32, 1.0 / 32, 1.0, 2);
  for (KernelType k : {KernelType::QuinticSpline, KernelType::WendlandC2}) {
    const SphProvider sph(k);
    for (std::size_t i = 0; i < cloud.size(); ++i)
      for (double w : sph.compute(cloud, i, OperatorKind::Laplacian).second.weights) ASSERT_GE(w, 0.0);
  }
}

TEST(MorrisLaplacian, ConstantAndLinearFields) {
  const auto cloud = generate_perturbed_grid(16, 16, 1.0, 0.0, 1);
  const SphProvider sph(KernelType::WendlandC2);
  std::vector<double> c(cloud.size(), 3.5), lin(cloud.size());
  const auto [st, w] = sph.compute(cloud, 8 * 16 + 8, OperatorKind::Laplacian);
  for (std::size_t k = 0; k < st.size(); ++k) lin[st.neighbors[k]] = 0.3 * st.offsets[k].x - 1.1 * st.offsets[k].y;
  EXPECT_EQ(apply(st, w, c), 0.0);
  EXPECT_NEAR(apply(st, w, lin), 0.0, 1e-12);
}

TEST(MorrisLaplacian, QuadraticOnUniformGrid) {
  const double s = 0.02;
  const auto cloud = generate_perturbed_grid(50, 50, s, 0.0, 1, {0.0, 0.0}, false);
  std::vector<double> phi(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) phi[i] = norm2(cloud.point(i));
  for (KernelType k : {KernelType::QuinticSpline, KernelType::WendlandC2}) {
    const SphProvider sph(k);
    const double margin = sph.stencil_policy(OperatorKind::Laplacian).reach(s);
    for (std::size_t i = 0; i < cloud.size(); i += 7) {
      if (cloud.boundary_distance(i) < margin) continue;
      const auto [st, w] = sph.compute(cloud, i, OperatorKind::Laplacian);
      EXPECT_NEAR(apply(st, w, phi), 4.0, 0.2) << to_string(k);
    }
  }
}

TEST(Hermite, LowOrders) {
  EXPECT_EQ(hermite(0, 0.3), 1.0);
  EXPECT_EQ(hermite(1, 2.0), 4.0);
  EXPECT_EQ(hermite(2, 1.0), 2.0);
}

TEST(Hermite, ExplicitFifthOrder) {
  const double x = 0.7;
  EXPECT_NEAR(hermite(5, x), 32 * std::pow(x, 5) - 160 * std::pow(x, 3) + 120 * x, 1e-12);
}

TEST(AbfVector, BeyondSupportIsZero) {
  for (double v : abf_vector({3.0, 0.0}, 1.0, 3)) EXPECT_EQ(v, 0.0);
}

TEST(AbfVector, FirstEntryHandExpansion) {
  const Vec2 d{0.3, -0.4};
  const double h = 0.5;
  const double r = norm(d) / h, t = 1.0 - 0.5 * r;
  const double psi = t * t * t * t * (1.0 + 2.0 * r);
  const auto v = abf_vector(d, h, 2);
  EXPECT_NEAR(v[0], psi * d.x / h, 1e-14);
  EXPECT_NEAR(v[1], psi * d.y / h, 1e-14);
}

TEST(AbfVector, Lengths) {
  EXPECT_EQ(abf_vector({0.1, 0.1}, 1.0, 2).size(), 5u);
  EXPECT_EQ(abf_vector({0.1, 0.1}, 1.0, 4).size(), 14u);
}

TEST(Labfm, ExactMomentsOnDisorderedStencils) {
  const auto cloud = generate_perturbed_grid(20, 20, 0.05, 1.0, 9);
  for (int p : {2, 3, 4}) {
    const LabfmProvider lab(p);
    for (OperatorKind k : {OperatorKind::Dx, OperatorKind::Dy, OperatorKind::Laplacian, OperatorKind::Hyperviscous}) {
      if (!lab.supports(k)) continue;
      for (std::size_t i = 0; i < cloud.size(); i += 13) {
        const auto [st, w] = lab.compute(cloud, i, k);
        const auto r = moment_residual(st.offsets, w.weights, k, p, st.d_n);
        for (double x : r) ASSERT_LE(std::abs(x), 1e-8) << "p=" << p << " " << to_string(k);
      }
    }
  }
}

TEST(Labfm, ReproducesPolynomialDerivatives) {
  // Physical-coordinate check: apply weights to x^a y^b and compare with the
  // analytic derivative at the center.
  const auto cloud = generate_perturbed_grid(16, 16, 0.1, 1.0, 6);
  const LabfmProvider lab(3);
  const std::size_t i = 100;
  const Vec2 c = cloud.point(i);
  const auto [st, w] = lab.compute(cloud, i, OperatorKind::Dx);
  for (int a = 0; a <= 3; ++a)
    for (int b = 0; a + b <= 3; ++b) {
      std::vector<double> f(cloud.size(), 0.0);
      for (std::size_t k = 0; k < st.size(); ++k) {
        const Vec2 x = c + st.offsets[k];
        f[st.neighbors[k]] = std::pow(x.x, a) * std::pow(x.y, b);
      }
      f[i] = std::pow(c.x, a) * std::pow(c.y, b);
      const double exact = a == 0 ? 0.0 : a * std::pow(c.x, a - 1) * std::pow(c.y, b);
      EXPECT_NEAR(apply(st, w, f), exact, 1e-7) << a << "," << b;
    }
}

TEST(Labfm, CollinearStencilIsRejected) {
  std::vector<Vec2> line;
  for (int k = 1; k <= 8; ++k) line.push_back({0.1 * k * (k % 2 ? 1 : -1), 0.0});
  try {
    labfm_weights(make_stencil(line), LabfmConfig{}, OperatorKind::Dx);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_TRUE(e.code() == ErrorCode::IllConditionedStencil || e.code() == ErrorCode::SolveFailure);
  }
}

TEST(Labfm, TooFewNeighbors) {
  const auto st = make_stencil({{1, 0}, {0, 1}, {-1, 0}});
  EXPECT_THROW(labfm_weights(st, LabfmConfig{}, OperatorKind::Dx), Error);
}

TEST(Labfm, IncompatibleKind) {
  const auto cloud = generate_perturbed_grid(10, 10, 1.0, 0.5, 1);
  const LabfmProvider lab(2);
  try {
    lab.compute(cloud, 5, OperatorKind::Hyperviscous);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
  }
}

TEST(Providers, ConstantFieldAnnihilated) {
  const auto cloud = generate_perturbed_grid(16, 16, 1.0 / 16, 1.0, 4);
  const std::vector<double> c(cloud.size(), -2.25);
  const SphProvider q(KernelType::QuinticSpline), w(KernelType::WendlandC2);
  const LabfmProvider l2(2), l4(4);
  for (const OperatorProvider* p : std::initializer_list<const OperatorProvider*>{&q, &w, &l2, &l4})
    for (OperatorKind k : {OperatorKind::Dx, OperatorKind::Dy, OperatorKind::Laplacian})
      for (std::size_t i = 0; i < cloud.size(); i += 31) {
        const auto [st, wt] = p->compute(cloud, i, k);
        EXPECT_EQ(apply(st, wt, c), 0.0);
      }
}
