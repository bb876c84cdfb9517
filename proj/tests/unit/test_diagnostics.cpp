#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

#include "meshfree/diagnostics/convergence.hpp"
#include "meshfree/diagnostics/dump.hpp"
#include "meshfree/diagnostics/modal.hpp"
#include "meshfree/diagnostics/moments.hpp"
#include "meshfree/diagnostics/spectrum.hpp"
#include "meshfree/diagnostics/timing.hpp"

using namespace meshfree;

namespace {

std::vector<std::complex<double>> sorted(std::vector<std::complex<double>> v) {
  std::sort(v.begin(), v.end(), [](auto a, auto b) { return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag(); });
  return v;
}

}  // namespace

TEST(RelativeL2, HandCases) {
  const std::vector<double> exact{3.0, 4.0};
  EXPECT_EQ(relative_l2(exact, exact), 0.0);
  EXPECT_DOUBLE_EQ(relative_l2(std::vector<double>{0.0, 0.0}, exact), 1.0);
  EXPECT_DOUBLE_EQ(relative_l2(std::vector<double>{3.0, 5.0}, exact), 0.2);
  EXPECT_THROW(relative_l2(exact, std::vector<double>{0.0, 0.0}), Error);
  EXPECT_THROW(relative_l2(exact, std::vector<double>{1.0}), Error);
}

TEST(LogLogSlope, PowerLaw) {
  const std::vector<double> x{0.1, 0.05, 0.025, 0.0125};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * v * v);
  EXPECT_NEAR(loglog_slope(x, y), 2.0, 1e-12);
  EXPECT_THROW(loglog_slope(std::vector<double>{1.0}, std::vector<double>{1.0}), Error);
  EXPECT_THROW(loglog_slope(std::vector<double>{1.0, 1.0}, std::vector<double>{1.0, 2.0}), Error);
}

TEST(MomentTable, LabfmIsExact) {
  const LabfmProvider p(2);
  const std::vector<PointCloud> clouds{generate_perturbed_grid(12, 12, 0.1, 0.5, 1)};
  for (OperatorKind kind : {OperatorKind::Dx, OperatorKind::Dy, OperatorKind::Laplacian}) {
    const auto rep = moment_table(p, kind, clouds);
    EXPECT_EQ(rep.stencils, 144u);
    EXPECT_EQ(rep.skipped, 0u);
    ASSERT_EQ(rep.mae.size(), 5u);
    for (double m : rep.mae) EXPECT_LE(m, 1e-10);
  }
}

TEST(MomentTable, SphHasVisibleResidual) {
  const SphProvider p(KernelType::QuinticSpline);
  const std::vector<PointCloud> clouds{generate_perturbed_grid(16, 16, 1.0 / 16, 0.5, 2)};
  const auto rep = moment_table(p, OperatorKind::Dx, clouds);
  EXPECT_GT(rep.mean_mae(), 1e-4);
  const auto csv = moment_csv(std::vector<MomentReport>{rep});
  EXPECT_EQ(csv.size(), 5u);
  EXPECT_EQ(csv.rows()[2][2], "x^2/2");
  EXPECT_EQ(csv.rows()[3][2], "xy");
}

TEST(MomentTable, UnsupportedKindPropagates) {
  const SphProvider p(KernelType::QuinticSpline);
  const std::vector<PointCloud> clouds{generate_perturbed_grid(8, 8, 0.125, 0.5, 2)};
  EXPECT_THROW(moment_table(p, OperatorKind::Hyperviscous, clouds), Error);
}

TEST(Convergence, LabfmOrders) {
  ConvergenceConfig cfg;
  cfg.resolutions = {16, 32, 64};
  cfg.fit_points = 3;
  const LabfmProvider p2(2), p3(3);
  const std::vector<const OperatorProvider*> ps{&p2, &p3};
  const auto dx = convergence_study(ps, OperatorKind::Dx, cfg);
  // Gradient error scales as s^p.
  EXPECT_NEAR(dx.series[0].slope, 2.0, 0.4);
  EXPECT_NEAR(dx.series[1].slope, 3.0, 0.5);
  for (const auto& ser : dx.series)
    for (std::size_t k = 1; k < ser.error.size(); ++k) EXPECT_LT(ser.error[k], ser.error[k - 1]);
  const auto lap = convergence_study(ps, OperatorKind::Laplacian, cfg);
  EXPECT_NEAR(lap.series[1].slope, 2.0, 0.5);
  EXPECT_EQ(convergence_csv(dx).size(), 6u);
}

TEST(Convergence, NeedsThreeResolutions) {
  ConvergenceConfig cfg;
  cfg.resolutions = {16, 32};
  const LabfmProvider p(2);
  const std::vector<const OperatorProvider*> ps{&p};
  EXPECT_THROW(convergence_study(ps, OperatorKind::Dx, cfg), Error);
}

TEST(Spectrum, RowsSumToZero) {
  const LabfmProvider p(2);
  const auto cloud = generate_perturbed_grid(8, 8, 0.125, 1.0, 3);
  const Eigen::MatrixXd g = assemble_global(p, cloud, OperatorKind::Laplacian);
  for (Eigen::Index r = 0; r < g.rows(); ++r) EXPECT_NEAR(g.row(r).sum(), 0.0, 1e-9 * g.row(r).cwiseAbs().sum());
}

TEST(Spectrum, LatticeGradientIsSkew) {
  // Twelve neighbors close the third ring on a regular lattice, so the weights
  // are odd under reflection and the global operator is antisymmetric.
  const LabfmProvider p(2, 12);
  const auto cloud = generate_perturbed_grid(8, 8, 0.125, 0.0, 3);
  const Eigen::MatrixXd g = assemble_global(p, cloud, OperatorKind::Dx);
  EXPECT_LE((g + g.transpose()).cwiseAbs().maxCoeff(), 1e-9 * g.cwiseAbs().maxCoeff());
  const auto rep = spectrum_report(p, cloud, OperatorKind::Dx);
  EXPECT_EQ(rep.eigenvalues.size(), 64u);
  EXPECT_LE(rep.max_abs_real(), 1e-8);
  EXPECT_GT(rep.max_abs_imag(), 0.5);
}

TEST(Spectrum, NonPeriodicRejected) {
  const LabfmProvider p(2);
  const auto cloud = generate_perturbed_grid(8, 8, 0.125, 0.0, 3, {0.0, 0.0}, false);
  EXPECT_THROW(assemble_global(p, cloud, OperatorKind::Dx), Error);
}

TEST(EigenSpectrum, CompanionMatrixOfCubic) {
  // (x - 1)(x - 2)(x - 3) = x^3 - 6x^2 + 11x - 6.
  Eigen::MatrixXd c(3, 3);
  c << 0, 0, 6, 1, 0, -11, 0, 1, 6;
  const auto ev = sorted(eigen_spectrum(c));
  for (int k = 0; k < 3; ++k) {
    EXPECT_NEAR(ev[k].real(), k + 1.0, 1e-10);
    EXPECT_NEAR(ev[k].imag(), 0.0, 1e-10);
  }
}

TEST(EigenSpectrum, DiagonalWithNormalization) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(4, 4);
  d.diagonal() << -4, 1, 2.5, 0;
  const auto ev = sorted(eigen_spectrum(d, 0.5));
  const std::vector<double> expected{-2, 0, 0.5, 1.25};
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(ev[k].real(), expected[k], 1e-14);
}

TEST(EigenSpectrum, PermutationInvariant) {
  const SphProvider p(KernelType::WendlandC2);
  const auto cloud = generate_perturbed_grid(8, 8, 0.125, 0.5, 5);
  const Eigen::MatrixXd g = assemble_global(p, cloud, OperatorKind::Laplacian);
  std::vector<int> perm(64);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  std::rotate(perm.begin(), perm.begin() + 17, perm.end());
  Eigen::PermutationMatrix<Eigen::Dynamic> pm(64);
  for (int k = 0; k < 64; ++k) pm.indices()[k] = perm[k];
  const Eigen::MatrixXd gp = pm * g * pm.transpose();
  const auto a = sorted(eigen_spectrum(g)), b = sorted(eigen_spectrum(gp));
  const double scale = g.cwiseAbs().maxCoeff();
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_LE(std::abs(a[k] - b[k]), 1e-8 * scale);
}

TEST(EigenSpectrum, RejectsNonFinite) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(2, 2);
  m(0, 1) = NAN;
  EXPECT_THROW(eigen_spectrum(m), Error);
}

TEST(Modal, CentralDifference) {
  const double s = 0.1;
  const std::vector<Vec2> off{{s, 0.0}, {-s, 0.0}};
  const std::vector<double> w{1.0 / (2 * s), -1.0 / (2 * s)};
  for (double k : {1.0, 5.0, 20.0, M_PI / s}) {
    const auto [re, im] = modal_value(off, w, {k, 0.0}, OperatorKind::Dx);
    EXPECT_NEAR(re, std::sin(k * s) / s, 1e-12);
    EXPECT_NEAR(im, 0.0, 1e-12);
  }
}

TEST(Modal, FivePointLaplacian) {
  const double s = 0.1;
  const std::vector<Vec2> off{{s, 0}, {-s, 0}, {0, s}, {0, -s}};
  const std::vector<double> w(4, 1.0 / (s * s));
  for (double k : {1.0, 10.0, M_PI / s}) {
    const auto [re, im] = modal_value(off, w, {k, 0.0}, OperatorKind::Laplacian);
    EXPECT_NEAR(re, 2.0 * (1.0 - std::cos(k * s)) / (s * s), 1e-9);
    EXPECT_NEAR(im, 0.0, 1e-12);
  }
}

TEST(Modal, LatticeLabfmMatchesAtLowWavenumber) {
  const LabfmProvider p(2, 12);
  const auto cloud = generate_perturbed_grid(16, 16, 1.0 / 16, 0.0, 1);
  const std::vector<double> kh{0.01, 0.5, 1.0};
  const auto rep = modal_response(p, OperatorKind::Dx, cloud, kh);
  ASSERT_EQ(rep.samples.size(), 3u);
  EXPECT_NEAR(rep.samples[0].re / rep.samples[0].k, 1.0, 1e-3);
  EXPECT_LT(rep.samples[1].re / rep.samples[1].k, 1.0);
  for (const auto& smp : rep.samples) EXPECT_NEAR(smp.im, 0.0, 1e-8 * smp.k);
  const auto dy = modal_response(p, OperatorKind::Dy, cloud, kh);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(dy.samples[k].re, rep.samples[k].re, 1e-8 * rep.samples[k].k);
  EXPECT_THROW(modal_response(p, OperatorKind::Dx, cloud, std::vector<double>{1.5}), Error);
}

TEST(Timing, HarnessRows) {
  const LabfmProvider p(2);
  const SphProvider q(KernelType::WendlandC2);
  const std::vector<const OperatorProvider*> ps{&p, &q};
  // The test function is not periodic, so the paired error needs a bounded cloud.
  const auto cloud = convergence_cloud(16, 0.5, 3);
  TimingConfig cfg;
  cfg.repeats = 3;
  const auto rows = timing_harness(ps, cloud, OperatorKind::Dx, cfg);
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.nodes, 256u);
    EXPECT_LE(r.min_seconds, r.median_seconds);
    EXPECT_LE(r.median_seconds, r.max_seconds);
    EXPECT_GT(r.min_seconds, 0.0);
    EXPECT_TRUE(std::isfinite(r.rel_l2_error));
  }
  EXPECT_LT(rows[0].rel_l2_error, rows[1].rel_l2_error);
  EXPECT_EQ(timing_csv(rows).header().size(), 8u);
}

TEST(WeightDump, RowsAndMirrorSymmetry) {
  const LabfmProvider p(2, 12);
  const auto lattice = generate_perturbed_grid(10, 10, 0.1, 0.0, 1);
  const std::vector<std::size_t> nodes{0, 11, 55};
  EXPECT_EQ(weight_dump(p, lattice, OperatorKind::Dx, nodes).size(), 36u);
  const auto m = mirror_antisymmetry(p, lattice, OperatorKind::Dx, nodes);
  EXPECT_EQ(m.pairs, 36u);
  EXPECT_NEAR(m.correlation, 1.0, 1e-9);
}

TEST(CsvTable, RowWidthChecked) {
  CsvTable t({"a", "b"});
  t.row().add(1.0);
  EXPECT_THROW(t.write(std::filesystem::temp_directory_path() / "meshfree_bad.csv"), Error);
}
