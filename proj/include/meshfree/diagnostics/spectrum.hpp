#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "meshfree/diagnostics/provider.hpp"
#include "meshfree/diagnostics/report.hpp"

namespace meshfree {

/// Dense global operator: G_ij = w_ji for j in N_i and G_ii = -sum_j w_ji, so
/// that G phi evaluates the difference form at every node.
inline Eigen::MatrixXd assemble_global(const OperatorProvider& provider, const PointCloud& cloud, OperatorKind kind) {
  require(cloud.domain().fully_periodic(), "assemble_global needs a periodic cloud");
  const auto n = static_cast<Eigen::Index>(cloud.size());
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
  const SparseOperator op = build_operator(provider, cloud, kind);
  for (std::size_t i = 0; i < op.rows(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    for (std::size_t k = op.row_start[i]; k < op.row_start[i + 1]; ++k) {
      const auto c = static_cast<Eigen::Index>(op.cols[k]);
      g(r, c) += op.values[k];
      g(r, r) -= op.values[k];
    }
  }
  return g;
}

struct SpectrumReport {
  std::string provider;
  OperatorKind kind = OperatorKind::Dx;
  double normalization = 1.0;  ///< eigenvalues multiplied by s^m
  double epsilon = 0.0;
  std::vector<std::complex<double>> eigenvalues;

  double max_real() const {
    double m = -INFINITY;
    for (const auto& z : eigenvalues) m = std::max(m, z.real());
    return m;
  }
  double max_abs_real() const {
    double m = 0.0;
    for (const auto& z : eigenvalues) m = std::max(m, std::abs(z.real()));
    return m;
  }
  double max_abs_imag() const {
    double m = 0.0;
    for (const auto& z : eigenvalues) m = std::max(m, std::abs(z.imag()));
    return m;
  }
};

/// All eigenvalues via Hessenberg reduction and shifted QR, times `normalization`.
inline std::vector<std::complex<double>> eigen_spectrum(const Eigen::MatrixXd& m, double normalization = 1.0) {
  require(m.rows() == m.cols(), "eigen_spectrum needs a square matrix");
  require(m.allFinite(), "eigen_spectrum: matrix has non-finite entries");
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
  if (es.info() != Eigen::Success) fail(ErrorCode::NumericalFailure, "QR iteration did not converge");
  std::vector<std::complex<double>> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index k = 0; k < m.rows(); ++k) out[static_cast<std::size_t>(k)] = es.eigenvalues()(k) * normalization;
  return out;
}

inline SpectrumReport spectrum_report(const OperatorProvider& provider, const PointCloud& cloud, OperatorKind kind) {
  SpectrumReport rep;
  rep.provider = provider.name();
  rep.kind = kind;
  rep.epsilon = cloud.epsilon();
  rep.normalization = std::pow(cloud.spacing(), derivative_order(kind));
  rep.eigenvalues = eigen_spectrum(assemble_global(provider, cloud, kind), rep.normalization);
  return rep;
}

inline CsvTable spectrum_csv(const SpectrumReport& rep) {
  CsvTable t({"provider", "operator", "re", "im"});
  for (const auto& z : rep.eigenvalues)
    t.row().add(rep.provider).add(std::string(to_string(rep.kind))).add(z.real()).add(z.imag());
  return t;
}

}  // namespace meshfree
