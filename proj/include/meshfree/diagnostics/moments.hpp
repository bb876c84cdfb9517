#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "meshfree/diagnostics/provider.hpp"
#include "meshfree/diagnostics/report.hpp"
#include "meshfree/taylor.hpp"

namespace meshfree {

inline double relative_l2(std::span<const double> approx, std::span<const double> exact) {
  require(approx.size() == exact.size(), "relative_l2: length mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < exact.size(); ++i) {
    const double d = approx[i] - exact[i];
    num += d * d;
    den += exact[i] * exact[i];
  }
  if (!(den > 0.0)) fail(ErrorCode::InvalidArgument, "relative_l2: reference field has zero norm");
  return std::sqrt(num / den);
}

/// Per-monomial statistics of the normalized moment residual.
struct MomentReport {
  std::string provider;
  OperatorKind kind = OperatorKind::Dx;
  int order_p = 2;
  std::size_t stencils = 0;
  std::size_t skipped = 0;
  std::vector<Exponent> terms;
  std::vector<double> mae;   ///< mean |r_q|
  std::vector<double> mean;  ///< mean r_q
  std::vector<double> std;   ///< standard deviation of r_q

  double mean_mae() const {
    double s = 0.0;
    for (double v : mae) s += v;
    return mae.empty() ? 0.0 : s / static_cast<double>(mae.size());
  }
};

/// Residual statistics over every node of every cloud (clouds should be
/// periodic, or pre-filtered, so that no stencil touches a boundary). The
/// residual of each stencil is evaluated in coordinates scaled by its d_n.
inline MomentReport moment_table(const OperatorProvider& provider, OperatorKind kind, std::span<const PointCloud> clouds,
                                 int order_p = 2) {
  MomentReport rep;
  rep.provider = provider.name();
  rep.kind = kind;
  rep.order_p = std::max(order_p, minimum_order(kind));
  const MonomialBasis basis(rep.order_p);
  rep.terms = basis.terms();
  const std::size_t q = basis.size();
  std::vector<double> sum_abs(q, 0.0), sum(q, 0.0), sum_sq(q, 0.0);
  for (const auto& cloud : clouds) {
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      std::vector<double> r;
      try {
        auto [st, w] = provider.compute(cloud, i, kind);
        r = moment_residual(st.offsets, w.weights, kind, rep.order_p, st.d_n);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::InvalidArgument) throw;
        ++rep.skipped;
        continue;
      }
      for (std::size_t k = 0; k < q; ++k) {
        sum_abs[k] += std::abs(r[k]);
        sum[k] += r[k];
        sum_sq[k] += r[k] * r[k];
      }
      ++rep.stencils;
    }
  }
  require(rep.stencils > 0, "moment_table: no stencils evaluated");
  const double n = static_cast<double>(rep.stencils);
  for (std::size_t k = 0; k < q; ++k) {
    rep.mae.push_back(sum_abs[k] / n);
    rep.mean.push_back(sum[k] / n);
    rep.std.push_back(std::sqrt(std::max(0.0, sum_sq[k] / n - (sum[k] / n) * (sum[k] / n))));
  }
  return rep;
}

/// Monomial label such as "x", "x^2/2", "xy".
inline std::string monomial_label(Exponent e) {
  auto part = [](const char* v, int p) -> std::string {
    if (p == 0) return "";
    return p == 1 ? std::string(v) : std::string(v) + "^" + std::to_string(p);
  };
  std::string s = part("x", e.a) + part("y", e.b);
  const double f = MonomialBasis::factorial(e.a) * MonomialBasis::factorial(e.b);
  if (f > 1.0) s += "/" + std::to_string(static_cast<long long>(f));
  return s;
}

/// Long format: provider, operator, monomial, mae, mean, std, stencils.
inline CsvTable moment_csv(std::span<const MomentReport> reports) {
  CsvTable t({"provider", "operator", "monomial", "mae", "mean", "std", "stencils"});
  for (const auto& r : reports)
    for (std::size_t k = 0; k < r.terms.size(); ++k)
      t.row()
          .add(r.provider)
          .add(std::string(to_string(r.kind)))
          .add(monomial_label(r.terms[k]))
          .add(r.mae[k])
          .add(r.mean[k])
          .add(r.std[k])
          .add(r.stencils);
  return t;
}

}  // namespace meshfree
