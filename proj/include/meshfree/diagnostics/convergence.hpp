#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "meshfree/diagnostics/moments.hpp"
#include "meshfree/diagnostics/provider.hpp"
#include "meshfree/diagnostics/report.hpp"
#include "meshfree/rng.hpp"
#include "meshfree/taylor.hpp"

namespace meshfree {

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && x.size() >= 2, "slope fit needs at least two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    require(x[k] > 0.0 && y[k] > 0.0, "slope fit needs positive data");
    mx += std::log(x[k]);
    my += std::log(y[k]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double dx = std::log(x[k]) - mx;
    sxy += dx * (std::log(y[k]) - my);
    sxx += dx * dx;
  }
  require(sxx > 0.0, "slope fit needs distinct abscissae");
  return sxy / sxx;
}

struct ConvergenceConfig {
  std::vector<std::size_t> resolutions{20, 40, 80, 160};  ///< nodes per unit length; s = 1/n
  double epsilon = 0.5;
  std::size_t trials = 1;
  std::uint64_t seed = 1;
  std::size_t fit_points = 3;  ///< slope over this many finest resolutions

  void validate() const {
    require(resolutions.size() >= 3, "convergence study needs at least three resolutions");
    require(trials >= 1, "trials must be >= 1");
    require(fit_points >= 2 && fit_points <= resolutions.size(), "fit_points must lie in [2, #resolutions]");
  }
};

struct ConvergenceSeries {
  std::string provider;
  std::vector<double> spacing;
  std::vector<double> error;
  std::vector<std::size_t> nodes;
  std::vector<std::size_t> skipped;
  double slope = NAN;
};

struct ConvergenceReport {
  OperatorKind kind = OperatorKind::Dx;
  ConvergenceConfig config;
  double margin = 0.0;
  std::vector<ConvergenceSeries> series;
};

inline double test_function_derivative(const TestFunctionValue& t, OperatorKind kind) {
  switch (kind) {
    case OperatorKind::Dx: return t.dx;
    case OperatorKind::Dy: return t.dy;
    case OperatorKind::Laplacian: return t.laplacian;
    case OperatorKind::Hyperviscous: break;
  }
  fail(ErrorCode::InvalidArgument, "test function has no closed-form hyperviscous derivative");
}

/// Cloud on [-1/2, 1/2]^2 with spacing 1/n (non-periodic).
inline PointCloud convergence_cloud(std::size_t n, double epsilon, std::uint64_t seed) {
  const double s = 1.0 / static_cast<double>(n);
  return generate_perturbed_grid(n, n, s, epsilon, seed, {-0.5, -0.5}, false);
}

struct FieldError {
  double error_sq = 0.0;
  double norm_sq = 0.0;
  std::size_t nodes = 0;
  std::size_t skipped = 0;
};

/// Squared error and reference norm of the discrete derivative of the test
/// function on nodes farther than `margin` from the boundary. Provider
/// failures skip the node.
inline FieldError derivative_error(const OperatorProvider& provider, const PointCloud& cloud, OperatorKind kind,
                                   double margin) {
  std::vector<double> f(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) f[i] = test_function(cloud.point(i)).value;
  FieldError fe;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.boundary_distance(i) < margin) continue;
    double approx;
    try {
      auto [st, w] = provider.compute(cloud, i, kind);
      approx = apply(st, w, f);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::InvalidArgument) throw;
      ++fe.skipped;
      continue;
    }
    const double exact = test_function_derivative(test_function(cloud.point(i)), kind);
    fe.error_sq += (approx - exact) * (approx - exact);
    fe.norm_sq += exact * exact;
    ++fe.nodes;
  }
  return fe;
}

/// All providers are evaluated on one interior region: nodes at least the
/// largest provider reach (at the coarsest spacing) away from the boundary.
inline ConvergenceReport convergence_study(std::span<const OperatorProvider* const> providers, OperatorKind kind,
                                           const ConvergenceConfig& cfg) {
  cfg.validate();
  ConvergenceReport rep{kind, cfg, 0.0, {}};
  for (const auto* p : providers) rep.series.push_back({p->name(), {}, {}, {}, {}, NAN});
  const Rng root(cfg.seed);
  const double coarsest = 1.0 / static_cast<double>(*std::min_element(cfg.resolutions.begin(), cfg.resolutions.end()));
  double margin = 0.0;
  for (const auto* p : providers) margin = std::max(margin, p->stencil_policy(kind).reach(coarsest, cfg.epsilon));
  rep.margin = margin;
  for (std::size_t r = 0; r < cfg.resolutions.size(); ++r) {
    const std::size_t n = cfg.resolutions[r];
    const double s = 1.0 / static_cast<double>(n);
    std::vector<FieldError> acc(providers.size());
    for (std::size_t t = 0; t < cfg.trials; ++t) {
      const PointCloud cloud = convergence_cloud(n, cfg.epsilon, root.split(r * 1000 + t).next_u64());
      for (std::size_t k = 0; k < providers.size(); ++k) {
        const FieldError fe = derivative_error(*providers[k], cloud, kind, margin);
        acc[k].error_sq += fe.error_sq;
        acc[k].norm_sq += fe.norm_sq;
        acc[k].nodes += fe.nodes;
        acc[k].skipped += fe.skipped;
      }
    }
    for (std::size_t k = 0; k < providers.size(); ++k) {
      auto& ser = rep.series[k];
      ser.spacing.push_back(s);
      ser.error.push_back(acc[k].norm_sq > 0.0 ? std::sqrt(acc[k].error_sq / acc[k].norm_sq) : NAN);
      ser.nodes.push_back(acc[k].nodes);
      ser.skipped.push_back(acc[k].skipped);
    }
  }
  for (auto& ser : rep.series) {
    // Three finest resolutions by default.
    std::vector<std::size_t> order(ser.spacing.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ser.spacing[a] < ser.spacing[b]; });
    std::vector<double> xs, ys;
    for (std::size_t k = 0; k < cfg.fit_points; ++k) {
      const double e = ser.error[order[k]];
      if (!(e > 0.0) || !std::isfinite(e)) continue;
      xs.push_back(ser.spacing[order[k]]);
      ys.push_back(e);
    }
    if (xs.size() >= 2) ser.slope = loglog_slope(xs, ys);
  }
  return rep;
}

inline CsvTable convergence_csv(const ConvergenceReport& rep) {
  CsvTable t({"provider", "operator", "spacing", "rel_l2_error", "nodes", "skipped", "slope"});
  for (const auto& ser : rep.series)
    for (std::size_t k = 0; k < ser.spacing.size(); ++k)
      t.row()
          .add(ser.provider)
          .add(std::string(to_string(rep.kind)))
          .add(ser.spacing[k])
          .add(ser.error[k])
          .add(ser.nodes[k])
          .add(ser.skipped[k])
          .add(ser.slope);
  return t;
}

}  // namespace meshfree
