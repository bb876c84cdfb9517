#pragma once

// Weakly compressible Navier-Stokes on a static periodic node set, in
// conservative variables (rho, rho u, rho v), with the barotropic pressure
// term (1/Ma^2) grad rho. Time stepping is three-stage SSP Runge-Kutta
// followed by a hyperviscous filter.

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "meshfree/diagnostics/moments.hpp"
#include "meshfree/diagnostics/provider.hpp"
#include "meshfree/diagnostics/report.hpp"
#include "meshfree/errors.hpp"
#include "meshfree/geometry.hpp"

namespace meshfree {

struct Velocity {
  double u;
  double v;
};

/// Incompressible Taylor-Green vortex on the unit square.
inline Velocity tgv_exact(Vec2 p, double t, double reynolds) {
  const double decay = std::exp(-8.0 * M_PI * M_PI * t / reynolds);
  const double cx = std::cos(2.0 * M_PI * p.x), sx = std::sin(2.0 * M_PI * p.x);
  const double cy = std::cos(2.0 * M_PI * p.y), sy = std::sin(2.0 * M_PI * p.y);
  return {-decay * cx * sy, decay * sx * cy};
}

struct SolverConfig {
  double reynolds = 100.0;
  double mach = 0.1;
  double cfl = 0.5;
  double filter_coefficient = 0.01;  ///< c in f <- f - c s^4 grad^4 f
  double end_time = 1.0;
  double blowup_factor = 10.0;       ///< abort when max|u| exceeds this multiple of its initial value

  void validate() const {
    require(reynolds > 0.0 && mach > 0.0, "Re and Ma must be positive");
    require(cfl > 0.0 && cfl <= 1.0, "cfl must lie in (0, 1]");
    require(filter_coefficient >= 0.0, "filter coefficient must be non-negative");
    require(end_time >= 0.0, "end time must be non-negative");
    require(blowup_factor > 1.0, "blowup factor must exceed 1");
  }

  nlohmann::json to_json() const {
    return {{"reynolds", reynolds}, {"mach", mach}, {"cfl", cfl}, {"filter_coefficient", filter_coefficient},
            {"end_time", end_time}, {"blowup_factor", blowup_factor}, {"integrator", "ssp-rk3"}};
  }

  /// Missing keys keep their defaults; unknown keys are rejected.
  static SolverConfig from_json(const nlohmann::json& j) {
    SolverConfig c;
    for (const auto& [key, value] : j.items()) {
      if (key == "reynolds") c.reynolds = value.get<double>();
      else if (key == "mach") c.mach = value.get<double>();
      else if (key == "cfl") c.cfl = value.get<double>();
      else if (key == "filter_coefficient") c.filter_coefficient = value.get<double>();
      else if (key == "end_time") c.end_time = value.get<double>();
      else if (key == "blowup_factor") c.blowup_factor = value.get<double>();
      else if (key != "integrator") fail(ErrorCode::InvalidArgument, "unknown solver config key '" + key + "'");
    }
    c.validate();
    return c;
  }
};

struct FlowState {
  std::vector<double> rho;
  std::vector<double> mom_x;
  std::vector<double> mom_y;
  double t = 0.0;

  std::size_t size() const { return rho.size(); }

  static FlowState zeros(std::size_t n) { return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0.0}; }

  /// this = a * this + b * (x + dt * dx); x and dx index-aligned.
  void combine(double a, double b, const FlowState& x, const FlowState& dx, double dt) {
    auto f = [&](std::vector<double>& dst, const std::vector<double>& xs, const std::vector<double>& ds) {
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = a * dst[i] + b * (xs[i] + dt * ds[i]);
    };
    f(rho, x.rho, dx.rho);
    f(mom_x, x.mom_x, dx.mom_x);
    f(mom_y, x.mom_y, dx.mom_y);
  }

  bool all_finite() const {
    auto ok = [](const std::vector<double>& v) { return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); }); };
    return ok(rho) && ok(mom_x) && ok(mom_y);
  }
};

/// Operators precomputed once for the static cloud.
struct Discretization {
  std::string provider;
  std::string filter_provider;
  double spacing = 0.0;
  SparseOperator dx, dy, lap, hyp;
};

/// Stencil size of the default filter operator. Smaller stencils damp the
/// grid scale harder for the same damping of resolved modes.
inline constexpr std::size_t kFilterStencil = 30;

/// Uses the provider's own hyperviscous operator when it has one, otherwise
/// `filter` (LABFM p=4 on kFilterStencil neighbors when not given).
inline Discretization discretize(const OperatorProvider& provider, const PointCloud& cloud,
                                 const OperatorProvider* filter = nullptr) {
  Discretization d;
  d.provider = provider.name();
  d.spacing = cloud.spacing();
  d.dx = build_operator(provider, cloud, OperatorKind::Dx);
  d.dy = build_operator(provider, cloud, OperatorKind::Dy);
  d.lap = build_operator(provider, cloud, OperatorKind::Laplacian);
  std::unique_ptr<OperatorProvider> fallback;
  const OperatorProvider* hyp = &provider;
  if (!provider.supports(OperatorKind::Hyperviscous)) {
    if (!filter) {
      fallback = std::make_unique<LabfmProvider>(4, kFilterStencil);
      filter = fallback.get();
    }
    hyp = filter;
  }
  d.filter_provider = hyp->name();
  d.hyp = build_operator(*hyp, cloud, OperatorKind::Hyperviscous);
  return d;
}

inline FlowState initialize(const PointCloud& cloud, double reynolds) {
  const Domain& dom = cloud.domain();
  if (!dom.fully_periodic()) fail(ErrorCode::InvalidArgument, "Taylor-Green initialization needs a periodic cloud");
  const Vec2 ext = dom.extent();
  if (std::abs(ext.x - 1.0) > 1e-12 || std::abs(ext.y - 1.0) > 1e-12)
    fail(ErrorCode::InvalidArgument, "Taylor-Green initialization needs the unit square");
  FlowState s = FlowState::zeros(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Velocity u = tgv_exact(cloud.point(i) - dom.lo, 0.0, reynolds);
    s.rho[i] = 1.0;
    s.mom_x[i] = u.u;
    s.mom_y[i] = u.v;
  }
  return s;
}

/// Time derivative of the conservative state.
inline void rhs(const FlowState& s, const Discretization& d, const SolverConfig& cfg, FlowState& out) {
  const std::size_t n = s.size();
  std::vector<double> u(n), v(n), fxx(n), fxy(n), fyy(n), t1(n), t2(n);
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = s.mom_x[i] / s.rho[i];
    v[i] = s.mom_y[i] / s.rho[i];
    fxx[i] = s.mom_x[i] * u[i];
    fxy[i] = s.mom_x[i] * v[i];
    fyy[i] = s.mom_y[i] * v[i];
  }
  out.rho.resize(n);
  out.mom_x.resize(n);
  out.mom_y.resize(n);
  out.t = s.t;
  const double inv_ma2 = 1.0 / (cfg.mach * cfg.mach), inv_re = 1.0 / cfg.reynolds;

  d.dx.apply(s.mom_x, t1);
  d.dy.apply(s.mom_y, t2);
  for (std::size_t i = 0; i < n; ++i) out.rho[i] = -(t1[i] + t2[i]);

  d.dx.apply(fxx, t1);
  d.dy.apply(fxy, t2);
  for (std::size_t i = 0; i < n; ++i) out.mom_x[i] = -(t1[i] + t2[i]);
  d.dx.apply(s.rho, t1);
  d.lap.apply(u, t2);
  for (std::size_t i = 0; i < n; ++i) out.mom_x[i] += -inv_ma2 * t1[i] + inv_re * t2[i];

  d.dx.apply(fxy, t1);
  d.dy.apply(fyy, t2);
  for (std::size_t i = 0; i < n; ++i) out.mom_y[i] = -(t1[i] + t2[i]);
  d.dy.apply(s.rho, t1);
  d.lap.apply(v, t2);
  for (std::size_t i = 0; i < n; ++i) out.mom_y[i] += -inv_ma2 * t1[i] + inv_re * t2[i];

  if (!out.all_finite()) fail(ErrorCode::NumericalFailure, "non-finite right-hand side at t=" + std::to_string(s.t));
}

inline FlowState rhs(const FlowState& s, const Discretization& d, const SolverConfig& cfg) {
  FlowState out;
  rhs(s, d, cfg, out);
  return out;
}

/// f <- f - c s^4 grad^4 f on every conservative field.
inline void apply_filter(FlowState& s, const Discretization& d, double coefficient) {
  if (coefficient == 0.0) return;
  const double c = coefficient * std::pow(d.spacing, 4);
  std::vector<double> h(s.size());
  for (auto* f : {&s.rho, &s.mom_x, &s.mom_y}) {
    d.hyp.apply(*f, h);
    for (std::size_t i = 0; i < h.size(); ++i) (*f)[i] -= c * h[i];
  }
}

inline double stable_dt(const SolverConfig& cfg, double spacing) {
  return cfg.cfl * std::min(spacing * cfg.mach, spacing * spacing * cfg.reynolds / 4.0);
}

/// One SSP-RK3 step plus the filter.
inline FlowState step(const FlowState& s, const Discretization& d, const SolverConfig& cfg, double dt) {
  FlowState k, u1 = s, u2 = s, u3 = s;
  rhs(s, d, cfg, k);
  u1.combine(0.0, 1.0, s, k, dt);
  u1.t = s.t + dt;
  rhs(u1, d, cfg, k);
  u2.combine(0.0, 0.25, u1, k, dt);
  for (std::size_t i = 0; i < s.size(); ++i) {
    u2.rho[i] += 0.75 * s.rho[i];
    u2.mom_x[i] += 0.75 * s.mom_x[i];
    u2.mom_y[i] += 0.75 * s.mom_y[i];
  }
  u2.t = s.t + 0.5 * dt;
  rhs(u2, d, cfg, k);
  u3.combine(0.0, 2.0 / 3.0, u2, k, dt);
  for (std::size_t i = 0; i < s.size(); ++i) {
    u3.rho[i] += s.rho[i] / 3.0;
    u3.mom_x[i] += s.mom_x[i] / 3.0;
    u3.mom_y[i] += s.mom_y[i] / 3.0;
  }
  u3.t = s.t + dt;
  apply_filter(u3, d, cfg.filter_coefficient);
  if (!u3.all_finite()) fail(ErrorCode::NumericalFailure, "non-finite state at t=" + std::to_string(u3.t));
  return u3;
}

inline double max_speed(const FlowState& s) {
  double m = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    m = std::max(m, std::hypot(s.mom_x[i], s.mom_y[i]) / s.rho[i]);
  return m;
}

inline double mean_density(const FlowState& s) {
  double sum = 0.0;
  for (double r : s.rho) sum += r;
  return sum / static_cast<double>(s.size());
}

/// Relative L2 error of the velocity magnitude against the exact solution.
inline double velocity_error(const PointCloud& cloud, const FlowState& s, double reynolds) {
  std::vector<double> approx(s.size()), exact(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Velocity e = tgv_exact(cloud.point(i) - cloud.domain().lo, s.t, reynolds);
    approx[i] = std::hypot(s.mom_x[i], s.mom_y[i]) / s.rho[i];
    exact[i] = std::hypot(e.u, e.v);
  }
  return relative_l2(approx, exact);
}

struct TgvSample {
  double t = 0.0;
  double error = 0.0;
  double mean_rho = 0.0;
  double max_speed = 0.0;
};

struct TgvResult {
  std::string provider;
  std::string filter_provider;
  double dt = 0.0;
  std::size_t steps = 0;
  std::vector<TgvSample> samples;
  FlowState final_state;
  std::vector<FlowState> snapshots;  ///< states at the sample times

  double final_error() const { return samples.empty() ? NAN : samples.back().error; }
};

/// Integrates to cfg.end_time, sampling at every time in `sample_times` (plus
/// t=0 and the end time). The last step is shortened to land on each sample.
inline TgvResult run_tgv(const Discretization& d, const PointCloud& cloud, const SolverConfig& cfg,
                         std::vector<double> sample_times = {}, bool keep_snapshots = false) {
  cfg.validate();
  TgvResult res;
  res.provider = d.provider;
  res.filter_provider = d.filter_provider;
  res.dt = stable_dt(cfg, d.spacing);
  sample_times.push_back(cfg.end_time);
  std::sort(sample_times.begin(), sample_times.end());
  sample_times.erase(std::unique(sample_times.begin(), sample_times.end()), sample_times.end());

  FlowState s = initialize(cloud, cfg.reynolds);
  const double speed0 = max_speed(s);
  auto record = [&] {
    res.samples.push_back({s.t, velocity_error(cloud, s, cfg.reynolds), mean_density(s), max_speed(s)});
    if (keep_snapshots) res.snapshots.push_back(s);
  };
  record();
  for (double target : sample_times) {
    if (target <= s.t) continue;
    while (s.t < target - 1e-12 * std::max(1.0, target)) {
      const double dt = std::min(res.dt, target - s.t);
      s = step(s, d, cfg, dt);
      if (target - s.t < 1e-12 * std::max(1.0, target)) s.t = target;
      ++res.steps;
      const double speed = max_speed(s);
      if (!(speed <= cfg.blowup_factor * std::max(speed0, 1e-300)))
        fail(ErrorCode::UnstableRun, d.provider + ": max|u| grew from " + std::to_string(speed0) + " to " +
                                         std::to_string(speed) + " by t=" + std::to_string(s.t));
    }
    record();
  }
  res.final_state = std::move(s);
  return res;
}

inline CsvTable tgv_error_csv(const TgvResult& r) {
  CsvTable t({"t", "err", "mean_rho", "max_speed"});
  for (const auto& s : r.samples) t.row().add(s.t).add(s.error).add(s.mean_rho).add(s.max_speed);
  return t;
}

inline CsvTable tgv_snapshot_csv(const PointCloud& cloud, const FlowState& s) {
  CsvTable t({"x", "y", "rho", "u", "v"});
  for (std::size_t i = 0; i < s.size(); ++i)
    t.row()
        .add(cloud.point(i).x)
        .add(cloud.point(i).y)
        .add(s.rho[i])
        .add(s.mom_x[i] / s.rho[i])
        .add(s.mom_y[i] / s.rho[i]);
  return t;
}

}  // namespace meshfree
