#pragma once

// Cost-accuracy harness: wall time to produce weights for every node of a
// cloud, paired with the provider's derivative error on that cloud.

#include <algorithm>
#include <chrono>
#include <span>
#include <string>
#include <vector>

#include "meshfree/diagnostics/convergence.hpp"
#include "meshfree/diagnostics/provider.hpp"
#include "meshfree/diagnostics/report.hpp"

namespace meshfree {

struct TimingRow {
  std::string provider;
  std::size_t nodes = 0;
  std::size_t repeats = 0;
  double median_seconds = 0.0;
  double min_seconds = 0.0;
  double max_seconds = 0.0;
  double rel_l2_error = 0.0;

  double per_node() const { return nodes ? median_seconds / static_cast<double>(nodes) : 0.0; }
};

struct TimingConfig {
  std::size_t repeats = 5;
  bool weights_only = true;  ///< exclude neighbor search from the timed region
  double margin = 0.0;       ///< interior margin for the paired error

  void validate() const { require(repeats >= 1, "repeats must be >= 1"); }
};

inline TimingRow time_provider(const OperatorProvider& provider, const PointCloud& cloud, OperatorKind kind,
                               const TimingConfig& cfg) {
  cfg.validate();
  using clock = std::chrono::steady_clock;
  TimingRow row;
  row.provider = provider.name();
  row.nodes = cloud.size();
  row.repeats = cfg.repeats;
  std::vector<Stencil> stencils;
  if (cfg.weights_only) {
    stencils.reserve(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) stencils.push_back(provider.stencil(cloud, i, kind));
  }
  std::vector<double> samples;
  double sink = 0.0;
  for (std::size_t r = 0; r < cfg.repeats; ++r) {
    const auto t0 = clock::now();
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      if (cfg.weights_only) {
        sink += provider.weights(stencils[i], kind, cloud.spacing()).weights.front();
      } else {
        sink += provider.compute(cloud, i, kind).second.weights.front();
      }
    }
    samples.push_back(std::chrono::duration<double>(clock::now() - t0).count());
  }
  if (!std::isfinite(sink)) fail(ErrorCode::NumericalFailure, provider.name() + " produced non-finite weights");
  std::sort(samples.begin(), samples.end());
  row.min_seconds = samples.front();
  row.max_seconds = samples.back();
  const std::size_t m = samples.size();
  row.median_seconds = m % 2 ? samples[m / 2] : 0.5 * (samples[m / 2 - 1] + samples[m / 2]);
  const FieldError fe = derivative_error(provider, cloud, kind, cfg.margin);
  row.rel_l2_error = fe.norm_sq > 0.0 ? std::sqrt(fe.error_sq / fe.norm_sq) : NAN;
  return row;
}

inline std::vector<TimingRow> timing_harness(std::span<const OperatorProvider* const> providers,
                                             const PointCloud& cloud, OperatorKind kind, TimingConfig cfg) {
  if (cfg.margin == 0.0 && !cloud.domain().fully_periodic())
    for (const auto* p : providers)
      cfg.margin = std::max(cfg.margin, p->stencil_policy(kind).reach(cloud.spacing(), cloud.epsilon()));
  std::vector<TimingRow> rows;
  for (const auto* p : providers) rows.push_back(time_provider(*p, cloud, kind, cfg));
  return rows;
}

inline CsvTable timing_csv(std::span<const TimingRow> rows) {
  CsvTable t({"provider", "nodes", "repeats", "median_s", "min_s", "max_s", "per_node_s", "rel_l2_error"});
  for (const auto& r : rows)
    t.row()
        .add(r.provider)
        .add(r.nodes)
        .add(r.repeats)
        .add(r.median_seconds)
        .add(r.min_seconds)
        .add(r.max_seconds)
        .add(r.per_node())
        .add(r.rel_l2_error);
  return t;
}

}  // namespace meshfree
