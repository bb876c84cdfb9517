#pragma once

// Raw exports: node clouds and per-node stencil weights.

#include <cmath>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "meshfree/diagnostics/provider.hpp"
#include "meshfree/diagnostics/report.hpp"

namespace meshfree {

inline nlohmann::json cloud_metadata(const PointCloud& cloud) {
  nlohmann::json j = {{"spacing", cloud.spacing()},
                      {"epsilon", cloud.epsilon()},
                      {"nodes", cloud.size()},
                      {"periodic", cloud.domain().fully_periodic()}};
  if (cloud.meta()) {
    j["nx"] = cloud.meta()->nx;
    j["ny"] = cloud.meta()->ny;
    j["seed"] = cloud.meta()->seed;
  }
  return j;
}

/// stem.csv (`x,y`) and stem.json.
inline void write_cloud(const std::filesystem::path& stem, const PointCloud& cloud) {
  std::filesystem::path csv = stem, json = stem;
  csv += ".csv";
  json += ".json";
  CsvTable::ensure_parent(csv);
  write_cloud_csv(cloud, csv.string());
  write_json(json, cloud_metadata(cloud));
}

/// One row per (center, neighbor) pair for the selected nodes.
inline CsvTable weight_dump(const OperatorProvider& provider, const PointCloud& cloud, OperatorKind kind,
                            std::span<const std::size_t> nodes) {
  CsvTable t({"center", "neighbor", "dx", "dy", "weight"});
  for (std::size_t i : nodes) {
    require(i < cloud.size(), "node index out of range");
    const auto [st, w] = provider.compute(cloud, i, kind);
    for (std::size_t k = 0; k < st.size(); ++k)
      t.row().add(i).add(st.neighbors[k]).add(st.offsets[k].x).add(st.offsets[k].y).add(w.weights[k]);
  }
  return t;
}

struct MirrorStats {
  std::size_t pairs = 0;
  double correlation = NAN;  ///< Pearson correlation of w(x) and -w(-x)
};

/// Pools normalized offsets and weights (times d_n^m) of the given stencils and
/// pairs each sample with the nearest sample at the mirrored offset.
inline MirrorStats mirror_antisymmetry(const OperatorProvider& provider, const PointCloud& cloud, OperatorKind kind,
                                       std::span<const std::size_t> nodes, double tolerance = 0.05) {
  std::vector<Vec2> pos;
  std::vector<double> val;
  for (std::size_t i : nodes) {
    const auto [st, w] = provider.compute(cloud, i, kind);
    const double scale = std::pow(st.d_n, derivative_order(kind));
    for (std::size_t k = 0; k < st.size(); ++k) {
      pos.push_back(st.offsets[k] / st.d_n);
      val.push_back(w.weights[k] * scale);
    }
  }
  std::vector<double> a, b;
  for (std::size_t p = 0; p < pos.size(); ++p) {
    double best = tolerance * tolerance;
    std::size_t match = pos.size();
    for (std::size_t q = 0; q < pos.size(); ++q) {
      const double d2 = norm2(pos[q] + pos[p]);
      if (d2 <= best) {
        best = d2;
        match = q;
      }
    }
    if (match == pos.size()) continue;
    a.push_back(val[p]);
    b.push_back(-val[match]);
  }
  MirrorStats out;
  out.pairs = a.size();
  if (a.size() < 2) return out;
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    ma += a[k] / n;
    mb += b[k] / n;
  }
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    sab += (a[k] - ma) * (b[k] - mb);
    saa += (a[k] - ma) * (a[k] - ma);
    sbb += (b[k] - mb) * (b[k] - mb);
  }
  if (saa > 0.0 && sbb > 0.0) out.correlation = sab / std::sqrt(saa * sbb);
  return out;
}

}  // namespace meshfree
