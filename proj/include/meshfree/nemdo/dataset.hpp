#pragma once

// Training stencils harvested from periodic perturbed grids.

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "meshfree/errors.hpp"
#include "meshfree/geometry.hpp"
#include "meshfree/nemdo/serialize.hpp"
#include "meshfree/rng.hpp"

namespace meshfree::nemdo {

enum class Split : std::uint8_t { Train = 0, Val = 1, Test = 2 };

struct DatasetSpec {
  std::size_t nx = 32;
  std::size_t ny = 32;
  double spacing = 1.0;
  double epsilon = 1.0;
  std::size_t stencil_n = 10;
  std::size_t count = 20000;
  double val_fraction = 0.15;
  double test_fraction = 0.15;
  std::uint64_t seed = 1;

  void validate() const {
    require(nx >= 4 && ny >= 4, "dataset grids need at least 4x4 nodes");
    require(spacing > 0.0, "spacing must be positive");
    require(epsilon >= 0.0, "epsilon must be non-negative");
    require(stencil_n >= 1 && stencil_n < nx * ny, "stencil_n must be below the grid node count");
    require(count >= 1, "count must be positive");
    require(val_fraction >= 0.0 && test_fraction >= 0.0 && val_fraction + test_fraction < 1.0,
            "split fractions must leave room for training data");
  }

  nlohmann::json to_json() const {
    return {{"nx", nx},           {"ny", ny},       {"spacing", spacing},
            {"epsilon", epsilon}, {"stencil_n", stencil_n}, {"count", count},
            {"val_fraction", val_fraction}, {"test_fraction", test_fraction}, {"seed", seed}};
  }

  static DatasetSpec from_json(const nlohmann::json& j) {
    DatasetSpec s;
    s.nx = j.at("nx");
    s.ny = j.at("ny");
    s.spacing = j.at("spacing");
    s.epsilon = j.at("epsilon");
    s.stencil_n = j.at("stencil_n");
    s.count = j.at("count");
    s.val_fraction = j.at("val_fraction");
    s.test_fraction = j.at("test_fraction");
    s.seed = j.at("seed");
    return s;
  }
};

struct Dataset {
  DatasetSpec spec;
  std::vector<Vec2> offsets_hat;  ///< count * stencil_n, stencil-major
  std::vector<double> d_n;
  std::vector<Split> split;

  std::size_t stencil_n() const { return spec.stencil_n; }
  std::size_t size() const { return d_n.size(); }

  std::span<const Vec2> stencil(std::size_t i) const {
    return std::span<const Vec2>(offsets_hat).subspan(i * spec.stencil_n, spec.stencil_n);
  }

  std::vector<std::size_t> indices(Split s) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < split.size(); ++i)
      if (split[i] == s) out.push_back(i);
    return out;
  }

  /// Offsets of the selected stencils, concatenated in the given order.
  std::vector<Vec2> gather(std::span<const std::size_t> idx) const {
    std::vector<Vec2> out;
    out.reserve(idx.size() * spec.stencil_n);
    for (std::size_t i : idx) {
      const auto s = stencil(i);
      out.insert(out.end(), s.begin(), s.end());
    }
    return out;
  }
};

/// Visits every node of successive independent clouds until `count` stencils
/// are collected; split tags are assigned over a seeded shuffle.
inline Dataset generate_dataset(const DatasetSpec& spec) {
  spec.validate();
  Dataset ds;
  ds.spec = spec;
  ds.offsets_hat.reserve(spec.count * spec.stencil_n);
  ds.d_n.reserve(spec.count);
  const Rng root(spec.seed);
  for (std::uint64_t cloud_id = 0; ds.size() < spec.count; ++cloud_id) {
    const PointCloud cloud =
        generate_perturbed_grid(spec.nx, spec.ny, spec.spacing, spec.epsilon, root.split(cloud_id).next_u64());
    for (std::size_t i = 0; i < cloud.size() && ds.size() < spec.count; ++i) {
      const NormalizedStencil ns = normalize(knn_stencil(cloud, i, spec.stencil_n));
      ds.offsets_hat.insert(ds.offsets_hat.end(), ns.offsets_hat.begin(), ns.offsets_hat.end());
      ds.d_n.push_back(ns.d_n);
    }
  }
  const auto n_val = static_cast<std::size_t>(std::llround(spec.val_fraction * static_cast<double>(spec.count)));
  const auto n_test = static_cast<std::size_t>(std::llround(spec.test_fraction * static_cast<double>(spec.count)));
  std::vector<std::size_t> order(spec.count);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng shuffle_rng = root.split(0xFFFFFFFFULL);
  shuffle_rng.shuffle(order.begin(), order.end());
  ds.split.assign(spec.count, Split::Train);
  for (std::size_t k = 0; k < n_val; ++k) ds.split[order[k]] = Split::Val;
  for (std::size_t k = n_val; k < n_val + n_test; ++k) ds.split[order[k]] = Split::Test;
  return ds;
}

inline constexpr std::uint32_t kDatasetVersion = 1;

inline void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  io::Writer w("NMDODATA", kDatasetVersion, ds.spec.to_json());
  std::vector<double> flat;
  flat.reserve(2 * ds.offsets_hat.size());
  for (const auto& o : ds.offsets_hat) {
    flat.push_back(o.x);
    flat.push_back(o.y);
  }
  w.put_array(flat);
  w.put_array(ds.d_n);
  std::vector<std::uint8_t> tags(ds.split.size());
  for (std::size_t i = 0; i < tags.size(); ++i) tags[i] = static_cast<std::uint8_t>(ds.split[i]);
  w.put_array(tags);
  w.save(path);
}

inline Dataset load_dataset(const std::filesystem::path& path) {
  io::Reader r(path, "NMDODATA", kDatasetVersion);
  Dataset ds;
  ds.spec = DatasetSpec::from_json(r.header());
  const auto flat = r.get_array<double>();
  ds.d_n = r.get_array<double>();
  const auto tags = r.get_array<std::uint8_t>();
  r.expect_end();
  const std::size_t n = ds.spec.stencil_n;
  if (flat.size() != 2 * n * ds.d_n.size() || tags.size() != ds.d_n.size())
    fail(ErrorCode::IncompatibleCheckpoint, path.string() + ": inconsistent dataset arrays");
  ds.offsets_hat.resize(flat.size() / 2);
  for (std::size_t k = 0; k < ds.offsets_hat.size(); ++k) ds.offsets_hat[k] = {flat[2 * k], flat[2 * k + 1]};
  ds.split.resize(tags.size());
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i] > 2) fail(ErrorCode::IncompatibleCheckpoint, path.string() + ": bad split tag");
    ds.split[i] = static_cast<Split>(tags[i]);
  }
  return ds;
}

}  // namespace meshfree::nemdo
