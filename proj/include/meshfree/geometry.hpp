#pragma once

// Point clouds, periodic minimum-image displacements, cell-list neighbor
// search and stencil normalization.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "meshfree/errors.hpp"
#include "meshfree/rng.hpp"

namespace meshfree {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
  friend Vec2 operator/(Vec2 a, double s) { return {a.x / s, a.y / s}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm2(Vec2 a) { return a.x * a.x + a.y * a.y; }
inline double norm(Vec2 a) { return std::sqrt(norm2(a)); }

/// Axis-aligned rectangle; each axis is either periodic or bounded.
struct Domain {
  Vec2 lo{0.0, 0.0};
  Vec2 hi{1.0, 1.0};
  bool periodic_x = true;
  bool periodic_y = true;

  Vec2 extent() const { return hi - lo; }
  bool fully_periodic() const { return periodic_x && periodic_y; }
};

/// Provenance of a generated lattice; kept for export and reproducibility.
struct GridMeta {
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::uint64_t seed = 0;
};

/// Immutable node set with a uniform cell index built at construction.
class PointCloud {
 public:
  PointCloud(std::vector<Vec2> points, double spacing, double epsilon, Domain domain,
             std::optional<GridMeta> meta = std::nullopt)
      : points_(std::move(points)), spacing_(spacing), epsilon_(epsilon), domain_(domain),
        meta_(meta) {
    require(spacing_ > 0.0 && std::isfinite(spacing_), "spacing must be positive");
    require(epsilon_ >= 0.0, "epsilon must be non-negative");
    const Vec2 ext = domain_.extent();
    require(ext.x > 0.0 && ext.y > 0.0, "domain must have positive extent");
    for (auto& p : points_) {
      require(std::isfinite(p.x) && std::isfinite(p.y), "non-finite point");
      p.x = wrap_axis(p.x, domain_.lo.x, ext.x, domain_.periodic_x);
      p.y = wrap_axis(p.y, domain_.lo.y, ext.y, domain_.periodic_y);
    }
    build_cells();
    reject_duplicates();
  }

  std::size_t size() const { return points_.size(); }
  const Vec2& point(std::size_t i) const { return points_[i]; }
  std::span<const Vec2> points() const { return points_; }
  double spacing() const { return spacing_; }
  double epsilon() const { return epsilon_; }
  const Domain& domain() const { return domain_; }
  const std::optional<GridMeta>& meta() const { return meta_; }

  /// Minimum-image displacement p_j - p_i on periodic axes.
  Vec2 displacement(std::size_t i, std::size_t j) const { return minimum_image(points_[j] - points_[i]); }

  Vec2 minimum_image(Vec2 d) const {
    const Vec2 ext = domain_.extent();
    if (domain_.periodic_x) d.x -= ext.x * std::round(d.x / ext.x);
    if (domain_.periodic_y) d.y -= ext.y * std::round(d.y / ext.y);
    return d;
  }

  /// Distance from a point to the nearest non-periodic boundary (infinite when fully periodic).
  double boundary_distance(std::size_t i) const {
    double d = std::numeric_limits<double>::infinity();
    const Vec2& p = points_[i];
    if (!domain_.periodic_x) d = std::min({d, p.x - domain_.lo.x, domain_.hi.x - p.x});
    if (!domain_.periodic_y) d = std::min({d, p.y - domain_.lo.y, domain_.hi.y - p.y});
    return d;
  }

  /// Calls visit(j, offset, dist2) for every node j != i with |offset| <= radius.
  template <class Visit>
  void for_each_within(std::size_t i, double radius, Visit&& visit) const {
    const Vec2 c = points_[i];
    const double r2 = radius * radius;
    const auto [cx, cy] = cell_of(c);
    auto range = [&](std::ptrdiff_t centre, std::ptrdiff_t count, double cell, bool periodic) {
      const auto rings = static_cast<std::ptrdiff_t>(std::ceil(radius / cell));
      std::ptrdiff_t lo = centre - rings, hi = centre + rings;
      if (periodic) {
        if (hi - lo + 1 >= count) { lo = 0; hi = count - 1; }
      } else {
        lo = std::max<std::ptrdiff_t>(lo, 0);
        hi = std::min<std::ptrdiff_t>(hi, count - 1);
      }
      return std::pair{lo, hi};
    };
    const auto [x0, x1] = range(cx, ncx_, cell_x_, domain_.periodic_x);
    const auto [y0, y1] = range(cy, ncy_, cell_y_, domain_.periodic_y);
    for (std::ptrdiff_t gy = y0; gy <= y1; ++gy) {
      const std::ptrdiff_t wy = ((gy % ncy_) + ncy_) % ncy_;
      for (std::ptrdiff_t gx = x0; gx <= x1; ++gx) {
        const std::ptrdiff_t wx = ((gx % ncx_) + ncx_) % ncx_;
        const std::size_t cell = static_cast<std::size_t>(wy * ncx_ + wx);
        for (std::size_t k = cell_start_[cell]; k < cell_start_[cell + 1]; ++k) {
          const std::size_t j = cell_items_[k];
          if (j == i) continue;
          const Vec2 d = minimum_image(points_[j] - c);
          const double d2 = norm2(d);
          if (d2 <= r2) visit(j, d, d2);
        }
      }
    }
  }

 private:
  static double wrap_axis(double v, double lo, double len, bool periodic) {
    if (periodic) {
      double t = std::fmod(v - lo, len);
      if (t < 0.0) t += len;
      if (t >= len) t = 0.0;
      return lo + t;
    }
    require(v >= lo && v <= lo + len, "point outside non-periodic domain");
    return v;
  }

  std::pair<std::ptrdiff_t, std::ptrdiff_t> cell_of(Vec2 p) const {
    auto idx = [](double v, double lo, double size, std::ptrdiff_t count) {
      auto k = static_cast<std::ptrdiff_t>(std::floor((v - lo) / size));
      return std::clamp<std::ptrdiff_t>(k, 0, count - 1);
    };
    return {idx(p.x, domain_.lo.x, cell_x_, ncx_), idx(p.y, domain_.lo.y, cell_y_, ncy_)};
  }

  void build_cells() {
    const Vec2 ext = domain_.extent();
    // Cells tile each axis exactly (needed for periodic wrap) and are never smaller than s.
    ncx_ = std::max<std::ptrdiff_t>(1, static_cast<std::ptrdiff_t>(std::floor(ext.x / spacing_)));
    ncy_ = std::max<std::ptrdiff_t>(1, static_cast<std::ptrdiff_t>(std::floor(ext.y / spacing_)));
    cell_x_ = ext.x / static_cast<double>(ncx_);
    cell_y_ = ext.y / static_cast<double>(ncy_);
    const std::size_t ncell = static_cast<std::size_t>(ncx_ * ncy_);
    cell_start_.assign(ncell + 1, 0);
    std::vector<std::size_t> cell_id(points_.size());
    for (std::size_t i = 0; i < points_.size(); ++i) {
      const auto [x, y] = cell_of(points_[i]);
      cell_id[i] = static_cast<std::size_t>(y * ncx_ + x);
      ++cell_start_[cell_id[i] + 1];
    }
    for (std::size_t c = 0; c < ncell; ++c) cell_start_[c + 1] += cell_start_[c];
    cell_items_.resize(points_.size());
    std::vector<std::size_t> fill(cell_start_.begin(), cell_start_.end() - 1);
    for (std::size_t i = 0; i < points_.size(); ++i) cell_items_[fill[cell_id[i]]++] = i;
  }

  void reject_duplicates() const {
    const double tol = 1e-12 * spacing_;
    for (std::size_t i = 0; i < points_.size(); ++i) {
      for_each_within(i, tol, [&](std::size_t j, Vec2, double) {
        fail(ErrorCode::InvalidArgument,
             "duplicate points " + std::to_string(i) + " and " + std::to_string(j));
      });
    }
  }

  std::vector<Vec2> points_;
  double spacing_;
  double epsilon_;
  Domain domain_;
  std::optional<GridMeta> meta_;

  double cell_x_ = 1.0;
  double cell_y_ = 1.0;
  std::ptrdiff_t ncx_ = 1;
  std::ptrdiff_t ncy_ = 1;
  std::vector<std::size_t> cell_start_;
  std::vector<std::size_t> cell_items_;
};

/// Cartesian lattice with cell-centred nodes, each coordinate displaced by
/// i.i.d. noise on the open interval (-eps*s/2, eps*s/2).
inline PointCloud generate_perturbed_grid(std::size_t nx, std::size_t ny, double spacing, double epsilon,
                                          std::uint64_t seed, Vec2 origin = {0.0, 0.0},
                                          bool periodic = true) {
  require(nx >= 2 && ny >= 2, "grid needs at least 2x2 nodes");
  require(spacing > 0.0, "spacing must be positive");
  require(epsilon >= 0.0, "epsilon must be non-negative");
  Rng rng(seed);
  const double half = 0.5 * epsilon * spacing;
  std::vector<Vec2> pts;
  pts.reserve(nx * ny);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      Vec2 p{origin.x + (static_cast<double>(i) + 0.5) * spacing,
             origin.y + (static_cast<double>(j) + 0.5) * spacing};
      if (epsilon > 0.0) {
        p.x += rng.uniform(-half, half);
        p.y += rng.uniform(-half, half);
      }
      pts.push_back(p);
    }
  }
  Domain dom;
  dom.lo = origin;
  dom.hi = {origin.x + static_cast<double>(nx) * spacing, origin.y + static_cast<double>(ny) * spacing};
  dom.periodic_x = dom.periodic_y = periodic;
  if (!periodic && epsilon > 1.0) {
    const double pad = 0.5 * (epsilon - 1.0) * spacing;
    dom.lo = dom.lo - Vec2{pad, pad};
    dom.hi = dom.hi + Vec2{pad, pad};
  }
  return PointCloud(std::move(pts), spacing, epsilon, dom, GridMeta{nx, ny, seed});
}

/// Neighborhood of one node. Offsets are x_j - x_i (minimum image); d_n is the
/// largest offset norm.
struct Stencil {
  std::size_t center = 0;
  std::vector<std::size_t> neighbors;
  std::vector<Vec2> offsets;
  double d_n = 0.0;

  std::size_t size() const { return neighbors.size(); }
};

struct NormalizedStencil {
  std::vector<Vec2> offsets_hat;
  double d_n = 0.0;

  std::size_t size() const { return offsets_hat.size(); }
};

namespace detail {

struct Candidate {
  std::size_t index;
  Vec2 offset;
  double dist2;
};

inline bool closer(const Candidate& a, const Candidate& b) {
  return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
}

inline Stencil to_stencil(std::size_t center, std::span<const Candidate> c) {
  Stencil s;
  s.center = center;
  s.neighbors.reserve(c.size());
  s.offsets.reserve(c.size());
  double max2 = 0.0;
  for (const auto& cand : c) {
    s.neighbors.push_back(cand.index);
    s.offsets.push_back(cand.offset);
    max2 = std::max(max2, cand.dist2);
  }
  s.d_n = std::sqrt(max2);
  return s;
}

}  // namespace detail

/// The n nearest nodes by minimum-image distance; ties go to the lower index.
inline Stencil knn_stencil(const PointCloud& cloud, std::size_t center, std::size_t n) {
  require(center < cloud.size(), "center index out of range");
  require(n >= 1 && n < cloud.size(), "knn: n must satisfy 1 <= n < cloud size");
  const Vec2 ext = cloud.domain().extent();
  const double max_radius = std::hypot(ext.x, ext.y);
  double radius = cloud.spacing() * (std::sqrt(static_cast<double>(n + 1) / M_PI) * 1.25 + 1.0);
  std::vector<detail::Candidate> cand;
  for (;;) {
    cand.clear();
    cloud.for_each_within(center, radius, [&](std::size_t j, Vec2 d, double d2) {
      cand.push_back({j, d, d2});
    });
    if (cand.size() >= n || radius > max_radius) break;
    radius *= 1.5;
  }
  require(cand.size() >= n, "knn: not enough reachable nodes");
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(n), cand.end(), detail::closer);
  return detail::to_stencil(center, std::span(cand).first(n));
}

/// All nodes with 0 < |x_ji| <= radius, sorted by distance then index.
inline Stencil radius_stencil(const PointCloud& cloud, std::size_t center, double radius) {
  require(center < cloud.size(), "center index out of range");
  require(radius > 0.0, "radius must be positive");
  std::vector<detail::Candidate> cand;
  cloud.for_each_within(center, radius, [&](std::size_t j, Vec2 d, double d2) { cand.push_back({j, d, d2}); });
  std::sort(cand.begin(), cand.end(), detail::closer);
  return detail::to_stencil(center, cand);
}

inline NormalizedStencil normalize(std::span<const Vec2> offsets) {
  double max2 = 0.0;
  for (const auto& o : offsets) max2 = std::max(max2, norm2(o));
  if (offsets.empty() || !(max2 > 0.0)) fail(ErrorCode::DegenerateGeometry, "stencil has no extent");
  NormalizedStencil out;
  out.d_n = std::sqrt(max2);
  out.offsets_hat.reserve(offsets.size());
  for (const auto& o : offsets) out.offsets_hat.push_back(o / out.d_n);
  return out;
}

inline NormalizedStencil normalize(const Stencil& stencil) { return normalize(stencil.offsets); }

// ---------------------------------------------------------------------------
// CSV export / import: `x,y` rows plus a JSON sidecar with generation metadata.

inline void write_cloud_csv(const PointCloud& cloud, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  out.precision(17);
  out << "x,y\n";
  for (const auto& p : cloud.points()) out << p.x << ',' << p.y << '\n';
  if (!out) fail(ErrorCode::IoError, "write failed: " + path);
}

inline std::vector<Vec2> read_cloud_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot read " + path);
  std::string line;
  std::getline(in, line);
  if (line.rfind("x,y", 0) != 0) fail(ErrorCode::IoError, "missing x,y header in " + path);
  std::vector<Vec2> pts;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    Vec2 p;
    char comma = 0;
    if (!(row >> p.x >> comma >> p.y) || comma != ',') fail(ErrorCode::IoError, "bad row in " + path);
    pts.push_back(p);
  }
  return pts;
}

}  // namespace meshfree
