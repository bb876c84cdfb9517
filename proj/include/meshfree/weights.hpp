#pragma once

#include <cmath>
#include <span>
#include <string_view>
#include <vector>

#include "meshfree/errors.hpp"
#include "meshfree/geometry.hpp"
#include "meshfree/taylor.hpp"

namespace meshfree {

enum class Provenance { SPH, LABFM, NeMDO };

inline std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::SPH: return "SPH";
    case Provenance::LABFM: return "LABFM";
    case Provenance::NeMDO: return "NeMDO";
  }
  return "?";
}

/// Stencil weights w_ji for one node, aligned with the stencil's neighbor list.
struct OperatorWeights {
  std::vector<double> weights;
  OperatorKind kind = OperatorKind::Dx;
  Provenance provenance = Provenance::SPH;

  std::size_t size() const { return weights.size(); }

  bool all_finite() const {
    for (double w : weights)
      if (!std::isfinite(w)) return false;
    return true;
  }
};

/// L(phi)_i = sum_j (phi_j - phi_i) w_ji.
inline double apply(const Stencil& stencil, std::span<const double> w, std::span<const double> field) {
  const double phi_i = field[stencil.center];
  double acc = 0.0;
  for (std::size_t j = 0; j < stencil.size(); ++j) acc += (field[stencil.neighbors[j]] - phi_i) * w[j];
  return acc;
}

inline double apply(const Stencil& stencil, const OperatorWeights& w, std::span<const double> field) {
  require(w.size() == stencil.size(), "weights do not match stencil");
  return apply(stencil, std::span<const double>(w.weights), field);
}

}  // namespace meshfree
