#pragma once

// Star-graph message passing network: forward pass, moment loss and its
// reverse-mode gradient. Batches stack graphs row-wise, (n+1) rows per graph
// with the center first.

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "meshfree/errors.hpp"
#include "meshfree/geometry.hpp"
#include "meshfree/nemdo/model.hpp"
#include "meshfree/taylor.hpp"

namespace meshfree::nemdo {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct StencilGraph {
  std::vector<Vec2> nodes;                                 ///< center (0,0), then neighbors
  std::vector<std::pair<std::size_t, std::size_t>> edges;  ///< directed, center <-> neighbor

  std::size_t stencil_n() const { return nodes.size() - 1; }
};

inline StencilGraph build_graph(std::span<const Vec2> offsets_hat, std::size_t stencil_n) {
  if (offsets_hat.size() != stencil_n)
    fail(ErrorCode::InvalidArgument, "stencil has " + std::to_string(offsets_hat.size()) + " neighbors, model expects " +
                                         std::to_string(stencil_n));
  StencilGraph g;
  g.nodes.reserve(stencil_n + 1);
  g.nodes.push_back({0.0, 0.0});
  g.nodes.insert(g.nodes.end(), offsets_hat.begin(), offsets_hat.end());
  g.edges.reserve(2 * stencil_n);
  for (std::size_t k = 1; k <= stencil_n; ++k) {
    g.edges.emplace_back(0, k);
    g.edges.emplace_back(k, 0);
  }
  return g;
}

inline StencilGraph build_graph(const NormalizedStencil& s, std::size_t stencil_n) {
  return build_graph(std::span<const Vec2>(s.offsets_hat), stencil_n);
}

/// Node features (B(n+1) x 2) for B stencils stored contiguously.
inline RowMat stack_features(std::span<const Vec2> offsets_hat, std::size_t stencil_n) {
  require(stencil_n > 0 && offsets_hat.size() % stencil_n == 0, "offsets not a multiple of stencil_n");
  const std::size_t b = offsets_hat.size() / stencil_n;
  RowMat f = RowMat::Zero(static_cast<Eigen::Index>(b * (stencil_n + 1)), 2);
  for (std::size_t g = 0; g < b; ++g)
    for (std::size_t k = 0; k < stencil_n; ++k) {
      const auto r = static_cast<Eigen::Index>(g * (stencil_n + 1) + 1 + k);
      f(r, 0) = offsets_hat[g * stencil_n + k].x;
      f(r, 1) = offsets_hat[g * stencil_n + k].y;
    }
  return f;
}

/// Normalized monomials (B n x Q), one row per neighbor.
inline RowMat stack_monomials(std::span<const Vec2> offsets_hat, int order_p) {
  const MonomialBasis basis(order_p);
  RowMat x(static_cast<Eigen::Index>(offsets_hat.size()), static_cast<Eigen::Index>(basis.size()));
  for (std::size_t j = 0; j < offsets_hat.size(); ++j)
    basis.evaluate(offsets_hat[j], std::span<double>(x.row(static_cast<Eigen::Index>(j)).data(), basis.size()));
  return x;
}

namespace detail {

struct MlpTrace {
  std::vector<RowMat> inputs;  ///< input of each dense layer (post-tanh beyond the first)
};

struct LayerTrace {
  RowMat v;       ///< latents entering the layer
  RowMat msg;     ///< message MLP output
  RowMat alpha;   ///< B x n attention weights at the centers
  MlpTrace msg_trace;
  MlpTrace upd_trace;
};

struct ForwardTrace {
  MlpTrace embed;
  std::vector<LayerTrace> layers;
  MlpTrace output;
};

/// tanh through the vectorized exp: sign(x) (1 - e^{-2|x|}) / (1 + e^{-2|x|}).
inline void tanh_inplace(RowMat& y) {
  const Eigen::ArrayXXd t = (-2.0 * y.array().abs()).exp();
  y.array() = y.array().sign() * (1.0 - t) / (1.0 + t);
}

inline void mlp_forward(const double* theta, const MlpLayout& mlp, RowMat x, RowMat& out, MlpTrace* trace) {
  const std::size_t depth = mlp.layers.size();
  if (trace) trace->inputs.resize(depth);
  RowMat y;
  for (std::size_t k = 0; k < depth; ++k) {
    const DenseSlice& d = mlp.layers[k];
    // Copies into aligned storage: Eigen peels unaligned heads at run time, so
    // products over a raw Map would round differently per allocation.
    const RowMat w = Eigen::Map<const RowMat>(theta + d.offset, static_cast<Eigen::Index>(d.out), static_cast<Eigen::Index>(d.in));
    const Eigen::RowVectorXd b = Eigen::Map<const Eigen::RowVectorXd>(theta + d.bias_offset(), static_cast<Eigen::Index>(d.out));
    y.noalias() = x * w.transpose();
    y.rowwise() += b;
    if (k + 1 < depth) tanh_inplace(y);
    if (trace) trace->inputs[k] = std::move(x);
    x.swap(y);
  }
  out = std::move(x);
}

/// Accumulates parameter gradients into grad; writes d(loss)/d(input) to din when given.
inline void mlp_backward(const double* theta, double* grad, const MlpLayout& mlp, const MlpTrace& trace, RowMat dout,
                         RowMat* din) {
  for (std::size_t k = mlp.layers.size(); k-- > 0;) {
    const DenseSlice& d = mlp.layers[k];
    const RowMat& x = trace.inputs[k];
    const auto rows = static_cast<Eigen::Index>(d.out), cols = static_cast<Eigen::Index>(d.in);
    const RowMat w = Eigen::Map<const RowMat>(theta + d.offset, rows, cols);
    const RowMat gw = dout.transpose() * x;
    const Eigen::RowVectorXd gb = dout.colwise().sum();
    Eigen::Map<RowMat>(grad + d.offset, rows, cols) += gw;
    Eigen::Map<Eigen::RowVectorXd>(grad + d.bias_offset(), rows) += gb;
    if (k == 0 && !din) break;
    RowMat dx = dout * w;
    if (k > 0) dx.array() *= 1.0 - x.array().square();
    dout.swap(dx);
  }
  if (din) *din = std::move(dout);
}

inline void check_finite(const RowMat& m, const char* stage) {
  if (!m.allFinite()) fail(ErrorCode::NumericalFailure, std::string("non-finite activations after ") + stage);
}

}  // namespace detail

/// Runs the network on stacked node features; returns B x n normalized weights.
inline RowMat forward_batch(const Model& model, const RowMat& features, detail::ForwardTrace* trace = nullptr) {
  const ModelConfig& cfg = model.config;
  const ParameterLayout layout(cfg);
  require(model.params.size() == layout.size(), "parameter vector does not match config");
  const std::size_t n = cfg.stencil_n, stride = n + 1;
  require(features.cols() == 2 && features.rows() % static_cast<Eigen::Index>(stride) == 0,
          "feature matrix does not hold whole stencils");
  const std::size_t b = static_cast<std::size_t>(features.rows()) / stride;
  const double* theta = model.params.data();
  const double inv_sqrt_f = 1.0 / std::sqrt(static_cast<double>(cfg.latent));
  const auto ni = static_cast<Eigen::Index>(n);
  const auto f = static_cast<Eigen::Index>(cfg.latent);

  RowMat v;
  detail::mlp_forward(theta, layout.embed(), features, v, trace ? &trace->embed : nullptr);
  detail::check_finite(v, "embedding");
  if (trace) trace->layers.resize(layout.graph_layers());

  RowMat msg, agg(v.rows(), f), u(v.rows(), 2 * f);
  Eigen::VectorXd score(ni);
  for (std::size_t l = 0; l < layout.graph_layers(); ++l) {
    detail::LayerTrace* lt = trace ? &trace->layers[l] : nullptr;
    detail::mlp_forward(theta, layout.message(l), v, msg, lt ? &lt->msg_trace : nullptr);
    if (lt) lt->alpha.resize(static_cast<Eigen::Index>(b), ni);
    for (std::size_t g = 0; g < b; ++g) {
      const auto c = static_cast<Eigen::Index>(g * stride);
      // Center attends over its neighbors; each neighbor has only the center.
      score.noalias() = v.middleRows(c + 1, ni) * v.row(c).transpose();
      score *= inv_sqrt_f;
      score = (score.array() - score.maxCoeff()).exp().matrix();
      score /= score.sum();
      agg.row(c).noalias() = score.transpose() * msg.middleRows(c + 1, ni);
      agg.middleRows(c + 1, ni).rowwise() = msg.row(c);
      if (lt) lt->alpha.row(static_cast<Eigen::Index>(g)) = score.transpose();
    }
    u.leftCols(f) = v;
    u.rightCols(f) = agg;
    if (lt) {
      lt->v = v;
      lt->msg = msg;
    }
    detail::mlp_forward(theta, layout.update(l), u, v, lt ? &lt->upd_trace : nullptr);
    detail::check_finite(v, ("graph layer " + std::to_string(l)).c_str());
  }

  RowMat out;
  detail::mlp_forward(theta, layout.output(), std::move(v), out, trace ? &trace->output : nullptr);
  detail::check_finite(out, "output");
  RowMat w(static_cast<Eigen::Index>(b), ni);
  for (std::size_t g = 0; g < b; ++g)
    w.row(static_cast<Eigen::Index>(g)) =
        out.col(0).segment(static_cast<Eigen::Index>(g * stride + 1), ni).transpose();
  return w;
}

inline std::vector<double> forward(const Model& model, const StencilGraph& graph) {
  require(graph.stencil_n() == model.config.stencil_n, "graph size does not match model");
  const RowMat w = forward_batch(model, stack_features(std::span<const Vec2>(graph.nodes).subspan(1), graph.stencil_n()));
  return {w.data(), w.data() + w.size()};
}

/// Sum over stencils of ||X_hat^T w_hat - M||^2; monomials is (B n x Q).
inline double moment_loss_sum(const RowMat& w_hat, const RowMat& monomials, std::span<const double> target,
                              RowMat* dloss_dw = nullptr) {
  const auto b = w_hat.rows(), n = w_hat.cols(), q = monomials.cols();
  require(monomials.rows() == b * n && static_cast<std::size_t>(q) == target.size(), "moment batch shape mismatch");
  const Eigen::Map<const Eigen::RowVectorXd> m(target.data(), q);
  if (dloss_dw) dloss_dw->resize(b, n);
  double total = 0.0;
  for (Eigen::Index g = 0; g < b; ++g) {
    const auto x = monomials.middleRows(g * n, n);
    const Eigen::RowVectorXd r = w_hat.row(g) * x - m;
    total += r.squaredNorm();
    if (dloss_dw) dloss_dw->row(g).noalias() = 2.0 * r * x.transpose();
  }
  return total;
}

/// Adds d(scale * loss_sum)/d(theta) to grad and returns loss_sum.
inline double accumulate_gradient(const Model& model, const RowMat& features, const RowMat& monomials,
                                  std::span<const double> target, double scale, std::span<double> grad) {
  const ParameterLayout layout(model.config);
  require(grad.size() == layout.size(), "gradient buffer does not match parameters");
  detail::ForwardTrace trace;
  const RowMat w = forward_batch(model, features, &trace);
  RowMat dw;
  const double loss = moment_loss_sum(w, monomials, target, &dw);
  dw *= scale;

  const double* theta = model.params.data();
  double* g = grad.data();
  const std::size_t n = model.config.stencil_n, stride = n + 1;
  const auto ni = static_cast<Eigen::Index>(n);
  const auto f = static_cast<Eigen::Index>(model.config.latent);
  const auto b = w.rows();
  const double inv_sqrt_f = 1.0 / std::sqrt(static_cast<double>(model.config.latent));

  RowMat dout = RowMat::Zero(features.rows(), 1);
  for (Eigen::Index s = 0; s < b; ++s)
    dout.col(0).segment(s * static_cast<Eigen::Index>(stride) + 1, ni) = dw.row(s).transpose();
  RowMat dv;
  detail::mlp_backward(theta, g, layout.output(), trace.output, std::move(dout), &dv);

  RowMat du, dmsg, dmsg_in;
  Eigen::VectorXd da(ni), ds(ni);
  for (std::size_t l = layout.graph_layers(); l-- > 0;) {
    const detail::LayerTrace& lt = trace.layers[l];
    detail::mlp_backward(theta, g, layout.update(l), lt.upd_trace, std::move(dv), &du);
    dv = du.leftCols(f);
    const auto dagg = du.rightCols(f);
    dmsg = RowMat::Zero(du.rows(), f);
    for (Eigen::Index s = 0; s < b; ++s) {
      const Eigen::Index c = s * static_cast<Eigen::Index>(stride);
      const Eigen::VectorXd alpha = lt.alpha.row(s).transpose();
      dmsg.row(c) += dagg.middleRows(c + 1, ni).colwise().sum();
      dmsg.middleRows(c + 1, ni).noalias() += alpha * dagg.row(c);
      da.noalias() = lt.msg.middleRows(c + 1, ni) * dagg.row(c).transpose();
      ds = (alpha.array() * (da.array() - alpha.dot(da))).matrix() * inv_sqrt_f;
      dv.row(c).noalias() += ds.transpose() * lt.v.middleRows(c + 1, ni);
      dv.middleRows(c + 1, ni).noalias() += ds * lt.v.row(c);
    }
    detail::mlp_backward(theta, g, layout.message(l), lt.msg_trace, std::move(dmsg), &dmsg_in);
    dv += dmsg_in;
  }
  detail::mlp_backward(theta, g, layout.embed(), trace.embed, std::move(dv), nullptr);
  return loss;
}

/// A set of normalized stencils prepared for batched evaluation.
struct PreparedBatch {
  RowMat features;
  RowMat monomials;
  std::size_t count = 0;

  static PreparedBatch make(std::span<const Vec2> offsets_hat, std::size_t stencil_n, int order_p) {
    return {stack_features(offsets_hat, stencil_n), stack_monomials(offsets_hat, order_p),
            offsets_hat.size() / stencil_n};
  }
};

/// (1/N) sum_i || sum_j X_hat_ji w_hat_ji - M ||^2.
inline double loss(const Model& model, const PreparedBatch& batch) {
  require(batch.count > 0, "empty batch");
  const auto target = target_moments(model.config.kind, model.config.order_p);
  return moment_loss_sum(forward_batch(model, batch.features), batch.monomials, target) /
         static_cast<double>(batch.count);
}

inline std::vector<double> grad(const Model& model, const PreparedBatch& batch) {
  require(batch.count > 0, "empty batch");
  const auto target = target_moments(model.config.kind, model.config.order_p);
  std::vector<double> g(model.params.size(), 0.0);
  accumulate_gradient(model, batch.features, batch.monomials, target, 1.0 / static_cast<double>(batch.count), g);
  return g;
}

}  // namespace meshfree::nemdo
