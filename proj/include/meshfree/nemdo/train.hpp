#pragma once

// Adam with a reduce-on-plateau schedule over the moment loss.
//
// Each minibatch is cut into fixed chunks whose gradients are summed in chunk
// order, so results do not depend on the number of worker threads.

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <optional>
#include <thread>
#include <vector>

#include "meshfree/errors.hpp"
#include "meshfree/nemdo/checkpoint.hpp"
#include "meshfree/nemdo/dataset.hpp"
#include "meshfree/nemdo/model.hpp"
#include "meshfree/nemdo/network.hpp"
#include "meshfree/nemdo/serialize.hpp"
#include "meshfree/rng.hpp"

namespace meshfree::nemdo {

struct TrainConfig {
  double learning_rate = 2e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::size_t epochs = 300;
  std::size_t batch_size = 64;
  double plateau_factor = 0.5;
  std::size_t plateau_patience = 50;
  double plateau_threshold = 1e-4;  ///< relative improvement that resets patience
  double min_lr = 1e-7;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  double time_limit_seconds = 0.0;  ///< 0 = unlimited

  void validate() const {
    require(learning_rate > 0.0, "learning rate must be positive");
    require(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0, "Adam betas must lie in (0, 1)");
    require(adam_epsilon > 0.0, "Adam epsilon must be positive");
    require(batch_size >= 1, "batch size must be positive");
    require(plateau_factor > 0.0 && plateau_factor < 1.0, "plateau factor must lie in (0, 1)");
    require(min_lr >= 0.0, "min_lr must be non-negative");
    require(threads >= 1, "threads must be >= 1");
  }

  nlohmann::json to_json() const {
    return {{"learning_rate", learning_rate}, {"beta1", beta1},
            {"beta2", beta2},                 {"adam_epsilon", adam_epsilon},
            {"epochs", epochs},               {"batch_size", batch_size},
            {"plateau_factor", plateau_factor}, {"plateau_patience", plateau_patience},
            {"plateau_threshold", plateau_threshold}, {"min_lr", min_lr},
            {"seed", seed},                   {"time_limit_seconds", time_limit_seconds}};
  }
};

struct EpochRecord {
  std::size_t epoch = 0;  ///< 0 = before any update
  double train_loss = 0.0;
  double val_loss = 0.0;
  double learning_rate = 0.0;
  double seconds = 0.0;  ///< wall time since training started
};

inline void to_json(nlohmann::json& j, const EpochRecord& r) {
  j = {{"epoch", r.epoch}, {"train_loss", r.train_loss}, {"val_loss", r.val_loss},
       {"learning_rate", r.learning_rate}, {"seconds", r.seconds}};
}
inline void from_json(const nlohmann::json& j, EpochRecord& r) {
  r.epoch = j.at("epoch");
  r.train_loss = j.at("train_loss");
  r.val_loss = j.at("val_loss");
  r.learning_rate = j.at("learning_rate");
  r.seconds = j.at("seconds");
}

class Adam {
 public:
  Adam(std::size_t n, double beta1, double beta2, double eps) : m_(n, 0.0), v_(n, 0.0), b1_(beta1), b2_(beta2), eps_(eps) {}

  void step(std::vector<double>& theta, const std::vector<double>& g, double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    for (std::size_t k = 0; k < theta.size(); ++k) {
      m_[k] = b1_ * m_[k] + (1.0 - b1_) * g[k];
      v_[k] = b2_ * v_[k] + (1.0 - b2_) * g[k] * g[k];
      theta[k] -= lr * (m_[k] / c1) / (std::sqrt(v_[k] / c2) + eps_);
    }
  }

  std::uint64_t steps() const { return t_; }
  std::vector<double>& first() { return m_; }
  std::vector<double>& second() { return v_; }
  void set_steps(std::uint64_t t) { t_ = t; }

 private:
  std::vector<double> m_, v_;
  double b1_, b2_, eps_;
  std::uint64_t t_ = 0;
};

/// Reduce-on-plateau on the validation loss.
struct PlateauScheduler {
  double lr = 0.0;
  double best = INFINITY;
  std::size_t bad_epochs = 0;

  void observe(double val, const TrainConfig& cfg) {
    if (val < best * (1.0 - cfg.plateau_threshold)) {
      best = val;
      bad_epochs = 0;
      return;
    }
    if (++bad_epochs > cfg.plateau_patience) {
      lr = std::max(lr * cfg.plateau_factor, cfg.min_lr);
      bad_epochs = 0;
    }
  }
};

/// Everything needed to continue an interrupted run.
struct TrainState {
  Model model;
  Model best;
  double best_val = INFINITY;
  std::size_t best_epoch = 0;
  std::size_t epoch = 0;  ///< completed epochs
  PlateauScheduler scheduler;
  std::vector<double> adam_m, adam_v;
  std::uint64_t adam_t = 0;
  std::vector<EpochRecord> log;
};

inline constexpr std::uint32_t kTrainStateVersion = 1;

inline void save_train_state(const std::filesystem::path& path, const TrainState& s, const TrainConfig& tc) {
  const nlohmann::json header = {{"config", s.model.config.to_json()},
                                 {"config_hash", s.model.config.hash()},
                                 {"train_config", tc.to_json()},
                                 {"epoch", s.epoch},
                                 {"best_val", s.best_val},
                                 {"best_epoch", s.best_epoch},
                                 {"lr", s.scheduler.lr},
                                 {"plateau_best", s.scheduler.best},
                                 {"bad_epochs", s.scheduler.bad_epochs},
                                 {"adam_t", s.adam_t},
                                 {"log", s.log}};
  io::Writer w("NMDOSTAT", kTrainStateVersion, header);
  w.put_array(s.model.params);
  w.put_array(s.best.params);
  w.put_array(s.adam_m);
  w.put_array(s.adam_v);
  w.save(path);
}

inline TrainState load_train_state(const std::filesystem::path& path, const ModelConfig& expected) {
  io::Reader r(path, "NMDOSTAT", kTrainStateVersion);
  const auto& h = r.header();
  TrainState s;
  s.model.config = ModelConfig::from_json(h.at("config"));
  if (!(s.model.config == expected))
    fail(ErrorCode::IncompatibleCheckpoint, path.string() + ": saved run used a different model config");
  s.best.config = s.model.config;
  s.epoch = h.at("epoch");
  s.best_val = h.at("best_val").is_null() ? INFINITY : h.at("best_val").get<double>();
  s.best_epoch = h.at("best_epoch");
  s.scheduler.lr = h.at("lr");
  s.scheduler.best = h.at("plateau_best").is_null() ? INFINITY : h.at("plateau_best").get<double>();
  s.scheduler.bad_epochs = h.at("bad_epochs");
  s.adam_t = h.at("adam_t");
  s.log = h.at("log").get<std::vector<EpochRecord>>();
  s.model.params = r.get_array<double>();
  s.best.params = r.get_array<double>();
  s.adam_m = r.get_array<double>();
  s.adam_v = r.get_array<double>();
  r.expect_end();
  const std::size_t n = ParameterLayout(expected).size();
  if (s.model.params.size() != n || s.best.params.size() != n || s.adam_m.size() != n || s.adam_v.size() != n)
    fail(ErrorCode::IncompatibleCheckpoint, path.string() + ": state arrays do not match the model");
  return s;
}

struct TrainOptions {
  std::optional<std::filesystem::path> state_path;       ///< written after every epoch
  std::optional<std::filesystem::path> best_checkpoint;  ///< best-val parameters
  std::optional<TrainState> resume;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  Model best;
  Model last;
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;
  double best_val = INFINITY;
  bool stopped_on_time = false;
};

namespace detail {

inline constexpr std::size_t kChunk = 32;

/// Stencil data for one split, kept pre-stacked so batches are row copies.
struct SplitData {
  std::vector<std::size_t> ids;
  RowMat features;   ///< (count (n+1)) x 2
  RowMat monomials;  ///< (count n) x Q

  SplitData(const Dataset& ds, Split split, int order_p) : ids(ds.indices(split)) {
    const auto offs = ds.gather(ids);
    features = stack_features(offs, ds.stencil_n());
    monomials = stack_monomials(offs, order_p);
  }

  std::size_t size() const { return ids.size(); }

  void gather(std::span<const std::size_t> local, std::size_t n, RowMat& f, RowMat& x) const {
    const auto rows_f = static_cast<Eigen::Index>(n + 1), rows_x = static_cast<Eigen::Index>(n);
    f.resize(static_cast<Eigen::Index>(local.size()) * rows_f, 2);
    x.resize(static_cast<Eigen::Index>(local.size()) * rows_x, monomials.cols());
    for (std::size_t k = 0; k < local.size(); ++k) {
      const auto i = static_cast<Eigen::Index>(local[k]), kk = static_cast<Eigen::Index>(k);
      f.middleRows(kk * rows_f, rows_f) = features.middleRows(i * rows_f, rows_f);
      x.middleRows(kk * rows_x, rows_x) = monomials.middleRows(i * rows_x, rows_x);
    }
  }
};

/// Mean loss over a whole split, evaluated in fixed-size blocks.
inline double split_loss(const Model& model, const SplitData& data, std::span<const double> target) {
  if (data.size() == 0) return NAN;
  const std::size_t n = model.config.stencil_n, block = 1024;
  std::vector<std::size_t> local;
  RowMat f, x;
  double total = 0.0;
  for (std::size_t start = 0; start < data.size(); start += block) {
    local.clear();
    for (std::size_t k = start; k < std::min(data.size(), start + block); ++k) local.push_back(k);
    data.gather(local, n, f, x);
    total += moment_loss_sum(forward_batch(model, f), x, target);
  }
  return total / static_cast<double>(data.size());
}

}  // namespace detail

/// Mean validation loss of a model on one split of a dataset.
inline double evaluate_loss(const Model& model, const Dataset& ds, Split split) {
  const detail::SplitData data(ds, split, model.config.order_p);
  return detail::split_loss(model, data, target_moments(model.config.kind, model.config.order_p));
}

/// Per-monomial mean absolute moment residual of the network on one split,
/// in normalized coordinates.
inline std::vector<double> split_moment_mae(const Model& model, const Dataset& ds, Split split) {
  const ModelConfig& mc = model.config;
  require(ds.stencil_n() == mc.stencil_n, "dataset stencil_n does not match the model");
  const auto ids = ds.indices(split);
  require(!ids.empty(), "split is empty");
  const std::size_t n = mc.stencil_n, block = 1024;
  std::vector<double> mae(basis_size(mc.order_p), 0.0), w(n);
  for (std::size_t start = 0; start < ids.size(); start += block) {
    const auto idx = std::span<const std::size_t>(ids).subspan(start, std::min(block, ids.size() - start));
    const auto offs = ds.gather(idx);
    const RowMat w_hat = forward_batch(model, stack_features(offs, n));
    for (std::size_t s = 0; s < idx.size(); ++s) {
      for (std::size_t j = 0; j < n; ++j) w[j] = w_hat(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(j));
      const auto r = moment_residual(std::span<const Vec2>(offs).subspan(s * n, n), w, mc.kind, mc.order_p, 1.0);
      for (std::size_t q = 0; q < mae.size(); ++q) mae[q] += std::abs(r[q]);
    }
  }
  for (double& m : mae) m /= static_cast<double>(ids.size());
  return mae;
}

inline TrainResult train(const Dataset& ds, const ModelConfig& mc, const TrainConfig& tc,
                         const TrainOptions& opts = {}) {
  mc.validate();
  tc.validate();
  if (ds.stencil_n() != mc.stencil_n)
    fail(ErrorCode::InvalidArgument, "dataset stencil_n " + std::to_string(ds.stencil_n()) +
                                         " does not match model stencil_n " + std::to_string(mc.stencil_n));
  const detail::SplitData train_data(ds, Split::Train, mc.order_p);
  const detail::SplitData val_data(ds, Split::Val, mc.order_p);
  require(train_data.size() > 0, "dataset has no training stencils");
  const detail::SplitData& monitor = val_data.size() > 0 ? val_data : train_data;
  const std::vector<double> target = target_moments(mc.kind, mc.order_p);
  const std::size_t n = mc.stencil_n;
  const auto clock_start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count(); };

  TrainState st;
  if (opts.resume) {
    st = *opts.resume;
    if (!(st.model.config == mc)) fail(ErrorCode::IncompatibleCheckpoint, "resume state has a different model config");
  } else {
    st.model = Model::initialize(mc, Rng(tc.seed).split(1).next_u64());
    st.best = st.model;
    st.scheduler.lr = tc.learning_rate;
    st.adam_m.assign(st.model.params.size(), 0.0);
    st.adam_v.assign(st.model.params.size(), 0.0);
    const double l0 = detail::split_loss(st.model, train_data, target);
    const double v0 = detail::split_loss(st.model, monitor, target);
    st.best_val = v0;
    st.log.push_back({0, l0, v0, st.scheduler.lr, 0.0});
    if (opts.on_epoch) opts.on_epoch(st.log.back());
  }
  const double time_offset = st.log.empty() ? 0.0 : st.log.back().seconds;

  Adam adam(st.model.params.size(), tc.beta1, tc.beta2, tc.adam_epsilon);
  adam.first() = st.adam_m;
  adam.second() = st.adam_v;
  adam.set_steps(st.adam_t);

  const Rng root(tc.seed);
  std::vector<std::size_t> order(train_data.size());
  std::vector<double> grad(st.model.params.size());
  std::vector<std::vector<double>> chunk_grads;
  TrainResult result;

  auto save_best = [&] {
    if (opts.best_checkpoint)
      save_checkpoint(*opts.best_checkpoint, st.best, {{"epoch", st.best_epoch}, {"val_loss", st.best_val}});
  };
  auto diverged = [&](const std::string& why) {
    save_best();
    fail(ErrorCode::NumericalFailure, "training diverged at epoch " + std::to_string(st.epoch + 1) + ": " + why +
                                          (opts.best_checkpoint ? "; last good parameters in " +
                                                                      opts.best_checkpoint->string()
                                                                : std::string()));
  };

  while (st.epoch < tc.epochs) {
    if (tc.time_limit_seconds > 0.0 && elapsed() + time_offset > tc.time_limit_seconds) {
      result.stopped_on_time = true;
      break;
    }
    Rng rng = root.split(1000 + st.epoch);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order.begin(), order.end());

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
      const std::size_t stop = std::min(order.size(), start + tc.batch_size);
      const double scale = 1.0 / static_cast<double>(stop - start);
      const std::size_t n_chunks = (stop - start + detail::kChunk - 1) / detail::kChunk;
      chunk_grads.resize(n_chunks);
      std::vector<double> chunk_loss(n_chunks, 0.0);
      std::vector<std::string> chunk_error(n_chunks);
      auto run_chunk = [&](std::size_t c) {
        const std::size_t a = start + c * detail::kChunk, b = std::min(stop, a + detail::kChunk);
        RowMat f, x;
        train_data.gather(std::span<const std::size_t>(order).subspan(a, b - a), n, f, x);
        chunk_grads[c].assign(grad.size(), 0.0);
        try {
          chunk_loss[c] = accumulate_gradient(st.model, f, x, target, scale, chunk_grads[c]);
        } catch (const Error& e) {
          chunk_error[c] = e.what();
        }
      };
      const std::size_t workers = std::min(tc.threads, n_chunks);
      if (workers <= 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) run_chunk(c);
      } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < workers; ++t)
          pool.emplace_back([&, t] {
            for (std::size_t c = t; c < n_chunks; c += workers) run_chunk(c);
          });
        for (auto& th : pool) th.join();
      }
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t c = 0; c < n_chunks; ++c) {
        if (!chunk_error[c].empty()) diverged(chunk_error[c]);
        batch_loss += chunk_loss[c];
        for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += chunk_grads[c][k];
      }
      if (!std::isfinite(batch_loss)) diverged("non-finite batch loss");
      epoch_loss += batch_loss;
      adam.step(st.model.params, grad, st.scheduler.lr);
    }

    ++st.epoch;
    double val = NAN;
    try {
      val = detail::split_loss(st.model, monitor, target);
    } catch (const Error& e) {
      diverged(e.what());
    }
    if (!std::isfinite(val)) diverged("non-finite validation loss");
    st.log.push_back({st.epoch, epoch_loss / static_cast<double>(order.size()), val, st.scheduler.lr,
                      time_offset + elapsed()});
    if (val < st.best_val) {
      st.best_val = val;
      st.best_epoch = st.epoch;
      st.best = st.model;
      save_best();
    }
    st.scheduler.observe(val, tc);
    st.adam_m = adam.first();
    st.adam_v = adam.second();
    st.adam_t = adam.steps();
    if (opts.state_path) save_train_state(*opts.state_path, st, tc);
    if (opts.on_epoch) opts.on_epoch(st.log.back());
  }
  if (!opts.resume && st.best_epoch == 0) save_best();

  result.best = st.best;
  result.last = st.model;
  result.log = st.log;
  result.best_epoch = st.best_epoch;
  result.best_val = st.best_val;
  return result;
}

}  // namespace meshfree::nemdo
