// meshfree: dataset generation, NeMDO training and operator diagnostics.
//
// Every subcommand writes <out>/manifest.json before doing any work; the
// manifest holds the fully resolved configuration and is enough to rerun.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "meshfree/diagnostics/convergence.hpp"
#include "meshfree/diagnostics/dump.hpp"
#include "meshfree/diagnostics/modal.hpp"
#include "meshfree/diagnostics/moments.hpp"
#include "meshfree/diagnostics/spectrum.hpp"
#include "meshfree/diagnostics/timing.hpp"
#include "meshfree/nemdo/checkpoint.hpp"
#include "meshfree/nemdo/dataset.hpp"
#include "meshfree/nemdo/provider.hpp"
#include "meshfree/nemdo/train.hpp"
#include "meshfree/solver/tgv.hpp"

#ifndef MESHFREE_REVISION
#define MESHFREE_REVISION "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace meshfree;

namespace {

struct Common {
  std::string out;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
};

fs::path output_dir(const Common& c, const std::string& sub) {
  if (!c.out.empty()) return c.out;
  const char* root = std::getenv("MESHFREE_OUT_ROOT");
  return fs::path(root && *root ? root : "runs") / sub;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void write_manifest(const fs::path& dir, const std::string& sub, const Common& c, const json& config) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
  write_json(dir / "manifest.json", {{"subcommand", sub},
                                     {"config", config},
                                     {"seed", c.seed},
                                     {"threads", c.threads},
                                     {"revision", MESHFREE_REVISION},
                                     {"output_dir", fs::absolute(dir).string()},
                                     {"started", utc_now()}});
}

json report_meta(const fs::path& dir, json extra) {
  extra["manifest"] = (dir / "manifest.json").string();
  return extra;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<OperatorKind> parse_kinds(const std::string& s) {
  std::vector<OperatorKind> out;
  for (const auto& k : split_list(s)) out.push_back(parse_operator_kind(k));
  require(!out.empty(), "no operator given");
  return out;
}

// ---------------------------------------------------------------------------
// gen-cloud

struct CloudArgs {
  std::size_t nx = 32, ny = 32;
  double spacing = 1.0 / 32.0;
  double epsilon = 0.5;
  bool bounded = false;
};

int cmd_gen_cloud(const Common& c, const CloudArgs& a) {
  const fs::path dir = output_dir(c, "gen-cloud");
  write_manifest(dir, "gen-cloud", c,
                 {{"nx", a.nx}, {"ny", a.ny}, {"spacing", a.spacing}, {"epsilon", a.epsilon}, {"periodic", !a.bounded}});
  const PointCloud cloud = generate_perturbed_grid(a.nx, a.ny, a.spacing, a.epsilon, c.seed, {0.0, 0.0}, !a.bounded);
  write_cloud(dir / "cloud", cloud);
  std::printf("wrote %zu nodes to %s\n", cloud.size(), (dir / "cloud.csv").c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// gen-data

struct GenDataArgs {
  nemdo::DatasetSpec spec;
  std::string file;
};

int cmd_gen_data(const Common& c, GenDataArgs a) {
  a.spec.seed = c.seed;
  a.spec.validate();
  const fs::path dir = output_dir(c, "gen-data");
  const fs::path file = a.file.empty() ? dir / "dataset.bin" : fs::path(a.file);
  json cfg = a.spec.to_json();
  cfg["file"] = file.string();
  write_manifest(dir, "gen-data", c, cfg);
  const nemdo::Dataset ds = nemdo::generate_dataset(a.spec);
  nemdo::save_dataset(ds, file);
  std::printf("stencils %zu (train %zu, val %zu, test %zu), stencil_n %zu, epsilon %g -> %s\n", ds.size(),
              ds.indices(nemdo::Split::Train).size(), ds.indices(nemdo::Split::Val).size(),
              ds.indices(nemdo::Split::Test).size(), ds.stencil_n(), a.spec.epsilon, file.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string dataset;
  std::string op = "dx";
  nemdo::ModelConfig model;
  nemdo::TrainConfig train;
  bool resume = false;
};

int cmd_train(const Common& c, TrainArgs a) {
  require(!a.dataset.empty(), "--dataset is required");
  a.model.kind = parse_operator_kind(a.op);
  a.train.seed = c.seed;
  a.train.threads = c.threads;
  a.model.validate();
  a.train.validate();
  const fs::path dir = output_dir(c, "train");
  const fs::path ckpt = dir / "model.ckpt", state = dir / "train_state.bin";
  write_manifest(dir, "train", c,
                 {{"dataset", a.dataset},
                  {"model", a.model.to_json()},
                  {"train", a.train.to_json()},
                  {"target_moments", target_moments(a.model.kind, a.model.order_p)},
                  {"resume", a.resume},
                  {"checkpoint", ckpt.string()}});

  const nemdo::Dataset ds = nemdo::load_dataset(a.dataset);
  if (ds.stencil_n() != a.model.stencil_n)
    fail(ErrorCode::InvalidArgument, "dataset has stencil_n " + std::to_string(ds.stencil_n()) + " but the model uses " +
                                         std::to_string(a.model.stencil_n));
  nemdo::TrainOptions opts;
  opts.state_path = state;
  opts.best_checkpoint = ckpt;
  if (a.resume) {
    if (!fs::exists(state)) fail(ErrorCode::IoError, "nothing to resume: " + state.string() + " not found");
    opts.resume = nemdo::load_train_state(state, a.model);
    std::printf("resuming after epoch %zu\n", opts.resume->epoch);
  }
  opts.on_epoch = [](const nemdo::EpochRecord& r) {
    if (r.epoch % 10 == 0)
      std::printf("epoch %4zu  train %.4e  val %.4e  lr %.2e  %.1fs\n", r.epoch, r.train_loss, r.val_loss,
                  r.learning_rate, r.seconds);
    std::fflush(stdout);
  };
  const nemdo::TrainResult res = nemdo::train(ds, a.model, a.train, opts);

  CsvTable log({"epoch", "train_loss", "val_loss", "learning_rate", "seconds"});
  for (const auto& r : res.log) log.row().add(r.epoch).add(r.train_loss).add(r.val_loss).add(r.learning_rate).add(r.seconds);
  const auto split = ds.indices(nemdo::Split::Test).empty() ? nemdo::Split::Val : nemdo::Split::Test;
  const auto mae = nemdo::split_moment_mae(res.best, ds, split);
  double mean = 0.0;
  for (double m : mae) mean += m / static_cast<double>(mae.size());
  write_report(dir / "train_log", log,
               report_meta(dir, {{"best_epoch", res.best_epoch},
                                 {"best_val_loss", res.best_val},
                                 {"stopped_on_time", res.stopped_on_time},
                                 {"heldout_split", split == nemdo::Split::Test ? "test" : "val"},
                                 {"heldout_moment_mae", mae},
                                 {"heldout_mean_mae", mean},
                                 {"parameters", res.best.params.size()}}));
  std::printf("best epoch %zu, val loss %.4e, held-out mean moment MAE %.4e -> %s\n", res.best_epoch, res.best_val,
              mean, ckpt.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// diagnose

struct DiagnoseArgs {
  std::string suite;
  std::string providers = "sph-quintic,sph-wendland,labfm";
  std::string op = "dx";
  int p = 2;
  std::string checkpoint;
  std::string laplacian_checkpoint;
  double epsilon = 0.5;
  // moments
  std::size_t clouds = 4;
  std::size_t side = 32;
  // convergence
  std::string resolutions = "20,40,80,160";
  std::size_t trials = 1;
  // modal
  std::size_t k_points = 64;
  double ratio = 0.0;
  // timing
  std::size_t repeats = 5;
  bool include_search = false;
  // tgv
  double s = 1.0 / 32.0;
  std::string solver_config;
  double end_time = 1.0;
  double filter = -1.0;
  std::size_t samples = 10;
  bool snapshots = false;
  // weights
  std::size_t dump_nodes = 50;
};

std::unique_ptr<OperatorProvider> make_provider(const std::string& name, const DiagnoseArgs& a) {
  if (name == "sph-quintic") return std::make_unique<SphProvider>(KernelType::QuinticSpline);
  if (name == "sph-wendland") return std::make_unique<SphProvider>(KernelType::WendlandC2);
  if (name == "labfm") return std::make_unique<LabfmProvider>(a.p);
  if (name.rfind("labfm-p", 0) == 0) return std::make_unique<LabfmProvider>(std::stoi(name.substr(7)));
  if (name == "nemdo") {
    if (a.checkpoint.empty() && a.laplacian_checkpoint.empty())
      fail(ErrorCode::InvalidArgument, "provider 'nemdo' needs --checkpoint and/or --laplacian-checkpoint");
    std::optional<nemdo::Model> grad, lap;
    if (!a.checkpoint.empty()) grad = nemdo::load_checkpoint(a.checkpoint);
    if (!a.laplacian_checkpoint.empty()) lap = nemdo::load_checkpoint(a.laplacian_checkpoint);
    return std::make_unique<nemdo::NemdoProvider>(std::move(grad), std::move(lap));
  }
  fail(ErrorCode::InvalidArgument, "unknown provider '" + name + "'");
}

struct ProviderSet {
  std::vector<std::unique_ptr<OperatorProvider>> owned;
  std::vector<const OperatorProvider*> ptrs;
};

ProviderSet make_providers(const DiagnoseArgs& a) {
  ProviderSet set;
  for (const auto& name : split_list(a.providers)) {
    set.owned.push_back(make_provider(name, a));
    set.ptrs.push_back(set.owned.back().get());
  }
  require(!set.ptrs.empty(), "no providers given");
  return set;
}

json provider_meta(const ProviderSet& ps) {
  json j = json::array();
  for (const auto* p : ps.ptrs) j.push_back(p->name());
  return j;
}

std::vector<std::size_t> parse_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(s)) out.push_back(static_cast<std::size_t>(std::stoul(item)));
  return out;
}

int suite_moments(const Common& c, const DiagnoseArgs& a, const ProviderSet& ps, const fs::path& dir) {
  std::vector<PointCloud> clouds;
  const Rng root(c.seed);
  for (std::size_t k = 0; k < a.clouds; ++k)
    clouds.push_back(generate_perturbed_grid(a.side, a.side, 1.0 / static_cast<double>(a.side), a.epsilon,
                                             root.split(k).next_u64()));
  std::vector<MomentReport> reps;
  for (const auto* p : ps.ptrs)
    for (OperatorKind k : parse_kinds(a.op))
      if (p->supports(k)) reps.push_back(moment_table(*p, k, clouds, a.p));
  for (const auto& r : reps)
    std::printf("%-14s %-10s mean MAE %.3e over %zu stencils\n", r.provider.c_str(), std::string(to_string(r.kind)).c_str(),
                r.mean_mae(), r.stencils);
  write_report(dir / "moments", moment_csv(reps),
               report_meta(dir, {{"providers", provider_meta(ps)}, {"epsilon", a.epsilon}, {"clouds", a.clouds},
                                 {"side", a.side}, {"seed", c.seed}, {"residual_scale", "stencil d_n"}}));
  return 0;
}

int suite_convergence(const Common& c, const DiagnoseArgs& a, const ProviderSet& ps, const fs::path& dir) {
  ConvergenceConfig cfg;
  cfg.resolutions = parse_sizes(a.resolutions);
  cfg.epsilon = a.epsilon;
  cfg.trials = a.trials;
  cfg.seed = c.seed;
  for (OperatorKind k : parse_kinds(a.op)) {
    const ConvergenceReport rep = convergence_study(ps.ptrs, k, cfg);
    for (const auto& s : rep.series) std::printf("%-14s %-10s slope %.3f\n", s.provider.c_str(), std::string(to_string(k)).c_str(), s.slope);
    write_report(dir / ("convergence_" + std::string(to_string(k))), convergence_csv(rep),
                 report_meta(dir, {{"providers", provider_meta(ps)}, {"epsilon", a.epsilon}, {"seed", c.seed},
                                   {"resolutions", cfg.resolutions}, {"trials", cfg.trials},
                                   {"fit_points", cfg.fit_points}, {"interior_margin", rep.margin}}));
  }
  return 0;
}

int suite_spectrum(const Common& c, const DiagnoseArgs& a, const ProviderSet& ps, const fs::path& dir) {
  const PointCloud cloud = generate_perturbed_grid(a.side, a.side, 1.0 / static_cast<double>(a.side), a.epsilon, c.seed);
  for (const auto* p : ps.ptrs)
    for (OperatorKind k : parse_kinds(a.op)) {
      const SpectrumReport rep = spectrum_report(*p, cloud, k);
      std::printf("%-14s %-10s max Re %.3e  max|Im| %.3e\n", rep.provider.c_str(), std::string(to_string(k)).c_str(),
                  rep.max_real(), rep.max_abs_imag());
      write_report(dir / ("spectrum_" + rep.provider + "_" + std::string(to_string(k))), spectrum_csv(rep),
                   report_meta(dir, {{"provider", rep.provider}, {"nodes", cloud.size()}, {"epsilon", a.epsilon},
                                     {"seed", c.seed}, {"normalization", "s^m"}, {"max_real", rep.max_real()},
                                     {"max_abs_imag", rep.max_abs_imag()}}));
    }
  return 0;
}

int suite_modal(const Common& c, const DiagnoseArgs& a, const ProviderSet& ps, const fs::path& dir) {
  require(a.k_points >= 1, "--k-points must be positive");
  const PointCloud cloud = generate_perturbed_grid(a.side, a.side, 1.0 / static_cast<double>(a.side), a.epsilon, c.seed);
  std::vector<double> k_hat;
  for (std::size_t k = 1; k <= a.k_points; ++k) k_hat.push_back(static_cast<double>(k) / static_cast<double>(a.k_points));
  std::vector<ModalResponseReport> reps;
  for (const auto* p : ps.ptrs)
    for (OperatorKind k : parse_kinds(a.op)) reps.push_back(modal_response(*p, k, cloud, k_hat, a.ratio));
  write_report(dir / "modal", modal_csv(reps),
               report_meta(dir, {{"providers", provider_meta(ps)}, {"epsilon", a.epsilon}, {"seed", c.seed},
                                 {"ratio", a.ratio}, {"averaging", "arithmetic mean over stencils"},
                                 {"k_nyquist", "pi/s"}}));
  return 0;
}

int suite_timing(const Common& c, const DiagnoseArgs& a, const ProviderSet& ps, const fs::path& dir) {
  const PointCloud cloud = convergence_cloud(a.side, a.epsilon, c.seed);
  TimingConfig cfg;
  cfg.repeats = a.repeats;
  cfg.weights_only = !a.include_search;
  const OperatorKind kind = parse_kinds(a.op).front();
  const auto rows = timing_harness(ps.ptrs, cloud, kind, cfg);
  for (const auto& r : rows)
    std::printf("%-14s %.3e s/node  rel L2 %.3e\n", r.provider.c_str(), r.per_node(), r.rel_l2_error);
  write_report(dir / "timing", timing_csv(rows),
               report_meta(dir, {{"providers", provider_meta(ps)}, {"nodes", cloud.size()}, {"epsilon", a.epsilon},
                                 {"seed", c.seed}, {"operator", to_string(kind)}, {"weights_only", cfg.weights_only},
                                 {"threads", 1}}));
  return 0;
}

int suite_tgv(const Common& c, const DiagnoseArgs& a, const ProviderSet& ps, const fs::path& dir) {
  SolverConfig cfg;
  if (!a.solver_config.empty()) {
    std::ifstream f(a.solver_config);
    if (!f) fail(ErrorCode::IoError, "cannot read " + a.solver_config);
    cfg = SolverConfig::from_json(json::parse(f));
  } else {
    cfg.end_time = a.end_time;
    if (a.filter >= 0.0) cfg.filter_coefficient = a.filter;
  }
  const double n_real = 1.0 / a.s;
  const auto n = static_cast<std::size_t>(std::llround(n_real));
  require(n >= 4 && std::abs(n_real - static_cast<double>(n)) < 1e-9, "--s must be 1/N for an integer N >= 4");
  const PointCloud cloud = generate_perturbed_grid(n, n, 1.0 / static_cast<double>(n), a.epsilon, c.seed);
  std::vector<double> times;
  for (std::size_t k = 1; k <= a.samples; ++k) times.push_back(cfg.end_time * static_cast<double>(k) / static_cast<double>(a.samples));
  for (const auto* p : ps.ptrs) {
    const Discretization d = discretize(*p, cloud);
    const TgvResult r = run_tgv(d, cloud, cfg, times, a.snapshots);
    std::printf("%-14s t=%.3f error %.4e  (%zu steps, dt %.3e)\n", r.provider.c_str(), cfg.end_time, r.final_error(),
                r.steps, r.dt);
    json meta = {{"provider", r.provider}, {"filter_provider", r.filter_provider}, {"solver", cfg.to_json()},
                 {"spacing", cloud.spacing()}, {"epsilon", a.epsilon}, {"seed", c.seed}, {"dt", r.dt},
                 {"steps", r.steps}};
    write_report(dir / ("tgv_" + r.provider), tgv_error_csv(r), report_meta(dir, meta));
    for (std::size_t k = 0; k < r.snapshots.size(); ++k) {
      char name[64];
      std::snprintf(name, sizeof name, "_t%.4f", r.samples[k].t);
      write_report(dir / ("snapshot_" + r.provider + name), tgv_snapshot_csv(cloud, r.snapshots[k]),
                   report_meta(dir, {{"provider", r.provider}, {"t", r.samples[k].t}}));
    }
  }
  return 0;
}

int suite_weights(const Common& c, const DiagnoseArgs& a, const ProviderSet& ps, const fs::path& dir) {
  const PointCloud cloud = generate_perturbed_grid(a.side, a.side, 1.0 / static_cast<double>(a.side), a.epsilon, c.seed);
  write_cloud(dir / "cloud", cloud);
  std::vector<std::size_t> nodes;
  Rng rng = Rng(c.seed).split(7);
  for (std::size_t k = 0; k < std::min(a.dump_nodes, cloud.size()); ++k) nodes.push_back(rng.below(cloud.size()));
  for (const auto* p : ps.ptrs)
    for (OperatorKind k : parse_kinds(a.op)) {
      const MirrorStats mirror = mirror_antisymmetry(*p, cloud, k, nodes);
      std::printf("%-14s %-10s mirror pairs %zu, corr(w(x), -w(-x)) = %.3f\n", p->name().c_str(),
                  std::string(to_string(k)).c_str(), mirror.pairs, mirror.correlation);
      write_report(dir / ("weights_" + p->name() + "_" + std::string(to_string(k))), weight_dump(*p, cloud, k, nodes),
                   report_meta(dir, {{"provider", p->name()}, {"epsilon", a.epsilon}, {"seed", c.seed},
                                     {"mirror_pairs", mirror.pairs}, {"mirror_correlation", mirror.correlation}}));
    }
  return 0;
}

int cmd_diagnose(const Common& c, const DiagnoseArgs& a) {
  const fs::path dir = output_dir(c, "diagnose-" + a.suite);
  json cfg = {{"suite", a.suite},         {"providers", a.providers},   {"operator", a.op},
              {"p", a.p},                 {"checkpoint", a.checkpoint}, {"laplacian_checkpoint", a.laplacian_checkpoint},
              {"epsilon", a.epsilon},     {"clouds", a.clouds},         {"side", a.side},
              {"resolutions", a.resolutions}, {"trials", a.trials},     {"k_points", a.k_points},
              {"ratio", a.ratio},         {"repeats", a.repeats},       {"include_search", a.include_search},
              {"s", a.s},                 {"solver_config", a.solver_config}, {"end_time", a.end_time},
              {"filter", a.filter},       {"samples", a.samples},       {"snapshots", a.snapshots},
              {"dump_nodes", a.dump_nodes}};
  if (a.suite == "tgv") {
    SolverConfig defaults;
    cfg["solver_defaults"] = defaults.to_json();
  }
  // Validate providers before the manifest so a bad request leaves no output.
  const ProviderSet ps = make_providers(a);
  write_manifest(dir, "diagnose", c, cfg);
  if (a.suite == "moments") return suite_moments(c, a, ps, dir);
  if (a.suite == "convergence") return suite_convergence(c, a, ps, dir);
  if (a.suite == "spectrum") return suite_spectrum(c, a, ps, dir);
  if (a.suite == "modal") return suite_modal(c, a, ps, dir);
  if (a.suite == "timing") return suite_timing(c, a, ps, dir);
  if (a.suite == "tgv") return suite_tgv(c, a, ps, dir);
  if (a.suite == "weights") return suite_weights(c, a, ps, dir);
  fail(ErrorCode::InvalidArgument, "unknown suite '" + a.suite + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mesh-free differential operators: data generation, training and diagnostics"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--out", common.out, "Output directory (default: $MESHFREE_OUT_ROOT/<command> or runs/<command>)");
  app.add_option("--seed", common.seed, "Root seed for every random stream")->capture_default_str();
  app.add_option("--threads", common.threads, "Worker threads; 1 forces the deterministic path")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  CloudArgs cloud;
  auto* gc = app.add_subcommand("gen-cloud", "Write a perturbed lattice as CSV with a JSON sidecar");
  gc->add_option("--nx", cloud.nx)->capture_default_str();
  gc->add_option("--ny", cloud.ny)->capture_default_str();
  gc->add_option("--spacing", cloud.spacing)->capture_default_str();
  gc->add_option("--epsilon", cloud.epsilon)->capture_default_str();
  gc->add_flag("--bounded", cloud.bounded, "Non-periodic domain");

  GenDataArgs gd;
  auto* gdc = app.add_subcommand("gen-data", "Generate a normalized stencil dataset");
  gdc->add_option("--nx", gd.spec.nx)->capture_default_str();
  gdc->add_option("--ny", gd.spec.ny)->capture_default_str();
  gdc->add_option("--spacing", gd.spec.spacing)->capture_default_str();
  gdc->add_option("--epsilon", gd.spec.epsilon)->capture_default_str();
  gdc->add_option("--stencil-n", gd.spec.stencil_n)->capture_default_str();
  gdc->add_option("--count", gd.spec.count)->capture_default_str();
  gdc->add_option("--val-fraction", gd.spec.val_fraction)->capture_default_str();
  gdc->add_option("--test-fraction", gd.spec.test_fraction)->capture_default_str();
  gdc->add_option("--file", gd.file, "Dataset path (default <out>/dataset.bin)");

  TrainArgs tr;
  auto* trc = app.add_subcommand("train", "Train a NeMDO model on a dataset");
  trc->add_option("--dataset", tr.dataset)->required();
  trc->add_option("--operator", tr.op, "dx or laplacian")->capture_default_str();
  trc->add_option("--p", tr.model.order_p)->capture_default_str();
  trc->add_option("--stencil-n", tr.model.stencil_n)->capture_default_str();
  trc->add_option("--f-h", tr.model.latent)->capture_default_str();
  trc->add_option("--layers", tr.model.graph_layers)->capture_default_str();
  trc->add_option("--mlp-hidden", tr.model.mlp_hidden)->capture_default_str();
  trc->add_option("--lr", tr.train.learning_rate)->capture_default_str();
  trc->add_option("--epochs", tr.train.epochs)->capture_default_str();
  trc->add_option("--batch", tr.train.batch_size)->capture_default_str();
  trc->add_option("--patience", tr.train.plateau_patience)->capture_default_str();
  trc->add_option("--factor", tr.train.plateau_factor)->capture_default_str();
  trc->add_option("--min-lr", tr.train.min_lr)->capture_default_str();
  trc->add_option("--time-limit", tr.train.time_limit_seconds, "Stop after this many seconds (0 = none)")
      ->capture_default_str();
  trc->add_flag("--resume", tr.resume, "Continue from <out>/train_state.bin");

  DiagnoseArgs dg;
  auto* dgc = app.add_subcommand("diagnose", "Run one diagnostic suite");
  dgc->add_option("--suite", dg.suite)
      ->required()
      ->check(CLI::IsMember({"moments", "convergence", "spectrum", "modal", "timing", "tgv", "weights"}));
  dgc->add_option("--providers", dg.providers, "Comma list of sph-quintic, sph-wendland, labfm, labfm-pN, nemdo")
      ->capture_default_str();
  dgc->add_option("--operator", dg.op, "Comma list of dx, dy, laplacian, hyperviscous")->capture_default_str();
  dgc->add_option("--p", dg.p, "LABFM order for provider 'labfm'; moment order for the moments suite")
      ->capture_default_str();
  dgc->add_option("--checkpoint", dg.checkpoint, "NeMDO gradient (dx) checkpoint");
  dgc->add_option("--laplacian-checkpoint", dg.laplacian_checkpoint, "NeMDO Laplacian checkpoint");
  dgc->add_option("--epsilon", dg.epsilon)->capture_default_str();
  dgc->add_option("--clouds", dg.clouds, "moments: number of clouds")->capture_default_str();
  dgc->add_option("--side", dg.side, "Nodes per side (moments, spectrum, modal, timing, weights)")
      ->capture_default_str();
  dgc->add_option("--resolutions", dg.resolutions, "convergence: nodes per unit length")->capture_default_str();
  dgc->add_option("--trials", dg.trials)->capture_default_str();
  dgc->add_option("--k-points", dg.k_points)->capture_default_str();
  dgc->add_option("--ratio", dg.ratio, "modal: k_y/k_x (0 or 1)")->capture_default_str();
  dgc->add_option("--repeats", dg.repeats)->capture_default_str();
  dgc->add_flag("--include-search", dg.include_search, "timing: include neighbor search");
  dgc->add_option("--s", dg.s, "tgv: node spacing")->capture_default_str();
  dgc->add_option("--config", dg.solver_config, "tgv: solver config JSON");
  dgc->add_option("--end-time", dg.end_time)->capture_default_str();
  dgc->add_option("--filter", dg.filter, "tgv: filter coefficient (default from solver config)");
  dgc->add_option("--samples", dg.samples)->capture_default_str();
  dgc->add_flag("--snapshots", dg.snapshots, "tgv: write x,y,rho,u,v at each sample time");
  dgc->add_option("--dump-nodes", dg.dump_nodes)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_code(ErrorCode::InvalidArgument);
  }

  try {
    if (*gc) return cmd_gen_cloud(common, cloud);
    if (*gdc) return cmd_gen_data(common, gd);
    if (*trc) return cmd_train(common, tr);
    if (*dgc) return cmd_diagnose(common, dg);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: io-error: " << e.what() << '\n';
    return exit_code(ErrorCode::IoError);
  } catch (const json::exception& e) {
    std::cerr << "error: invalid-argument: " << e.what() << '\n';
    return exit_code(ErrorCode::InvalidArgument);
  } catch (const std::exception& e) {
    std::cerr << "error: numerical-failure: " << e.what() << '\n';
    return exit_code(ErrorCode::NumericalFailure);
  }
  return 0;
}
