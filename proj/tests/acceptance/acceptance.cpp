// Acceptance run: one PASS/FAIL line per criterion.
//
//   edfa_acceptance [--full] [--work DIR] [criterion ...]
//
// By default the fleet-level criteria use two devices per type; --full (or
// EDFA_ACCEPTANCE_FULL=1) uses the whole 22-device default fleet.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "edfa/commands.hpp"
#include "edfa/dataset.hpp"
#include "edfa/rng.hpp"
#include "gradcheck.hpp"

namespace fs = std::filesystem;
using namespace edfa;
using nlohmann::json;

namespace {

// Tolerances.
constexpr int kGradNets = 100;
constexpr double kGradRelTol = 1e-4;
constexpr double kGradSeconds = 30.0;
constexpr std::size_t kSeluSamples = 10000;
constexpr double kSeluMeanAbs = 0.2;
constexpr double kSeluVarLo = 0.7, kSeluVarHi = 1.3;
constexpr int kMaskTrials = 1000;
constexpr double kQuantFloorMax = 0.06;
constexpr double kQuantSeconds = 300.0;
constexpr double kDirectMae = 0.10, kDirectP95 = 0.30;
constexpr double kDirectSeconds = 900.0;
constexpr int kSeeds = 5;
constexpr double kSameTypeMae = 0.14, kCrossTypeMae = 0.19;
constexpr double kTransferSeconds = 300.0;
constexpr double kMatrixSpread = 0.10;
constexpr double kSelfTransferGap = 0.02;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream s;
  s << std::setprecision(prec) << v;
  return s.str();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Context {
  fs::path work;
  bool full = false;
  std::ostringstream log;  // command chatter, shown only with EDFA_ACCEPTANCE_VERBOSE

  // Default-profile run shared by the direct, transfer and pretraining criteria.
  cli::ExperimentManifest fleet_manifest;
  fs::path fleet_run;
  bool fleet_trained = false;
  std::map<std::string, double> direct_seconds;
};

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

cli::ExperimentManifest default_manifest(const Context& ctx) {
  auto m = cli::ExperimentManifest::profile("open-ireland");
  if (!ctx.full) m.fleet.n_boosters = m.fleet.n_preamps = 2;
  return m;
}

std::vector<std::string> device_ids(const cli::ExperimentManifest& m) {
  std::vector<std::string> ids;
  for (const auto& d : cli::build_fleet(m)) ids.push_back(d.device_id);
  return ids;
}

// Generates the default-profile fleet and trains every direct model once.
void ensure_fleet_run(Context& ctx) {
  if (ctx.fleet_trained) return;
  ctx.fleet_manifest = default_manifest(ctx);
  ctx.fleet_run = ctx.work / "fleet";
  const cli::RunOptions opts{ctx.fleet_run, true, 1};
  cli::run_generate(ctx.fleet_manifest, opts, ctx.log);
  for (const auto& id : device_ids(ctx.fleet_manifest)) {
    const auto t0 = Clock::now();
    cli::run_train(ctx.fleet_manifest, {ctx.fleet_run, false, 1}, {id}, ctx.log);
    ctx.direct_seconds[id] = seconds_since(t0);
  }
  ctx.fleet_trained = true;
}

Outcome gradient_oracle(Context&) {
  Rng rng(derive_seed(0, "gradient-oracle"));
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::size_t params = 0;
  for (int k = 0; k < kGradNets; ++k) {
    const auto r = edfa::test::gradient_check(rng);
    worst = std::max(worst, r.worst_rel_error);
    params += r.parameters;
  }
  const double secs = seconds_since(t0);
  return {worst < kGradRelTol && secs < kGradSeconds,
          "worst relative error " + fmt(worst, 3) + " over " + std::to_string(kGradNets) + " nets (" +
              std::to_string(params) + " parameters), " + fmt(secs, 3) + " s"};
}

Outcome selu_self_normalization(Context&) {
  auto net = nn::Network::ssnn(FeatureLayout::dim(true));
  Rng rng(derive_seed(0, "selu"));
  nn::init_lecun(net, rng);
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(net.input_dim()), static_cast<Eigen::Index>(kSeluSamples));
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = z(rng);
  nn::ForwardCache cache;
  nn::forward(net, x, &cache);
  bool ok = true;
  std::string detail;
  // The input of layer k is the activation of hidden layer k - 1.
  for (std::size_t k = 1; k < net.size(); ++k) {
    const auto& h = cache.inputs[k];
    const double mean = h.mean();
    const double var = (h.array() - mean).square().mean();
    ok = ok && std::abs(mean) <= kSeluMeanAbs && var >= kSeluVarLo && var <= kSeluVarHi;
    detail += "h" + std::to_string(k) + " mean " + fmt(mean, 3) + " var " + fmt(var, 3) + "; ";
  }
  return {ok, detail};
}

Outcome masked_loss(Context&) {
  std::mt19937_64 rng(derive_seed(0, "masked-loss"));
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> p_on(0.01, 1.0);
  int violations = 0;
  for (int t = 0; t < kMaskTrials; ++t) {
    Eigen::VectorXd mask(static_cast<Eigen::Index>(kChannels));
    const double p = p_on(rng);
    std::bernoulli_distribution on(p);
    do {
      for (Eigen::Index i = 0; i < mask.size(); ++i) mask[i] = on(rng) ? 1.0 : 0.0;
    } while (mask.sum() == 0.0);
    Eigen::VectorXd pred(mask.size()), target(mask.size());
    for (Eigen::Index i = 0; i < mask.size(); ++i) {
      pred[i] = z(rng);
      target[i] = z(rng);
    }
    Eigen::VectorXd pred2 = pred, target2 = target;
    for (Eigen::Index i = 0; i < mask.size(); ++i) {
      if (mask[i] == 0.0) {
        pred2[i] += 1e3 * z(rng);
        target2[i] -= 1e3 * z(rng);
      }
    }
    const auto a = nn::masked_mse_batch(pred, target, mask);
    const auto b = nn::masked_mse_batch(pred2, target2, mask);
    const bool grad_same = (a.grad.array() == b.grad.array()).all();
    if (a.loss != b.loss || nn::masked_mse(pred, target, mask) != nn::masked_mse(pred2, target2, mask) || !grad_same) {
      ++violations;
    }
  }
  bool rejected = false;
  try {
    nn::masked_mse(Eigen::VectorXd::Zero(95), Eigen::VectorXd::Zero(95), Eigen::VectorXd::Zero(95));
  } catch (const ConfigError&) {
    rejected = true;
  }
  return {violations == 0 && rejected, std::to_string(violations) + " of " + std::to_string(kMaskTrials) +
                                           " masks changed value or gradient; all-zero mask " +
                                           (rejected ? "rejected" : "accepted")};
}

Outcome quantization_floor(Context& ctx) {
  auto m = cli::ExperimentManifest::profile("open-ireland");
  m.name = "flat-oracle";
  m.flat_fleet = true;
  m.fleet.n_boosters = m.fleet.n_preamps = 1;
  m.quantize = true;
  const cli::RunOptions opts{ctx.work / "flat", true, 1};
  const auto t0 = Clock::now();
  cli::run_generate(m, opts, ctx.log);
  cli::run_train(m, opts, {"B01"}, ctx.log);
  const double secs = seconds_since(t0);
  const auto stats = read_json(cli::RunLayout{opts.out}.direct_eval("B01", true).string() + ".json");
  const double mae = stats["all"]["mae_db"].get<double>();
  return {mae >= 0.0 && mae <= kQuantFloorMax && secs < kQuantSeconds,
          "flat device with 0.1 dB OCM quantization: test MAE " + fmt(mae) + " dB, " + fmt(secs, 3) + " s"};
}

Outcome direct_training(Context& ctx) {
  ensure_fleet_run(ctx);
  const cli::RunLayout layout{ctx.fleet_run};
  bool ok = true;
  std::string detail;
  for (const auto& id : device_ids(ctx.fleet_manifest)) {
    const auto stats = read_json(layout.direct_eval(id, true).string() + ".json");
    const double mae = stats["all"]["mae_db"].get<double>();
    const double p95 = stats["all"]["p95_db"].get<double>();
    const double secs = ctx.direct_seconds[id];
    const bool used = stats["unlabeled_used"].get<std::size_t>() + stats["labeled_used"].get<std::size_t>() == 1792;
    ok = ok && mae <= kDirectMae && p95 <= kDirectP95 && secs <= kDirectSeconds && used;
    detail += id + " " + fmt(mae) + "/" + fmt(p95, 3) + " dB " + fmt(secs, 3) + " s; ";
  }
  return {ok, "MAE/p95 per device: " + detail};
}

Outcome pretraining_benefit(Context& ctx) {
  ensure_fleet_run(ctx);
  const auto data = cli::load_run_device(ctx.fleet_manifest, ctx.fleet_run, "B01");
  std::vector<double> with, without;
  for (int s = 0; s < kSeeds; ++s) {
    const auto seed = derive_seed(ctx.fleet_manifest.seed, "pretraining-benefit", static_cast<std::uint64_t>(s));
    const auto& m = ctx.fleet_manifest;
    // Same seed -> same unlabeled/labeled selection, same initial weights.
    const auto a = train::train_direct(data.train, true, m.pretrain, m.finetune, seed, true);
    const auto b = train::train_direct(data.train, true, m.pretrain, m.finetune, seed, false);
    with.push_back(eval::mean_abs_error(a.model, data.test));
    without.push_back(eval::mean_abs_error(b.model, data.test));
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return eval::quantile_sorted(v, 0.5);
  };
  const double mw = median(with), mo = median(without);
  std::string per;
  for (int s = 0; s < kSeeds; ++s) per += fmt(with[s], 3) + "/" + fmt(without[s], 3) + " ";
  return {mw <= mo, "B01 median MAE with " + fmt(mw) + " vs without " + fmt(mo) + " dB (per seed: " + per + ")"};
}

Outcome transfer_learning(Context& ctx) {
  ensure_fleet_run(ctx);
  const auto& m = ctx.fleet_manifest;
  const cli::RunOptions opts{ctx.fleet_run, false, 1};
  const auto fleet = cli::build_fleet(m);
  const std::string sources[] = {"B01", "P01"};
  bool ok = true;
  double worst_same = 0.0, worst_cross = 0.0, slowest = 0.0;
  std::string detail;
  for (const auto& src : sources) {
    const auto src_type = src[0];
    for (const auto& dev : fleet) {
      if (dev.device_id == src) continue;
      const auto t0 = Clock::now();
      const auto st = cli::run_transfer(m, opts, src, dev.device_id, ctx.log);
      const double secs = seconds_since(t0);
      slowest = std::max(slowest, secs);
      const bool same = dev.device_id[0] == src_type;
      (same ? worst_same : worst_cross) = std::max(same ? worst_same : worst_cross, st.mae_db);
      ok = ok && st.mae_db <= (same ? kSameTypeMae : kCrossTypeMae) && secs <= kTransferSeconds;
      detail += src + "->" + dev.device_id + " " + fmt(st.mae_db, 3) + "; ";
    }
  }
  return {ok, "worst same-type " + fmt(worst_same) + " dB, worst cross-type " + fmt(worst_cross) +
                  " dB, slowest transfer " + fmt(slowest, 3) + " s (" + detail + ")"};
}

Outcome matrix_consistency(Context& ctx) {
  auto m = cli::ExperimentManifest::profile("smoke");
  const cli::RunOptions opts{ctx.work / "matrix", true, 1};
  cli::run_generate(m, opts, ctx.log);
  const auto mat = cli::run_matrix(m, {opts.out, false, 1}, true, true, ctx.log);
  if (!mat.failures.empty()) return {false, "failed cells: " + mat.failures.front()};
  const std::size_t n = mat.size();
  double worst_spread = 0.0, worst_gap = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double lo = 1e9, hi = -1e9;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == j) continue;
      lo = std::min(lo, mat.entries[i][j]->mae_db);
      hi = std::max(hi, mat.entries[i][j]->mae_db);
    }
    worst_spread = std::max(worst_spread, hi - lo);
    worst_gap = std::max(worst_gap, std::abs(mat.self_transfer[j]->mae_db - mat.entries[j][j]->mae_db));
  }
  return {worst_spread <= kMatrixSpread && worst_gap <= kSelfTransferGap,
          std::to_string(n) + "-device fleet: worst per-target spread " + fmt(worst_spread) +
              " dB, worst self-transfer gap " + fmt(worst_gap) + " dB"};
}

Outcome internal_feature_effect(Context& ctx) {
  double sum_with = 0.0, sum_without = 0.0;
  std::string per;
  for (int s = 0; s < kSeeds; ++s) {
    auto m = cli::ExperimentManifest::profile("smoke");
    m.name = "internal-effect";
    m.seed = static_cast<std::uint64_t>(s + 1);
    m.fleet.n_boosters = m.fleet.n_preamps = 1;
    const cli::RunOptions opts{ctx.work / ("internal" + std::to_string(s)), true, 1};
    cli::run_generate(m, opts, ctx.log);
    double flag_mean[2] = {0.0, 0.0};
    for (int flag = 0; flag < 2; ++flag) {
      m.use_internal = flag == 1;
      cli::run_train(m, {opts.out, false, 1}, {}, ctx.log);
      flag_mean[flag] = 0.5 * (cli::run_transfer(m, {opts.out, false, 1}, "B01", "P01", ctx.log).mae_db +
                               cli::run_transfer(m, {opts.out, false, 1}, "P01", "B01", ctx.log).mae_db);
    }
    sum_without += flag_mean[0];
    sum_with += flag_mean[1];
    per += fmt(flag_mean[1], 3) + "/" + fmt(flag_mean[0], 3) + " ";
  }
  const double with = sum_with / kSeeds, without = sum_without / kSeeds;
  return {with <= without, "mean cross-type TL MAE with VOA features " + fmt(with) + " vs without " + fmt(without) +
                               " dB (per seed: " + per + ")"};
}

// Lists every regular file under `dir` with its content.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    files[fs::relative(e.path(), dir).string()] = s.str();
  }
  return files;
}

Outcome determinism(Context& ctx) {
  auto m = cli::ExperimentManifest::profile("smoke");
  m.name = "determinism";
  m.fleet.n_boosters = m.fleet.n_preamps = 1;
  m.records_per_setting = 200;
  m.pretrain.n_unlabeled_per_setting = 32;
  m.pretrain.epochs_per_layer = 5;
  m.finetune.n_labeled = 48;
  m.finetune.epochs = 20;
  m.transfer.epochs = 50;
  std::vector<std::map<std::string, std::string>> runs;
  for (std::size_t workers : {1, 2}) {
    const fs::path out = ctx.work / ("determinism" + std::to_string(workers));
    const cli::RunOptions opts{out, true, workers};
    m.use_internal = true;
    cli::run_generate(m, opts, ctx.log);
    for (bool flag : {true, false}) {
      m.use_internal = flag;
      cli::run_train(m, {out, false, workers}, {}, ctx.log);
      cli::run_transfer(m, {out, false, workers}, "B01", "P01", ctx.log);
      cli::run_matrix(m, {out, false, workers}, false, true, ctx.log);
    }
    cli::run_report(out, ctx.log);
    runs.push_back(snapshot(out));
  }
  std::vector<std::string> differing;
  for (const auto& [name, content] : runs[0]) {
    auto it = runs[1].find(name);
    if (it == runs[1].end() || it->second != content) differing.push_back(name);
  }
  const bool same_set = runs[0].size() == runs[1].size();
  return {differing.empty() && same_set,
          std::to_string(runs[0].size()) + " artifacts compared across two runs (1 and 2 workers), " +
              std::to_string(differing.size()) + " differ" + (differing.empty() ? "" : " (first: " + differing[0] + ")")};
}

}  // namespace

int main(int argc, char** argv) {
  Context ctx;
  ctx.full = std::getenv("EDFA_ACCEPTANCE_FULL") && std::string(std::getenv("EDFA_ACCEPTANCE_FULL")) == "1";
  ctx.work = fs::temp_directory_path() / "edfa_acceptance";
  std::vector<std::string> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--full") {
      ctx.full = true;
    } else if (a == "--work" && i + 1 < argc) {
      ctx.work = argv[++i];
    } else {
      only.push_back(a);
    }
  }
  fs::create_directories(ctx.work);

  const std::vector<std::pair<std::string, std::function<Outcome(Context&)>>> criteria{
      {"gradient-oracle", gradient_oracle},
      {"selu-self-normalization", selu_self_normalization},
      {"masked-loss", masked_loss},
      {"quantization-floor", quantization_floor},
      {"direct-training", direct_training},
      {"pretraining-benefit", pretraining_benefit},
      {"transfer-learning", transfer_learning},
      {"tl-matrix-consistency", matrix_consistency},
      {"internal-feature-effect", internal_feature_effect},
      {"determinism", determinism},
  };

  int failed = 0;
  for (const auto& [name, run] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = run(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << " [" << fmt(seconds_since(t0), 3)
              << " s]" << std::endl;
  }
  if (std::getenv("EDFA_ACCEPTANCE_VERBOSE")) std::cerr << ctx.log.str();
  return failed == 0 ? 0 : 1;
}
