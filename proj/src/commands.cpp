#include "edfa/commands.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "edfa/dataset.hpp"
#include "edfa/rng.hpp"
#include "edfa/simkernel.hpp"

namespace edfa::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<LoadingMode, 2> kReportModes{LoadingMode::Random, LoadingMode::Goalpost};

// Write to a temporary name and rename, so an interrupted run never leaves a
// truncated artifact behind.
void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << text;
    if (!out) throw TrainingError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid JSON in ") + path.string() + ": " + e.what(), 0);
  }
}

std::string with_suffix(const fs::path& stem, const std::string& suffix) { return stem.string() + suffix; }

std::vector<sim::EdfaDevice> load_fleet(const RunLayout& layout) {
  if (!fs::exists(layout.fleet())) {
    throw ConfigError("no fleet.json in " + layout.root.string() + "; run 'generate' first");
  }
  return sim::fleet_from_json(read_json(layout.fleet()));
}

const sim::EdfaDevice& find_device(const std::vector<sim::EdfaDevice>& fleet, const std::string& id) {
  for (const auto& d : fleet) {
    if (d.device_id == id) return d;
  }
  throw ConfigError("unknown device '" + id + "'");
}

std::size_t device_index(const std::vector<sim::EdfaDevice>& fleet, const std::string& id) {
  for (std::size_t i = 0; i < fleet.size(); ++i) {
    if (fleet[i].device_id == id) return i;
  }
  throw ConfigError("unknown device '" + id + "'");
}

// A run directory must have been produced by the same manifest, apart from
// the feature flag which only selects which artifacts are read or written.
void check_run_manifest(const ExperimentManifest& m, const RunLayout& layout) {
  const auto stored = stored_manifest(layout);
  if (!stored) throw ConfigError("no manifest.json in " + layout.root.string() + "; run 'generate' first");
  auto a = stored->to_json();
  auto b = m.to_json();
  a.erase("use_internal");
  b.erase("use_internal");
  if (a != b) {
    throw ConfigError("manifest differs from the one that generated " + layout.root.string());
  }
}

eval::DeviceData load_device(const ExperimentManifest& m, const RunLayout& layout, const sim::EdfaDevice& dev) {
  const auto path = layout.dataset(dev.device_id);
  if (!fs::exists(path)) {
    throw ConfigError("dataset for device " + dev.device_id + " not found at " + path.string());
  }
  const auto records = load_dataset(path);
  if (records.empty()) throw ConfigError("dataset " + path.string() + " is empty");
  auto split = split_train_test(records, m.train_ratio, stream_seed(m, "split"));
  eval::DeviceData d;
  d.device_id = dev.device_id;
  d.edfa_type = dev.edfa_type;
  d.settings = gain_settings(records);
  d.train = std::move(split.train);
  d.test = std::move(split.test);
  return d;
}

json stats_by_mode(const std::vector<double>& errors, const std::vector<LoadingMode>& modes) {
  json j;
  j["all"] = eval::summarize(errors).to_json();
  for (auto mode : kReportModes) {
    std::vector<double> sub;
    for (std::size_t k = 0; k < errors.size(); ++k) {
      if (modes[k] == mode) sub.push_back(errors[k]);
    }
    if (!sub.empty()) j[std::string(to_string(mode))] = eval::summarize(sub).to_json();
  }
  return j;
}

struct ModeErrors {
  std::vector<double> errors;
  std::vector<LoadingMode> modes;
};

ModeErrors evaluate(const GainModel& model, const std::vector<MeasurementRecord>& test) {
  ModeErrors out;
  const auto preds = model.predict(test);
  for (std::size_t j = 0; j < test.size(); ++j) {
    const auto& r = test[j];
    for (std::size_t i = 0; i < kChannels; ++i) {
      if (!r.plan.on(i)) continue;
      out.errors.push_back(std::abs(preds[j][i] - (*r.gain_spectrum_db)[i]));
      out.modes.push_back(r.plan.mode());
    }
  }
  if (out.errors.empty()) throw ConfigError("empty test set");
  return out;
}

std::string errors_csv(const ModeErrors& e) {
  std::string s = "mode,abs_error_db\n";
  for (std::size_t k = 0; k < e.errors.size(); ++k) {
    s += to_string(e.modes[k]);
    s += ',';
    s += eval::format_real(e.errors[k]);
    s += '\n';
  }
  return s;
}

ModeErrors read_errors_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "mode,abs_error_db") throw ParseError("bad header in " + path.string(), 1);
  ModeErrors e;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError("malformed row in " + path.string(), line_no);
    e.modes.push_back(loading_mode_from_string(line.substr(0, comma)));
    try {
      e.errors.push_back(std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
      throw ParseError("non-numeric error in " + path.string(), line_no);
    }
  }
  return e;
}

std::string loss_csv(const std::vector<double>& losses) {
  std::string s = "epoch,loss\n";
  for (std::size_t k = 0; k < losses.size(); ++k) {
    s += std::to_string(k + 1) + ',' + eval::format_real(losses[k]) + '\n';
  }
  return s;
}

// Runs `job(k)` for k in [0, n) on up to `workers` threads; returns one
// message per failed job, sorted.
template <class Job>
std::vector<std::string> run_pool(std::size_t n, std::size_t workers, Job job) {
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::vector<std::string> failures;
  auto worker = [&] {
    for (std::size_t k = next++; k < n; k = next++) {
      try {
        job(k);
      } catch (const std::exception& e) {
        std::lock_guard lock(mu);
        failures.emplace_back(e.what());
      }
    }
  };
  const std::size_t w = std::max<std::size_t>(1, std::min(workers, n));
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < w; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  std::sort(failures.begin(), failures.end());
  return failures;
}

std::string join(const std::vector<std::string>& items, const std::string& sep) {
  std::string s;
  for (std::size_t i = 0; i < items.size(); ++i) s += (i ? sep : "") + items[i];
  return s;
}

// Trains, saves and evaluates the direct model of one device.
void train_one(const ExperimentManifest& m, const RunLayout& layout, const std::vector<sim::EdfaDevice>& fleet,
               const sim::EdfaDevice& dev, std::mutex& log_mu, std::ostream& log) {
  const auto data = load_device(m, layout, dev);
  const auto seed = stream_seed(m, "train", device_index(fleet, dev.device_id));
  auto result = train::train_direct(data.train, m.use_internal, m.pretrain, m.finetune, seed);
  save_checkpoint(result.model, layout.checkpoint(dev.device_id, m.use_internal));
  const auto stem = layout.direct_eval(dev.device_id, m.use_internal);
  write_text(with_suffix(stem, ".loss.csv"), loss_csv(result.finetuning.loss_history));
  std::string pre = "layer,epoch,loss\n";
  for (std::size_t l = 0; l < result.pretraining.layer_losses.size(); ++l) {
    const auto& losses = result.pretraining.layer_losses[l];
    for (std::size_t k = 0; k < losses.size(); ++k) {
      pre += std::to_string(l + 1) + ',' + std::to_string(k + 1) + ',' + eval::format_real(losses[k]) + '\n';
    }
  }
  write_text(with_suffix(stem, ".pretrain_loss.csv"), pre);
  const auto errs = evaluate(result.model, data.test);
  write_text(with_suffix(stem, ".errors.csv"), errors_csv(errs));
  json stats = stats_by_mode(errs.errors, errs.modes);
  stats["device_id"] = dev.device_id;
  stats["edfa_type"] = to_string(dev.edfa_type);
  stats["use_internal"] = m.use_internal;
  stats["unlabeled_used"] = result.unlabeled_used;
  stats["labeled_used"] = result.labeled_used;
  stats["test_records"] = data.test.size();
  write_text(with_suffix(stem, ".json"), stats.dump(2) + "\n");
  std::lock_guard lock(log_mu);
  log << "trained " << dev.device_id << " (" << flag_tag(m.use_internal)
      << "): test MAE " << eval::format_real(stats["all"]["mae_db"].get<double>()) << " dB\n";
}

// Transfers one source model onto one target and writes checkpoint and stats.
json transfer_one(const ExperimentManifest& m, const RunLayout& layout, const GainModel& source,
                  const std::string& source_id, const eval::DeviceData& target) {
  const auto records = train::pick_transfer_records(target.train, target.settings, m.transfer.n_per_setting);
  auto tl = train::transfer(source, records, target.settings, m.transfer, m.use_internal);
  tl.model.provenance.target_device = target.device_id;
  save_checkpoint(tl.model, layout.transfer_checkpoint(source_id, target.device_id, m.use_internal));
  const auto errs = evaluate(tl.model, target.test);
  const auto stem = layout.transfer_eval(source_id, target.device_id, m.use_internal);
  write_text(with_suffix(stem, ".errors.csv"), errors_csv(errs));
  write_text(with_suffix(stem, ".loss.csv"), loss_csv(tl.loss_history));
  json stats = stats_by_mode(errs.errors, errs.modes);
  stats["source_id"] = source_id;
  stats["target_id"] = target.device_id;
  stats["use_internal"] = m.use_internal;
  stats["records_used"] = tl.records_used;
  // Stats last: their presence marks the cell as complete.
  write_text(with_suffix(stem, ".json"), stats.dump(2) + "\n");
  return stats;
}

std::optional<eval::ErrorStats> cell_stats(const json& stats, std::optional<LoadingMode> mode) {
  const std::string key = mode ? std::string(to_string(*mode)) : "all";
  if (!stats.contains(key)) return std::nullopt;
  return eval::ErrorStats::from_json(stats.at(key));
}

GainModel load_model_checked(const fs::path& path, bool use_internal) {
  if (!fs::exists(path)) throw ConfigError("checkpoint " + path.string() + " not found");
  auto model = load_checkpoint(path);
  if (model.use_internal() != use_internal) {
    throw ConfigError("checkpoint " + path.string() + (model.use_internal() ? " uses" : " does not use") +
                      " internal VOA features but the run " + (use_internal ? "requests" : "excludes") +
                      " them (--no-internal)");
  }
  return model;
}

}  // namespace

fs::path RunLayout::checkpoint(const std::string& device_id, bool use_internal) const {
  return root / "ckpt" / (device_id + "." + std::string(flag_tag(use_internal)) + ".json");
}

fs::path RunLayout::transfer_checkpoint(const std::string& source, const std::string& target,
                                        bool use_internal) const {
  return root / "ckpt" / "tl" / (source + "__" + target + "." + std::string(flag_tag(use_internal)) + ".json");
}

fs::path RunLayout::direct_eval(const std::string& device_id, bool use_internal) const {
  return root / "eval" / "direct" / (device_id + "." + std::string(flag_tag(use_internal)));
}

fs::path RunLayout::transfer_eval(const std::string& source, const std::string& target, bool use_internal) const {
  return root / "eval" / "tl" / (source + "__" + target + "." + std::string(flag_tag(use_internal)));
}

fs::path RunLayout::matrix_dir(bool use_internal) const {
  return root / "eval" / ("matrix." + std::string(flag_tag(use_internal)));
}

std::string_view flag_tag(bool use_internal) { return use_internal ? "internal" : "nointernal"; }

std::uint64_t stream_seed(const ExperimentManifest& m, std::string_view stream, std::uint64_t index) {
  return derive_seed(m.seed, stream, index);
}

std::optional<ExperimentManifest> stored_manifest(const RunLayout& layout) {
  if (!fs::exists(layout.manifest())) return std::nullopt;
  return ExperimentManifest::from_json(read_json(layout.manifest()));
}

void run_generate(const ExperimentManifest& m, const RunOptions& opts, std::ostream& log) {
  m.validate();
  const RunLayout layout{opts.out};
  if (fs::exists(layout.root) && !fs::is_empty(layout.root)) {
    if (!opts.force) {
      throw ConfigError("output directory " + layout.root.string() + " is not empty; pass --force to overwrite");
    }
    fs::remove_all(layout.root);
  }
  fs::create_directories(layout.root / "data");
  const auto fleet = build_fleet(m);
  write_text(layout.fleet(), sim::fleet_to_json(fleet).dump(2) + "\n");
  write_text(layout.manifest(), m.to_json().dump(2) + "\n");

  std::mutex log_mu;
  const auto failures = run_pool(fleet.size(), opts.workers, [&](std::size_t d) {
    const auto& dev = fleet[d];
    const sim::GainSettings settings{m.gains_for(dev.edfa_type)};
    settings.validate(dev);
    const auto records =
        sim::gen_dataset(dev, settings, m.records_per_setting, m.mode_mix, m.quantize, stream_seed(m, "data", d));
    save_dataset(records, layout.dataset(dev.device_id));
    std::lock_guard lock(log_mu);
    log << "generated " << dev.device_id << ": " << records.size() << " records\n";
  });
  if (!failures.empty()) throw TrainingError("generation failed: " + join(failures, "; "));
}

void run_train(const ExperimentManifest& m, const RunOptions& opts, const std::vector<std::string>& devices,
               std::ostream& log) {
  m.validate();
  const RunLayout layout{opts.out};
  check_run_manifest(m, layout);
  const auto fleet = load_fleet(layout);
  std::vector<const sim::EdfaDevice*> todo;
  if (devices.empty()) {
    for (const auto& d : fleet) todo.push_back(&d);
  } else {
    for (const auto& id : devices) todo.push_back(&find_device(fleet, id));
  }
  std::mutex log_mu;
  std::vector<const sim::EdfaDevice*> jobs;
  for (const auto* d : todo) {
    if (!opts.force && fs::exists(layout.checkpoint(d->device_id, m.use_internal)) &&
        fs::exists(with_suffix(layout.direct_eval(d->device_id, m.use_internal), ".json"))) {
      log << "checkpoint for " << d->device_id << " (" << flag_tag(m.use_internal) << ") exists, skipping\n";
      continue;
    }
    jobs.push_back(d);
  }
  const auto failures =
      run_pool(jobs.size(), opts.workers, [&](std::size_t k) { train_one(m, layout, fleet, *jobs[k], log_mu, log); });
  if (!failures.empty()) throw TrainingError("training failed: " + join(failures, "; "));
}

eval::DeviceData load_run_device(const ExperimentManifest& m, const fs::path& run_dir, const std::string& device_id) {
  const RunLayout layout{run_dir};
  check_run_manifest(m, layout);
  const auto fleet = load_fleet(layout);
  return load_device(m, layout, find_device(fleet, device_id));
}

eval::ErrorStats run_transfer(const ExperimentManifest& m, const RunOptions& opts, const std::string& source,
                              const std::string& target_id, std::ostream& log) {
  m.validate();
  const RunLayout layout{opts.out};
  check_run_manifest(m, layout);
  const auto fleet = load_fleet(layout);
  const auto& target_dev = find_device(fleet, target_id);

  fs::path ckpt;
  std::string source_id;
  if (fs::exists(source) && fs::is_regular_file(source)) {
    ckpt = source;
  } else {
    source_id = find_device(fleet, source).device_id;
    ckpt = layout.checkpoint(source_id, m.use_internal);
  }
  const auto model = load_model_checked(ckpt, m.use_internal);
  if (source_id.empty()) {
    source_id = model.provenance.target_device.empty() ? fs::path(ckpt).stem().string()
                                                       : model.provenance.target_device;
  }
  const auto data = load_device(m, layout, target_dev);
  const auto stats = transfer_one(m, layout, model, source_id, data);
  const auto all = eval::ErrorStats::from_json(stats.at("all"));
  log << "transferred " << source_id << " -> " << target_id << " (" << flag_tag(m.use_internal)
      << "): test MAE " << eval::format_real(all.mae_db) << " dB\n";
  return all;
}

eval::TlMatrix run_matrix(const ExperimentManifest& m, const RunOptions& opts, bool train_missing,
                          bool self_transfer, std::ostream& log) {
  m.validate();
  const RunLayout layout{opts.out};
  check_run_manifest(m, layout);
  const auto fleet = load_fleet(layout);
  const std::size_t n = fleet.size();

  std::vector<std::string> missing;
  for (const auto& d : fleet) {
    if (!fs::exists(layout.checkpoint(d.device_id, m.use_internal))) missing.push_back(d.device_id);
  }
  if (!missing.empty()) {
    if (!train_missing) {
      std::vector<std::string> cells;
      for (const auto& id : missing) cells.push_back("(" + id + ", " + id + ")");
      throw ConfigError("missing direct checkpoints for cells " + join(cells, ", ") +
                        "; run 'train' or pass --train-missing");
    }
    run_train(m, RunOptions{opts.out, false, opts.workers}, missing, log);
  }

  std::vector<eval::DeviceData> data;
  std::vector<GainModel> models;
  for (const auto& d : fleet) {
    data.push_back(load_device(m, layout, d));
    models.push_back(load_model_checked(layout.checkpoint(d.device_id, m.use_internal), m.use_internal));
  }

  eval::TlMatrix matrix;
  for (const auto& d : fleet) matrix.device_ids.push_back(d.device_id);
  matrix.entries.assign(n, std::vector<std::optional<eval::ErrorStats>>(n));
  matrix.self_transfer.assign(n, std::nullopt);

  // Off-diagonal cells plus optional self-transfer controls; finished cells are read back.
  std::vector<std::pair<std::size_t, std::size_t>> jobs;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j || self_transfer) jobs.emplace_back(i, j);
    }
  }
  std::mutex mu;
  std::atomic<std::size_t> reused{0};
  const auto failures = run_pool(jobs.size(), opts.workers, [&](std::size_t k) {
    const auto [i, j] = jobs[k];
    const auto& src = matrix.device_ids[i];
    const auto& tgt = matrix.device_ids[j];
    const auto stats_path = with_suffix(layout.transfer_eval(src, tgt, m.use_internal), ".json");
    json stats;
    try {
      if (!opts.force && fs::exists(stats_path)) {
        stats = read_json(stats_path);
        ++reused;
      } else {
        stats = transfer_one(m, layout, models[i], src, data[j]);
      }
    } catch (const std::exception& e) {
      throw TrainingError("cell (" + src + ", " + tgt + "): " + e.what());
    }
    const auto s = cell_stats(stats, m.matrix_loading);
    std::lock_guard lock(mu);
    if (i == j) {
      matrix.self_transfer[i] = s;
    } else {
      matrix.entries[i][j] = s;
    }
  });
  matrix.failures = failures;

  for (std::size_t i = 0; i < n; ++i) {
    const auto errs = read_errors_csv(with_suffix(layout.direct_eval(matrix.device_ids[i], m.use_internal),
                                                  ".errors.csv"));
    const auto stats = stats_by_mode(errs.errors, errs.modes);
    matrix.entries[i][i] = cell_stats(stats, m.matrix_loading);
  }

  const auto dir = layout.matrix_dir(m.use_internal);
  eval::report(matrix, dir);
  if (self_transfer) {
    std::ostringstream s;
    s << "device_id,direct_mae,self_transfer_mae,delta\n";
    for (std::size_t i = 0; i < n; ++i) {
      s << matrix.device_ids[i] << ',';
      const auto& d = matrix.entries[i][i];
      const auto& t = matrix.self_transfer[i];
      s << (d ? eval::format_real(d->mae_db) : "failed") << ',' << (t ? eval::format_real(t->mae_db) : "failed")
        << ',' << (d && t ? eval::format_real(t->mae_db - d->mae_db) : "failed") << '\n';
    }
    write_text(dir / "self_transfer.csv", s.str());
  }
  log << "matrix " << n << "x" << n << " (" << flag_tag(m.use_internal) << "): " << jobs.size() - reused
      << " cells computed, " << reused << " reused, " << failures.size() << " failed\n";
  for (const auto& f : failures) log << "  " << f << '\n';
  return matrix;
}

void run_report(const fs::path& run_dir, std::ostream& log) {
  const RunLayout layout{run_dir};
  if (!fs::exists(run_dir)) throw ConfigError("run directory " + run_dir.string() + " does not exist");
  const auto fleet = load_fleet(layout);

  // Pooled errors per (type, loading mode, feature flag).
  eval::NamedStats groups;
  std::ostringstream devices;
  devices << "device_id,edfa_type,features,mae,p95,n\n";
  std::vector<std::string> missing;
  bool any = false;
  for (const bool internal : {true, false}) {
    std::vector<const sim::EdfaDevice*> have;
    std::vector<std::string> lacking;
    for (const auto& d : fleet) {
      if (fs::exists(with_suffix(layout.direct_eval(d.device_id, internal), ".errors.csv"))) {
        have.push_back(&d);
      } else {
        lacking.push_back(d.device_id + "." + std::string(flag_tag(internal)));
      }
    }
    if (have.empty()) continue;
    any = true;
    if (!lacking.empty()) {
      missing.insert(missing.end(), lacking.begin(), lacking.end());
      continue;
    }
    std::map<std::pair<EdfaType, LoadingMode>, std::vector<double>> pooled;
    for (const auto* d : have) {
      const auto errs = read_errors_csv(with_suffix(layout.direct_eval(d->device_id, internal), ".errors.csv"));
      for (std::size_t k = 0; k < errs.errors.size(); ++k) {
        pooled[{d->edfa_type, errs.modes[k]}].push_back(errs.errors[k]);
      }
      const auto s = eval::summarize(errs.errors);
      devices << d->device_id << ',' << to_string(d->edfa_type) << ',' << flag_tag(internal) << ','
              << eval::format_real(s.mae_db) << ',' << eval::format_real(s.p95_db) << ',' << s.n_channels_evaluated
              << '\n';
    }
    for (const auto type : {EdfaType::Booster, EdfaType::Preamp}) {
      for (const auto mode : kReportModes) {
        const auto it = pooled.find({type, mode});
        if (it == pooled.end()) continue;
        groups.emplace_back(std::string(to_string(type)) + "/" + std::string(to_string(mode)) + "/" +
                                std::string(flag_tag(internal)),
                            eval::summarize(it->second));
      }
    }
  }
  if (!any) throw ConfigError("no evaluation artifacts in " + run_dir.string() + "; run 'train' first");
  if (!missing.empty()) throw ConfigError("missing evaluation artifacts: " + join(missing, ", "));

  // Regroup so rows sharing type and loading sit next to each other.
  std::stable_sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) {
    return a.first.substr(0, a.first.rfind('/')) < b.first.substr(0, b.first.rfind('/'));
  });
  eval::report(groups, layout.report_dir());
  write_text(layout.report_dir() / "devices.csv", devices.str());

  // Transfer results pooled by source and target type.
  eval::NamedStats tl_groups;
  for (const bool internal : {true, false}) {
    std::map<std::string, std::vector<double>> pooled;
    for (const auto& s : fleet) {
      for (const auto& t : fleet) {
        if (s.device_id == t.device_id) continue;
        const auto path = with_suffix(layout.transfer_eval(s.device_id, t.device_id, internal), ".errors.csv");
        if (!fs::exists(path)) continue;
        const auto errs = read_errors_csv(path);
        const std::string key = std::string(to_string(s.edfa_type)) + "->" + std::string(to_string(t.edfa_type)) +
                                "/" + std::string(flag_tag(internal));
        pooled[key].insert(pooled[key].end(), errs.errors.begin(), errs.errors.end());
      }
    }
    for (auto& [key, errors] : pooled) tl_groups.emplace_back(key, eval::summarize(errors));
  }
  if (!tl_groups.empty()) eval::write_stats_csv(tl_groups, layout.report_dir() / "tl_stats.csv");
  for (const bool internal : {true, false}) {
    const auto src = layout.matrix_dir(internal) / "tl_matrix_grid.csv";
    if (fs::exists(src)) {
      fs::copy_file(src, layout.report_dir() / ("tl_matrix_grid." + std::string(flag_tag(internal)) + ".csv"),
                    fs::copy_options::overwrite_existing);
    }
  }
  log << "report: " << groups.size() << " grouped rows";
  if (!tl_groups.empty()) log << ", " << tl_groups.size() << " transfer groups";
  log << " written to " << layout.report_dir().string() << '\n';
}

}  // namespace edfa::cli
