#include "edfa/manifest.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <set>

#include "edfa/rng.hpp"

namespace edfa::cli {

using nlohmann::json;

namespace {

const std::set<std::string> kKnownKeys{
    "profile",  "name",        "seed",         "fleet",    "booster_gains_db", "preamp_gains_db",
    "records_per_setting",     "quantize",     "mode_mix", "train_ratio",      "use_internal",
    "pretrain", "finetune",    "transfer",     "matrix_loading",   "output_dir"};

void check_gains(const std::vector<double>& gains, const sim::EdfaDevice& family_limits, const std::string& what) {
  if (gains.empty()) throw ConfigError(what + ": at least one gain setting is required");
  for (std::size_t i = 0; i < gains.size(); ++i) {
    if (!std::isfinite(gains[i])) throw ConfigError(what + ": non-finite gain");
    if (i > 0 && gains[i] <= gains[i - 1]) throw ConfigError(what + ": gains must be strictly increasing");
    if (gains[i] < family_limits.gain_min_db || gains[i] > family_limits.gain_max_db) {
      throw ConfigError(what + ": gain " + std::to_string(gains[i]) + " dB outside the device range");
    }
  }
}

}  // namespace

ExperimentManifest ExperimentManifest::profile(std::string_view name) {
  ExperimentManifest m;
  m.name = std::string(name);
  if (name == "open-ireland") return m;
  if (name == "cosmos") {
    m.booster_gains_db = {15.0, 18.0, 21.0};
    m.preamp_gains_db = {15.0, 18.0, 21.0, 24.0, 27.0};
    return m;
  }
  if (name == "smoke") {
    m.fleet = {3, 3, 1.0};
    m.records_per_setting = 1000;
    m.pretrain.n_unlabeled_per_setting = 128;
    m.pretrain.epochs_per_layer = 200;
    m.transfer.epochs = 2000;
    return m;
  }
  throw ConfigError("unknown manifest profile '" + std::string(name) + "'");
}

std::vector<std::string> ExperimentManifest::profile_names() { return {"open-ireland", "cosmos", "smoke"}; }

void ExperimentManifest::validate() const {
  if (name.empty() || name.find_first_of("/\\") != std::string::npos) {
    throw ConfigError("manifest name must be a non-empty path component");
  }
  if (fleet.n_boosters == 0 || fleet.n_preamps == 0) throw ConfigError("fleet needs at least one device of each type");
  if (fleet.n_boosters > 99 || fleet.n_preamps > 99) throw ConfigError("at most 99 devices per type");
  if (!(fleet.family_spread >= 0.0) || !std::isfinite(fleet.family_spread)) {
    throw ConfigError("fleet.family_spread must be finite and >= 0");
  }
  check_gains(booster_gains_db, sim::flat_device("B00", EdfaType::Booster), "booster_gains_db");
  check_gains(preamp_gains_db, sim::flat_device("P00", EdfaType::Preamp), "preamp_gains_db");
  const double mix_sum = mode_mix.full + mode_mix.random + mode_mix.goalpost;
  if (mode_mix.full < 0 || mode_mix.random < 0 || mode_mix.goalpost < 0 || std::abs(mix_sum - 1.0) > 1e-9) {
    throw ConfigError("mode_mix must be non-negative and sum to 1");
  }
  if (!(train_ratio > 0.0 && train_ratio < 1.0)) throw ConfigError("train_ratio must lie in (0, 1)");
  if (records_per_setting < 10) throw ConfigError("records_per_setting must be at least 10");
  pretrain.validate();
  finetune.validate();
  transfer.validate();

  // Each setting's train split must cover the unlabeled, labeled and transfer picks.
  for (EdfaType type : {EdfaType::Booster, EdfaType::Preamp}) {
    const auto& gains = gains_for(type);
    const std::size_t n_train =
        records_per_setting - static_cast<std::size_t>(std::llround((1.0 - train_ratio) * records_per_setting));
    const std::size_t labeled_per_setting = (finetune.n_labeled + gains.size() - 1) / gains.size();
    const std::size_t need = pretrain.n_unlabeled_per_setting + labeled_per_setting;
    if (need > n_train) {
      throw ConfigError(std::string(to_string(type)) + ": " + std::to_string(need) +
                        " training records needed per setting but the split leaves " + std::to_string(n_train));
    }
    const auto n_full = static_cast<std::size_t>(std::floor(mode_mix.full * static_cast<double>(records_per_setting)));
    if (n_full < transfer.n_per_setting + 2) {
      throw ConfigError("mode_mix.full leaves too few fully loaded records per setting for transfer");
    }
  }
}

json ExperimentManifest::to_json() const {
  json j;
  j["name"] = name;
  j["seed"] = seed;
  j["fleet"] = {{"n_boosters", fleet.n_boosters},
                {"n_preamps", fleet.n_preamps},
                {"family_spread", fleet.family_spread},
                {"flat", flat_fleet}};
  j["booster_gains_db"] = booster_gains_db;
  j["preamp_gains_db"] = preamp_gains_db;
  j["records_per_setting"] = records_per_setting;
  j["quantize"] = quantize;
  j["mode_mix"] = {{"full", mode_mix.full}, {"random", mode_mix.random}, {"goalpost", mode_mix.goalpost}};
  j["train_ratio"] = train_ratio;
  j["use_internal"] = use_internal;
  j["pretrain"] = train::to_json(pretrain);
  j["finetune"] = train::to_json(finetune);
  j["transfer"] = train::to_json(transfer);
  j["matrix_loading"] = matrix_loading ? std::string(to_string(*matrix_loading)) : std::string("all");
  j["output_dir"] = output_dir;
  return j;
}

ExperimentManifest ExperimentManifest::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("manifest must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!kKnownKeys.count(key)) throw ConfigError("unknown manifest key '" + key + "'");
  }
  if (!j.contains("seed")) throw ConfigError("manifest is missing the mandatory 'seed'");
  try {
    auto m = profile(j.value("profile", std::string("open-ireland")));
    m.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("name")) m.name = j.at("name").get<std::string>();
    if (j.contains("fleet")) {
      const auto& f = j.at("fleet");
      for (const auto& [key, _] : f.items()) {
        if (key != "n_boosters" && key != "n_preamps" && key != "family_spread" && key != "flat") {
          throw ConfigError("unknown fleet key '" + key + "'");
        }
      }
      m.fleet.n_boosters = f.value("n_boosters", m.fleet.n_boosters);
      m.fleet.n_preamps = f.value("n_preamps", m.fleet.n_preamps);
      m.fleet.family_spread = f.value("family_spread", m.fleet.family_spread);
      m.flat_fleet = f.value("flat", m.flat_fleet);
    }
    if (j.contains("booster_gains_db")) m.booster_gains_db = j.at("booster_gains_db").get<std::vector<double>>();
    if (j.contains("preamp_gains_db")) m.preamp_gains_db = j.at("preamp_gains_db").get<std::vector<double>>();
    m.records_per_setting = j.value("records_per_setting", m.records_per_setting);
    m.quantize = j.value("quantize", m.quantize);
    if (j.contains("mode_mix")) {
      const auto& mm = j.at("mode_mix");
      m.mode_mix.full = mm.value("full", m.mode_mix.full);
      m.mode_mix.random = mm.value("random", m.mode_mix.random);
      m.mode_mix.goalpost = mm.value("goalpost", m.mode_mix.goalpost);
    }
    m.train_ratio = j.value("train_ratio", m.train_ratio);
    m.use_internal = j.value("use_internal", m.use_internal);
    // Section overrides merge over the profile values.
    if (j.contains("pretrain")) {
      auto base = train::to_json(m.pretrain);
      base.update(j.at("pretrain"));
      m.pretrain = train::pretrain_config_from_json(base);
    }
    if (j.contains("finetune")) {
      auto base = train::to_json(m.finetune);
      base.update(j.at("finetune"));
      m.finetune = train::finetune_config_from_json(base);
    }
    if (j.contains("transfer")) {
      auto base = train::to_json(m.transfer);
      base.update(j.at("transfer"));
      m.transfer = train::transfer_config_from_json(base);
    }
    m.output_dir = j.value("output_dir", m.output_dir);
    if (j.contains("matrix_loading")) {
      const auto s = j.at("matrix_loading").get<std::string>();
      if (s == "all") {
        m.matrix_loading.reset();
      } else {
        m.matrix_loading = loading_mode_from_string(s);
      }
    }
    return m;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed manifest: ") + e.what());
  }
}

std::vector<sim::EdfaDevice> build_fleet(const ExperimentManifest& m) {
  const std::uint64_t seed = derive_seed(m.seed, "fleet");
  if (!m.flat_fleet) return sim::make_fleet(m.fleet, seed);
  std::vector<sim::EdfaDevice> fleet;
  for (const auto type : {EdfaType::Booster, EdfaType::Preamp}) {
    const std::size_t n = type == EdfaType::Booster ? m.fleet.n_boosters : m.fleet.n_preamps;
    for (std::size_t i = 0; i < n; ++i) {
      char id[32];
      std::snprintf(id, sizeof(id), "%s%02zu", type == EdfaType::Booster ? "B" : "P", i + 1);
      auto d = sim::flat_device(id, type);
      d.seed = derive_seed(seed, "device", fleet.size());
      fleet.push_back(std::move(d));
    }
  }
  return fleet;
}

ExperimentManifest load_manifest(const std::string& spec) {
  const auto names = ExperimentManifest::profile_names();
  if (std::find(names.begin(), names.end(), spec) != names.end()) return ExperimentManifest::profile(spec);
  std::ifstream in(spec);
  if (!in) throw ConfigError("cannot open manifest '" + spec + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("manifest '" + spec + "' is not valid JSON: " + e.what());
  }
  return ExperimentManifest::from_json(j);
}

}  // namespace edfa::cli
