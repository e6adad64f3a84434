#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "edfa/simkernel.hpp"
#include "edfa/training.hpp"

namespace edfa::cli {

/// Everything an experiment needs. All randomness derives from `seed`.
struct ExperimentManifest {
  std::string name = "open-ireland";
  std::uint64_t seed = 0;
  sim::FleetSpec fleet;
  /// Fleet of flat-gain devices (no ripple, tilt, saturation or loading effects).
  bool flat_fleet = false;
  std::vector<double> booster_gains_db{15.0, 20.0, 25.0};
  std::vector<double> preamp_gains_db{15.0, 20.0, 25.0};
  std::size_t records_per_setting = 3168;
  bool quantize = true;
  sim::ModeMix mode_mix;
  double train_ratio = 0.86;
  bool use_internal = true;
  train::PretrainConfig pretrain;
  train::FinetuneConfig finetune;
  train::TransferConfig transfer;
  std::optional<LoadingMode> matrix_loading = LoadingMode::Random;
  /// Run directory; empty means runs/<name>. The --out flag takes precedence.
  std::string output_dir;

  const std::vector<double>& gains_for(EdfaType type) const {
    return type == EdfaType::Booster ? booster_gains_db : preamp_gains_db;
  }

  /// Throws ConfigError before any compute if a module invariant is violated.
  void validate() const;

  nlohmann::json to_json() const;
  /// Keys missing from `j` are taken from the profile named by j["profile"]
  /// (default "open-ireland"). "seed" is mandatory.
  static ExperimentManifest from_json(const nlohmann::json& j);

  /// Built-in profiles: "open-ireland", "cosmos", "smoke".
  static ExperimentManifest profile(std::string_view name);
  static std::vector<std::string> profile_names();
};

/// Devices described by the manifest, derived from the "fleet" seed stream.
std::vector<sim::EdfaDevice> build_fleet(const ExperimentManifest& m);

/// Loads a manifest file, or a built-in profile when `spec` names one.
ExperimentManifest load_manifest(const std::string& spec);

}  // namespace edfa::cli
