#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>

#include <json.hpp>

#include "edfa/features.hpp"
#include "edfa/nn.hpp"

namespace edfa {

/// Record of how a model was produced; stored in checkpoints.
struct Provenance {
  std::uint64_t seed = 0;
  std::string source_device;
  std::string kind = "direct";  ///< "direct", "finetune-only" or "transfer"
  std::size_t pretrain_epochs_per_layer = 0;
  std::size_t finetune_epochs = 0;
  std::size_t transfer_epochs = 0;
  double learning_rate = 0.0;
  std::vector<double> lr_multipliers;
  std::string target_device;

  nlohmann::json to_json() const;
  static Provenance from_json(const nlohmann::json& j);
};

/// Network plus the scalers that map records to inputs and outputs to dB.
struct GainModel {
  nn::Network network;
  Standardizer features;
  LabelScaler labels;
  Provenance provenance;

  bool use_internal() const { return features.use_internal(); }

  /// Gain spectrum in dB; off channels are returned as the sentinel.
  Spectrum predict(const MeasurementRecord& record) const;
  std::vector<Spectrum> predict(std::span<const MeasurementRecord> records) const;
};

using Predictor = std::function<Spectrum(const MeasurementRecord&)>;

inline constexpr int kCheckpointVersion = 1;

nlohmann::json to_json(const GainModel& model);
GainModel model_from_json(const nlohmann::json& j);
void save_checkpoint(const GainModel& model, const std::filesystem::path& path);
GainModel load_checkpoint(const std::filesystem::path& path);

nlohmann::json network_to_json(const nn::Network& net);
nn::Network network_from_json(const nlohmann::json& j);

}  // namespace edfa
