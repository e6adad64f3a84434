#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "edfa/adam.hpp"
#include "edfa/model.hpp"

namespace edfa::train {

struct PretrainConfig {
  std::size_t n_unlabeled_per_setting = 512;
  double noise_sigma = 0.1;  ///< std of Gaussian noise on standardized features
  std::size_t epochs_per_layer = 1800;
  double lr = 1e-3;
  std::size_t batch_size = 64;
  double clip_norm = 1.0;
  bool resample_noise = true;  ///< fresh noise every epoch, else fixed per record

  void validate() const;
};

struct FinetuneConfig {
  std::size_t n_labeled = 256;
  std::size_t epochs = 1200;
  double lr = 1e-3;
  double clip_norm = 1.0;
  std::size_t batch_size = 16;  ///< 0 = full batch
  double full_fraction = 0.125; ///< share of labeled records with full loading

  void validate() const;
};

struct TransferConfig {
  std::size_t n_per_setting = 1;
  std::size_t epochs = 10000;
  double output_lr = 1e-3;
  double layer_decay = 0.1;
  double clip_norm = 1.0;

  void validate() const;
};

nlohmann::json to_json(const PretrainConfig& c);
nlohmann::json to_json(const FinetuneConfig& c);
nlohmann::json to_json(const TransferConfig& c);
/// Missing keys keep their defaults; unknown keys are rejected.
PretrainConfig pretrain_config_from_json(const nlohmann::json& j);
FinetuneConfig finetune_config_from_json(const nlohmann::json& j);
TransferConfig transfer_config_from_json(const nlohmann::json& j);

/// 1 for rows that receive denoising noise, 0 for the binary mask slots.
Eigen::VectorXd noise_rows(bool use_internal);

struct PretrainResult {
  std::vector<std::vector<double>> layer_losses;  ///< per hidden layer, per epoch
};

/// Greedy layer-wise denoising-autoencoder pretraining of every hidden layer
/// (all layers except the last). Layer k is trained jointly with a fresh
/// linear decoder back to the input width, on noised inputs pushed through
/// the already-frozen layers 1..k-1, against the clean inputs. On return all
/// hidden layers are frozen (lr_multiplier 0) and the output layer is untouched.
PretrainResult pretrain(nn::Network& net, const Eigen::MatrixXd& unlabeled, const Eigen::VectorXd& noise_rows,
                        const PretrainConfig& cfg, Rng& rng);

struct LabeledBatch {
  Eigen::MatrixXd inputs;   ///< standardized features, one column per record
  Eigen::MatrixXd targets;  ///< standardized gains
  Eigen::MatrixXd masks;    ///< 0/1 channel masks
};

LabeledBatch make_labeled_batch(const Standardizer& features, const LabelScaler& labels,
                                std::span<const MeasurementRecord> records);

struct FinetuneResult {
  std::vector<double> loss_history;
};

/// Supervised masked-MSE training of every layer (all multipliers reset to 1).
FinetuneResult finetune(nn::Network& net, const LabeledBatch& batch, const FinetuneConfig& cfg, Rng& rng);

struct TrainingSets {
  std::vector<MeasurementRecord> unlabeled;  ///< gain labels stripped
  std::vector<MeasurementRecord> labeled;
};

/// Draws disjoint unlabeled/labeled subsets of `train` balanced per gain setting.
TrainingSets select_training_sets(std::span<const MeasurementRecord> train, const PretrainConfig& pre,
                                  const FinetuneConfig& fit, Rng& rng);

struct DirectResult {
  GainModel model;
  PretrainResult pretraining;
  FinetuneResult finetuning;
  std::size_t unlabeled_used = 0;
  std::size_t labeled_used = 0;
};

/// select -> fit scalers -> LeCun init -> (pretrain) -> finetune.
DirectResult train_direct(std::span<const MeasurementRecord> train, bool use_internal, const PretrainConfig& pre,
                          const FinetuneConfig& fit, std::uint64_t seed, bool with_pretraining = true);

/// Multipliers from the first hidden layer to the output layer, e.g.
/// [1e-4, 1e-3, 1e-2, 1e-1, 1] for five layers and decay 0.1.
std::vector<double> transfer_lr_multipliers(std::size_t n_layers, double layer_decay);

struct TransferResult {
  GainModel model;
  std::vector<double> loss_history;
  std::size_t records_used = 0;
};

/// Retrains `source` on `cfg.n_per_setting` fully loaded labeled records for
/// each of `target_settings`, with geometric per-layer learning rates.
/// Source feature and label scalers are reused unchanged.
TransferResult transfer(const GainModel& source, std::span<const MeasurementRecord> target_measurements,
                        std::span<const double> target_settings, const TransferConfig& cfg, bool use_internal);

/// First `n_per_setting` full-loading labeled records of each setting, in input order.
std::vector<MeasurementRecord> pick_transfer_records(std::span<const MeasurementRecord> train,
                                                     std::span<const double> settings, std::size_t n_per_setting);

}  // namespace edfa::train
