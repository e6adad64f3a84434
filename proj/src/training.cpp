#include "edfa/training.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace edfa::train {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

template <class T>
void read_key(const nlohmann::json& j, const char* key, T& field, std::set<std::string>& seen) {
  if (j.contains(key)) {
    field = j.at(key).get<T>();
    seen.insert(key);
  }
}

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& seen, const char* section) {
  for (const auto& [k, v] : j.items()) {
    if (!seen.count(k)) throw ConfigError(std::string("unknown key '") + k + "' in " + section + " config");
  }
}

Eigen::MatrixXd columns(const Eigen::MatrixXd& m, std::span<const std::size_t> idx) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(static_cast<Eigen::Index>(idx[j]));
  return out;
}

std::string format_gain(double g) {
  std::ostringstream s;
  s << g;
  return s.str();
}

}  // namespace

void PretrainConfig::validate() const {
  require(n_unlabeled_per_setting > 0, "pretrain.n_unlabeled_per_setting must be positive");
  require(noise_sigma >= 0.0, "pretrain.noise_sigma must be >= 0");
  require(epochs_per_layer > 0, "pretrain.epochs_per_layer must be positive");
  require(lr > 0.0, "pretrain.lr must be positive");
  require(batch_size > 0, "pretrain.batch_size must be positive");
  require(clip_norm >= 0.0, "pretrain.clip_norm must be >= 0");
}

void FinetuneConfig::validate() const {
  require(n_labeled > 0, "finetune.n_labeled must be positive");
  require(epochs > 0, "finetune.epochs must be positive");
  require(lr > 0.0, "finetune.lr must be positive");
  require(clip_norm > 0.0, "finetune.clip_norm must be positive");
  require(full_fraction >= 0.0 && full_fraction <= 1.0, "finetune.full_fraction must lie in [0, 1]");
}

void TransferConfig::validate() const {
  require(n_per_setting > 0, "transfer.n_per_setting must be positive");
  require(epochs > 0, "transfer.epochs must be positive");
  require(output_lr > 0.0, "transfer.output_lr must be positive");
  require(layer_decay >= 0.0 && layer_decay < 1.0, "transfer.layer_decay must lie in [0, 1)");
  require(clip_norm > 0.0, "transfer.clip_norm must be positive");
}

nlohmann::json to_json(const PretrainConfig& c) {
  return {{"n_unlabeled_per_setting", c.n_unlabeled_per_setting}, {"noise_sigma", c.noise_sigma},
          {"epochs_per_layer", c.epochs_per_layer}, {"lr", c.lr}, {"batch_size", c.batch_size},
          {"clip_norm", c.clip_norm}, {"resample_noise", c.resample_noise}};
}

nlohmann::json to_json(const FinetuneConfig& c) {
  return {{"n_labeled", c.n_labeled}, {"epochs", c.epochs}, {"lr", c.lr}, {"clip_norm", c.clip_norm},
          {"batch_size", c.batch_size}, {"full_fraction", c.full_fraction}};
}

nlohmann::json to_json(const TransferConfig& c) {
  return {{"n_per_setting", c.n_per_setting}, {"epochs", c.epochs}, {"output_lr", c.output_lr},
          {"layer_decay", c.layer_decay}, {"clip_norm", c.clip_norm}};
}

PretrainConfig pretrain_config_from_json(const nlohmann::json& j) {
  PretrainConfig c;
  std::set<std::string> seen;
  read_key(j, "n_unlabeled_per_setting", c.n_unlabeled_per_setting, seen);
  read_key(j, "noise_sigma", c.noise_sigma, seen);
  read_key(j, "epochs_per_layer", c.epochs_per_layer, seen);
  read_key(j, "lr", c.lr, seen);
  read_key(j, "batch_size", c.batch_size, seen);
  read_key(j, "clip_norm", c.clip_norm, seen);
  read_key(j, "resample_noise", c.resample_noise, seen);
  reject_unknown(j, seen, "pretrain");
  c.validate();
  return c;
}

FinetuneConfig finetune_config_from_json(const nlohmann::json& j) {
  FinetuneConfig c;
  std::set<std::string> seen;
  read_key(j, "n_labeled", c.n_labeled, seen);
  read_key(j, "epochs", c.epochs, seen);
  read_key(j, "lr", c.lr, seen);
  read_key(j, "clip_norm", c.clip_norm, seen);
  read_key(j, "batch_size", c.batch_size, seen);
  read_key(j, "full_fraction", c.full_fraction, seen);
  reject_unknown(j, seen, "finetune");
  c.validate();
  return c;
}

TransferConfig transfer_config_from_json(const nlohmann::json& j) {
  TransferConfig c;
  std::set<std::string> seen;
  read_key(j, "n_per_setting", c.n_per_setting, seen);
  read_key(j, "epochs", c.epochs, seen);
  read_key(j, "output_lr", c.output_lr, seen);
  read_key(j, "layer_decay", c.layer_decay, seen);
  read_key(j, "clip_norm", c.clip_norm, seen);
  reject_unknown(j, seen, "transfer");
  c.validate();
  return c;
}

Eigen::VectorXd noise_rows(bool use_internal) {
  Eigen::VectorXd rows = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(FeatureLayout::dim(use_internal)));
  for (std::size_t i = FeatureLayout::kMask; i < FeatureLayout::kVoa; ++i) rows[static_cast<Eigen::Index>(i)] = 0.0;
  return rows;
}

PretrainResult pretrain(nn::Network& net, const Eigen::MatrixXd& unlabeled, const Eigen::VectorXd& noise_rows,
                        const PretrainConfig& cfg, Rng& rng) {
  cfg.validate();
  if (static_cast<std::size_t>(unlabeled.rows()) != net.input_dim()) {
    throw ConfigError("unlabeled feature width does not match network input");
  }
  if (noise_rows.size() != unlabeled.rows()) throw ConfigError("noise row mask has the wrong length");
  if (unlabeled.cols() == 0) throw ConfigError("no unlabeled data for pretraining");

  const Eigen::Index dim = unlabeled.rows();
  const auto n = static_cast<std::size_t>(unlabeled.cols());
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto draw_noise = [&](Eigen::Index cols) {
    Eigen::MatrixXd z(dim, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
      for (Eigen::Index i = 0; i < dim; ++i) z(i, j) = noise_rows[i] != 0.0 ? cfg.noise_sigma * gauss(rng) : 0.0;
    }
    return z;
  };
  Eigen::MatrixXd fixed_noise;
  if (!cfg.resample_noise) fixed_noise = draw_noise(unlabeled.cols());

  PretrainResult result;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t hidden = net.size() - 1;
  for (std::size_t k = 0; k < hidden; ++k) {
    nn::DenseLayer decoder(net.layer(k).out_dim(), static_cast<std::size_t>(dim), nn::Activation::Linear);
    nn::init_lecun(decoder, rng);
    nn::DenseLayer encoder = net.layer(k);
    encoder.lr_multiplier = 1.0;
    nn::Network pair({encoder, decoder});
    nn::Adam adam(pair, {.learning_rate = cfg.lr, .clip_norm = cfg.clip_norm});
    nn::ForwardCache cache;
    std::vector<double> losses;
    losses.reserve(cfg.epochs_per_layer);

    for (std::size_t epoch = 0; epoch < cfg.epochs_per_layer; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      double epoch_loss = 0.0;
      for (std::size_t start = 0; start < n; start += cfg.batch_size) {
        const std::size_t end = std::min(n, start + cfg.batch_size);
        const std::span<const std::size_t> idx(order.data() + start, end - start);
        const Eigen::MatrixXd clean = columns(unlabeled, idx);
        Eigen::MatrixXd noisy = clean;
        noisy += cfg.resample_noise ? draw_noise(noisy.cols()) : columns(fixed_noise, idx);
        const Eigen::MatrixXd encoded_input = nn::forward_prefix(net, noisy, k);
        const Eigen::MatrixXd recon = nn::forward(pair, encoded_input, &cache);
        const auto loss = nn::mse_batch(recon, clean);
        if (!std::isfinite(loss.loss)) {
          throw TrainingError("pretraining of hidden layer " + std::to_string(k + 1) + " produced a non-finite loss");
        }
        epoch_loss += loss.loss * static_cast<double>(idx.size());
        adam.step(pair, nn::backward(pair, cache, loss.grad));
      }
      losses.push_back(epoch_loss / static_cast<double>(n));
    }
    net.layer(k) = pair.layer(0);
    net.layer(k).lr_multiplier = 0.0;  // frozen for the following phases
    result.layer_losses.push_back(std::move(losses));
  }
  return result;
}

LabeledBatch make_labeled_batch(const Standardizer& features, const LabelScaler& labels,
                                std::span<const MeasurementRecord> records) {
  LabeledBatch b;
  const auto n = static_cast<Eigen::Index>(records.size());
  b.inputs = features.encode_batch(records);
  b.targets.resize(kChannels, n);
  b.masks.resize(kChannels, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& r = records[static_cast<std::size_t>(j)];
    if (r.plan.active_count() == 0) throw ConfigError("labeled record with all-zero mask");
    b.targets.col(j) = labels.standardize(r);
    b.masks.col(j) = mask_vector(r.plan);
  }
  return b;
}

FinetuneResult finetune(nn::Network& net, const LabeledBatch& batch, const FinetuneConfig& cfg, Rng& rng) {
  cfg.validate();
  if (batch.inputs.cols() == 0) throw ConfigError("no labeled data for fine-tuning");
  for (auto& layer : net.layers()) layer.lr_multiplier = 1.0;
  nn::Adam adam(net, {.learning_rate = cfg.lr, .clip_norm = cfg.clip_norm});
  nn::ForwardCache cache;
  FinetuneResult result;
  result.loss_history.reserve(cfg.epochs);

  const auto n = static_cast<std::size_t>(batch.inputs.cols());
  const std::size_t bs = cfg.batch_size == 0 ? n : std::min(cfg.batch_size, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double epoch_loss = 0.0;
    if (bs == n) {
      const Eigen::MatrixXd pred = nn::forward(net, batch.inputs, &cache);
      const auto loss = nn::masked_mse_batch(pred, batch.targets, batch.masks);
      epoch_loss = loss.loss;
      if (!std::isfinite(epoch_loss)) throw TrainingError("fine-tuning diverged at epoch " + std::to_string(epoch));
      adam.step(net, nn::backward(net, cache, loss.grad));
    } else {
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t start = 0; start < n; start += bs) {
        const std::span<const std::size_t> idx(order.data() + start, std::min(n, start + bs) - start);
        const Eigen::MatrixXd pred = nn::forward(net, columns(batch.inputs, idx), &cache);
        const auto loss = nn::masked_mse_batch(pred, columns(batch.targets, idx), columns(batch.masks, idx));
        if (!std::isfinite(loss.loss)) throw TrainingError("fine-tuning diverged at epoch " + std::to_string(epoch));
        epoch_loss += loss.loss * static_cast<double>(idx.size());
        adam.step(net, nn::backward(net, cache, loss.grad));
      }
      epoch_loss /= static_cast<double>(n);
    }
    result.loss_history.push_back(epoch_loss);
  }
  return result;
}

TrainingSets select_training_sets(std::span<const MeasurementRecord> train, const PretrainConfig& pre,
                                  const FinetuneConfig& fit, Rng& rng) {
  pre.validate();
  fit.validate();
  const auto settings = gain_settings(train);
  if (settings.empty()) throw ConfigError("no training records");

  TrainingSets out;
  const std::size_t n_settings = settings.size();
  for (std::size_t s = 0; s < n_settings; ++s) {
    const std::size_t n_labeled = fit.n_labeled / n_settings + (s < fit.n_labeled % n_settings ? 1 : 0);
    const auto n_full = static_cast<std::size_t>(std::llround(fit.full_fraction * static_cast<double>(n_labeled)));
    const std::size_t n_random = n_labeled - n_full;

    std::vector<std::size_t> full, random, rest;
    for (std::size_t i = 0; i < train.size(); ++i) {
      if (train[i].target_gain_db != settings[s]) continue;
      switch (train[i].plan.mode()) {
        case LoadingMode::Full: full.push_back(i); break;
        case LoadingMode::Random: random.push_back(i); break;
        case LoadingMode::Goalpost: rest.push_back(i); break;
      }
    }
    std::shuffle(full.begin(), full.end(), rng);
    std::shuffle(random.begin(), random.end(), rng);
    if (full.size() < n_full || random.size() < n_random) {
      throw ConfigError("gain setting " + format_gain(settings[s]) + ": need " + std::to_string(n_full) +
                        " full and " + std::to_string(n_random) + " random labeled records, have " +
                        std::to_string(full.size()) + " and " + std::to_string(random.size()));
    }
    for (std::size_t i = 0; i < n_full; ++i) out.labeled.push_back(train[full[i]]);
    for (std::size_t i = 0; i < n_random; ++i) out.labeled.push_back(train[random[i]]);
    rest.insert(rest.end(), full.begin() + static_cast<std::ptrdiff_t>(n_full), full.end());
    rest.insert(rest.end(), random.begin() + static_cast<std::ptrdiff_t>(n_random), random.end());
    std::sort(rest.begin(), rest.end());
    std::shuffle(rest.begin(), rest.end(), rng);
    if (rest.size() < pre.n_unlabeled_per_setting) {
      throw ConfigError("gain setting " + format_gain(settings[s]) + ": need " +
                        std::to_string(pre.n_unlabeled_per_setting) + " unlabeled records, have " +
                        std::to_string(rest.size()));
    }
    for (std::size_t i = 0; i < pre.n_unlabeled_per_setting; ++i) out.unlabeled.push_back(train[rest[i]].unlabeled());
  }
  return out;
}

DirectResult train_direct(std::span<const MeasurementRecord> train, bool use_internal, const PretrainConfig& pre,
                          const FinetuneConfig& fit, std::uint64_t seed, bool with_pretraining) {
  Rng select_rng = make_rng(seed, "select");
  TrainingSets sets = select_training_sets(train, pre, fit, select_rng);

  std::vector<MeasurementRecord> all = sets.unlabeled;
  all.insert(all.end(), sets.labeled.begin(), sets.labeled.end());
  DirectResult result{GainModel{nn::Network::ssnn(FeatureLayout::dim(use_internal)),
                                Standardizer::fit(all, use_internal), LabelScaler::fit(sets.labeled), {}},
                      {}, {}, sets.unlabeled.size(), sets.labeled.size()};
  GainModel& model = result.model;

  Rng init_rng = make_rng(seed, "init");
  nn::init_lecun(model.network, init_rng);
  if (with_pretraining) {
    Rng noise_rng = make_rng(seed, "noise");
    result.pretraining =
        pretrain(model.network, model.features.encode_batch(sets.unlabeled), noise_rows(use_internal), pre, noise_rng);
  }
  Rng batch_rng = make_rng(seed, "batches");
  result.finetuning = finetune(model.network, make_labeled_batch(model.features, model.labels, sets.labeled), fit, batch_rng);

  model.provenance.seed = seed;
  model.provenance.kind = with_pretraining ? "direct" : "finetune-only";
  model.provenance.source_device = train.front().device_id;
  model.provenance.target_device = train.front().device_id;
  model.provenance.pretrain_epochs_per_layer = with_pretraining ? pre.epochs_per_layer : 0;
  model.provenance.finetune_epochs = fit.epochs;
  model.provenance.learning_rate = fit.lr;
  model.provenance.lr_multipliers.assign(model.network.size(), 1.0);
  return result;
}

std::vector<double> transfer_lr_multipliers(std::size_t n_layers, double layer_decay) {
  std::vector<double> m(n_layers);
  double rate = 1.0;
  for (std::size_t k = n_layers; k-- > 0;) {
    m[k] = rate;
    rate *= layer_decay;
  }
  return m;
}

std::vector<MeasurementRecord> pick_transfer_records(std::span<const MeasurementRecord> train,
                                                     std::span<const double> settings, std::size_t n_per_setting) {
  std::vector<MeasurementRecord> picked;
  for (double g : settings) {
    std::size_t taken = 0;
    for (const auto& r : train) {
      if (taken == n_per_setting) break;
      if (r.target_gain_db == g && r.plan.mode() == LoadingMode::Full && r.labeled()) {
        picked.push_back(r);
        ++taken;
      }
    }
  }
  return picked;
}

TransferResult transfer(const GainModel& source, std::span<const MeasurementRecord> target,
                        std::span<const double> target_settings, const TransferConfig& cfg, bool use_internal) {
  cfg.validate();
  if (use_internal != source.use_internal()) {
    throw ConfigError(std::string("cannot transfer a model trained with internal features ") +
                      (source.use_internal() ? "on" : "off") + " to features with internal features " +
                      (use_internal ? "on" : "off"));
  }
  if (target_settings.empty()) throw ConfigError("transfer needs at least one target gain setting");
  std::map<double, std::size_t> per_setting;
  for (const auto& r : target) {
    if (!r.labeled()) throw ConfigError("transfer records must be labeled");
    if (r.plan.mode() != LoadingMode::Full) throw ConfigError("transfer records must use full channel loading");
    if (std::find(target_settings.begin(), target_settings.end(), r.target_gain_db) == target_settings.end()) {
      throw ConfigError("transfer record at gain " + format_gain(r.target_gain_db) + " dB is not a target setting");
    }
    ++per_setting[r.target_gain_db];
  }
  std::string missing, surplus;
  for (double g : target_settings) {
    const auto n = per_setting.count(g) ? per_setting[g] : 0;
    if (n < cfg.n_per_setting) missing += (missing.empty() ? "" : ", ") + format_gain(g);
    if (n > cfg.n_per_setting) surplus += (surplus.empty() ? "" : ", ") + format_gain(g);
  }
  if (!missing.empty()) throw ConfigError("missing transfer measurement for gain setting(s): " + missing + " dB");
  if (!surplus.empty()) throw ConfigError("too many transfer measurements for gain setting(s): " + surplus + " dB");

  TransferResult result{source, {}, target.size()};
  nn::Network& net = result.model.network;
  const auto multipliers = transfer_lr_multipliers(net.size(), cfg.layer_decay);
  for (std::size_t k = 0; k < net.size(); ++k) net.layer(k).lr_multiplier = multipliers[k];

  const LabeledBatch batch = make_labeled_batch(source.features, source.labels, target);
  nn::Adam adam(net, {.learning_rate = cfg.output_lr, .clip_norm = cfg.clip_norm});
  nn::ForwardCache cache;
  result.loss_history.reserve(cfg.epochs);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const Eigen::MatrixXd pred = nn::forward(net, batch.inputs, &cache);
    const auto loss = nn::masked_mse_batch(pred, batch.targets, batch.masks);
    if (!std::isfinite(loss.loss)) throw TrainingError("transfer diverged at epoch " + std::to_string(epoch));
    result.loss_history.push_back(loss.loss);
    adam.step(net, nn::backward(net, cache, loss.grad));
  }

  auto& prov = result.model.provenance;
  prov.kind = "transfer";
  prov.source_device = source.provenance.target_device;
  prov.target_device = target.front().device_id;
  prov.transfer_epochs = cfg.epochs;
  prov.learning_rate = cfg.output_lr;
  prov.lr_multipliers = multipliers;
  return result;
}

}  // namespace edfa::train
