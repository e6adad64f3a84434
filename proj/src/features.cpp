#include "edfa/features.hpp"

#include <cmath>

namespace edfa {

namespace {

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

double floored_scale(double variance) {
  const double sd = std::sqrt(std::max(variance, 0.0));
  return sd < kScaleFloor ? 1.0 : sd;
}

}  // namespace

Eigen::VectorXd mask_vector(const ChannelPlan& plan) {
  Eigen::VectorXd m(kChannels);
  for (std::size_t i = 0; i < kChannels; ++i) m[static_cast<Eigen::Index>(i)] = plan.on(i) ? 1.0 : 0.0;
  return m;
}

Standardizer::Standardizer(Eigen::VectorXd means, Eigen::VectorXd scales, double fill, bool use_internal)
    : means_(std::move(means)), scales_(std::move(scales)), fill_(fill), use_internal_(use_internal) {
  if (means_.size() != scales_.size() ||
      static_cast<std::size_t>(means_.size()) != FeatureLayout::dim(use_internal_)) {
    throw ConfigError("standardizer dimension does not match its feature flag");
  }
  if ((scales_.array() <= 0.0).any()) throw ConfigError("standardizer scales must be positive");
}

Standardizer Standardizer::fit(std::span<const MeasurementRecord> records, bool use_internal) {
  if (records.empty()) throw ConfigError("cannot fit a standardizer on an empty record list");
  const auto dim = static_cast<Eigen::Index>(FeatureLayout::dim(use_internal));

  double fill_sum = 0.0;
  std::size_t fill_n = 0;
  for (const auto& r : records) {
    for (std::size_t i = 0; i < kChannels; ++i) {
      if (r.plan.on(i)) {
        fill_sum += r.input_spectrum_dbm[i];
        ++fill_n;
      }
    }
  }
  const double fill = fill_sum / static_cast<double>(fill_n);

  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd count = Eigen::VectorXd::Zero(dim);
  auto scalar_slots = [&](const MeasurementRecord& r, auto&& visit) {
    visit(FeatureLayout::kTargetGain, r.target_gain_db);
    visit(FeatureLayout::kTotalIn, r.total_in_dbm);
    visit(FeatureLayout::kTotalOut, r.total_out_dbm);
    for (std::size_t i = 0; i < kChannels; ++i) {
      if (r.plan.on(i)) visit(FeatureLayout::kSpectrum + i, r.input_spectrum_dbm[i]);
    }
    if (use_internal) {
      visit(FeatureLayout::kVoaIn, r.voa_in_dbm);
      visit(FeatureLayout::kVoaOut, r.voa_out_dbm);
      visit(FeatureLayout::kVoaAttn, r.voa_attn_db);
    }
  };
  for (const auto& r : records) {
    scalar_slots(r, [&](std::size_t slot, double v) {
      sum[static_cast<Eigen::Index>(slot)] += v;
      count[static_cast<Eigen::Index>(slot)] += 1.0;
    });
  }
  Eigen::VectorXd means = Eigen::VectorXd::Zero(dim);
  for (Eigen::Index k = 0; k < dim; ++k) {
    if (count[k] > 0) means[k] = sum[k] / count[k];
  }
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(dim);
  for (const auto& r : records) {
    scalar_slots(r, [&](std::size_t slot, double v) {
      const double d = v - means[static_cast<Eigen::Index>(slot)];
      sq[static_cast<Eigen::Index>(slot)] += d * d;
    });
  }
  Eigen::VectorXd scales = Eigen::VectorXd::Ones(dim);
  for (Eigen::Index k = 0; k < dim; ++k) {
    if (FeatureLayout::is_mask_slot(static_cast<std::size_t>(k))) continue;
    if (count[k] > 0) {
      scales[k] = floored_scale(sq[k] / count[k]);
    } else {
      means[k] = fill;  // channel never active in training
    }
  }
  return Standardizer(std::move(means), std::move(scales), fill, use_internal);
}

Eigen::VectorXd Standardizer::raw_features(const MeasurementRecord& r) const {
  Eigen::VectorXd x(static_cast<Eigen::Index>(dim()));
  x[FeatureLayout::kTargetGain] = r.target_gain_db;
  x[FeatureLayout::kTotalIn] = r.total_in_dbm;
  x[FeatureLayout::kTotalOut] = r.total_out_dbm;
  for (std::size_t i = 0; i < kChannels; ++i) {
    const bool on = r.plan.on(i);
    x[static_cast<Eigen::Index>(FeatureLayout::kSpectrum + i)] = on ? r.input_spectrum_dbm[i] : fill_;
    x[static_cast<Eigen::Index>(FeatureLayout::kMask + i)] = on ? 1.0 : 0.0;
  }
  if (use_internal_) {
    x[FeatureLayout::kVoaIn] = r.voa_in_dbm;
    x[FeatureLayout::kVoaOut] = r.voa_out_dbm;
    x[FeatureLayout::kVoaAttn] = r.voa_attn_db;
  }
  return x;
}

FeatureVector Standardizer::encode(const MeasurementRecord& record, bool use_internal) const {
  if (use_internal != use_internal_) {
    throw ConfigError(std::string("feature flag mismatch: standardizer fitted with internal features ") +
                      (use_internal_ ? "on" : "off"));
  }
  Eigen::VectorXd x = raw_features(record);
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    if (!FeatureLayout::is_mask_slot(static_cast<std::size_t>(k))) x[k] = (x[k] - means_[k]) / scales_[k];
  }
  return {std::move(x), use_internal_};
}

Eigen::MatrixXd Standardizer::encode_batch(std::span<const MeasurementRecord> records) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(dim()), static_cast<Eigen::Index>(records.size()));
  for (std::size_t j = 0; j < records.size(); ++j) {
    out.col(static_cast<Eigen::Index>(j)) = encode(records[j]).values;
  }
  return out;
}

Eigen::VectorXd Standardizer::invert(const FeatureVector& f) const {
  if (f.size() != dim()) throw ConfigError("feature dimension does not match standardizer");
  Eigen::VectorXd x = f.values;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    if (!FeatureLayout::is_mask_slot(static_cast<std::size_t>(k))) x[k] = x[k] * scales_[k] + means_[k];
  }
  return x;
}

Spectrum Standardizer::decode_spectrum(const FeatureVector& f) const {
  const Eigen::VectorXd raw = invert(f);
  Spectrum s;
  for (std::size_t i = 0; i < kChannels; ++i) {
    const bool on = raw[static_cast<Eigen::Index>(FeatureLayout::kMask + i)] != 0.0;
    s[i] = on ? raw[static_cast<Eigen::Index>(FeatureLayout::kSpectrum + i)] : kOffChannelDbm;
  }
  return s;
}

nlohmann::json Standardizer::to_json() const {
  return {{"means", to_vec(means_)}, {"scales", to_vec(scales_)}, {"fill", fill_}, {"use_internal", use_internal_}};
}

Standardizer Standardizer::from_json(const nlohmann::json& j) {
  return Standardizer(from_vec(j.at("means").get<std::vector<double>>()),
                      from_vec(j.at("scales").get<std::vector<double>>()), j.at("fill").get<double>(),
                      j.at("use_internal").get<bool>());
}

LabelScaler::LabelScaler(Eigen::VectorXd means, Eigen::VectorXd scales)
    : means_(std::move(means)), scales_(std::move(scales)) {
  if (means_.size() != static_cast<Eigen::Index>(kChannels) || scales_.size() != means_.size()) {
    throw ConfigError("label scaler must have 95 entries");
  }
  if ((scales_.array() <= 0.0).any()) throw ConfigError("label scales must be positive");
}

LabelScaler LabelScaler::fit(std::span<const MeasurementRecord> labeled) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(kChannels);
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(kChannels);
  Eigen::VectorXd n = Eigen::VectorXd::Zero(kChannels);
  double all_sum = 0.0, all_n = 0.0;
  for (const auto& r : labeled) {
    if (!r.labeled()) throw ConfigError("label scaler needs labeled records");
    for (std::size_t i = 0; i < kChannels; ++i) {
      if (!r.plan.on(i)) continue;
      const auto k = static_cast<Eigen::Index>(i);
      sum[k] += (*r.gain_spectrum_db)[i];
      n[k] += 1.0;
      all_sum += (*r.gain_spectrum_db)[i];
      all_n += 1.0;
    }
  }
  if (all_n == 0.0) throw ConfigError("cannot fit a label scaler without labeled channels");
  const double global_mean = all_sum / all_n;
  Eigen::VectorXd means(kChannels);
  for (Eigen::Index k = 0; k < means.size(); ++k) means[k] = n[k] > 0 ? sum[k] / n[k] : global_mean;
  for (const auto& r : labeled) {
    for (std::size_t i = 0; i < kChannels; ++i) {
      if (!r.plan.on(i)) continue;
      const auto k = static_cast<Eigen::Index>(i);
      const double d = (*r.gain_spectrum_db)[i] - means[k];
      sq[k] += d * d;
    }
  }
  Eigen::VectorXd scales = Eigen::VectorXd::Ones(kChannels);
  for (Eigen::Index k = 0; k < scales.size(); ++k) {
    if (n[k] > 0) scales[k] = floored_scale(sq[k] / n[k]);
  }
  return LabelScaler(std::move(means), std::move(scales));
}

Eigen::VectorXd LabelScaler::standardize(const MeasurementRecord& r) const {
  if (!r.labeled()) throw ConfigError("record has no gain label");
  Eigen::VectorXd y = Eigen::VectorXd::Zero(kChannels);
  for (std::size_t i = 0; i < kChannels; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    if (r.plan.on(i)) y[k] = ((*r.gain_spectrum_db)[i] - means_[k]) / scales_[k];
  }
  return y;
}

Spectrum LabelScaler::destandardize(const Eigen::Ref<const Eigen::VectorXd>& output) const {
  Spectrum g;
  for (std::size_t i = 0; i < kChannels; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    g[i] = output[k] * scales_[k] + means_[k];
  }
  return g;
}

nlohmann::json LabelScaler::to_json() const { return {{"means", to_vec(means_)}, {"scales", to_vec(scales_)}}; }

LabelScaler LabelScaler::from_json(const nlohmann::json& j) {
  return LabelScaler(from_vec(j.at("means").get<std::vector<double>>()),
                     from_vec(j.at("scales").get<std::vector<double>>()));
}

}  // namespace edfa
