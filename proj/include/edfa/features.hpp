#pragma once

#include <span>

#include <Eigen/Core>
#include <json.hpp>

#include "edfa/datamodel.hpp"

namespace edfa {

/// Frozen model-input ordering:
///   [G0, P_in, P_out, P(l_1..l_95), c_1..c_95, (P_in^V, P_out^V, P_attn^V)]
/// The three VOA slots exist only when internal features are enabled.
struct FeatureLayout {
  static constexpr std::size_t kTargetGain = 0;
  static constexpr std::size_t kTotalIn = 1;
  static constexpr std::size_t kTotalOut = 2;
  static constexpr std::size_t kSpectrum = 3;
  static constexpr std::size_t kMask = kSpectrum + kChannels;
  static constexpr std::size_t kVoa = kMask + kChannels;
  static constexpr std::size_t kVoaIn = kVoa;
  static constexpr std::size_t kVoaOut = kVoa + 1;
  static constexpr std::size_t kVoaAttn = kVoa + 2;

  static constexpr std::size_t dim(bool use_internal) { return use_internal ? kVoa + 3 : kVoa; }
  static constexpr bool is_mask_slot(std::size_t i) { return i >= kMask && i < kVoa; }
};

struct FeatureVector {
  Eigen::VectorXd values;
  bool use_internal = true;

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
};

/// Per-feature z-score fitted on training records. Spectrum slots use
/// active-channel values only; off slots are filled with `fill` (the mean of
/// all active input powers) before scaling. Mask slots pass through.
class Standardizer {
 public:
  Standardizer() = default;
  Standardizer(Eigen::VectorXd means, Eigen::VectorXd scales, double fill, bool use_internal);

  static Standardizer fit(std::span<const MeasurementRecord> records, bool use_internal);

  /// Raw (unscaled) feature vector with off-channel spectrum slots set to fill.
  Eigen::VectorXd raw_features(const MeasurementRecord& record) const;
  FeatureVector encode(const MeasurementRecord& record, bool use_internal) const;
  FeatureVector encode(const MeasurementRecord& record) const { return encode(record, use_internal_); }
  /// One column per record.
  Eigen::MatrixXd encode_batch(std::span<const MeasurementRecord> records) const;

  Eigen::VectorXd invert(const FeatureVector& features) const;
  /// Input spectrum recovered from an encoded vector; off slots hold the sentinel.
  Spectrum decode_spectrum(const FeatureVector& features) const;

  const Eigen::VectorXd& means() const { return means_; }
  const Eigen::VectorXd& scales() const { return scales_; }
  double fill() const { return fill_; }
  bool use_internal() const { return use_internal_; }
  std::size_t dim() const { return static_cast<std::size_t>(means_.size()); }

  nlohmann::json to_json() const;
  static Standardizer from_json(const nlohmann::json& j);

 private:
  Eigen::VectorXd means_;
  Eigen::VectorXd scales_;
  double fill_ = 0.0;
  bool use_internal_ = true;
};

/// Per-channel z-score of gain labels, fitted over active channels only.
class LabelScaler {
 public:
  LabelScaler() = default;
  LabelScaler(Eigen::VectorXd means, Eigen::VectorXd scales);

  static LabelScaler fit(std::span<const MeasurementRecord> labeled);

  /// Standardized targets; off channels are 0 (they are masked out of the loss).
  Eigen::VectorXd standardize(const MeasurementRecord& record) const;
  Spectrum destandardize(const Eigen::Ref<const Eigen::VectorXd>& output) const;

  const Eigen::VectorXd& means() const { return means_; }
  const Eigen::VectorXd& scales() const { return scales_; }

  nlohmann::json to_json() const;
  static LabelScaler from_json(const nlohmann::json& j);

 private:
  Eigen::VectorXd means_;
  Eigen::VectorXd scales_;
};

/// 0/1 mask of `record` as a column vector.
Eigen::VectorXd mask_vector(const ChannelPlan& plan);

inline constexpr double kScaleFloor = 1e-8;

}  // namespace edfa
