#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "edfa/common.hpp"

namespace edfa {

/// On/off loading pattern over the 95-slot grid. Never all-off.
class ChannelPlan {
 public:
  ChannelPlan(const ChannelMask& mask, LoadingMode mode);

  static ChannelPlan full();

  bool on(std::size_t channel) const { return mask_[channel] != 0; }
  const ChannelMask& mask() const { return mask_; }
  LoadingMode mode() const { return mode_; }
  std::size_t active_count() const;
  /// Number of maximal runs of consecutive switched-on channels.
  std::size_t run_count() const;

  bool operator==(const ChannelPlan&) const = default;

 private:
  ChannelMask mask_;
  LoadingMode mode_;
};

/// One observation of an amplifier. Unlabeled records carry no gain spectrum.
struct MeasurementRecord {
  std::string device_id;
  EdfaType edfa_type = EdfaType::Booster;
  double target_gain_db = 0.0;
  double total_in_dbm = 0.0;
  double total_out_dbm = 0.0;
  Spectrum input_spectrum_dbm{};
  ChannelPlan plan = ChannelPlan::full();
  double voa_in_dbm = 0.0;
  double voa_out_dbm = 0.0;
  double voa_attn_db = 0.0;
  std::optional<Spectrum> gain_spectrum_db;

  bool labeled() const { return gain_spectrum_db.has_value(); }

  /// Throws ConfigError when an invariant is violated.
  void validate() const;

  /// Copy with the gain label removed.
  MeasurementRecord unlabeled() const;
};

/// Sum of per-channel powers in dBm over the switched-on channels.
double total_power_dbm(const Spectrum& spectrum_dbm, const ChannelPlan& plan);

double dbm_to_mw(double dbm);
double mw_to_dbm(double mw);

/// Distinct target gains present in `records`, ascending.
std::vector<double> gain_settings(std::span<const MeasurementRecord> records);

}  // namespace edfa
