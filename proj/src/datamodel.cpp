#include "edfa/datamodel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace edfa {

std::string_view to_string(LoadingMode mode) {
  switch (mode) {
    case LoadingMode::Full: return "full";
    case LoadingMode::Random: return "random";
    case LoadingMode::Goalpost: return "goalpost";
  }
  return "?";
}

std::string_view to_string(EdfaType type) {
  return type == EdfaType::Booster ? "booster" : "preamp";
}

LoadingMode loading_mode_from_string(std::string_view s) {
  if (s == "full") return LoadingMode::Full;
  if (s == "random") return LoadingMode::Random;
  if (s == "goalpost") return LoadingMode::Goalpost;
  throw ConfigError("unknown loading mode '" + std::string(s) + "'");
}

EdfaType edfa_type_from_string(std::string_view s) {
  if (s == "booster") return EdfaType::Booster;
  if (s == "preamp") return EdfaType::Preamp;
  throw ConfigError("unknown EDFA type '" + std::string(s) + "'");
}

ChannelPlan::ChannelPlan(const ChannelMask& mask, LoadingMode mode) : mask_(mask), mode_(mode) {
  for (auto c : mask_) {
    if (c > 1) throw ConfigError("channel mask entries must be 0 or 1");
  }
  const auto n = active_count();
  if (n == 0) throw ConfigError("channel plan has no active channel");
  if (mode_ == LoadingMode::Full && n != kChannels) {
    throw ConfigError("full-loading plan must switch on all 95 channels");
  }
}

ChannelPlan ChannelPlan::full() {
  ChannelMask mask;
  mask.fill(1);
  return ChannelPlan(mask, LoadingMode::Full);
}

std::size_t ChannelPlan::active_count() const {
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
}

std::size_t ChannelPlan::run_count() const {
  std::size_t runs = 0;
  for (std::size_t i = 0; i < kChannels; ++i) {
    if (mask_[i] && (i == 0 || !mask_[i - 1])) ++runs;
  }
  return runs;
}

void MeasurementRecord::validate() const {
  for (std::size_t i = 0; i < kChannels; ++i) {
    const double p = input_spectrum_dbm[i];
    if (plan.on(i)) {
      if (!std::isfinite(p) || p == kOffChannelDbm) {
        throw ConfigError("channel " + std::to_string(i + 1) + " is on but has no input power");
      }
    } else if (p != kOffChannelDbm) {
      throw ConfigError("channel " + std::to_string(i + 1) + " is off but carries input power");
    }
    if (gain_spectrum_db) {
      const double g = (*gain_spectrum_db)[i];
      if (plan.on(i) && !std::isfinite(g)) {
        throw ConfigError("non-finite gain label on channel " + std::to_string(i + 1));
      }
      if (!plan.on(i) && g != kOffChannelDbm) {
        throw ConfigError("off channel " + std::to_string(i + 1) + " carries a gain label");
      }
    }
  }
  if (std::abs(voa_attn_db - (voa_in_dbm - voa_out_dbm)) > 1e-9) {
    throw ConfigError("VOA attenuation is inconsistent with VOA input/output power");
  }
  for (double v : {target_gain_db, total_in_dbm, total_out_dbm, voa_in_dbm, voa_out_dbm}) {
    if (!std::isfinite(v)) throw ConfigError("non-finite scalar field in record");
  }
}

MeasurementRecord MeasurementRecord::unlabeled() const {
  MeasurementRecord r = *this;
  r.gain_spectrum_db.reset();
  return r;
}

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }

double total_power_dbm(const Spectrum& spectrum_dbm, const ChannelPlan& plan) {
  double mw = 0.0;
  for (std::size_t i = 0; i < kChannels; ++i) {
    if (plan.on(i)) mw += dbm_to_mw(spectrum_dbm[i]);
  }
  return mw_to_dbm(mw);
}

std::vector<double> gain_settings(std::span<const MeasurementRecord> records) {
  std::vector<double> gains;
  for (const auto& r : records) gains.push_back(r.target_gain_db);
  std::sort(gains.begin(), gains.end());
  gains.erase(std::unique(gains.begin(), gains.end()), gains.end());
  return gains;
}

}  // namespace edfa
