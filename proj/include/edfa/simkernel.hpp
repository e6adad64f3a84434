#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "edfa/datamodel.hpp"
#include "edfa/rng.hpp"

namespace edfa::sim {

/// Attenuation the gain-flattening design assumes; VOA settings away from it
/// tilt the spectrum.
inline constexpr double kDesignAttenuationDb = 6.0;
/// Resolution of the optical channel monitor.
inline constexpr double kOcmResolutionDb = 0.1;
/// Resolution of the total-power photodiodes and VOA telemetry.
inline constexpr double kPdResolutionDb = 0.01;
inline constexpr std::size_t kDefaultRippleModes = 6;

/// Parametric stand-in for a physical amplifier. All spectral shapes are
/// sums of low-order cosine modes over the normalised channel index.
struct EdfaDevice {
  std::string device_id;
  EdfaType edfa_type = EdfaType::Booster;
  std::vector<double> ripple_coeffs;  ///< dB amplitude per cosine mode
  double tilt_db_per_band = 0.0;      ///< linear tilt across the band, dB
  double saturation_in_dbm = 10.0;
  double saturation_strength = 0.0;   ///< dB of compression per softplus unit
  double saturation_softness_db = 2.0;
  double voa_min_db = 2.0;
  double voa_max_db = 10.0;
  double gain_min_db = 12.0;
  double gain_max_db = 28.0;
  double stage1_gain_db = 10.0;       ///< gain ahead of the VOA
  double voa_tilt_db = 0.0;           ///< band tilt per dB of attenuation off design
  double loading_coupling = 0.0;      ///< dB of loading-dependent distortion
  std::vector<double> loading_shape;  ///< cosine modes of the loading distortion
  double launch_min_dbm = -20.0;      ///< per-channel launch power range
  double launch_max_dbm = -8.0;
  std::uint64_t seed = 0;

  /// Throws ConfigError on violated invariants.
  void validate() const;
  /// Peak-to-peak of the static ripple over the 95 channels.
  double ripple_peak_to_peak() const;
};

struct VoaState {
  double voa_in_dbm;
  double voa_out_dbm;
  double voa_attn_db;
};

struct GainSettings {
  std::vector<double> target_gains_db;
  double gain_tilt_db = 0.0;

  void validate(const EdfaDevice& device) const;
};

struct ModeMix {
  double full = 0.1;
  double random = 0.45;
  double goalpost = 0.45;
};

/// Cosine-mode shape evaluated at each channel.
Spectrum cosine_shape(std::span<const double> coeffs);

Spectrum true_gain(const EdfaDevice& device, const ChannelPlan& plan, const Spectrum& input_spectrum_dbm,
                   double g0);

VoaState voa_state(const EdfaDevice& device, double g0, double total_in_dbm);

/// Round half away from zero to a multiple of `step`.
double quantize(double value, double step);

MeasurementRecord measure(const EdfaDevice& device, const ChannelPlan& plan, const Spectrum& launch_spectrum_dbm,
                          double g0, bool quantize_ocm);

ChannelPlan gen_plan(LoadingMode mode, Rng& rng);

/// Flat launch level drawn from the device's launch range with per-channel
/// jitter of at most 1 dB; off channels hold the sentinel.
Spectrum gen_launch_spectrum(const EdfaDevice& device, const ChannelPlan& plan, Rng& rng);

/// `n_per_setting` labeled records per target gain. Each record draws from its
/// own stream derived from (seed, setting, index).
std::vector<MeasurementRecord> gen_dataset(const EdfaDevice& device, const GainSettings& settings,
                                           std::size_t n_per_setting, const ModeMix& mix, bool quantize_ocm,
                                           std::uint64_t seed);

struct FleetSpec {
  std::size_t n_boosters = 11;
  std::size_t n_preamps = 11;
  double family_spread = 1.0;
};

std::vector<EdfaDevice> make_fleet(const FleetSpec& spec, std::uint64_t seed);

/// Device with every spectral perturbation switched off.
EdfaDevice flat_device(std::string id, EdfaType type);

nlohmann::json to_json(const EdfaDevice& device);
EdfaDevice device_from_json(const nlohmann::json& j);
nlohmann::json fleet_to_json(std::span<const EdfaDevice> fleet);
std::vector<EdfaDevice> fleet_from_json(const nlohmann::json& j);

}  // namespace edfa::sim
