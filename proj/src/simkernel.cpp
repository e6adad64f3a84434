#include "edfa/simkernel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace edfa::sim {

namespace {

double channel_position(std::size_t i) { return static_cast<double>(i) / static_cast<double>(kChannels - 1); }

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

double loading_centroid(const ChannelPlan& plan) {
  double sum = 0.0;
  for (std::size_t i = 0; i < kChannels; ++i) {
    if (plan.on(i)) sum += channel_position(i);
  }
  return sum / static_cast<double>(plan.active_count());
}

// Attenuation law before telemetry rounding: affine in the gain set point,
// maximal at the bottom of the gain range.
double voa_attenuation(const EdfaDevice& d, double g0) {
  const double frac = (g0 - d.gain_min_db) / (d.gain_max_db - d.gain_min_db);
  return std::clamp(d.voa_max_db - frac * (d.voa_max_db - d.voa_min_db), d.voa_min_db, d.voa_max_db);
}

void check_gain(const EdfaDevice& d, double g0) {
  if (!(g0 >= d.gain_min_db && g0 <= d.gain_max_db)) {
    throw ConfigError("target gain " + std::to_string(g0) + " dB outside the range of device " + d.device_id);
  }
}

struct Family {
  std::vector<double> ripple;
  double tilt;
  double saturation_in_dbm;
  double saturation_strength;
  double voa_min_db, voa_max_db;
  double gain_min_db, gain_max_db;
  double stage1_gain_db;
  double voa_tilt_db;
  double loading_coupling;
  std::vector<double> loading_shape;
  double launch_min_dbm, launch_max_dbm;
};

// Ripple, static tilt, the VOA control law and the first stage differ by
// type. Saturation, the tilt caused by the VOA and the response to channel
// loading are nearly shared, as both types use the same erbium physics.
// Launch powers are drawn from one range for both.
const Family& family(EdfaType type) {
  static const Family booster{{0.45, -0.30, 0.22, 0.12, -0.08, 0.05},
                              0.40, 8.0, 0.55, 1.0, 9.0, 12.0, 26.0, 12.0, 0.15, 0.85,
                              {0.9, 0.35, -0.2, 0.1, 0.0, 0.0}, -20.0, -8.0};
  static const Family preamp{{-0.35, 0.25, 0.30, -0.18, 0.10, 0.06},
                             -0.50, 8.0, 0.55, 2.0, 10.0, 12.0, 30.0, 14.0, 0.15, 0.85,
                             {0.8, 0.45, -0.15, 0.1, 0.0, 0.0}, -20.0, -8.0};
  return type == EdfaType::Booster ? booster : preamp;
}

void normalise_peak(std::vector<double>& coeffs) {
  const Spectrum s = cosine_shape(coeffs);
  double peak = 0.0;
  for (double v : s) peak = std::max(peak, std::abs(v));
  if (peak > 0.0) {
    for (double& c : coeffs) c /= peak;
  }
}

}  // namespace

Spectrum cosine_shape(std::span<const double> coeffs) {
  Spectrum s{};
  for (std::size_t i = 0; i < kChannels; ++i) {
    const double u = channel_position(i);
    double v = 0.0;
    for (std::size_t k = 0; k < coeffs.size(); ++k) {
      v += coeffs[k] * std::cos(std::numbers::pi * static_cast<double>(k + 1) * u);
    }
    s[i] = v;
  }
  return s;
}

double EdfaDevice::ripple_peak_to_peak() const {
  const Spectrum r = cosine_shape(ripple_coeffs);
  const auto [lo, hi] = std::minmax_element(r.begin(), r.end());
  return *hi - *lo;
}

void EdfaDevice::validate() const {
  if (ripple_peak_to_peak() > 3.0 + 1e-12) throw ConfigError(device_id + ": ripple exceeds 3 dB peak-to-peak");
  if (saturation_strength < 0.0) throw ConfigError(device_id + ": saturation strength must be >= 0");
  if (saturation_softness_db <= 0.0) throw ConfigError(device_id + ": saturation softness must be > 0");
  if (!(voa_min_db < voa_max_db)) throw ConfigError(device_id + ": VOA range must satisfy min < max");
  if (!(gain_min_db < gain_max_db)) throw ConfigError(device_id + ": gain range must satisfy min < max");
  if (!(launch_min_dbm <= launch_max_dbm)) throw ConfigError(device_id + ": launch range is empty");
  if (loading_coupling < 0.0) throw ConfigError(device_id + ": loading coupling must be >= 0");
}

void GainSettings::validate(const EdfaDevice& device) const {
  if (target_gains_db.empty()) throw ConfigError("no target gain settings");
  for (double g : target_gains_db) check_gain(device, g);
}

Spectrum true_gain(const EdfaDevice& d, const ChannelPlan& plan, const Spectrum& input_spectrum_dbm, double g0) {
  check_gain(d, g0);
  const Spectrum ripple = cosine_shape(d.ripple_coeffs);
  const Spectrum loading = cosine_shape(d.loading_shape);
  const double p_total = total_power_dbm(input_spectrum_dbm, plan);
  const double tilt =
      d.tilt_db_per_band + d.voa_tilt_db * (voa_attenuation(d, g0) - kDesignAttenuationDb);
  const double compression =
      d.saturation_strength * softplus((p_total - d.saturation_in_dbm) / d.saturation_softness_db);
  const double sparsity = 1.0 - static_cast<double>(plan.active_count()) / static_cast<double>(kChannels);
  const double centroid = loading_centroid(plan);

  Spectrum g;
  for (std::size_t i = 0; i < kChannels; ++i) {
    if (!plan.on(i)) {
      g[i] = kOffChannelDbm;
      continue;
    }
    const double u = channel_position(i);
    // Loading distortion: sparse plans excite the device's loading shape, and
    // power concentrated at one band edge pulls gain toward the other edge.
    const double load = d.loading_coupling * (sparsity * loading[i] + (centroid - 0.5) * (1.0 - 2.0 * u));
    g[i] = g0 + ripple[i] + tilt * (u - 0.5) - compression + load;
  }
  return g;
}

VoaState voa_state(const EdfaDevice& d, double g0, double total_in_dbm) {
  check_gain(d, g0);
  const double attn = voa_attenuation(d, g0);
  const double in = total_in_dbm + d.stage1_gain_db;
  const double out = in - attn;
  return {in, out, in - out};
}

double quantize(double value, double step) {
  // Dividing by the integral inverse keeps results like 15.3 exact.
  const double inv = std::round(1.0 / step);
  const double q = value * inv;
  return std::copysign(std::floor(std::abs(q) + 0.5), q) / inv;
}

MeasurementRecord measure(const EdfaDevice& d, const ChannelPlan& plan, const Spectrum& launch, double g0,
                          bool quantize_ocm) {
  const Spectrum gain = true_gain(d, plan, launch, g0);
  Spectrum out_spectrum;
  for (std::size_t i = 0; i < kChannels; ++i) out_spectrum[i] = plan.on(i) ? launch[i] + gain[i] : kOffChannelDbm;

  MeasurementRecord r;
  r.device_id = d.device_id;
  r.edfa_type = d.edfa_type;
  r.target_gain_db = g0;
  r.plan = plan;
  const double p_in = total_power_dbm(launch, plan);
  r.total_in_dbm = quantize(p_in, kPdResolutionDb);
  r.total_out_dbm = quantize(total_power_dbm(out_spectrum, plan), kPdResolutionDb);

  const VoaState voa = voa_state(d, g0, p_in);
  r.voa_in_dbm = quantize(voa.voa_in_dbm, kPdResolutionDb);
  r.voa_out_dbm = r.voa_in_dbm - quantize(voa.voa_attn_db, kPdResolutionDb);
  r.voa_attn_db = r.voa_in_dbm - r.voa_out_dbm;

  Spectrum labels;
  for (std::size_t i = 0; i < kChannels; ++i) {
    if (!plan.on(i)) {
      r.input_spectrum_dbm[i] = kOffChannelDbm;
      labels[i] = kOffChannelDbm;
    } else if (quantize_ocm) {
      r.input_spectrum_dbm[i] = quantize(launch[i], kOcmResolutionDb);
      labels[i] = quantize(gain[i], kOcmResolutionDb);
    } else {
      r.input_spectrum_dbm[i] = launch[i];
      labels[i] = gain[i];
    }
  }
  r.gain_spectrum_db = labels;
  return r;
}

ChannelPlan gen_plan(LoadingMode mode, Rng& rng) {
  ChannelMask mask{};
  switch (mode) {
    case LoadingMode::Full:
      return ChannelPlan::full();
    case LoadingMode::Random: {
      std::uniform_int_distribution<int> level(1, 9);
      const double p = 0.1 * level(rng);
      std::bernoulli_distribution on(p);
      do {
        for (auto& c : mask) c = on(rng) ? 1 : 0;
      } while (std::find(mask.begin(), mask.end(), std::uint8_t{1}) == mask.end());
      break;
    }
    case LoadingMode::Goalpost: {
      // Four spectral regions; each band lives inside its own region.
      constexpr std::array<std::size_t, 5> edges{0, 24, 48, 72, kChannels};
      std::array<std::size_t, 4> regions{0, 1, 2, 3};
      std::shuffle(regions.begin(), regions.end(), rng);
      const auto bands = std::uniform_int_distribution<std::size_t>(1, 4)(rng);
      for (std::size_t b = 0; b < bands; ++b) {
        const auto lo = edges[regions[b]];
        const auto hi = edges[regions[b] + 1];
        const auto len = std::uniform_int_distribution<std::size_t>(2, hi - lo)(rng);
        const auto start = std::uniform_int_distribution<std::size_t>(lo, hi - len)(rng);
        for (std::size_t i = start; i < start + len; ++i) mask[i] = 1;
      }
      break;
    }
  }
  return ChannelPlan(mask, mode);
}

Spectrum gen_launch_spectrum(const EdfaDevice& d, const ChannelPlan& plan, Rng& rng) {
  const double level = std::uniform_real_distribution<double>(d.launch_min_dbm, d.launch_max_dbm)(rng);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  Spectrum s;
  for (std::size_t i = 0; i < kChannels; ++i) {
    const double j = jitter(rng);
    s[i] = plan.on(i) ? level + j : kOffChannelDbm;
  }
  return s;
}

std::vector<MeasurementRecord> gen_dataset(const EdfaDevice& device, const GainSettings& settings,
                                           std::size_t n_per_setting, const ModeMix& mix, bool quantize_ocm,
                                           std::uint64_t seed) {
  if (n_per_setting == 0) throw ConfigError("n_per_setting must be >= 1");
  const double total = mix.full + mix.random + mix.goalpost;
  if (mix.full < 0 || mix.random < 0 || mix.goalpost < 0 || total <= 0) throw ConfigError("invalid mode mix");
  device.validate();
  settings.validate(device);

  const auto n = static_cast<double>(n_per_setting);
  const auto n_full = static_cast<std::size_t>(std::llround(n * mix.full / total));
  const auto n_random = std::min(n_per_setting - n_full, static_cast<std::size_t>(std::llround(n * mix.random / total)));

  std::vector<MeasurementRecord> records;
  records.reserve(n_per_setting * settings.target_gains_db.size());
  for (std::size_t s = 0; s < settings.target_gains_db.size(); ++s) {
    std::vector<LoadingMode> modes(n_per_setting, LoadingMode::Goalpost);
    std::fill_n(modes.begin(), n_full, LoadingMode::Full);
    std::fill_n(modes.begin() + static_cast<std::ptrdiff_t>(n_full), n_random, LoadingMode::Random);
    Rng order = make_rng(seed, "modes", s);
    std::shuffle(modes.begin(), modes.end(), order);
    for (std::size_t j = 0; j < n_per_setting; ++j) {
      Rng rng = make_rng(seed, "record", (static_cast<std::uint64_t>(s) << 32) | j);
      const ChannelPlan plan = gen_plan(modes[j], rng);
      const Spectrum launch = gen_launch_spectrum(device, plan, rng);
      records.push_back(measure(device, plan, launch, settings.target_gains_db[s], quantize_ocm));
    }
  }
  return records;
}

std::vector<EdfaDevice> make_fleet(const FleetSpec& spec, std::uint64_t seed) {
  if (spec.n_boosters < 1 || spec.n_preamps < 1) throw ConfigError("fleet needs at least one device of each type");
  if (spec.family_spread < 0) throw ConfigError("family spread must be >= 0");
  std::vector<EdfaDevice> fleet;
  const double s = spec.family_spread;
  auto build = [&](EdfaType type, std::size_t index, std::size_t global_index) {
    const Family& f = family(type);
    Rng rng = make_rng(seed, "fleet", global_index);
    std::normal_distribution<double> z(0.0, 1.0);
    EdfaDevice d;
    char id[32];
    std::snprintf(id, sizeof(id), "%s%02zu", type == EdfaType::Booster ? "B" : "P", index + 1);
    d.device_id = id;
    d.edfa_type = type;
    for (double c : f.ripple) d.ripple_coeffs.push_back(c + s * 0.12 * z(rng));
    d.tilt_db_per_band = f.tilt + s * 0.10 * z(rng);
    d.saturation_in_dbm = f.saturation_in_dbm + s * 0.5 * z(rng);
    d.saturation_strength = std::max(0.0, f.saturation_strength * (1.0 + s * 0.1 * z(rng)));
    d.saturation_softness_db = 3.0;
    d.voa_min_db = std::max(0.0, f.voa_min_db + s * 0.4 * z(rng));
    d.voa_max_db = std::max(d.voa_min_db + 1.0, f.voa_max_db + s * 0.4 * z(rng));
    d.gain_min_db = f.gain_min_db;
    d.gain_max_db = f.gain_max_db;
    d.stage1_gain_db = f.stage1_gain_db + s * 0.5 * z(rng);
    d.voa_tilt_db = f.voa_tilt_db + s * 0.02 * z(rng);
    d.loading_coupling = std::max(0.0, f.loading_coupling * (1.0 + s * 0.1 * z(rng)));
    for (double c : f.loading_shape) d.loading_shape.push_back(c + s * 0.05 * z(rng));
    normalise_peak(d.loading_shape);
    d.launch_min_dbm = f.launch_min_dbm;
    d.launch_max_dbm = f.launch_max_dbm;
    d.seed = derive_seed(seed, "device", global_index);
    const double p2p = d.ripple_peak_to_peak();
    if (p2p > 3.0) {
      for (double& c : d.ripple_coeffs) c *= 3.0 / p2p;
    }
    d.validate();
    return d;
  };
  for (std::size_t i = 0; i < spec.n_boosters; ++i) fleet.push_back(build(EdfaType::Booster, i, i));
  for (std::size_t i = 0; i < spec.n_preamps; ++i) fleet.push_back(build(EdfaType::Preamp, i, spec.n_boosters + i));
  return fleet;
}

EdfaDevice flat_device(std::string id, EdfaType type) {
  EdfaDevice d;
  d.device_id = std::move(id);
  d.edfa_type = type;
  d.ripple_coeffs.assign(kDefaultRippleModes, 0.0);
  d.loading_shape.assign(kDefaultRippleModes, 0.0);
  const Family& f = family(type);
  d.voa_min_db = f.voa_min_db;
  d.voa_max_db = f.voa_max_db;
  d.gain_min_db = f.gain_min_db;
  d.gain_max_db = f.gain_max_db;
  d.stage1_gain_db = f.stage1_gain_db;
  d.launch_min_dbm = f.launch_min_dbm;
  d.launch_max_dbm = f.launch_max_dbm;
  return d;
}

nlohmann::json to_json(const EdfaDevice& d) {
  return {{"device_id", d.device_id},
          {"edfa_type", std::string(to_string(d.edfa_type))},
          {"ripple_coeffs", d.ripple_coeffs},
          {"tilt_db_per_band", d.tilt_db_per_band},
          {"saturation_in_dbm", d.saturation_in_dbm},
          {"saturation_strength", d.saturation_strength},
          {"saturation_softness_db", d.saturation_softness_db},
          {"voa_dynamic_range_db", {d.voa_min_db, d.voa_max_db}},
          {"gain_range_db", {d.gain_min_db, d.gain_max_db}},
          {"stage1_gain_db", d.stage1_gain_db},
          {"voa_tilt_db", d.voa_tilt_db},
          {"loading_coupling", d.loading_coupling},
          {"loading_shape", d.loading_shape},
          {"launch_range_dbm", {d.launch_min_dbm, d.launch_max_dbm}},
          {"seed", d.seed}};
}

EdfaDevice device_from_json(const nlohmann::json& j) {
  EdfaDevice d;
  d.device_id = j.at("device_id").get<std::string>();
  d.edfa_type = edfa_type_from_string(j.at("edfa_type").get<std::string>());
  d.ripple_coeffs = j.at("ripple_coeffs").get<std::vector<double>>();
  d.tilt_db_per_band = j.at("tilt_db_per_band").get<double>();
  d.saturation_in_dbm = j.at("saturation_in_dbm").get<double>();
  d.saturation_strength = j.at("saturation_strength").get<double>();
  d.saturation_softness_db = j.at("saturation_softness_db").get<double>();
  d.voa_min_db = j.at("voa_dynamic_range_db").at(0).get<double>();
  d.voa_max_db = j.at("voa_dynamic_range_db").at(1).get<double>();
  d.gain_min_db = j.at("gain_range_db").at(0).get<double>();
  d.gain_max_db = j.at("gain_range_db").at(1).get<double>();
  d.stage1_gain_db = j.at("stage1_gain_db").get<double>();
  d.voa_tilt_db = j.at("voa_tilt_db").get<double>();
  d.loading_coupling = j.at("loading_coupling").get<double>();
  d.loading_shape = j.at("loading_shape").get<std::vector<double>>();
  d.launch_min_dbm = j.at("launch_range_dbm").at(0).get<double>();
  d.launch_max_dbm = j.at("launch_range_dbm").at(1).get<double>();
  d.seed = j.at("seed").get<std::uint64_t>();
  d.validate();
  return d;
}

nlohmann::json fleet_to_json(std::span<const EdfaDevice> fleet) {
  nlohmann::json devices = nlohmann::json::array();
  for (const auto& d : fleet) devices.push_back(to_json(d));
  return {{"version", 1}, {"devices", devices}};
}

std::vector<EdfaDevice> fleet_from_json(const nlohmann::json& j) {
  std::vector<EdfaDevice> fleet;
  for (const auto& d : j.at("devices")) fleet.push_back(device_from_json(d));
  return fleet;
}

}  // namespace edfa::sim
