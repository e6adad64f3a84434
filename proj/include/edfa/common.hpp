#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace edfa {

/// Number of 50 GHz WDM slots on the C-band grid.
inline constexpr std::size_t kChannels = 95;

/// Value stored for switched-off channels in spectra and gain labels.
inline constexpr double kOffChannelDbm = -60.0;

/// First slot of the ITU 50 GHz grid used by the channel plan.
inline constexpr double kGridStartThz = 191.35;
inline constexpr double kGridSpacingThz = 0.05;

using Spectrum = std::array<double, kChannels>;
using ChannelMask = std::array<std::uint8_t, kChannels>;

enum class LoadingMode { Full, Random, Goalpost };
enum class EdfaType { Booster, Preamp };

std::string_view to_string(LoadingMode mode);
std::string_view to_string(EdfaType type);
LoadingMode loading_mode_from_string(std::string_view s);
EdfaType edfa_type_from_string(std::string_view s);

inline double channel_frequency_thz(std::size_t index) {
  return kGridStartThz + kGridSpacingThz * static_cast<double>(index);
}

/// Invalid configuration or mismatched inputs (feature flag, dimensions, ranges).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed dataset or checkpoint contents.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  explicit ParseError(const std::string& what) : std::runtime_error(what), line_(0) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Numerical failure during optimisation (NaN/Inf loss or gradient).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace edfa
