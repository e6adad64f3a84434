#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "edfa/datamodel.hpp"
#include "edfa/rng.hpp"
#include "edfa/simkernel.hpp"

namespace edfa::test {

inline ChannelMask mask_of(std::initializer_list<std::size_t> on) {
  ChannelMask m{};
  for (auto i : on) m[i] = 1;
  return m;
}

// Labeled record with the given plan and simple, distinct values.
inline MeasurementRecord make_record(const ChannelPlan& plan, double p_in = -10.0, double g0 = 20.0) {
  MeasurementRecord r;
  r.device_id = "B01";
  r.edfa_type = EdfaType::Booster;
  r.target_gain_db = g0;
  r.plan = plan;
  r.total_in_dbm = p_in;
  r.total_out_dbm = p_in + g0;
  Spectrum g{};
  for (std::size_t i = 0; i < kChannels; ++i) {
    r.input_spectrum_dbm[i] = plan.on(i) ? -20.0 + 0.01 * static_cast<double>(i) : kOffChannelDbm;
    g[i] = plan.on(i) ? g0 + 0.001 * static_cast<double>(i) : kOffChannelDbm;
  }
  r.gain_spectrum_db = g;
  r.voa_in_dbm = p_in + 12.0;
  r.voa_attn_db = 5.0;
  r.voa_out_dbm = r.voa_in_dbm - r.voa_attn_db;
  return r;
}

// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 gen(std::random_device{}());
    path = std::filesystem::temp_directory_path() / ("edfa_test_" + tag + "_" + std::to_string(gen()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace edfa::test
