#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "edfa/datamodel.hpp"

namespace edfa {

// Dataset CSV: one row per measurement,
//   device_id,edfa_type,target_gain_db,total_in_dbm,total_out_dbm,
//   voa_in_dbm,voa_out_dbm,voa_attn_db,p_1..p_95,c_1..c_95,g_1..g_95,loading_mode
// Off channels hold -60.000000 in p_i (and g_i when labeled); unlabeled rows
// leave every g_i empty. Reals are written with 6 decimals.

std::vector<MeasurementRecord> read_dataset(std::istream& in);
void write_dataset(std::ostream& out, std::span<const MeasurementRecord> records);

std::vector<MeasurementRecord> load_dataset(const std::filesystem::path& path);
void save_dataset(std::span<const MeasurementRecord> records, const std::filesystem::path& path);

/// Round to the 6-decimal precision used on disk.
double round_to_file_precision(double v);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

inline constexpr double kDefaultTrainRatio = 0.86;

/// Per (device, gain setting) split, stratified by loading mode so that the
/// test set mixes Random and Goalpost plans. Index lists are ascending.
SplitIndices split_indices(std::span<const MeasurementRecord> records, double train_ratio,
                           std::uint64_t seed);

struct TrainTestSplit {
  std::vector<MeasurementRecord> train;
  std::vector<MeasurementRecord> test;
};

TrainTestSplit split_train_test(std::span<const MeasurementRecord> records, double train_ratio,
                                std::uint64_t seed);

}  // namespace edfa
