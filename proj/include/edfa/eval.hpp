#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "edfa/model.hpp"
#include "edfa/training.hpp"

namespace edfa::eval {

struct ErrorStats {
  double mae_db = 0.0;
  double median_db = 0.0;
  double q25_db = 0.0;
  double q75_db = 0.0;
  double p95_db = 0.0;
  double min_db = 0.0;
  double max_db = 0.0;
  std::size_t n_channels_evaluated = 0;

  nlohmann::json to_json() const;
  static ErrorStats from_json(const nlohmann::json& j);
};

/// Absolute prediction errors over the active channels of every test record,
/// in record order then channel order. Off-channel labels are never read.
std::vector<double> abs_errors(const Predictor& model, std::span<const MeasurementRecord> test);
std::vector<double> abs_errors(const GainModel& model, std::span<const MeasurementRecord> test);

/// Mean absolute error of each measurement over its active channels.
std::vector<double> per_measurement_mae(const GainModel& model, std::span<const MeasurementRecord> test);

/// Type-7 quantile (linear interpolation between closest ranks) of sorted data.
double quantile_sorted(std::span<const double> sorted, double q);

/// Quantiles by linear interpolation between order statistics.
ErrorStats summarize(std::span<const double> errors);

enum class Aggregation { Pooled, PerMeasurement };

/// MAE with errors pooled over all channels, or averaged per measurement first.
double mean_abs_error(const GainModel& model, std::span<const MeasurementRecord> test,
                      Aggregation how = Aggregation::Pooled);

std::vector<MeasurementRecord> filter_mode(std::span<const MeasurementRecord> records,
                                           std::optional<LoadingMode> mode);

/// Everything needed to evaluate and transfer onto one device.
struct DeviceData {
  std::string device_id;
  EdfaType edfa_type = EdfaType::Booster;
  std::vector<double> settings;
  std::vector<MeasurementRecord> train;
  std::vector<MeasurementRecord> test;
};

struct TlMatrix {
  std::vector<std::string> device_ids;
  /// entries[i][j]: source i, target j; the diagonal is the directly trained model.
  /// An empty entry marks a cell whose evaluation failed.
  std::vector<std::vector<std::optional<ErrorStats>>> entries;
  /// One message per failed cell.
  std::vector<std::string> failures;
  /// Optional control runs: transfer of each model onto its own device.
  std::vector<std::optional<ErrorStats>> self_transfer;

  std::size_t size() const { return device_ids.size(); }
};

struct TlMatrixOptions {
  train::TransferConfig transfer;
  std::optional<LoadingMode> mode_filter;
  std::size_t workers = 1;
  bool with_self_transfer = false;
};

/// Evaluates every (source, target) cell. `direct_models[i]` must be the
/// directly trained model of device i; a null entry is reported by name.
/// Cells that fail are left empty and listed in `failures`.
TlMatrix tl_matrix(std::span<const DeviceData> devices, std::span<const GainModel* const> direct_models,
                   const TlMatrixOptions& options);

/// Statistics of a transferred model on the target's (filtered) test set.
ErrorStats transfer_cell(const GainModel& source, const DeviceData& target, const train::TransferConfig& cfg,
                         std::optional<LoadingMode> mode_filter);

using NamedStats = std::vector<std::pair<std::string, ErrorStats>>;

/// Writes stats.csv, stats.json and boxplot.csv (five-number plot data) under `dir`.
void report(const NamedStats& stats_by_config, const std::filesystem::path& dir);
/// Writes tl_matrix.csv (source_id,target_id,mae,p95,n) and tl_matrix_grid.csv under `dir`.
void report(const TlMatrix& matrix, const std::filesystem::path& dir);

void write_stats_csv(const NamedStats& stats, const std::filesystem::path& path);
void write_boxplot_csv(const NamedStats& stats, const std::filesystem::path& path);
void write_matrix_csv(const TlMatrix& matrix, const std::filesystem::path& path);
void write_matrix_grid_csv(const TlMatrix& matrix, const std::filesystem::path& path);

/// Fixed 6-decimal formatting used by every report file.
std::string format_real(double v);

}  // namespace edfa::eval
