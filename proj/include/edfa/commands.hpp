#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "edfa/eval.hpp"
#include "edfa/manifest.hpp"

namespace edfa::cli {

/// Run directory layout: fleet.json, manifest.json, data/, ckpt/, eval/, report/.
struct RunLayout {
  std::filesystem::path root;

  std::filesystem::path manifest() const { return root / "manifest.json"; }
  std::filesystem::path fleet() const { return root / "fleet.json"; }
  std::filesystem::path dataset(const std::string& device_id) const { return root / "data" / (device_id + ".csv"); }
  std::filesystem::path checkpoint(const std::string& device_id, bool use_internal) const;
  std::filesystem::path transfer_checkpoint(const std::string& source, const std::string& target,
                                            bool use_internal) const;
  /// Stem shared by the stats, error and loss files of a direct model.
  std::filesystem::path direct_eval(const std::string& device_id, bool use_internal) const;
  std::filesystem::path transfer_eval(const std::string& source, const std::string& target, bool use_internal) const;
  std::filesystem::path matrix_dir(bool use_internal) const;
  std::filesystem::path report_dir() const { return root / "report"; }
};

std::string_view flag_tag(bool use_internal);

struct RunOptions {
  std::filesystem::path out;
  bool force = false;
  std::size_t workers = 1;
};

/// Seeds of the named sub-streams derived from the manifest seed.
std::uint64_t stream_seed(const ExperimentManifest& m, std::string_view stream, std::uint64_t index = 0);

/// Simulates the fleet and writes fleet.json, manifest.json and data/<id>.csv.
void run_generate(const ExperimentManifest& m, const RunOptions& opts, std::ostream& log);

/// Trains the direct model of each listed device (all devices when empty).
/// Existing checkpoints are kept unless opts.force.
void run_train(const ExperimentManifest& m, const RunOptions& opts, const std::vector<std::string>& devices,
               std::ostream& log);

/// Transfers `source` (a checkpoint path or a device id of this run) onto `target_id`.
eval::ErrorStats run_transfer(const ExperimentManifest& m, const RunOptions& opts, const std::string& source,
                              const std::string& target_id, std::ostream& log);

/// Fills every transfer-matrix cell not already on disk, then writes the
/// matrix files. Returns the matrix; failed cells are empty.
eval::TlMatrix run_matrix(const ExperimentManifest& m, const RunOptions& opts, bool train_missing,
                          bool self_transfer, std::ostream& log);

/// Aggregates evaluation artifacts of a run into report/.
void run_report(const std::filesystem::path& run_dir, std::ostream& log);

/// Train/test split of one device of a generated run, as used by every command.
eval::DeviceData load_run_device(const ExperimentManifest& m, const std::filesystem::path& run_dir,
                                 const std::string& device_id);

/// Manifest stored in a run directory, if any.
std::optional<ExperimentManifest> stored_manifest(const RunLayout& layout);

}  // namespace edfa::cli
