// edfa: generate synthetic EDFA data, train gain models, run transfer learning
// and report errors. Exit codes: 0 success, 1 invalid input, 2 runtime failure.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "edfa/commands.hpp"

namespace {

constexpr int kExitInvalid = 1;
constexpr int kExitRuntime = 2;

}  // namespace

int main(int argc, char** argv) {
  using namespace edfa;
  CLI::App app{"EDFA gain modelling with semi-supervised self-normalizing networks"};
  app.require_subcommand(1);

  std::string manifest_spec;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool force = false;
  std::size_t workers = 1;
  bool no_internal = false;
  app.add_option("--manifest", manifest_spec,
                 "manifest JSON file or built-in profile (open-ireland, cosmos, smoke)");
  app.add_option("--seed", seed, "override the manifest seed");
  app.add_option("--out", out, "run directory (default runs/<manifest name>)");
  app.add_flag("--force", force, "overwrite existing outputs");
  app.add_option("--workers", workers, "parallel jobs")->check(CLI::PositiveNumber);
  app.add_flag("--no-internal", no_internal, "exclude the internal VOA features");

  auto* generate = app.add_subcommand("generate", "simulate the fleet and write datasets");

  auto* train_cmd = app.add_subcommand("train", "train direct models");
  std::vector<std::string> devices;
  train_cmd->add_option("--device", devices, "device ids (default: all)");

  auto* transfer_cmd = app.add_subcommand("transfer", "transfer one model onto another device");
  std::string source, target;
  transfer_cmd->add_option("--source", source, "source checkpoint path or device id")->required();
  transfer_cmd->add_option("--target", target, "target device id")->required();

  auto* matrix_cmd = app.add_subcommand("matrix", "source x target transfer matrix (resumable)");
  bool train_missing = false, self_transfer = false;
  matrix_cmd->add_flag("--train-missing", train_missing, "train missing direct models first");
  matrix_cmd->add_flag("--self-transfer", self_transfer, "also transfer each model onto its own device");

  auto* report_cmd = app.add_subcommand("report", "aggregate evaluation results of a run");
  std::string run_dir;
  report_cmd->add_option("run_dir", run_dir, "run directory (default: --out)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalid;
  }

  try {
    if (report_cmd->parsed()) {
      if (run_dir.empty()) run_dir = out;
      if (run_dir.empty()) throw ConfigError("report needs a run directory");
      cli::run_report(run_dir, std::cout);
      return 0;
    }

    // Without --manifest, reuse the manifest stored in an existing run directory.
    std::optional<cli::ExperimentManifest> manifest;
    if (!manifest_spec.empty()) {
      manifest = cli::load_manifest(manifest_spec);
    } else if (!out.empty()) {
      manifest = cli::stored_manifest(cli::RunLayout{out});
    }
    if (!manifest) manifest = cli::ExperimentManifest::profile("open-ireland");
    if (seed) manifest->seed = *seed;
    if (no_internal) manifest->use_internal = false;
    manifest->validate();

    cli::RunOptions opts;
    if (!out.empty()) {
      opts.out = out;
    } else if (!manifest->output_dir.empty()) {
      opts.out = manifest->output_dir;
    } else {
      opts.out = std::filesystem::path("runs") / manifest->name;
    }
    opts.force = force;
    opts.workers = workers;

    if (generate->parsed()) {
      cli::run_generate(*manifest, opts, std::cout);
    } else if (train_cmd->parsed()) {
      cli::run_train(*manifest, opts, devices, std::cout);
    } else if (transfer_cmd->parsed()) {
      cli::run_transfer(*manifest, opts, source, target, std::cout);
    } else if (matrix_cmd->parsed()) {
      const auto m = cli::run_matrix(*manifest, opts, train_missing, self_transfer, std::cout);
      if (!m.failures.empty()) return kExitRuntime;
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "failed: " << e.what() << '\n';
    return kExitRuntime;
  }
}
