#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "edfa/commands.hpp"
#include "edfa/dataset.hpp"
#include "edfa/eval.hpp"
#include "edfa/model.hpp"
#include "edfa/simkernel.hpp"

namespace py = pybind11;
using namespace edfa;

namespace {

// Records as a Python-side object; arrays are produced on demand.
struct Dataset {
  std::vector<MeasurementRecord> records;
};

Eigen::MatrixXd rows_of(const Dataset& d, const std::function<double(const MeasurementRecord&, std::size_t)>& f) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(d.records.size()), static_cast<Eigen::Index>(kChannels));
  for (std::size_t r = 0; r < d.records.size(); ++r) {
    for (std::size_t i = 0; i < kChannels; ++i) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = f(d.records[r], i);
  }
  return m;
}

py::dict stats_dict(const eval::ErrorStats& s) {
  py::dict d;
  d["mae_db"] = s.mae_db;
  d["median_db"] = s.median_db;
  d["q25_db"] = s.q25_db;
  d["q75_db"] = s.q75_db;
  d["p95_db"] = s.p95_db;
  d["min_db"] = s.min_db;
  d["max_db"] = s.max_db;
  d["n"] = s.n_channels_evaluated;
  return d;
}

// Runs a command with the GIL released and echoes its log when asked.
template <typename F>
auto logged(bool verbose, F&& f) {
  std::ostringstream log;
  auto result = [&] {
    py::gil_scoped_release release;
    return f(log);
  }();
  if (verbose) py::print(log.str(), py::arg("end") = "");
  return result;
}

cli::RunOptions options(const std::filesystem::path& out, bool force, std::size_t workers) {
  return {out, force, workers};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "EDFA gain-spectrum models: simulator, training, transfer and evaluation";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<TrainingError>(m, "TrainingError", PyExc_RuntimeError);

  m.attr("N_CHANNELS") = kChannels;
  m.def("selu", [](double x) { return nn::selu(x); }, py::arg("x"));

  py::class_<cli::ExperimentManifest>(m, "Manifest")
      .def_static("profile", &cli::ExperimentManifest::profile, py::arg("name"))
      .def_static("profiles", &cli::ExperimentManifest::profile_names)
      .def_static("load", &cli::load_manifest, py::arg("path_or_profile"))
      .def_static("from_json",
                  [](const std::string& text) { return cli::ExperimentManifest::from_json(nlohmann::json::parse(text)); })
      .def("to_json", [](const cli::ExperimentManifest& mf) { return mf.to_json().dump(2); })
      .def("validate", &cli::ExperimentManifest::validate)
      .def_readwrite("name", &cli::ExperimentManifest::name)
      .def_readwrite("seed", &cli::ExperimentManifest::seed)
      .def_readwrite("use_internal", &cli::ExperimentManifest::use_internal)
      .def_readwrite("records_per_setting", &cli::ExperimentManifest::records_per_setting)
      .def_property_readonly("device_ids", [](const cli::ExperimentManifest& mf) {
        std::vector<std::string> ids;
        for (const auto& d : cli::build_fleet(mf)) ids.push_back(d.device_id);
        return ids;
      });

  py::class_<Dataset>(m, "Dataset")
      .def_static("load", [](const std::filesystem::path& p) { return Dataset{load_dataset(p)}; }, py::arg("path"))
      .def("save", [](const Dataset& d, const std::filesystem::path& p) { save_dataset(d.records, p); }, py::arg("path"))
      .def("__len__", [](const Dataset& d) { return d.records.size(); })
      .def("masks", [](const Dataset& d) { return rows_of(d, [](const auto& r, auto i) { return r.plan.on(i) ? 1.0 : 0.0; }); })
      .def("input_spectra", [](const Dataset& d) { return rows_of(d, [](const auto& r, auto i) { return r.input_spectrum_dbm[i]; }); })
      .def("gain_spectra", [](const Dataset& d) {
        return rows_of(d, [](const auto& r, auto i) { return r.gain_spectrum_db ? (*r.gain_spectrum_db)[i] : kOffChannelDbm; });
      })
      .def("target_gains", [](const Dataset& d) {
        std::vector<double> g;
        for (const auto& r : d.records) g.push_back(r.target_gain_db);
        return g;
      })
      .def("modes", [](const Dataset& d) {
        std::vector<std::string> out;
        for (const auto& r : d.records) out.emplace_back(to_string(r.plan.mode()));
        return out;
      });

  m.def(
      "simulate",
      [](const cli::ExperimentManifest& mf, const std::string& device_id, std::size_t n_per_setting, std::uint64_t seed) {
        for (const auto& d : cli::build_fleet(mf)) {
          if (d.device_id == device_id) {
            return Dataset{sim::gen_dataset(d, {mf.gains_for(d.edfa_type)}, n_per_setting, mf.mode_mix, mf.quantize, seed)};
          }
        }
        throw ConfigError("unknown device '" + device_id + "'");
      },
      py::arg("manifest"), py::arg("device_id"), py::arg("n_per_setting"), py::arg("seed"),
      "Simulated measurements of one fleet device.");

  py::class_<GainModel>(m, "GainModel")
      .def_static("load", &load_checkpoint, py::arg("path"))
      .def("save", [](const GainModel& g, const std::filesystem::path& p) { save_checkpoint(g, p); }, py::arg("path"))
      .def_property_readonly("use_internal", &GainModel::use_internal)
      .def_property_readonly("input_dim", [](const GainModel& g) { return g.network.input_dim(); })
      .def_property_readonly("provenance", [](const GainModel& g) { return g.provenance.to_json().dump(); })
      .def("predict", [](const GainModel& g, const Dataset& d) {
        const auto preds = g.predict(d.records);
        Eigen::MatrixXd out(static_cast<Eigen::Index>(preds.size()), static_cast<Eigen::Index>(kChannels));
        for (std::size_t r = 0; r < preds.size(); ++r) {
          for (std::size_t i = 0; i < kChannels; ++i) out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = preds[r][i];
        }
        return out;
      }, py::arg("dataset"))
      .def("abs_errors", [](const GainModel& g, const Dataset& d) { return eval::abs_errors(g, d.records); }, py::arg("dataset"));

  m.def("summarize", [](const std::vector<double>& e) { return stats_dict(eval::summarize(e)); }, py::arg("errors"),
        "MAE and quantiles of absolute errors.");

  m.def(
      "train_direct",
      [](const Dataset& train, bool use_internal, const cli::ExperimentManifest& mf, std::uint64_t seed, bool pretraining) {
        py::gil_scoped_release release;
        return train::train_direct(train.records, use_internal, mf.pretrain, mf.finetune, seed, pretraining).model;
      },
      py::arg("train"), py::arg("use_internal"), py::arg("manifest"), py::arg("seed"), py::arg("pretraining") = true,
      "Pretrain (optionally) and fine-tune a model with the manifest's training budget.");

  m.def(
      "transfer_model",
      [](const GainModel& source, const Dataset& target_train, const cli::ExperimentManifest& mf) {
        py::gil_scoped_release release;
        const auto settings = gain_settings(target_train.records);
        const auto picked = train::pick_transfer_records(target_train.records, settings, mf.transfer.n_per_setting);
        return train::transfer(source, picked, settings, mf.transfer, source.use_internal()).model;
      },
      py::arg("source"), py::arg("target_train"), py::arg("manifest"),
      "Retrain `source` on one fully loaded record per gain setting of the target.");

  m.def(
      "generate",
      [](const cli::ExperimentManifest& mf, const std::filesystem::path& out, bool force, bool verbose) {
        logged(verbose, [&](std::ostream& log) { cli::run_generate(mf, options(out, force, 1), log); return 0; });
      },
      py::arg("manifest"), py::arg("out"), py::arg("force") = false, py::arg("verbose") = false);
  m.def(
      "train",
      [](const cli::ExperimentManifest& mf, const std::filesystem::path& out, const std::vector<std::string>& devices,
         std::size_t workers, bool force, bool verbose) {
        logged(verbose, [&](std::ostream& log) { cli::run_train(mf, options(out, force, workers), devices, log); return 0; });
      },
      py::arg("manifest"), py::arg("out"), py::arg("devices") = std::vector<std::string>{}, py::arg("workers") = 1,
      py::arg("force") = false, py::arg("verbose") = false);
  m.def(
      "transfer",
      [](const cli::ExperimentManifest& mf, const std::filesystem::path& out, const std::string& source,
         const std::string& target, bool verbose) {
        return stats_dict(logged(verbose, [&](std::ostream& log) {
          return cli::run_transfer(mf, options(out, false, 1), source, target, log);
        }));
      },
      py::arg("manifest"), py::arg("out"), py::arg("source"), py::arg("target"), py::arg("verbose") = false);
  m.def(
      "matrix",
      [](const cli::ExperimentManifest& mf, const std::filesystem::path& out, std::size_t workers, bool train_missing,
         bool self_transfer, bool verbose) {
        const auto mat = logged(verbose, [&](std::ostream& log) {
          return cli::run_matrix(mf, options(out, false, workers), train_missing, self_transfer, log);
        });
        py::dict d;
        d["device_ids"] = mat.device_ids;
        py::list mae;
        for (const auto& row : mat.entries) {
          py::list r;
          for (const auto& e : row) r.append(e ? py::cast(e->mae_db) : py::none());
          mae.append(r);
        }
        d["mae"] = mae;
        d["failures"] = mat.failures;
        return d;
      },
      py::arg("manifest"), py::arg("out"), py::arg("workers") = 1, py::arg("train_missing") = false,
      py::arg("self_transfer") = false, py::arg("verbose") = false);
  m.def(
      "report",
      [](const std::filesystem::path& run_dir, bool verbose) {
        logged(verbose, [&](std::ostream& log) { cli::run_report(run_dir, log); return 0; });
      },
      py::arg("run_dir"), py::arg("verbose") = false);
  m.def(
      "load_split",
      [](const cli::ExperimentManifest& mf, const std::filesystem::path& run_dir, const std::string& device_id) {
        auto d = cli::load_run_device(mf, run_dir, device_id);
        return py::make_tuple(Dataset{std::move(d.train)}, Dataset{std::move(d.test)});
      },
      py::arg("manifest"), py::arg("run_dir"), py::arg("device_id"),
      "(train, test) split of a generated device, as used by the commands.");
}
