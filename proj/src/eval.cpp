#include "edfa/eval.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>
#include <thread>

namespace edfa::eval {

namespace {

std::ofstream open_report(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write report file " + path.string());
  return out;
}

void append_errors(const Spectrum& pred, const MeasurementRecord& r, std::vector<double>& out) {
  if (!r.labeled()) throw ConfigError("test record from " + r.device_id + " has no gain label");
  for (std::size_t i = 0; i < kChannels; ++i) {
    if (r.plan.on(i)) out.push_back(std::abs(pred[i] - (*r.gain_spectrum_db)[i]));
  }
}

}  // namespace

std::string format_real(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 6);
  return std::string(buf, res.ptr);
}

nlohmann::json ErrorStats::to_json() const {
  return {{"mae_db", mae_db}, {"median_db", median_db}, {"q25_db", q25_db}, {"q75_db", q75_db},
          {"p95_db", p95_db}, {"min_db", min_db},       {"max_db", max_db}, {"n", n_channels_evaluated}};
}

ErrorStats ErrorStats::from_json(const nlohmann::json& j) {
  ErrorStats s;
  s.mae_db = j.at("mae_db").get<double>();
  s.median_db = j.at("median_db").get<double>();
  s.q25_db = j.at("q25_db").get<double>();
  s.q75_db = j.at("q75_db").get<double>();
  s.p95_db = j.at("p95_db").get<double>();
  s.min_db = j.at("min_db").get<double>();
  s.max_db = j.at("max_db").get<double>();
  s.n_channels_evaluated = j.at("n").get<std::size_t>();
  return s;
}

std::vector<double> abs_errors(const Predictor& model, std::span<const MeasurementRecord> test) {
  if (test.empty()) throw ConfigError("empty test set");
  std::vector<double> errors;
  for (const auto& r : test) append_errors(model(r), r, errors);
  return errors;
}

std::vector<double> abs_errors(const GainModel& model, std::span<const MeasurementRecord> test) {
  if (test.empty()) throw ConfigError("empty test set");
  const auto preds = model.predict(test);
  std::vector<double> errors;
  for (std::size_t j = 0; j < test.size(); ++j) append_errors(preds[j], test[j], errors);
  return errors;
}

std::vector<double> per_measurement_mae(const GainModel& model, std::span<const MeasurementRecord> test) {
  if (test.empty()) throw ConfigError("empty test set");
  const auto preds = model.predict(test);
  std::vector<double> out;
  std::vector<double> errors;
  for (std::size_t j = 0; j < test.size(); ++j) {
    errors.clear();
    append_errors(preds[j], test[j], errors);
    out.push_back(std::accumulate(errors.begin(), errors.end(), 0.0) / static_cast<double>(errors.size()));
  }
  return out;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw ConfigError("quantile of an empty list");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

ErrorStats summarize(std::span<const double> errors) {
  if (errors.empty()) throw ConfigError("cannot summarize an empty error list");
  std::vector<double> s(errors.begin(), errors.end());
  std::sort(s.begin(), s.end());
  ErrorStats st;
  // Sum in sorted order so the result does not depend on input order.
  st.mae_db = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
  st.median_db = quantile_sorted(s, 0.5);
  st.q25_db = quantile_sorted(s, 0.25);
  st.q75_db = quantile_sorted(s, 0.75);
  st.p95_db = quantile_sorted(s, 0.95);
  st.min_db = s.front();
  st.max_db = s.back();
  st.n_channels_evaluated = s.size();
  return st;
}

double mean_abs_error(const GainModel& model, std::span<const MeasurementRecord> test, Aggregation how) {
  const auto e = how == Aggregation::Pooled ? abs_errors(model, test) : per_measurement_mae(model, test);
  return std::accumulate(e.begin(), e.end(), 0.0) / static_cast<double>(e.size());
}

std::vector<MeasurementRecord> filter_mode(std::span<const MeasurementRecord> records, std::optional<LoadingMode> mode) {
  std::vector<MeasurementRecord> out;
  for (const auto& r : records) {
    if (!mode || r.plan.mode() == *mode) out.push_back(r);
  }
  return out;
}

ErrorStats transfer_cell(const GainModel& source, const DeviceData& target, const train::TransferConfig& cfg,
                         std::optional<LoadingMode> mode_filter) {
  const auto records = train::pick_transfer_records(target.train, target.settings, cfg.n_per_setting);
  const auto tl = train::transfer(source, records, target.settings, cfg, source.use_internal());
  return summarize(abs_errors(tl.model, filter_mode(target.test, mode_filter)));
}

TlMatrix tl_matrix(std::span<const DeviceData> devices, std::span<const GainModel* const> direct_models,
                   const TlMatrixOptions& options) {
  const std::size_t n = devices.size();
  if (direct_models.size() != n) throw ConfigError("need one direct model per device");
  TlMatrix m;
  for (const auto& d : devices) m.device_ids.push_back(d.device_id);
  for (std::size_t i = 0; i < n; ++i) {
    if (!direct_models[i]) {
      throw ConfigError("missing direct model for cell (" + devices[i].device_id + ", " + devices[i].device_id + ")");
    }
  }
  m.entries.assign(n, std::vector<std::optional<ErrorStats>>(n));
  m.self_transfer.assign(n, std::nullopt);

  // Jobs: n*n matrix cells plus n optional self-transfer controls.
  const std::size_t n_jobs = n * n + (options.with_self_transfer ? n : 0);
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  auto run = [&] {
    for (std::size_t job = next++; job < n_jobs; job = next++) {
      try {
        if (job < n * n) {
          const std::size_t i = job / n, j = job % n;
          m.entries[i][j] =
              i == j ? summarize(abs_errors(*direct_models[i], filter_mode(devices[j].test, options.mode_filter)))
                     : transfer_cell(*direct_models[i], devices[j], options.transfer, options.mode_filter);
        } else {
          const std::size_t i = job - n * n;
          m.self_transfer[i] = transfer_cell(*direct_models[i], devices[i], options.transfer, options.mode_filter);
        }
      } catch (const std::exception& e) {
        const std::size_t i = job < n * n ? job / n : job - n * n;
        const std::size_t j = job < n * n ? job % n : i;
        std::lock_guard lock(error_mutex);
        m.failures.push_back("cell (" + m.device_ids[i] + ", " + m.device_ids[j] + "): " + e.what());
      }
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, n_jobs));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  std::sort(m.failures.begin(), m.failures.end());
  return m;
}

void write_stats_csv(const NamedStats& stats, const std::filesystem::path& path) {
  auto out = open_report(path);
  out << "config,mae,median,q25,q75,p95,min,max,n\n";
  for (const auto& [name, s] : stats) {
    out << name << ',' << format_real(s.mae_db) << ',' << format_real(s.median_db) << ',' << format_real(s.q25_db)
        << ',' << format_real(s.q75_db) << ',' << format_real(s.p95_db) << ',' << format_real(s.min_db) << ','
        << format_real(s.max_db) << ',' << s.n_channels_evaluated << '\n';
  }
}

void write_boxplot_csv(const NamedStats& stats, const std::filesystem::path& path) {
  // Boxes span the inter-quartile range; whiskers run from min to the 95th percentile.
  auto out = open_report(path);
  out << "config,whisker_low,q25,median,q75,whisker_high,mean\n";
  for (const auto& [name, s] : stats) {
    out << name << ',' << format_real(s.min_db) << ',' << format_real(s.q25_db) << ',' << format_real(s.median_db)
        << ',' << format_real(s.q75_db) << ',' << format_real(s.p95_db) << ',' << format_real(s.mae_db) << '\n';
  }
}

void write_matrix_csv(const TlMatrix& m, const std::filesystem::path& path) {
  auto out = open_report(path);
  out << "source_id,target_id,mae,p95,n\n";
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) {
      const auto& s = m.entries[i][j];
      out << m.device_ids[i] << ',' << m.device_ids[j] << ',';
      if (s) {
        out << format_real(s->mae_db) << ',' << format_real(s->p95_db) << ',' << s->n_channels_evaluated << '\n';
      } else {
        out << "failed,failed,0\n";
      }
    }
  }
}

void write_matrix_grid_csv(const TlMatrix& m, const std::filesystem::path& path) {
  auto out = open_report(path);
  out << "source\\target";
  for (const auto& id : m.device_ids) out << ',' << id;
  out << '\n';
  for (std::size_t i = 0; i < m.size(); ++i) {
    out << m.device_ids[i];
    for (std::size_t j = 0; j < m.size(); ++j) {
      out << ',' << (m.entries[i][j] ? format_real(m.entries[i][j]->mae_db) : std::string("failed"));
    }
    out << '\n';
  }
}

void report(const NamedStats& stats_by_config, const std::filesystem::path& dir) {
  write_stats_csv(stats_by_config, dir / "stats.csv");
  write_boxplot_csv(stats_by_config, dir / "boxplot.csv");
  nlohmann::json j = nlohmann::json::array();
  for (const auto& [name, s] : stats_by_config) {
    auto e = s.to_json();
    e["config"] = name;
    j.push_back(e);
  }
  auto out = open_report(dir / "stats.json");
  out << j.dump(2) << '\n';
}

void report(const TlMatrix& matrix, const std::filesystem::path& dir) {
  write_matrix_csv(matrix, dir / "tl_matrix.csv");
  write_matrix_grid_csv(matrix, dir / "tl_matrix_grid.csv");
}

}  // namespace edfa::eval
