#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "edfa/dataset.hpp"
#include "edfa/rng.hpp"

namespace edfa {

namespace {

constexpr std::size_t kScalarColumns = 8;
constexpr std::size_t kColumns = kScalarColumns + 3 * kChannels + 1;

std::string header() {
  std::string h = "device_id,edfa_type,target_gain_db,total_in_dbm,total_out_dbm,voa_in_dbm,voa_out_dbm,voa_attn_db";
  for (const char* prefix : {"p_", "c_", "g_"}) {
    for (std::size_t i = 1; i <= kChannels; ++i) h += "," + std::string(prefix) + std::to_string(i);
  }
  h += ",loading_mode";
  return h;
}

void append_real(std::string& out, double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 6);
  out.append(buf, res.ptr);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

double parse_real(std::string_view field, std::string_view column, std::size_t line) {
  double v = 0.0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size() || field.empty()) {
    throw ParseError("column " + std::string(column) + ": '" + std::string(field) + "' is not a number", line);
  }
  return v;
}

}  // namespace

double round_to_file_precision(double v) {
  std::string s;
  append_real(s, v);
  return parse_real(s, "", 0);
}

void write_dataset(std::ostream& out, std::span<const MeasurementRecord> records) {
  out << header() << '\n';
  std::string row;
  for (const auto& r : records) {
    row.clear();
    row += r.device_id;
    row += ',';
    row += to_string(r.edfa_type);
    for (double v : {r.target_gain_db, r.total_in_dbm, r.total_out_dbm, r.voa_in_dbm, r.voa_out_dbm, r.voa_attn_db}) {
      row += ',';
      append_real(row, v);
    }
    for (std::size_t i = 0; i < kChannels; ++i) {
      row += ',';
      append_real(row, r.input_spectrum_dbm[i]);
    }
    for (std::size_t i = 0; i < kChannels; ++i) row += r.plan.on(i) ? ",1" : ",0";
    for (std::size_t i = 0; i < kChannels; ++i) {
      row += ',';
      if (r.gain_spectrum_db) append_real(row, (*r.gain_spectrum_db)[i]);
    }
    row += ',';
    row += to_string(r.plan.mode());
    out << row << '\n';
  }
}

std::vector<MeasurementRecord> read_dataset(std::istream& in) {
  std::vector<MeasurementRecord> records;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError("missing header", 1);
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header()) throw ParseError("unexpected header", line_no);

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != kColumns) {
      throw ParseError("expected " + std::to_string(kColumns) + " columns, found " + std::to_string(f.size()),
                       line_no);
    }
    MeasurementRecord r;
    r.device_id = std::string(f[0]);
    try {
      r.edfa_type = edfa_type_from_string(f[1]);
    } catch (const ConfigError& e) {
      throw ParseError(e.what(), line_no);
    }
    r.target_gain_db = parse_real(f[2], "target_gain_db", line_no);
    r.total_in_dbm = parse_real(f[3], "total_in_dbm", line_no);
    r.total_out_dbm = parse_real(f[4], "total_out_dbm", line_no);
    r.voa_in_dbm = parse_real(f[5], "voa_in_dbm", line_no);
    r.voa_out_dbm = parse_real(f[6], "voa_out_dbm", line_no);
    r.voa_attn_db = parse_real(f[7], "voa_attn_db", line_no);

    ChannelMask mask{};
    std::size_t empty_gains = 0;
    Spectrum gains{};
    for (std::size_t i = 0; i < kChannels; ++i) {
      const auto idx = std::to_string(i + 1);
      r.input_spectrum_dbm[i] = parse_real(f[kScalarColumns + i], "p_" + idx, line_no);
      const auto c = f[kScalarColumns + kChannels + i];
      if (c == "1" || c == "1.0") {
        mask[i] = 1;
      } else if (c == "0" || c == "0.0") {
        mask[i] = 0;
      } else {
        throw ParseError("column c_" + idx + ": mask value '" + std::string(c) + "' is not 0 or 1", line_no);
      }
      const auto g = f[kScalarColumns + 2 * kChannels + i];
      if (g.empty()) {
        ++empty_gains;
      } else {
        gains[i] = parse_real(g, "g_" + idx, line_no);
      }
    }
    if (empty_gains != 0 && empty_gains != kChannels) {
      throw ParseError("gain columns must be all present or all empty", line_no);
    }
    try {
      r.plan = ChannelPlan(mask, loading_mode_from_string(f[kColumns - 1]));
      if (empty_gains == 0) r.gain_spectrum_db = gains;
      r.validate();
    } catch (const ConfigError& e) {
      throw ParseError(e.what(), line_no);
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<MeasurementRecord> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset " + path.string());
  try {
    return read_dataset(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

void save_dataset(std::span<const MeasurementRecord> records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write dataset " + path.string());
  write_dataset(out, records);
  if (!out) throw ConfigError("write failed for " + path.string());
}

SplitIndices split_indices(std::span<const MeasurementRecord> records, double train_ratio, std::uint64_t seed) {
  if (!(train_ratio > 0.0 && train_ratio < 1.0)) throw ConfigError("train ratio must lie in (0, 1)");
  std::map<std::pair<std::string, double>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < records.size(); ++i) {
    groups[{records[i].device_id, records[i].target_gain_db}].push_back(i);
  }
  SplitIndices out;
  std::uint64_t group_no = 0;
  for (auto& [key, idx] : groups) {
    if (idx.size() < 10) {
      throw ConfigError("gain setting " + std::to_string(key.second) + " of device " + key.first + " has only " +
                        std::to_string(idx.size()) + " records (need at least 10)");
    }
    Rng rng = make_rng(seed, "split", group_no++);
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_test_total =
        static_cast<std::size_t>(std::llround((1.0 - train_ratio) * static_cast<double>(idx.size())));

    // Largest-remainder allocation of test slots across loading modes.
    std::map<LoadingMode, std::vector<std::size_t>> strata;
    for (auto i : idx) strata[records[i].plan.mode()].push_back(i);
    std::vector<std::pair<double, LoadingMode>> remainders;
    std::map<LoadingMode, std::size_t> quota;
    std::size_t assigned = 0;
    for (const auto& [mode, members] : strata) {
      const double exact = static_cast<double>(n_test_total) * static_cast<double>(members.size()) /
                           static_cast<double>(idx.size());
      quota[mode] = static_cast<std::size_t>(std::floor(exact));
      assigned += quota[mode];
      remainders.emplace_back(exact - std::floor(exact), mode);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; assigned < n_test_total; ++k, ++assigned) ++quota[remainders[k].second];

    for (const auto& [mode, members] : strata) {
      const auto q = quota[mode];
      out.test.insert(out.test.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(q));
      out.train.insert(out.train.end(), members.begin() + static_cast<std::ptrdiff_t>(q), members.end());
    }
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

TrainTestSplit split_train_test(std::span<const MeasurementRecord> records, double train_ratio, std::uint64_t seed) {
  const auto idx = split_indices(records, train_ratio, seed);
  TrainTestSplit s;
  s.train.reserve(idx.train.size());
  s.test.reserve(idx.test.size());
  for (auto i : idx.train) s.train.push_back(records[i]);
  for (auto i : idx.test) s.test.push_back(records[i]);
  return s;
}

}  // namespace edfa
