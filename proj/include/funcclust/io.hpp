#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "funcclust/cluster.hpp"
#include "funcclust/errors.hpp"
#include "funcclust/gmm.hpp"
#include "funcclust/model_select.hpp"
#include "funcclust/projection.hpp"
#include "funcclust/version.hpp"

namespace funcclust {

/// Shortest-width decimal form with 17 significant digits; round-trips any
/// IEEE-754 double exactly.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

/// FNV-1a 64-bit digest of a byte string, as 16 hex characters.
inline std::string fnv1a64_hex(const std::string& bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

inline void write_file_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << bytes;
  if (!out) throw DataError("write to '" + path + "' failed");
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (ch != '\r') {
      field.push_back(ch);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

inline double parse_double(const std::string& text, const std::string& where) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double value = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw DataError(where + ": expected a number, got '" + text + "'");
  return value;
}

inline long parse_int(const std::string& text, const std::string& where) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const long value = std::strtol(begin, &end, 10);
  if (end == begin || *end != '\0')
    throw DataError(where + ": expected an integer, got '" + text + "'");
  return value;
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::istringstream in(read_file_bytes(path));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

/// In-place comma-separated double scanner for data rows; no per-field
/// allocation. Returns false on any malformed field or count mismatch.
inline bool scan_doubles(const char* cursor, const char* line_end, double* out,
                         std::size_t count) {
  for (std::size_t j = 0; j < count; ++j) {
#if defined(__cpp_lib_to_chars) && __cpp_lib_to_chars >= 201611L
    auto [next, ec] = std::from_chars(cursor, line_end, out[j]);
    if (ec != std::errc{}) return false;
    cursor = next;
#else
    char* end = nullptr;
    out[j] = std::strtod(cursor, &end);
    if (end == cursor) return false;
    cursor = end;
#endif
    if (j + 1 < count) {
      if (cursor >= line_end || *cursor != ',') return false;
      ++cursor;
    }
  }
  while (cursor < line_end && (*cursor == '\r' || *cursor == ' ')) ++cursor;
  return cursor == line_end;
}

}  // namespace detail

/// Rectangular dataset CSV: header `t,<t_1>,...,<t_m>`, one row per function
/// `id,<z_1>,...,<z_m>`.
inline std::string dataset_to_csv(const FunctionalDataset& dataset) {
  if (dataset.layout() != FunctionalDataset::Layout::rectangular)
    throw DataError("only rectangular datasets serialize to the wide CSV format");
  std::ostringstream out;
  out << "t";
  for (double t : dataset.shared_grid().points()) out << ',' << format_double(t);
  out << '\n';
  const Eigen::MatrixXd& values = dataset.values();
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    out << (i + 1);
    for (Eigen::Index j = 0; j < values.cols(); ++j) out << ',' << format_double(values(i, j));
    out << '\n';
  }
  return out.str();
}

/// Irregular dataset CSV in long format: header `id,t,z`.
inline std::string dataset_to_long_csv(const FunctionalDataset& dataset) {
  std::ostringstream out;
  out << "id,t,z\n";
  for (int i = 0; i < dataset.size(); ++i) {
    const SampleGrid& grid = dataset.grid_of(i);
    const Eigen::VectorXd z = dataset.series_of(i);
    for (int j = 0; j < grid.size(); ++j)
      out << (i + 1) << ',' << format_double(grid.point(j)) << ',' << format_double(z[j]) << '\n';
  }
  return out.str();
}

/// Parse a dataset CSV, auto-detecting the wide (rectangular) and long
/// (irregular) layouts from the header row. Errors carry line numbers.
inline FunctionalDataset read_dataset_csv(const std::string& path) {
  const std::string bytes = read_file_bytes(path);
  // Zero-copy line table over the raw bytes.
  std::vector<std::pair<const char*, const char*>> spans;
  {
    const char* cursor = bytes.data();
    const char* end = bytes.data() + bytes.size();
    while (cursor < end) {
      const char* nl = static_cast<const char*>(std::memchr(cursor, '\n', end - cursor));
      const char* line_end = nl ? nl : end;
      spans.emplace_back(cursor, line_end);
      cursor = nl ? nl + 1 : end;
    }
    while (!spans.empty() && spans.back().first == spans.back().second) spans.pop_back();
  }
  if (spans.size() < 2) throw DataError(path + ": expected a header and at least one data row");
  const std::vector<std::string> header =
      detail::split_csv_line(std::string(spans[0].first, spans[0].second));
  const auto where = [&path](std::size_t line) { return path + ":" + std::to_string(line + 1); };

  if (header.size() == 3 && header[0] == "id" && header[1] == "t" && header[2] == "z") {
    // Long layout: rows grouped by id, t strictly increasing within a group.
    std::vector<std::vector<double>> ts;
    std::vector<std::vector<double>> zs;
    long current_id = 0;
    double t_min = 0.0, t_max = 0.0;
    for (std::size_t k = 1; k < spans.size(); ++k) {
      double fields[3];
      if (!detail::scan_doubles(spans[k].first, spans[k].second, fields, 3))
        throw DataError(where(k) + ": expected 3 numeric fields");
      const long id = static_cast<long>(fields[0]);
      if (static_cast<double>(id) != fields[0])
        throw DataError(where(k) + ": id must be an integer");
      const double t = fields[1];
      const double z = fields[2];
      if (id != current_id) {
        if (id != current_id + 1)
          throw DataError(where(k) + ": ids must be 1,2,... in consecutive blocks");
        current_id = id;
        ts.emplace_back();
        zs.emplace_back();
      }
      ts.back().push_back(t);
      zs.back().push_back(z);
      if (ts.size() == 1 && ts.back().size() == 1) {
        t_min = t_max = t;
      } else {
        t_min = std::min(t_min, t);
        t_max = std::max(t_max, t);
      }
    }
    if (ts.empty()) throw DataError(path + ": no data rows");
    if (!(t_min < t_max)) throw DataError(path + ": degenerate time range");
    const Interval domain{t_min, t_max};
    std::vector<SampleGrid> grids;
    std::vector<Eigen::VectorXd> series;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      grids.emplace_back(ts[i], domain);
      series.emplace_back(Eigen::Map<Eigen::VectorXd>(zs[i].data(),
                                                      static_cast<Eigen::Index>(zs[i].size())));
    }
    return FunctionalDataset::irregular(std::move(grids), std::move(series));
  }

  if (header.size() >= 2 && header[0] == "t") {
    const std::size_t m = header.size() - 1;
    std::vector<double> grid_points(m);
    for (std::size_t j = 0; j < m; ++j)
      grid_points[j] = detail::parse_double(header[j + 1], where(0));
    Eigen::MatrixXd values(static_cast<Eigen::Index>(spans.size() - 1),
                           static_cast<Eigen::Index>(m));
    std::vector<double> row(m + 1);
    for (std::size_t k = 1; k < spans.size(); ++k) {
      // The id column is scanned as a number; only its presence matters.
      if (!detail::scan_doubles(spans[k].first, spans[k].second, row.data(), m + 1))
        throw DataError(where(k) + ": expected " + std::to_string(m + 1) +
                        " comma-separated numeric fields");
      for (std::size_t j = 0; j < m; ++j)
        values(static_cast<Eigen::Index>(k - 1), static_cast<Eigen::Index>(j)) = row[j + 1];
    }
    const Interval domain{grid_points.front(), grid_points.back()};
    return FunctionalDataset::rectangular(SampleGrid(std::move(grid_points), domain),
                                          std::move(values));
  }

  throw DataError(path + ":1: unrecognized header; expected 't,...' or 'id,t,z'");
}

/// Labels CSV: header `label`, one 1-based integer per row.
inline std::string labels_to_csv(const Partition& partition) {
  std::ostringstream out;
  out << "label\n";
  for (int label : partition.labels()) out << label << '\n';
  return out.str();
}

inline Partition read_labels_csv(const std::string& path) {
  const std::vector<std::string> lines = detail::read_lines(path);
  if (lines.empty() || detail::split_csv_line(lines[0])[0] != "label")
    throw DataError(path + ":1: expected header 'label'");
  if (lines.size() < 2) throw DataError(path + ": no labels");
  std::vector<int> labels;
  int max_label = 1;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const long v = detail::parse_int(lines[k], path + ":" + std::to_string(k + 1));
    if (v < 1) throw DataError(path + ":" + std::to_string(k + 1) + ": labels are 1-based");
    labels.push_back(static_cast<int>(v));
    max_label = std::max(max_label, static_cast<int>(v));
  }
  return Partition(std::move(labels), max_label);
}

namespace detail {

inline std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char ch : s) {
    switch (ch) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out.push_back(ch);
    }
  }
  return out;
}

}  // namespace detail

/// Fitted-model JSON with doubles at 17 significant digits.
inline std::string model_to_json(const FitReport& report) {
  const GmmParams& p = report.params;
  const int g = p.components();
  const int d = p.dim();
  std::ostringstream out;
  out << "{\n";
  out << "  \"g\": " << g << ",\n";
  out << "  \"d\": " << d << ",\n";
  out << "  \"weights\": [";
  for (int c = 0; c < g; ++c) out << (c ? ", " : "") << format_double(p.weights[c]);
  out << "],\n";
  out << "  \"means\": [";
  for (int c = 0; c < g; ++c) {
    out << (c ? ", " : "") << "[";
    for (int k = 0; k < d; ++k) out << (k ? ", " : "") << format_double(p.means(c, k));
    out << "]";
  }
  out << "],\n";
  out << "  \"covariances\": [";
  for (int c = 0; c < g; ++c) {
    out << (c ? ", " : "") << "[";
    const Eigen::MatrixXd& cov = p.covariances[static_cast<std::size_t>(c)];
    for (int r = 0; r < d; ++r) {
      out << (r ? ", " : "") << "[";
      for (int k = 0; k < d; ++k) out << (k ? ", " : "") << format_double(cov(r, k));
      out << "]";
    }
    out << "]";
  }
  out << "],\n";
  out << "  \"loglik\": " << format_double(report.loglik()) << ",\n";
  out << "  \"iterations\": " << report.iterations << ",\n";
  out << "  \"converged\": " << (report.converged ? "true" : "false") << ",\n";
  out << "  \"seed\": " << report.seed << "\n";
  out << "}\n";
  return out.str();
}

/// Parse a fitted-model JSON back into parameters (plus loglik metadata).
inline FitReport read_model_json(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file_bytes(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  try {
    const int g = j.at("g").get<int>();
    const int d = j.at("d").get<int>();
    FitReport report;
    report.params.weights.resize(g);
    report.params.means.resize(g, d);
    report.params.covariances.assign(static_cast<std::size_t>(g), Eigen::MatrixXd(d, d));
    for (int c = 0; c < g; ++c) {
      report.params.weights[c] = j.at("weights").at(c).get<double>();
      for (int k = 0; k < d; ++k)
        report.params.means(c, k) = j.at("means").at(c).at(k).get<double>();
      for (int r = 0; r < d; ++r)
        for (int k = 0; k < d; ++k)
          report.params.covariances[static_cast<std::size_t>(c)](r, k) =
              j.at("covariances").at(c).at(r).at(k).get<double>();
    }
    report.loglik_trace.push_back(j.at("loglik").get<double>());
    report.iterations = j.at("iterations").get<int>();
    report.converged = j.at("converged").get<bool>();
    report.seed = j.at("seed").get<std::uint64_t>();
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": malformed model: " + e.what());
  }
}

/// Plot-ready criterion table CSV: g, loglik, penalty, criterion, chosen.
inline std::string selection_to_csv(const SelectionTable& table) {
  std::ostringstream out;
  out << "g,loglik,penalty,criterion,chosen\n";
  for (const SelectionRow& row : table.rows)
    out << row.g << ',' << format_double(row.loglik) << ',' << row.penalty << ','
        << format_double(row.criterion) << ',' << (row.g == table.chosen_g ? 1 : 0) << '\n';
  return out.str();
}

/// Run manifest: command, config echo, seed, version, per-stage wall times,
/// and a digest for every emitted file.
class RunManifest {
 public:
  RunManifest(std::string command, std::uint64_t seed)
      : command_(std::move(command)), seed_(seed) {}

  void set_config(std::string key, std::string value) {
    config_.emplace_back(std::move(key), std::move(value));
  }
  void set_timing(std::string stage, double seconds) {
    timings_.emplace_back(std::move(stage), seconds);
  }
  void set_total(double seconds) { total_seconds_ = seconds; }

  /// Register an emitted file; records size and content digest.
  void add_output(const std::string& path) {
    const std::string bytes = read_file_bytes(path);
    outputs_.push_back({path, bytes.size(), fnv1a64_hex(bytes)});
  }

  std::string to_json() const {
    std::ostringstream out;
    out << "{\n";
    out << "  \"command\": \"" << detail::json_escape(command_) << "\",\n";
    out << "  \"version\": \"" << version() << "\",\n";
    out << "  \"seed\": " << seed_ << ",\n";
    out << "  \"config\": {";
    for (std::size_t k = 0; k < config_.size(); ++k)
      out << (k ? ", " : "") << "\"" << detail::json_escape(config_[k].first) << "\": \""
          << detail::json_escape(config_[k].second) << "\"";
    out << "},\n";
    out << "  \"timings_s\": {";
    for (std::size_t k = 0; k < timings_.size(); ++k)
      out << (k ? ", " : "") << "\"" << detail::json_escape(timings_[k].first)
          << "\": " << format_double(timings_[k].second);
    out << "},\n";
    out << "  \"total_s\": " << format_double(total_seconds_) << ",\n";
    out << "  \"outputs\": [";
    for (std::size_t k = 0; k < outputs_.size(); ++k)
      out << (k ? ", " : "") << "{\"path\": \"" << detail::json_escape(outputs_[k].path)
          << "\", \"bytes\": " << outputs_[k].bytes << ", \"fnv1a64\": \"" << outputs_[k].digest
          << "\"}";
    out << "]\n";
    out << "}\n";
    return out.str();
  }

 private:
  struct OutputEntry {
    std::string path;
    std::size_t bytes;
    std::string digest;
  };

  std::string command_;
  std::uint64_t seed_;
  std::vector<std::pair<std::string, std::string>> config_;
  std::vector<std::pair<std::string, double>> timings_;
  double total_seconds_ = 0.0;
  std::vector<OutputEntry> outputs_;
};

}  // namespace funcclust
