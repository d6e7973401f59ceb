#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "ylab/matrix.hpp"

namespace ylab {

// Aligned multivariate daily series. Columns are stored column-major; the
// timestamp index is kept as ISO-8601 strings, which order lexicographically.
struct TimeSeriesTable {
  std::vector<std::string> timestamps;
  std::vector<std::string> column_names;
  std::vector<Vector> columns;
  std::string target_name;

  std::size_t n_rows() const { return timestamps.size(); }
  std::size_t n_cols() const { return columns.size(); }

  std::size_t col_index(const std::string& name) const {
    for (std::size_t i = 0; i < column_names.size(); ++i) {
      if (column_names[i] == name) return i;
    }
    throw std::invalid_argument("TimeSeriesTable: no column named '" + name + "'");
  }

  const Vector& col(const std::string& name) const { return columns[col_index(name)]; }
  const Vector& target() const { return col(target_name); }
  std::size_t target_index() const { return col_index(target_name); }

  Vector row(std::size_t r) const {
    Vector out(n_cols());
    for (std::size_t c = 0; c < n_cols(); ++c) out[c] = columns[c][r];
    return out;
  }
};

inline TimeSeriesTable select_columns(const TimeSeriesTable& t,
                                      const std::vector<std::string>& names) {
  TimeSeriesTable out;
  out.timestamps = t.timestamps;
  out.target_name = t.target_name;
  for (const auto& n : names) {
    out.column_names.push_back(n);
    out.columns.push_back(t.col(n));
  }
  return out;
}

// Rows [from, to) as a new table.
inline TimeSeriesTable slice_rows(const TimeSeriesTable& t, std::size_t from, std::size_t to) {
  if (from > to || to > t.n_rows()) {
    throw std::invalid_argument("slice_rows: bad range [" + std::to_string(from) + ", " +
                                std::to_string(to) + ") for " + std::to_string(t.n_rows()) +
                                " rows");
  }
  TimeSeriesTable out;
  out.column_names = t.column_names;
  out.target_name = t.target_name;
  out.timestamps.assign(t.timestamps.begin() + from, t.timestamps.begin() + to);
  out.columns.reserve(t.n_cols());
  for (const auto& c : t.columns) {
    out.columns.emplace_back(c.begin() + from, c.begin() + to);
  }
  return out;
}

namespace detail {

inline bool is_missing_cell(const std::string& s) {
  if (s.empty()) return true;
  return s == "NA" || s == "NaN" || s == "nan" || s == "na";
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

inline double parse_number(const std::string& cell, std::size_t row_no,
                           const std::string& col) {
  const std::string s = trim(cell);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw std::runtime_error("load_csv: unparseable number '" + s + "' in column '" + col +
                             "' at row " + std::to_string(row_no));
  }
  return v;
}

}  // namespace detail

// CSV contract: header row, first column is an ISO-8601 date, all other
// columns numeric, '.' decimal separator. Rows are sorted by date; missing
// cells are forward-filled from the previous observation of the same column;
// rows before every column has been observed at least once are dropped.
inline TimeSeriesTable load_csv(const std::string& path,
                                const std::vector<std::string>& schema = {}) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("load_csv: cannot open '" + path + "'");
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("load_csv: '" + path + "' is empty (no header row)");
  }
  const auto header = detail::split_csv_line(line);
  if (header.size() < 2) {
    throw std::runtime_error("load_csv: header must name a timestamp column and at least one series");
  }
  std::vector<std::string> names(header.begin() + 1, header.end());
  for (auto& n : names) n = detail::trim(n);
  if (!schema.empty()) {
    for (const auto& n : names) {
      if (std::find(schema.begin(), schema.end(), n) == schema.end()) {
        throw std::runtime_error("load_csv: unknown column '" + n + "' not in expected schema");
      }
    }
    for (const auto& want : schema) {
      if (std::find(names.begin(), names.end(), want) == names.end()) {
        throw std::runtime_error("load_csv: expected column '" + want + "' missing from header");
      }
    }
  }

  struct RawRow {
    std::string ts;
    std::vector<std::string> cells;
    std::size_t file_row;
  };
  std::vector<RawRow> rows;
  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size()) {
      throw std::runtime_error("load_csv: row " + std::to_string(row_no) + " has " +
                               std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(header.size()));
    }
    RawRow r;
    r.ts = detail::trim(cells[0]);
    r.cells.assign(cells.begin() + 1, cells.end());
    r.file_row = row_no;
    rows.push_back(std::move(r));
  }

  std::stable_sort(rows.begin(), rows.end(),
                   [](const RawRow& a, const RawRow& b) { return a.ts < b.ts; });
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].ts == rows[i - 1].ts) {
      throw std::runtime_error("load_csv: duplicate timestamp '" + rows[i].ts + "' at row " +
                               std::to_string(rows[i].file_row));
    }
  }

  const std::size_t ncols = names.size();
  std::vector<double> last_seen(ncols, 0.0);
  std::vector<bool> seen(ncols, false);

  // First row at which every column has at least one observation.
  std::size_t start = rows.size();
  {
    std::vector<bool> observed(ncols, false);
    std::size_t remaining = ncols;
    for (std::size_t i = 0; i < rows.size() && remaining > 0; ++i) {
      for (std::size_t c = 0; c < ncols; ++c) {
        if (!observed[c] && !detail::is_missing_cell(detail::trim(rows[i].cells[c]))) {
          observed[c] = true;
          --remaining;
        }
      }
      if (remaining == 0) start = i;
    }
    if (remaining > 0 && !rows.empty()) {
      throw std::runtime_error("load_csv: a column has no observations at all");
    }
    if (rows.empty()) start = 0;
  }

  TimeSeriesTable t;
  t.column_names = names;
  t.columns.assign(ncols, {});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < ncols; ++c) {
      const std::string cell = detail::trim(rows[i].cells[c]);
      if (!detail::is_missing_cell(cell)) {
        last_seen[c] = detail::parse_number(cell, rows[i].file_row, names[c]);
        seen[c] = true;
      }
    }
    if (i < start) continue;  // leading rows with an unfillable gap
    t.timestamps.push_back(rows[i].ts);
    for (std::size_t c = 0; c < ncols; ++c) t.columns[c].push_back(last_seen[c]);
  }
  if (!t.column_names.empty()) t.target_name = t.column_names.front();
  return t;
}

inline void save_csv(const TimeSeriesTable& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("save_csv: cannot open '" + path + "' for writing");
  }
  out << "date";
  for (const auto& n : t.column_names) out << ',' << n;
  out << '\n';
  char buf[32];
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    out << t.timestamps[r];
    for (std::size_t c = 0; c < t.n_cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", t.columns[c][r]);
      out << ',' << buf;
    }
    out << '\n';
  }
}

// Adds, for every original column, `lags` shifted copies named <col>_lag<k>.
// The first `lags` rows no longer have full history and are dropped.
inline TimeSeriesTable generate_lagged_features(const TimeSeriesTable& t, std::size_t lags) {
  if (lags < 1) {
    throw std::invalid_argument("generate_lagged_features: lags must be >= 1");
  }
  if (lags >= t.n_rows()) {
    throw std::invalid_argument("generate_lagged_features: lags (" + std::to_string(lags) +
                                ") >= table length (" + std::to_string(t.n_rows()) + ")");
  }
  const std::size_t n = t.n_rows();
  TimeSeriesTable out;
  out.target_name = t.target_name;
  out.timestamps.assign(t.timestamps.begin() + lags, t.timestamps.end());
  for (std::size_t c = 0; c < t.n_cols(); ++c) {
    out.column_names.push_back(t.column_names[c]);
    out.columns.emplace_back(t.columns[c].begin() + lags, t.columns[c].end());
  }
  for (std::size_t c = 0; c < t.n_cols(); ++c) {
    for (std::size_t k = 1; k <= lags; ++k) {
      out.column_names.push_back(t.column_names[c] + "_lag" + std::to_string(k));
      out.columns.emplace_back(t.columns[c].begin() + (lags - k),
                               t.columns[c].begin() + (n - k));
    }
  }
  return out;
}

// Sequence construction geometry. horizon follows the "next day plus h"
// convention: the label for an input ending at time t sits at t + 1 + horizon.
struct WindowSpec {
  std::size_t window_len = 0;
  std::size_t horizon = 0;
  std::size_t seq_in = 1;
  std::size_t seq_out = 0;  // 0 = single direct label, seq_in = sequence-to-sequence

  void validate() const {
    if (seq_in < 1) throw std::invalid_argument("WindowSpec: seq_in must be >= 1");
    if (seq_out != 0 && seq_out != seq_in) {
      throw std::invalid_argument("WindowSpec: seq_out must be 0 or equal to seq_in");
    }
    if (window_len != 0 && window_len < seq_in + horizon + 1) {
      throw std::invalid_argument("WindowSpec: window_len must be >= seq_in + horizon + 1");
    }
  }
};

struct SequenceSample {
  std::vector<Vector> inputs;  // seq_in feature rows, oldest first
  Vector labels;               // 1 value (seq_out=0) or seq_in values
  std::size_t anchor = 0;      // row index of the last input step
};

// Anchors t run over every position with full input history [t-seq_in+1, t]
// and a label at t+1+horizon inside the table; anything short is skipped,
// never padded. With seq_out = seq_in, the label of input step k is the
// target at (time of k) + 1 + horizon, so the final label lands exactly at
// the forecast the model is being asked for.
inline std::vector<SequenceSample> make_sequences(const TimeSeriesTable& t,
                                                  const WindowSpec& spec) {
  spec.validate();
  std::vector<SequenceSample> out;
  const std::size_t n = t.n_rows();
  const std::size_t offset = 1 + spec.horizon;
  if (n < spec.seq_in + offset) return out;
  const Vector& target = t.target();
  for (std::size_t anchor = spec.seq_in - 1; anchor + offset < n; ++anchor) {
    SequenceSample s;
    s.anchor = anchor;
    s.inputs.reserve(spec.seq_in);
    for (std::size_t k = anchor + 1 - spec.seq_in; k <= anchor; ++k) {
      s.inputs.push_back(t.row(k));
    }
    if (spec.seq_out == 0) {
      s.labels = {target[anchor + offset]};
    } else {
      s.labels.reserve(spec.seq_in);
      for (std::size_t k = anchor + 1 - spec.seq_in; k <= anchor; ++k) {
        s.labels.push_back(target[k + offset]);
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

// Per-column standardization statistics. Population convention (divide by n).
struct NormalizationStats {
  std::vector<std::string> column_names;
  Vector mean;
  Vector std;

  std::size_t index_of(const std::string& name) const {
    for (std::size_t i = 0; i < column_names.size(); ++i) {
      if (column_names[i] == name) return i;
    }
    throw std::invalid_argument("NormalizationStats: no column named '" + name + "'");
  }
};

inline NormalizationStats fit_normalization(const TimeSeriesTable& t) {
  if (t.n_rows() < 2) {
    throw std::invalid_argument("fit_normalization: need at least 2 rows");
  }
  NormalizationStats st;
  st.column_names = t.column_names;
  const double n = static_cast<double>(t.n_rows());
  for (std::size_t c = 0; c < t.n_cols(); ++c) {
    double m = std::accumulate(t.columns[c].begin(), t.columns[c].end(), 0.0) / n;
    double var = 0.0;
    for (double v : t.columns[c]) var += (v - m) * (v - m);
    var /= n;
    const double sd = std::sqrt(var);
    if (!(sd > 0.0)) {
      throw std::runtime_error("fit_normalization: column '" + t.column_names[c] +
                               "' has zero standard deviation");
    }
    st.mean.push_back(m);
    st.std.push_back(sd);
  }
  return st;
}

inline TimeSeriesTable apply_normalization(const TimeSeriesTable& t,
                                           const NormalizationStats& st) {
  TimeSeriesTable out = t;
  for (std::size_t c = 0; c < out.n_cols(); ++c) {
    const std::size_t s = st.index_of(out.column_names[c]);
    for (double& v : out.columns[c]) v = (v - st.mean[s]) / st.std[s];
  }
  return out;
}

inline Vector invert_normalization(const Vector& values, const NormalizationStats& st,
                                   const std::string& column) {
  const std::size_t s = st.index_of(column);
  Vector out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i] * st.std[s] + st.mean[s];
  return out;
}

// Chronological split; train strictly precedes test.
inline std::pair<TimeSeriesTable, TimeSeriesTable> static_split(const TimeSeriesTable& t,
                                                                double train_frac) {
  if (!(train_frac > 0.0) || !(train_frac < 1.0)) {
    throw std::invalid_argument("static_split: train_frac must be in (0, 1), got " +
                                std::to_string(train_frac));
  }
  const auto cut = static_cast<std::size_t>(std::floor(train_frac * static_cast<double>(t.n_rows())));
  return {slice_rows(t, 0, cut), slice_rows(t, cut, t.n_rows())};
}

}  // namespace ylab
