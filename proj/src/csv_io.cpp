#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "internal.hpp"

namespace oasis {

namespace {

struct CsvData {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> lines;  // 1-based file line of each row
};

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

CsvData read_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::FileNotFound, "cannot open '" + path.string() + "'");
  CsvData data;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    auto cells = split_line(line);
    if (data.header.empty()) {
      data.header = std::move(cells);
      continue;
    }
    if (cells.size() != data.header.size()) {
      std::ostringstream msg;
      msg << path.string() << " line " << lineno << " has " << cells.size() << " fields, header has "
          << data.header.size();
      throw Error(ErrorKind::RaggedRows, msg.str());
    }
    data.rows.push_back(std::move(cells));
    data.lines.push_back(lineno);
  }
  if (data.header.empty()) throw Error(ErrorKind::ParseError, path.string() + " has no header row");
  return data;
}

bool is_missing(const std::string& cell) {
  std::string up;
  for (char c : cell) up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  return up.empty() || up == "NA" || up == "NAN" || up == "N/A" || up == ".";
}

double parse_number(const std::string& cell, const fs::path& path, int line, const std::string& column) {
  const auto located = [&](const char* what) {
    std::ostringstream msg;
    msg << what << " '" << cell << "' at " << path.string() << " line " << line << ", column '" << column << "'";
    return msg.str();
  };
  if (is_missing(cell)) throw Error(ErrorKind::MissingValue, located("missing value"));
  double v = 0.0;
  const char* first = cell.data();
  if (!cell.empty() && cell[0] == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) throw Error(ErrorKind::ParseError, located("not a number:"));
  if (!std::isfinite(v)) throw Error(ErrorKind::MissingValue, located("non-finite value"));
  return v;
}

int column_of(const CsvData& data, const std::string& name) {
  const auto it = std::find(data.header.begin(), data.header.end(), name);
  return it == data.header.end() ? -1 : static_cast<int>(it - data.header.begin());
}

}  // namespace

TimeSeriesPanel ingest_csv(const fs::path& path, const StudyConfig& config) {
  const CsvData data = read_csv(path);
  const auto n = static_cast<Eigen::Index>(config.variables.size());
  std::vector<int> cols;
  std::vector<std::string> names;
  std::vector<Transform> transforms;
  for (const auto& v : config.variables) {
    const int c = column_of(data, v.name);
    if (c < 0) throw Error(ErrorKind::UnknownVariable, "variable '" + v.name + "' is not a column of " + path.string());
    cols.push_back(c);
    names.push_back(v.name);
    transforms.push_back(v.transform);
  }
  const bool has_periods = std::find(cols.begin(), cols.end(), 0) == cols.end();

  const auto T = static_cast<Eigen::Index>(data.rows.size());
  Matrix raw(T, n);
  std::vector<std::string> periods;
  for (Eigen::Index t = 0; t < T; ++t) {
    const auto& row = data.rows[static_cast<std::size_t>(t)];
    const int line = data.lines[static_cast<std::size_t>(t)];
    if (has_periods) periods.push_back(row[0]);
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto c = static_cast<std::size_t>(cols[static_cast<std::size_t>(j)]);
      const double v = parse_number(row[c], path, line, data.header[c]);
      if (transforms[static_cast<std::size_t>(j)] == Transform::LogDiff && !(v > 0.0)) {
        std::ostringstream msg;
        msg << "value " << row[c] << " at " << path.string() << " line " << line << ", column '" << data.header[c]
            << "' is not positive under log_diff";
        throw Error(ErrorKind::NonPositiveValueUnderLog, msg.str());
      }
      raw(t, j) = v;
    }
  }
  return transform_panel(names, raw, transforms, periods);
}

std::pair<std::vector<std::string>, Matrix> detail::read_instruments(const InstrumentSpec& spec) {
  const CsvData data = read_csv(spec.path);
  std::vector<int> cols;
  for (const auto& name : spec.columns) {
    const int c = column_of(data, name);
    if (c < 0) throw Error(ErrorKind::UnknownVariable, "instrument '" + name + "' is not a column of " + spec.path.string());
    cols.push_back(c);
  }
  const bool has_periods = std::find(cols.begin(), cols.end(), 0) == cols.end();
  std::vector<std::string> labels;
  Matrix z(static_cast<Eigen::Index>(data.rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t t = 0; t < data.rows.size(); ++t) {
    if (has_periods) labels.push_back(data.rows[t][0]);
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const auto c = static_cast<std::size_t>(cols[j]);
      const std::string& cell = data.rows[t][c];
      z(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) =
          is_missing(cell) ? std::nan("") : parse_number(cell, spec.path, data.lines[t], data.header[c]);
    }
  }
  return {labels, z};
}

std::string format_full(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot write '" + tmp.string() + "'");
    out << contents;
    if (!out.flush()) throw Error(ErrorKind::IoError, "failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot move '" + tmp.string() + "' into place: " + ec.message());
}

std::string matrix_csv(const Matrix& m, const std::vector<std::string>& row_names,
                       const std::vector<std::string>& col_names) {
  std::ostringstream out;
  out << "row";
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    out << "," << (static_cast<std::size_t>(j) < col_names.size() ? col_names[static_cast<std::size_t>(j)] : "c" + std::to_string(j + 1));
  }
  out << "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << (static_cast<std::size_t>(i) < row_names.size() ? row_names[static_cast<std::size_t>(i)] : "r" + std::to_string(i + 1));
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << "," << format_full(m(i, j));
    out << "\n";
  }
  return out.str();
}

Matrix read_matrix_csv(const fs::path& path) {
  const CsvData data = read_csv(path);
  const auto rows = static_cast<Eigen::Index>(data.rows.size());
  const auto cols = static_cast<Eigen::Index>(data.header.size()) - 1;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      const auto c = static_cast<std::size_t>(j + 1);
      m(i, j) = parse_number(data.rows[static_cast<std::size_t>(i)][c], path, data.lines[static_cast<std::size_t>(i)],
                             data.header[c]);
    }
  }
  return m;
}

std::vector<StudyReportRow> read_report_csv(const fs::path& path) {
  const CsvData data = read_csv(path);
  const std::vector<std::string> expected{"study", "n", "rho_star", "rho_chol", "rho_chol_min", "rho_chol_max",
                                          "rho_star_chol", "abs_corr_mean", "ratio", "d_C", "exhaustive"};
  if (data.header != expected) throw Error(ErrorKind::ParseError, path.string() + " is not a report table");
  std::vector<StudyReportRow> rows;
  for (std::size_t t = 0; t < data.rows.size(); ++t) {
    const auto& r = data.rows[t];
    const int line = data.lines[t];
    auto num = [&](std::size_t c) { return parse_number(r[c], path, line, data.header[c]); };
    StudyReportRow row;
    row.label = r[0];
    row.n = static_cast<int>(num(1));
    row.rho_star = num(2);
    row.rho_chol = num(3);
    row.rho_chol_min = num(4);
    row.rho_chol_max = num(5);
    row.rho_star_chol = num(6);
    row.abs_corr_mean = num(7);
    if (r[8] != kUndefinedSentinel) row.ratio = num(8);
    row.d_C = num(9);
    row.exhaustive = r[10] == "true";
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace oasis
