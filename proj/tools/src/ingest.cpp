#include "ingest.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace epicli {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, ',')) out.push_back(trim(cur));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

[[noreturn]] void fail(const std::string& src, long line, const std::string& msg) {
  throw DataError(src + ":" + std::to_string(line) + ": " + msg);
}

double parse_number(const std::string& s, const std::string& src, long line, const std::string& col) {
  double x = 0.0;
  const char* b = s.data();
  const char* e = b + s.size();
  if (s.empty()) fail(src, line, "empty value in column '" + col + "'");
  if (*b == '+') ++b;
  const auto r = std::from_chars(b, e, x);
  if (r.ec != std::errc() || r.ptr != e || !std::isfinite(x))
    fail(src, line, "not a number in column '" + col + "': '" + s + "'");
  return x;
}

}  // namespace

CsvTable parse_csv(const std::string& text, CsvSchema schema, const std::string& src) {
  std::istringstream in(text);
  std::string raw;
  long line = 0;
  std::vector<std::string> header;
  while (std::getline(in, raw)) {
    ++line;
    const std::string l = trim(raw);
    if (l.empty() || l[0] == '#') continue;
    header = split(l);
    break;
  }
  if (header.empty()) fail(src, line, "missing header row");
  if (header[0] != "t") fail(src, line, "first column must be 't'");

  CsvTable tab;
  std::vector<int> source_col;  // file column per table column, -1 if absent
  switch (schema) {
    case CsvSchema::Series: {
      const bool with_r = header.size() == 4 && header[3] == "R";
      if (!(header.size() == 3 || with_r) || header[1] != "S" || header[2] != "I")
        fail(src, line, "expected header t,S,I or t,S,I,R");
      tab.columns = {"S", "I", "R"};
      source_col = {1, 2, with_r ? 3 : -1};
      break;
    }
    case CsvSchema::Removals:
      if (header.size() != 1) fail(src, line, "expected a single column 't'");
      break;
    case CsvSchema::Generic:
      if (header.size() < 2) fail(src, line, "expected header t,X1[,...]");
      for (std::size_t c = 1; c < header.size(); ++c) {
        if (header[c].empty()) fail(src, line, "empty column name");
        tab.columns.push_back(header[c]);
        source_col.push_back(static_cast<int>(c));
      }
      break;
  }
  for (int c : source_col) tab.mask.push_back(c >= 0);

  std::vector<std::vector<double>> rows;
  while (std::getline(in, raw)) {
    ++line;
    const std::string l = trim(raw);
    if (l.empty() || l[0] == '#') continue;
    const auto f = split(l);
    if (f.size() != header.size())
      fail(src, line, "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
    const double t = parse_number(f[0], src, line, "t");
    if (!tab.t.empty()) {
      const bool ok = schema == CsvSchema::Removals ? t >= tab.t.back() : t > tab.t.back();
      if (!ok) fail(src, line, "time not increasing (" + f[0] + " after previous row)");
    }
    tab.t.push_back(t);
    std::vector<double> v;
    for (std::size_t c = 0; c < source_col.size(); ++c)
      v.push_back(source_col[c] < 0 ? std::numeric_limits<double>::quiet_NaN()
                                    : parse_number(f[source_col[c]], src, line, tab.columns[c]));
    rows.push_back(v);
  }
  if (tab.t.empty()) fail(src, line, "no data rows");
  tab.values.resize(static_cast<long>(rows.size()), static_cast<long>(tab.columns.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) tab.values(r, c) = rows[r][c];
  return tab;
}

CsvTable ingest_csv(const std::filesystem::path& path, CsvSchema schema) {
  std::ifstream in(path);
  if (!in) throw DataError(path.string() + ": cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), schema, path.string());
}

epi::SampledSeries to_series(const CsvTable& tab, int dim, double N, bool counts,
                             const std::string& src) {
  const long rows = static_cast<long>(tab.t.size());
  if (rows < 2) throw DataError(src + ": need at least two rows");
  if (tab.t[0] != 0.0) throw DataError(src + ": first time must be 0");
  if (static_cast<int>(tab.columns.size()) < dim)
    throw DataError(src + ": model needs " + std::to_string(dim) + " columns");
  const double dt = tab.t[1];
  for (long k = 1; k < rows; ++k)
    if (std::abs(tab.t[k] - k * dt) > 1e-9 * std::max(1.0, k * dt))
      throw DataError(src + ": times must lie on a regular grid (row " + std::to_string(k + 1) + ")");
  if (counts && !(N > 0.0)) throw DataError(src + ": counts need a population size N");
  const double scale = counts ? 1.0 / N : 1.0;
  epi::SampledSeries s;
  s.dt = dt;
  s.N = counts ? N : 0.0;
  s.x0 = tab.values.row(0).head(dim).transpose() * scale;
  s.values = tab.values.block(1, 0, rows - 1, dim) * scale;
  s.observed.assign(tab.mask.begin(), tab.mask.begin() + dim);
  return s;
}

}  // namespace epicli
