#pragma once

#include <epiinfer/simulate.hpp>

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace epicli {

// Malformed input data; the message carries path and line number.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class CsvSchema {
  Series,    // t,S,I[,R]
  Removals,  // t
  Generic,   // t,X1[,...,Xp]
};

struct CsvTable {
  std::vector<std::string> columns;  // value columns, t excluded
  std::vector<double> t;
  epi::Mat values;                   // rows x columns; NaN where masked
  std::vector<bool> mask;            // false for a column absent from the file
};

CsvTable ingest_csv(const std::filesystem::path& path, CsvSchema schema);
CsvTable parse_csv(const std::string& text, CsvSchema schema, const std::string& source = "<input>");

// Series on a regular grid starting at t = 0. Values are divided by N when
// counts is set; only the first dim columns are used.
epi::SampledSeries to_series(const CsvTable& t, int dim, double N, bool counts,
                             const std::string& source = "<input>");

}  // namespace epicli
