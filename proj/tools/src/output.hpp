#pragma once

#include "config.hpp"

#include <epiinfer/types.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace epicli {

inline constexpr int kSchemaVersion = 1;

// Shortest round-trip decimal form; "nan"/"inf" spelled out.
std::string num(double x);

json to_json(const epi::Vec& v);
json to_json(const epi::Mat& m);

// Row-oriented CSV with a leading "# schema_version=..., seed=..." line.
class CsvWriter {
 public:
  CsvWriter(std::vector<std::string> header, std::uint64_t seed, const std::string& command);
  void row(const std::vector<std::string>& fields);
  std::string str() const { return text_; }

 private:
  std::size_t width_;
  std::string text_;
};

// results.json, series.csv and ellipse.csv in dir; results carries
// schema_version, seed and command at the top.
struct Artifacts {
  json results = json::object();
  std::string series;
  std::string ellipse;
};

void write_artifacts(const std::filesystem::path& dir, const Artifacts& a);
std::string dump_results(const json& j);

}  // namespace epicli
