#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace epicli {

using json = nlohmann::json;

// A configuration problem attributed to one field (dotted path).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& msg)
      : std::runtime_error(field + ": " + msg), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Typed, validating access to one JSON object. Every key that is read is
// remembered so finish() can reject typos as unknown fields.
class ConfigView {
 public:
  ConfigView(const json& j, std::string path);

  bool has(const std::string& key) const;
  std::string field(const std::string& key) const;

  double number(const std::string& key);
  double number(const std::string& key, double fallback);
  double positive(const std::string& key);
  double positive(const std::string& key, double fallback);
  double fraction(const std::string& key, double fallback);  // in (0, 1]
  long integer(const std::string& key, long fallback, long min_value);
  std::uint64_t seed(const std::string& key, std::uint64_t fallback);
  bool flag(const std::string& key, bool fallback);
  std::string str(const std::string& key);
  std::string str(const std::string& key, const std::string& fallback);
  std::string choice(const std::string& key, const std::string& fallback,
                     const std::vector<std::string>& allowed);
  std::vector<double> numbers(const std::string& key);
  std::vector<double> numbers(const std::string& key, std::vector<double> fallback);
  std::vector<std::vector<double>> matrix(const std::string& key);
  ConfigView child(const std::string& key);
  // The raw JSON value (null when absent).
  json raw(const std::string& key);
  // Marks a key as known without reading it.
  void accept(const std::string& key);

  // Throws for keys that were never read.
  void finish() const;

 private:
  const json& at(const std::string& key);
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

// Parses a JSON config; comments are allowed.
json load_config(const std::filesystem::path& p);

}  // namespace epicli
