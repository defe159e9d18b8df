#include "config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace epicli {

ConfigView::ConfigView(const json& j, std::string path) : j_(j), path_(std::move(path)) {
  if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
}

bool ConfigView::has(const std::string& key) const { return j_.contains(key) && !j_[key].is_null(); }

std::string ConfigView::field(const std::string& key) const {
  return path_.empty() ? key : path_ + "." + key;
}

const json& ConfigView::at(const std::string& key) {
  used_.insert(key);
  if (!has(key)) throw ConfigError(field(key), "missing required field");
  return j_[key];
}

double ConfigView::number(const std::string& key) {
  const json& v = at(key);
  if (!v.is_number()) throw ConfigError(field(key), "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(field(key), "must be finite");
  return x;
}

double ConfigView::number(const std::string& key, double fallback) {
  used_.insert(key);
  return has(key) ? number(key) : fallback;
}

double ConfigView::positive(const std::string& key) {
  const double x = number(key);
  if (!(x > 0.0)) throw ConfigError(field(key), "must be > 0");
  return x;
}

double ConfigView::positive(const std::string& key, double fallback) {
  used_.insert(key);
  return has(key) ? positive(key) : fallback;
}

double ConfigView::fraction(const std::string& key, double fallback) {
  const double x = number(key, fallback);
  if (!(x > 0.0 && x <= 1.0)) throw ConfigError(field(key), "must lie in (0, 1]");
  return x;
}

long ConfigView::integer(const std::string& key, long fallback, long min_value) {
  used_.insert(key);
  if (!has(key)) return fallback;
  const json& v = j_[key];
  if (!v.is_number_integer()) throw ConfigError(field(key), "expected an integer");
  const long x = v.get<long>();
  if (x < min_value) throw ConfigError(field(key), "must be >= " + std::to_string(min_value));
  return x;
}

std::uint64_t ConfigView::seed(const std::string& key, std::uint64_t fallback) {
  used_.insert(key);
  if (!has(key)) return fallback;
  const json& v = j_[key];
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
    throw ConfigError(field(key), "expected a nonnegative integer");
  return v.get<std::uint64_t>();
}

bool ConfigView::flag(const std::string& key, bool fallback) {
  used_.insert(key);
  if (!has(key)) return fallback;
  if (!j_[key].is_boolean()) throw ConfigError(field(key), "expected true or false");
  return j_[key].get<bool>();
}

std::string ConfigView::str(const std::string& key) {
  const json& v = at(key);
  if (!v.is_string()) throw ConfigError(field(key), "expected a string");
  return v.get<std::string>();
}

std::string ConfigView::str(const std::string& key, const std::string& fallback) {
  used_.insert(key);
  return has(key) ? str(key) : fallback;
}

std::string ConfigView::choice(const std::string& key, const std::string& fallback,
                               const std::vector<std::string>& allowed) {
  const std::string s = str(key, fallback);
  for (const auto& a : allowed)
    if (a == s) return s;
  std::string list;
  for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
  throw ConfigError(field(key), "unknown value '" + s + "' (expected one of " + list + ")");
}

std::vector<double> ConfigView::numbers(const std::string& key) {
  const json& v = at(key);
  if (!v.is_array()) throw ConfigError(field(key), "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw ConfigError(field(key) + "[" + std::to_string(i) + "]", "expected a number");
    out.push_back(v[i].get<double>());
    if (!std::isfinite(out.back()))
      throw ConfigError(field(key) + "[" + std::to_string(i) + "]", "must be finite");
  }
  return out;
}

std::vector<double> ConfigView::numbers(const std::string& key, std::vector<double> fallback) {
  used_.insert(key);
  return has(key) ? numbers(key) : fallback;
}

std::vector<std::vector<double>> ConfigView::matrix(const std::string& key) {
  const json& v = at(key);
  if (!v.is_array() || v.empty()) throw ConfigError(field(key), "expected an array of rows");
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string f = field(key) + "[" + std::to_string(i) + "]";
    if (!v[i].is_array() || v[i].size() != v.size()) throw ConfigError(f, "expected a square matrix row");
    std::vector<double> row;
    for (const auto& x : v[i]) {
      if (!x.is_number()) throw ConfigError(f, "expected numbers");
      row.push_back(x.get<double>());
    }
    out.push_back(row);
  }
  return out;
}

ConfigView ConfigView::child(const std::string& key) {
  used_.insert(key);
  static const json empty = json::object();
  if (!has(key)) return ConfigView(empty, field(key));
  return ConfigView(j_[key], field(key));
}

json ConfigView::raw(const std::string& key) {
  used_.insert(key);
  return has(key) ? j_[key] : json();
}

void ConfigView::accept(const std::string& key) { used_.insert(key); }

void ConfigView::finish() const {
  for (const auto& [k, v] : j_.items())
    if (!used_.count(k)) throw ConfigError(field(k), "unknown field");
}

json load_config(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("--config", "cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str(), nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("--config", std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace epicli
