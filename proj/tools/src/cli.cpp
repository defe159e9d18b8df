#include "commands.hpp"
#include "ingest.hpp"

#include <epiinfer/bayes.hpp>
#include <epiinfer/types.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

namespace epicli {

namespace {

const json kSir = {{"model", "sir"}, {"theta", {0.5, 1.0 / 3.0}}, {"x0", {0.99, 0.01}}, {"T", 40.0}};

json with(json base, const json& extra) {
  base.update(extra);
  return base;
}

// Three-removal data set used by the MCMC and ABC preset.
std::vector<double> three_removals() {
  for (std::uint64_t rep = 0;; ++rep) {
    epi::Rng rng(2024, rep, 11);
    auto r = epi::removal_times(epi::simulate_sir_events(0.12, 1.0, 9, 1, 1e9, rng));
    if (r.size() == 3) {
      const double s = r[0];
      for (double& t : r) t -= s;
      return r;
    }
  }
}

}  // namespace

const std::vector<std::string>& preset_ids() {
  static const std::vector<std::string> v = {"sir-complete-mle", "sir-contrast-vs-mle", "sir-low-frequency",
                                             "sir-partial",      "em-two-state",        "mcmc-abc-three-removals",
                                             "sobol-sir",        "sobol-additive"};
  return v;
}

std::vector<std::pair<std::string, json>> preset(const std::string& id) {
  if (id == "sir-complete-mle")
    return {{"estimate", with(kSir, {{"estimator", "mle"}, {"N", 10000}, {"dt", 1.0}, {"replicates", 100}})}};
  if (id == "sir-contrast-vs-mle")
    return {{"estimate",
             with(kSir, {{"estimator", {"mle", "hf"}}, {"N", 1000}, {"dt", 0.05}, {"replicates", 100}})}};
  if (id == "sir-low-frequency")
    return {{"estimate", with(kSir, {{"estimator", "lf"}, {"N", 10000}, {"dt", 8.0}, {"replicates", 400}})}};
  if (id == "sir-partial")
    return {{"estimate", with(kSir, {{"estimator", "partial"},
                                     {"x0", {0.97, 0.01}},
                                     {"N", 10000},
                                     {"dt", 0.5},
                                     {"replicates", 100},
                                     {"partial", {{"observed", 1}, {"hidden", 0}, {"free", {0, 1}},
                                                  {"xi_lo", 0.0}, {"xi_hi", 0.99}}}})}};
  if (id == "em-two-state")
    return {{"em", {{"Q", {{-1.0, 1.0}, {2.0, -2.0}}},
                    {"Q0", {{-0.5, 0.5}, {0.5, -0.5}}},
                    {"dt", 0.1},
                    {"n", 5000},
                    {"x0", 0}}}};
  if (id == "mcmc-abc-three-removals") {
    const auto tau = three_removals();
    return {{"mcmc", {{"removals", tau}, {"S0", 9}, {"T", 50.0}, {"rho", 1e-3}, {"iterations", 10000},
                      {"burn_in", 5000}}},
            {"abc", {{"removals", tau}, {"S0", 9}, {"n_sims", 100000}, {"p_delta", 0.001}}}};
  }
  if (id == "sobol-sir") return {{"sobol", {{"response", "sir_final_size"}, {"n", 10000}, {"bootstrap", 50}}}};
  if (id == "sobol-additive")
    return {{"sobol", {{"response", "additive"}, {"coefficients", {1.0, 2.0, 0.0}}, {"n", 10000}}}};
  throw ConfigError("reproduce", "unknown preset '" + id + "' (see reproduce --list)");
}

namespace {

struct Failure {
  int code;
  std::string kind, field, message;
};

Failure classify(const std::exception_ptr& p) {
  try {
    std::rethrow_exception(p);
  } catch (const ConfigError& e) {
    return {2, "config", e.field(), e.what()};
  } catch (const DataError& e) {
    return {3, "data", "", e.what()};
  } catch (const epi::InvalidArgument& e) {
    return {4, "invalid_argument", "", e.what()};
  } catch (const epi::NumericalError& e) {
    return {4, "numerical", "", e.what()};
  } catch (const std::exception& e) {
    return {1, "internal", "", e.what()};
  } catch (...) {
    return {1, "internal", "", "unknown error"};
  }
}

int env_threads() {
  const char* v = std::getenv("EPIINFER_THREADS");
  if (!v || !*v) return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end || n < 1 || n > 1024) throw ConfigError("EPIINFER_THREADS", "expected an integer in [1, 1024]");
  return static_cast<int>(n);
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Inference for epidemic models: simulation, estimators, MCMC/ABC, EM and Sobol indices"};
  app.require_subcommand(1);
  std::string config_path, out_dir = "out";
  std::uint64_t seed = 0;
  long reps = 0;
  int threads = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Root seed (overrides the config)");
  auto* reps_opt = app.add_option("--replicates", reps, "Replicate count (overrides the config)")
                       ->check(CLI::PositiveNumber);
  auto* thr_opt = app.add_option("--threads", threads, "Worker threads (default EPIINFER_THREADS or 1)")
                      ->check(CLI::Range(1, 1024));
  app.add_option("--config", config_path, "JSON config (comments allowed)");
  app.add_option("--out", out_dir, "Output directory");

  std::map<std::string, CLI::App*> subs;
  for (const auto& c : command_names()) subs[c] = app.add_subcommand(c)->fallthrough();
  auto* rep = app.add_subcommand("reproduce", "Run a named preset")->fallthrough();
  std::string preset_id;
  bool list = false;
  rep->add_option("id", preset_id, "Preset id");
  rep->add_flag("--list", list, "List preset ids");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    const json err = {{"schema_version", kSchemaVersion},
                      {"error", {{"kind", "usage"}, {"field", "argv"}, {"message", e.what()}}}};
    std::cerr << err.dump() << "\n";
    return 2;
  }

  const std::filesystem::path out(out_dir);
  try {
    if (rep->parsed() && list) {
      for (const auto& id : preset_ids()) std::cout << id << "\n";
      return 0;
    }
    Overrides o;
    if (*seed_opt) o.seed = seed;
    if (*reps_opt) o.replicates = reps;
    o.threads = *thr_opt ? threads : env_threads();

    std::vector<std::pair<std::string, json>> jobs;
    if (rep->parsed()) {
      if (preset_id.empty()) throw ConfigError("reproduce", "missing preset id (see reproduce --list)");
      jobs = preset(preset_id);
    } else {
      if (config_path.empty()) throw ConfigError("--config", "a config file is required");
      const std::filesystem::path cp(config_path);
      o.base_dir = cp.has_parent_path() ? cp.parent_path() : ".";
      for (const auto& [name, sub] : subs)
        if (sub->parsed()) jobs.push_back({name, load_config(cp)});
    }
    for (const auto& [command, cfg] : jobs) {
      const Artifacts a = run_command(command, cfg, o);
      write_artifacts(jobs.size() > 1 ? out / command : out, a);
    }
    std::filesystem::remove(out / "error.json");
    return 0;
  } catch (...) {
    const Failure f = classify(std::current_exception());
    json err = {{"kind", f.kind}, {"message", f.message}};
    err["field"] = f.field.empty() ? json(nullptr) : json(f.field);
    const json rec = {{"schema_version", kSchemaVersion}, {"error", err}};
    std::cerr << rec.dump() << "\n";
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    std::ofstream(out / "error.json") << rec.dump(2) << "\n";
    return f.code;
  }
}

}  // namespace epicli
