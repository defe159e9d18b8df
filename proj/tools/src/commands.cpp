#include "commands.hpp"

#include "ingest.hpp"
#include "pool.hpp"

#include <epiinfer/bayes.hpp>
#include <epiinfer/complete_mle.hpp>
#include <epiinfer/contrast.hpp>
#include <epiinfer/em.hpp>
#include <epiinfer/models.hpp>
#include <epiinfer/partial.hpp>
#include <epiinfer/sobol.hpp>
#include <epiinfer/stats.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <map>

namespace epicli {

using namespace epi;

namespace {

struct Ctx {
  std::string command;
  std::uint64_t seed = 1;
  const Overrides* o = nullptr;
  json resolved;

  std::filesystem::path data_path(const std::string& p) const {
    const std::filesystem::path q(p);
    return q.is_absolute() ? q : o->base_dir / q;
  }
  json header() const {
    return {{"schema_version", kSchemaVersion}, {"tool", "epiinfer"}, {"command", command}, {"seed", seed}, {"config", resolved}};
  }
};

Vec to_vec(const std::vector<double>& v) {
  Vec out(static_cast<int>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<int>(i)] = v[i];
  return out;
}

json names_json(const std::vector<std::string>& v) { return json(v); }

long replicates(ConfigView& c, const Ctx& ctx, long fallback) {
  const long cfg = c.integer("replicates", fallback, 1);
  return ctx.o->replicates ? *ctx.o->replicates : cfg;
}

ModelPtr read_model(ConfigView& c) {
  const std::string name = c.str("model");
  Config k;
  const json raw = c.raw("constants");
  if (!raw.is_null()) {
    if (!raw.is_object()) throw ConfigError("constants", "expected an object");
    for (const auto& [key, v] : raw.items()) {
      if (!v.is_number()) throw ConfigError("constants." + key, "expected a number");
      k[key] = v.get<double>();
    }
  }
  try {
    return build_model(name, k);
  } catch (const InvalidArgument& e) {
    throw ConfigError("model", e.what());
  }
}

Vec read_theta(ConfigView& c, const Model& m, const std::string& key) {
  const Vec th = to_vec(c.numbers(key));
  if (th.size() != m.n_params()) {
    std::string names;
    for (const auto& n : m.layout().names) names += (names.empty() ? "" : ", ") + n;
    throw ConfigError(c.field(key), "expected " + std::to_string(m.n_params()) + " values (" + names + ")");
  }
  try {
    m.check_theta(th);
  } catch (const InvalidArgument& e) {
    throw ConfigError(c.field(key), e.what());
  }
  return th;
}

Vec read_state(ConfigView& c, const Model& m, const std::string& key) {
  const Vec x = to_vec(c.numbers(key));
  if (x.size() != m.dim())
    throw ConfigError(c.field(key), "expected " + std::to_string(m.dim()) + " values");
  return x;
}

std::vector<std::string> state_names(const Model& m) {
  if (m.dim() == 2 && m.name().rfind("sir", 0) == 0) return {"S", "I"};
  std::vector<std::string> n;
  for (int i = 0; i < m.dim(); ++i) n.push_back("x" + std::to_string(i + 1));
  return n;
}

Vec counts_from(const Vec& z, double N) { return (z * N).array().round().matrix(); }

void series_rows(CsvWriter& w, long rep, const SampledSeries& s) {
  for (int k = 0; k <= s.n(); ++k) {
    std::vector<std::string> f = {std::to_string(rep), num(s.time(k))};
    const Vec x = s.at(k);
    for (int i = 0; i < x.size(); ++i) f.push_back(num(x[i]));
    w.row(f);
  }
}

std::vector<std::string> with_prefix(std::vector<std::string> head, const std::vector<std::string>& rest) {
  head.insert(head.end(), rest.begin(), rest.end());
  return head;
}

// ---------------------------------------------------------------- simulate

Artifacts cmd_simulate(ConfigView& c, Ctx& ctx) {
  const ModelPtr m = read_model(c);
  const Vec theta = read_theta(c, *m, "theta");
  const std::string def = m->kind() == ModelKind::Jump ? "gillespie"
                          : m->kind() == ModelKind::Chain ? "chain"
                                                          : "euler";
  const std::string method = c.choice("method", def, {"gillespie", "tau_leap", "euler", "chain"});
  if ((method == "gillespie" || method == "tau_leap") && m->kind() != ModelKind::Jump)
    throw ConfigError("method", method + " needs a jump model");
  if (method == "chain" && m->kind() != ModelKind::Chain) throw ConfigError("method", "chain needs a chain model");
  if (method == "euler" && m->kind() == ModelKind::Chain) throw ConfigError("method", "euler needs a continuous-time model");
  const long reps = replicates(c, ctx, 1);
  const Vec x0 = read_state(c, *m, "x0");

  double N = 0.0, T = 0.0, dt = 1.0, tau = 0.0, eps = 0.0, step = 0.0;
  long steps = 0;
  int record_every = 1;
  if (method == "chain") {
    steps = c.integer("steps", 10, 1);
  } else {
    T = c.positive("T");
    dt = c.positive("dt", T / 100);
    if (method == "euler") {
      N = c.positive("N", 0.0);
      eps = c.positive("eps", N > 0 ? 1.0 / std::sqrt(N) : 0.0);
      if (!(eps > 0.0)) throw ConfigError("eps", "give eps or N");
      step = c.positive("step", std::min(dt, 1e-3));
      record_every = static_cast<int>(std::max(1L, std::lround(dt / step)));
      dt = record_every * step;
    } else {
      N = c.positive("N");
      if (method == "tau_leap") tau = c.positive("tau", dt / 10);
    }
  }
  ConfigView fc = c.child("filter");
  const bool filter_on = fc.flag("enabled", m->kind() == ModelKind::Jump) && m->kind() == ModelKind::Jump;
  const double fk = fc.number("k", 1.0);
  const bool fse = fc.flag("standard_error", false);
  fc.finish();
  c.finish();

  const auto names = state_names(*m);
  std::vector<json> rows(reps);
  std::vector<std::string> chunks(reps);
  std::vector<double> sizes(reps, 0.0);
  parallel_for(reps, ctx.o->threads, [&](long r) {
    const SeedSpec seed{ctx.seed, static_cast<std::uint64_t>(r)};
    CsvWriter w(with_prefix({"replicate", "t"}, names), ctx.seed, ctx.command);
    json row = {{"replicate", r}};
    if (method == "gillespie" || method == "tau_leap") {
      const Vec xc = counts_from(x0, N);
      const JumpPath p = method == "gillespie" ? gillespie(m, theta, N, xc, T, seed)
                                               : tau_leap(m, theta, N, xc, T, tau, seed);
      series_rows(w, r, sample_path(p, dt));
      row["events"] = p.n_events();
      row["final_state"] = to_json(p.final_state());
      sizes[r] = final_size(p);
      row["final_size"] = sizes[r];
    } else if (method == "euler") {
      const SampledSeries s = euler_maruyama(*m, theta, eps, x0, T, step, seed, record_every);
      series_rows(w, r, s);
      row["final_state"] = to_json(s.at(s.n()));
    } else {
      const auto xs = simulate_chain(*m, theta, x0, static_cast<int>(steps), seed);
      for (std::size_t k = 0; k < xs.size(); ++k) {
        std::vector<std::string> f = {std::to_string(r), std::to_string(k)};
        for (int i = 0; i < xs[k].size(); ++i) f.push_back(num(xs[k][i]));
        w.row(f);
      }
      row["final_state"] = to_json(xs.back());
    }
    const std::string body = w.str();
    chunks[r] = body.substr(body.find('\n', body.find('\n') + 1) + 1);  // drop comment and header
    rows[r] = row;
  });

  Artifacts a;
  a.results = ctx.header();
  a.results["model"] = m->name();
  a.results["method"] = method;
  a.results["state_names"] = names_json(names);
  a.results["replicates"] = rows;
  if (method == "euler") a.results["recorded_dt"] = dt;
  if (filter_on && reps >= 2) {
    const FilterResult f = non_extinct_filter(sizes, fk, fse);
    a.results["filter"] = {{"threshold", f.threshold}, {"kept", f.kept}, {"dropped", f.dropped}};
  }
  CsvWriter w(with_prefix({"replicate", "t"}, names), ctx.seed, ctx.command);
  a.series = w.str();
  for (const auto& ch : chunks) a.series += ch;
  a.ellipse = CsvWriter({"estimator", "replicate", "point", "x", "y"}, ctx.seed, ctx.command).str();
  return a;
}

// ---------------------------------------------------------------- estimate

struct EstimateSetup {
  ModelPtr m;
  std::vector<std::string> estimators;
  double eps = 0.0, level = 0.95;
  Vec init;                 // theta-sized start (hf, lf, mle)
  PartialConfig pc;
  Vec eta_init;
  bool partial = false;
  ContrastOptions co;
};

EstimateResult run_one(const EstimateSetup& s, const std::string& est, const JumpPath* path,
                       const SampledSeries& series) {
  if (est == "mle") return sir_mle_complete(*path);
  if (est == "hf") return estimate_hf(*s.m, series, s.eps, s.init, s.co);
  if (est == "lf") return estimate_lf(*s.m, series, s.eps, s.init, s.co);
  return estimate_partial(*s.m, series, s.eps, s.eta_init, s.pc);
}

bool finite(const Mat& M) { return M.allFinite(); }

json estimate_json(const EstimateResult& e, const Vec* truth, double level) {
  json j = {{"names", e.names},     {"theta", to_json(e.theta)}, {"sd", to_json(e.sd())},
            {"cov", to_json(e.cov)}, {"rate_tag", e.rate_tag},    {"converged", e.converged},
            {"flags", e.flags}};
  json diag = json::object();
  for (const auto& [k, v] : e.diagnostics) diag[k] = v;
  j["diagnostics"] = diag;
  if (truth) {
    if (e.cov.size() && finite(e.cov) && finite(e.theta))
      j["covered"] = confidence_ellipsoid(e, level).contains(*truth);
    else
      j["covered"] = nullptr;
  }
  return j;
}

void ellipse_rows(CsvWriter& w, const std::string& est, long rep, const EstimateResult& e, double level) {
  if (e.theta.size() < 2 || !finite(e.cov) || !finite(e.theta)) return;
  const Ellipsoid el = confidence_ellipsoid(e.theta.head(2), e.cov.topLeftCorner(2, 2), level);
  const Mat b = el.boundary(100);
  for (int k = 0; k < b.rows(); ++k)
    w.row({est, std::to_string(rep), std::to_string(k), num(b(k, 0)), num(b(k, 1))});
}

json column_summary(const std::vector<Vec>& xs) {
  json out = json::object();
  if (xs.empty()) return out;
  const int p = static_cast<int>(xs[0].size());
  json med = json::array(), mn = json::array(), sd = json::array();
  for (int j = 0; j < p; ++j) {
    std::vector<double> col;
    for (const auto& x : xs) col.push_back(x[j]);
    med.push_back(median(col));
    mn.push_back(mean(col));
    sd.push_back(col.size() > 1 ? std::sqrt(variance(col)) : 0.0);
  }
  out["median"] = med;
  out["mean"] = mn;
  out["sd"] = sd;
  return out;
}

SampledSeries partial_series(const CsvTable& tab, const Model& m, int observed, double N, bool counts,
                             const std::string& src) {
  if (tab.columns.size() == 1) {
    CsvTable t = tab;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    t.values = Mat::Constant(tab.values.rows(), m.dim(), nan);
    t.values.col(observed) = tab.values.col(0);
    t.columns.assign(m.dim(), "");
    t.mask.assign(m.dim(), false);
    t.mask[observed] = true;
    return to_series(t, m.dim(), N, counts, src);
  }
  return to_series(tab, m.dim(), N, counts, src);
}

Artifacts cmd_estimate(ConfigView& c, Ctx& ctx) {
  EstimateSetup s;
  s.m = read_model(c);
  const Model& m = *s.m;
  const bool sim = c.has("theta"), fit = c.has("data");
  if (sim == fit) throw ConfigError(sim ? "data" : "theta", "give exactly one of theta (simulation study) or data (fit)");

  const json est_raw = c.raw("estimator");
  if (est_raw.is_string()) s.estimators = {est_raw.get<std::string>()};
  else if (est_raw.is_array() && !est_raw.empty())
    for (const auto& e : est_raw) {
      if (!e.is_string()) throw ConfigError("estimator", "expected names");
      s.estimators.push_back(e.get<std::string>());
    }
  else
    throw ConfigError("estimator", "missing required field (mle, hf, lf or partial)");
  for (const auto& e : s.estimators) {
    if (e != "mle" && e != "hf" && e != "lf" && e != "partial")
      throw ConfigError("estimator", "unknown value '" + e + "' (expected one of mle, hf, lf, partial)");
    if (e == "mle" && (m.name() != "sir" || fit))
      throw ConfigError("estimator", "mle needs the sir model in a simulation study");
    if (e == "partial") s.partial = true;
  }

  Vec theta, x0;
  double N = 0.0, T = 0.0, dt = 1.0;
  if (sim) {
    theta = read_theta(c, m, "theta");
    x0 = read_state(c, m, "x0");
    T = c.positive("T");
    dt = c.positive("dt");
  }
  N = c.positive("N", 0.0);
  s.eps = c.positive("eps", N > 0 ? 1.0 / std::sqrt(N) : 0.0);
  if (!(s.eps > 0.0)) throw ConfigError("eps", "give eps or N");
  s.level = c.fraction("level", 0.95);
  if (s.level >= 1.0) throw ConfigError("level", "must be < 1");
  s.init = c.has("init") ? read_theta(c, m, "init") : theta;
  if (fit && !c.has("init")) throw ConfigError("init", "fit mode needs a starting value");
  const long reps = sim ? replicates(c, ctx, 1) : (c.accept("replicates"), 1L);
  const long n_ell = c.integer("ellipse_replicates", 20, 0);
  const bool counts = c.flag("counts", m.kind() == ModelKind::Jump);
  const std::string data = fit ? c.str("data") : "";

  ConfigView pcv = c.child("partial");
  if (s.partial) {
    s.pc.observed = static_cast<int>(pcv.integer("observed", 1, 0));
    s.pc.hidden = static_cast<int>(pcv.integer("hidden", 0, 0));
    if (s.pc.observed >= m.dim() || s.pc.hidden >= m.dim() || s.pc.observed == s.pc.hidden)
      throw ConfigError("partial.observed", "observed and hidden must be distinct state indices");
    for (double f : pcv.numbers("free", {})) s.pc.free.push_back(static_cast<int>(f));
    s.pc.xi_lo = pcv.number("xi_lo", -std::numeric_limits<double>::infinity());
    s.pc.xi_hi = pcv.number("xi_hi", std::numeric_limits<double>::infinity());
    s.pc.weighted = pcv.flag("weighted", false);
    s.pc.theta = s.init;
    const double xi = pcv.number("xi_init", sim ? x0[s.pc.hidden] : std::numeric_limits<double>::quiet_NaN());
    if (!std::isfinite(xi)) throw ConfigError("partial.xi_init", "fit mode needs a starting hidden value");
    if (sim) s.pc.x0 = x0;
    try {
      s.eta_init = theta_to_eta(m, s.pc, s.init, xi);
    } catch (const InvalidArgument& e) {
      throw ConfigError("partial.free", e.what());
    }
  }
  pcv.finish();

  ConfigView fc = c.child("filter");
  const bool filter_on = fc.flag("enabled", true) && sim && m.kind() == ModelKind::Jump && reps >= 2;
  const double fk = fc.number("k", 1.0);
  const bool fse = fc.flag("standard_error", false);
  fc.finish();
  c.finish();

  if (sim && m.kind() == ModelKind::Chain) throw ConfigError("model", "estimate supports jump and diffusion models");

  // Per replicate, per estimator.
  struct Slot {
    double final_size = 0.0;
    std::vector<std::optional<EstimateResult>> est;
    std::vector<std::string> err;
  };
  const std::size_t E = s.estimators.size();
  std::vector<Slot> slots(reps);
  Vec truth_eta;
  if (s.partial && sim) truth_eta = theta_to_eta(m, s.pc, theta, x0[s.pc.hidden]);

  auto estimate_all = [&](Slot& slot, const JumpPath* path, const SampledSeries& series, PartialConfig pc) {
    EstimateSetup local = s;
    local.pc = std::move(pc);
    slot.est.resize(E);
    slot.err.resize(E);
    for (std::size_t k = 0; k < E; ++k) {
      try {
        slot.est[k] = run_one(local, s.estimators[k], path, series);
      } catch (const std::exception& e) {
        slot.err[k] = e.what();
      }
    }
  };

  if (sim) {
    parallel_for(reps, ctx.o->threads, [&](long r) {
      const SeedSpec seed{ctx.seed, static_cast<std::uint64_t>(r)};
      if (m.kind() == ModelKind::Jump) {
        if (!(N > 0.0)) throw ConfigError("N", "jump models need N");
        const JumpPath p = gillespie(s.m, theta, N, counts_from(x0, N), T, seed);
        slots[r].final_size = final_size(p);
        estimate_all(slots[r], &p, sample_path(p, dt), s.pc);
      } else {
        const double step = std::min(dt, 1e-3);
        const int every = static_cast<int>(std::max(1L, std::lround(dt / step)));
        estimate_all(slots[r], nullptr, euler_maruyama(m, theta, s.eps, x0, T, dt / every, seed, every), s.pc);
      }
    });
  } else {
    const auto path = ctx.data_path(data);
    std::ifstream probe(path);
    std::string head;
    while (std::getline(probe, head) && (head.empty() || head[0] == '#')) {
    }
    const CsvSchema schema = head.rfind("t,S,I", 0) == 0 ? CsvSchema::Series : CsvSchema::Generic;
    const CsvTable tab = ingest_csv(path, schema);
    const SampledSeries series = s.partial ? partial_series(tab, m, s.pc.observed, N, counts, path.string())
                                           : to_series(tab, m.dim(), N, counts, path.string());
    PartialConfig pc = s.pc;
    if (s.partial) pc.x0 = series.x0;
    estimate_all(slots[0], nullptr, series, pc);
  }

  std::vector<bool> kept(reps, true);
  json filter = nullptr;
  if (filter_on) {
    std::vector<double> sizes;
    for (const auto& sl : slots) sizes.push_back(sl.final_size);
    const FilterResult f = non_extinct_filter(sizes, fk, fse);
    kept.assign(reps, false);
    for (auto i : f.kept) kept[i] = true;
    filter = {{"threshold", f.threshold}, {"kept", f.kept.size()}, {"dropped", f.dropped.size()}};
  }

  Artifacts a;
  a.results = ctx.header();
  a.results["model"] = m.name();
  a.results["mode"] = sim ? "simulation" : "fit";
  a.results["estimators"] = s.estimators;
  if (!filter.is_null()) a.results["filter"] = filter;
  CsvWriter ew({"estimator", "replicate", "point", "x", "y"}, ctx.seed, ctx.command);
  CsvWriter sw({"estimator", "replicate", "kept", "converged", "index", "name", "estimate", "sd"}, ctx.seed,
               ctx.command);
  json table = json::array();
  json summary = json::object();
  for (std::size_t k = 0; k < E; ++k) {
    const std::string& est = s.estimators[k];
    const Vec* truth = sim ? (est == "partial" ? &truth_eta : &theta) : nullptr;
    std::vector<Vec> ok;
    long covered = 0, cover_n = 0, failed = 0, drawn = 0;
    for (long r = 0; r < reps; ++r) {
      const Slot& sl = slots[r];
      json row = {{"estimator", est}, {"replicate", r}, {"kept", static_cast<bool>(kept[r])}};
      if (m.kind() == ModelKind::Jump && sim) row["final_size"] = sl.final_size;
      if (!sl.est[k]) {
        row["error"] = sl.err[k];
        if (kept[r]) ++failed;
        table.push_back(row);
        continue;
      }
      const EstimateResult& e = *sl.est[k];
      row["estimate"] = estimate_json(e, truth, s.level);
      table.push_back(row);
      for (int i = 0; i < e.theta.size(); ++i)
        sw.row({est, std::to_string(r), kept[r] ? "1" : "0", e.converged ? "1" : "0", std::to_string(i),
                i < static_cast<int>(e.names.size()) ? e.names[i] : "", num(e.theta[i]), num(e.sd()[i])});
      if (!kept[r]) continue;
      ok.push_back(e.theta);
      if (row["estimate"].contains("covered") && row["estimate"]["covered"].is_boolean()) {
        ++cover_n;
        covered += row["estimate"]["covered"].get<bool>();
      }
      if (drawn < n_ell) {
        ellipse_rows(ew, est, r, e, s.level);
        ++drawn;
      }
    }
    json sm = column_summary(ok);
    sm["n"] = ok.size();
    sm["failed"] = failed;
    if (sim) {
      sm["coverage"] = cover_n ? json(double(covered) / cover_n) : json(nullptr);
      sm["truth"] = to_json(*truth);
    }
    if (m.name() == "sir" && !ok.empty()) {
      std::vector<Vec> rd;
      for (const auto& t : ok) rd.push_back((Vec(2) << t[0] / t[1], 1.0 / t[1]).finished());
      sm["r0_d"] = column_summary(rd);
    }
    summary[est] = sm;
  }
  a.results["summary"] = summary;
  a.results["replicates"] = table;
  a.series = sw.str();
  a.ellipse = ew.str();
  return a;
}

// ---------------------------------------------------------------- removal data

std::vector<double> read_removals(ConfigView& c, const Ctx& ctx) {
  const bool inl = c.has("removals"), file = c.has("data");
  if (inl && file) throw ConfigError("data", "give removals or data, not both");
  if (inl) {
    auto r = c.numbers("removals");
    c.accept("data");
    if (r.empty()) throw ConfigError("removals", "need at least one removal time");
    return r;
  }
  c.accept("removals");
  if (!file) throw ConfigError("removals", "missing required field (or give data)");
  return ingest_csv(ctx.data_path(c.str("data")), CsvSchema::Removals).t;
}

GammaPrior read_prior(ConfigView& p, const std::string& key, GammaPrior def) {
  const auto v = p.numbers(key, {def.shape, def.rate});
  if (v.size() != 2 || !(v[0] > 0) || !(v[1] > 0))
    throw ConfigError(p.field(key), "expected [shape, rate] with both > 0");
  return {v[0], v[1]};
}

json summary_json(const PosteriorSummary& p, const std::vector<std::string>& names) {
  json j = json::object();
  for (std::size_t i = 0; i < names.size(); ++i) {
    const int k = static_cast<int>(i);
    j[names[i]] = {{"mean", p.mean[k]},   {"median", p.median[k]}, {"mode", p.mode[k]},
                   {"lo95", p.lo95[k]},   {"hi95", p.hi95[k]}};
  }
  return j;
}

// ---------------------------------------------------------------- mcmc

Artifacts cmd_mcmc(ConfigView& c, Ctx& ctx) {
  const std::vector<double> tau = read_removals(c, ctx);
  const long S0 = c.integer("S0", 0, 0);
  if (!c.has("S0")) throw ConfigError("S0", "missing required field");
  McmcOptions o;
  ConfigView pr = c.child("priors");
  o.lambda_prior = read_prior(pr, "lambda", o.lambda_prior);
  o.gamma_prior = read_prior(pr, "gamma", o.gamma_prior);
  pr.finish();
  o.rho = c.positive("rho", o.rho);
  const auto mp = c.numbers("move_probs", {o.move_probs[0], o.move_probs[1], o.move_probs[2]});
  if (mp.size() != 3) throw ConfigError("move_probs", "expected three values (move, remove, add)");
  for (int k = 0; k < 3; ++k) {
    if (!(mp[k] >= 0)) throw ConfigError("move_probs", "must be nonnegative");
    o.move_probs[k] = mp[k];
  }
  o.iterations = c.integer("iterations", o.iterations, 1);
  o.burn_in = c.integer("burn_in", o.burn_in, 0);
  if (o.burn_in >= o.iterations) throw ConfigError("burn_in", "must be < iterations");
  if (c.has("T")) o.T = c.number("T");
  c.accept("T");
  o.prior_only = c.flag("prior_only", false);
  const long chains = c.integer("chains", 1, 1);
  const long thin = c.integer("thin", 1, 1);
  c.finish();

  std::vector<McmcChains> out(chains);
  parallel_for(chains, ctx.o->threads, [&](long k) {
    out[k] = mcmc_oneill_roberts(tau, static_cast<int>(S0), o, {ctx.seed, static_cast<std::uint64_t>(k)});
  });

  Artifacts a;
  a.results = ctx.header();
  a.results["removals"] = tau;
  WeightedSample pooled;
  json per = json::array();
  CsvWriter sw({"chain", "iteration", "lambda", "gamma", "sigma1", "m"}, ctx.seed, ctx.command);
  for (long k = 0; k < chains; ++k) {
    const McmcChains& ch = out[k];
    std::vector<double> ms(ch.m.begin(), ch.m.end());
    per.push_back({{"chain", k},
                   {"lambda_mean", mean(ch.lambda)},
                   {"gamma_mean", mean(ch.gamma)},
                   {"m_mean", mean(ms)},
                   {"acceptance", {{"move", ch.acceptance[0]}, {"remove", ch.acceptance[1]}, {"add", ch.acceptance[2]}}},
                   {"T", ch.T}});
    for (std::size_t i = 0; i < ch.lambda.size(); ++i) {
      pooled.draws.push_back((Vec(2) << ch.lambda[i], ch.gamma[i]).finished());
      pooled.weights.push_back(1.0);
      if (i % thin == 0)
        sw.row({std::to_string(k), std::to_string(o.burn_in + static_cast<long>(i)), num(ch.lambda[i]),
                num(ch.gamma[i]), num(ch.sigma1[i]), std::to_string(ch.m[i])});
    }
  }
  a.results["chains"] = per;
  a.results["posterior"] = summary_json(posterior_summaries(pooled), {"lambda", "gamma"});
  a.series = sw.str();
  a.ellipse = CsvWriter({"estimator", "replicate", "point", "x", "y"}, ctx.seed, ctx.command).str();
  return a;
}

// ---------------------------------------------------------------- abc

std::vector<double> shifted(std::vector<double> r) {
  if (!r.empty()) {
    const double s = r.front();
    for (double& x : r) x -= s;
  }
  return r;
}

Artifacts cmd_abc(ConfigView& c, Ctx& ctx) {
  const long S0 = c.integer("S0", 0, 0);
  if (!c.has("S0")) throw ConfigError("S0", "missing required field");
  const long I0 = c.integer("I0", 1, 1);
  ConfigView pr = c.child("priors");
  const GammaPrior pl = read_prior(pr, "lambda", {0.1, 1.0}), pg = read_prior(pr, "gamma", {0.1, 0.1});
  pr.finish();
  const std::string summary = c.choice("summary", "l1", {"l1", "vector"});
  const long n_sims = c.integer("n_sims", 100000, 1);
  const double p_delta = c.fraction("p_delta", 0.001);
  const AbcKernel kernel =
      c.choice("kernel", "epanechnikov", {"epanechnikov", "uniform"}) == "uniform" ? AbcKernel::Uniform
                                                                                  : AbcKernel::Epanechnikov;
  const std::string adjust = c.choice("adjust", "none", {"none", "locl", "nch"});
  ConfigView sc = c.child("summary_config");
  SummaryConfig scfg;
  scfg.period = sc.positive("period", scfg.period);
  scfg.n_periods = static_cast<int>(sc.integer("n_periods", scfg.n_periods, 1));
  scfg.J0 = static_cast<int>(sc.integer("J0", scfg.J0, 0));
  if (scfg.J0 > scfg.n_periods) throw ConfigError("summary_config.J0", "must be <= n_periods");
  sc.finish();
  ConfigView nc = c.child("nch");
  NchConfig nch;
  nch.networks = static_cast<int>(nc.integer("networks", nch.networks, 1));
  nch.hidden = static_cast<int>(nc.integer("hidden", nch.hidden, 1));
  nch.weight_decay = nc.number("weight_decay", nch.weight_decay);
  if (nch.weight_decay < 0) throw ConfigError("nch.weight_decay", "must be >= 0");
  nch.max_iter = static_cast<int>(nc.integer("max_iter", nch.max_iter, 1));
  nch.seed = ctx.seed;
  nc.finish();

  // Observed data: removal times, or a simulated epidemic when theta is given.
  SirEvents observed;
  std::vector<double> tau;
  const bool sim = c.has("theta");
  if (sim) {
    const auto th = c.numbers("theta");
    if (th.size() != 2 || !(th[0] > 0) || !(th[1] > 0))
      throw ConfigError("theta", "expected [lambda, gamma] on the count scale, both > 0");
    c.accept("removals");
    c.accept("data");
    Rng rng({ctx.seed, 0}, 12);
    observed = simulate_sir_events(th[0], th[1], static_cast<int>(S0), static_cast<int>(I0), 1e12, rng);
    tau = removal_times(observed);
    if (tau.empty()) throw ConfigError("theta", "simulated epidemic has no removals; change seed or theta");
  } else {
    if (summary == "vector")
      throw ConfigError("summary", "vector summaries need infection times; use theta to simulate observations");
    tau = read_removals(c, ctx);
  }
  const std::vector<double> tau0 = shifted(tau);
  const double T = c.positive("T", tau0.back() > 0 ? tau0.back() : 1.0);
  if (adjust != "none" && summary != "vector") throw ConfigError("adjust", "regression adjustment needs summary=vector");
  c.finish();

  const PriorSampler prior = [&](Rng& r) { return (Vec(2) << r.gamma(pl.shape, pl.rate), r.gamma(pg.shape, pg.rate)).finished(); };
  WeightedSample ws;
  if (summary == "l1") {
    const DistanceSimulator dist = [&](const Vec& th, Rng& r) {
      const auto rt = shifted(removal_times(simulate_sir_events(th[0], th[1], static_cast<int>(S0),
                                                                static_cast<int>(I0), 1e12, r)));
      return summary_path_l1(tau0, rt, T);
    };
    ws = abc_rejection_distance(prior, dist, n_sims, p_delta, kernel, {ctx.seed, 1});
  } else {
    const double horizon = scfg.period * scfg.n_periods;
    const SummarySimulator simf = [&](const Vec& th, Rng& r) {
      return summary_vector(
          simulate_sir_events(th[0], th[1], static_cast<int>(S0), static_cast<int>(I0), horizon, r), scfg);
    };
    ws = abc_rejection(summary_vector(observed, scfg), prior, simf, n_sims, p_delta, kernel, {ctx.seed, 1});
    const std::vector<Support> sup(2, Support{0.0});
    if (adjust == "locl") ws = adjust_locl(ws, sup);
    if (adjust == "nch") ws = adjust_nch(ws, sup, nch);
  }

  Artifacts a;
  a.results = ctx.header();
  a.results["removals"] = tau;
  a.results["summary"] = summary;
  a.results["adjust"] = adjust;
  a.results["kernel"] = ws.kernel;
  a.results["delta"] = ws.delta;
  a.results["simulations"] = ws.simulations;
  a.results["accepted"] = ws.draws.size();
  a.results["posterior"] = summary_json(posterior_summaries(ws), {"lambda", "gamma"});
  CsvWriter sw({"draw", "lambda", "gamma", "weight"}, ctx.seed, ctx.command);
  for (std::size_t i = 0; i < ws.draws.size(); ++i)
    sw.row({std::to_string(i), num(ws.draws[i][0]), num(ws.draws[i][1]), num(ws.weights[i])});
  a.series = sw.str();
  a.ellipse = CsvWriter({"estimator", "replicate", "point", "x", "y"}, ctx.seed, ctx.command).str();
  return a;
}

// ---------------------------------------------------------------- em

Mat read_qmatrix(ConfigView& c, const std::string& key) {
  const auto rows = c.matrix(key);
  const int S = static_cast<int>(rows.size());
  Mat Q(S, S);
  for (int i = 0; i < S; ++i)
    for (int j = 0; j < S; ++j) Q(i, j) = rows[i][j];
  try {
    check_qmatrix(Q, 1e-9);
  } catch (const InvalidArgument& e) {
    throw ConfigError(c.field(key), e.what());
  }
  return Q;
}

Artifacts cmd_em(ConfigView& c, Ctx& ctx) {
  const Mat Q0 = read_qmatrix(c, "Q0");
  const int S = static_cast<int>(Q0.rows());
  const bool sim = c.has("Q"), fit = c.has("data");
  if (sim == fit) throw ConfigError(sim ? "data" : "Q", "give exactly one of Q (simulation) or data (fit)");
  DiscreteChainObs obs;
  if (sim) {
    const Mat Q = read_qmatrix(c, "Q");
    if (Q.rows() != S) throw ConfigError("Q", "size differs from Q0");
    const double dt = c.positive("dt");
    const long n = c.integer("n", 1000, 1);
    if (!c.has("n")) throw ConfigError("n", "missing required field");
    const long x0 = c.integer("x0", 0, 0);
    if (x0 >= S) throw ConfigError("x0", "state out of range");
    c.accept("data");
    obs = sample_ctmc(simulate_ctmc(Q, static_cast<int>(x0), n * dt, {ctx.seed, 0}), dt, static_cast<int>(n));
  } else {
    const auto path = ctx.data_path(c.str("data"));
    const CsvTable tab = ingest_csv(path, CsvSchema::Generic);
    if (tab.columns.size() != 1) throw DataError(path.string() + ": expected columns t,state");
    obs.n_states = S;
    for (long i = 0; i < tab.values.rows(); ++i) {
      const double v = tab.values(i, 0);
      if (v != std::round(v) || v < 0 || v >= S)
        throw DataError(path.string() + ": row " + std::to_string(i + 1) + ": state must be an integer in [0, " +
                        std::to_string(S) + ")");
      obs.states.push_back(static_cast<int>(v));
      if (i > 0) obs.dt.push_back(tab.t[i] - tab.t[i - 1]);
    }
    if (obs.states.size() < 2) throw DataError(path.string() + ": need at least two observations");
    c.accept("Q");
    c.accept("dt");
    c.accept("n");
    c.accept("x0");
  }
  EmOptions eo;
  eo.max_iter = static_cast<int>(c.integer("max_iter", eo.max_iter, 1));
  eo.tol = c.positive("tol", eo.tol);
  c.finish();

  const EmResult r = em_fit(obs, Q0, eo);
  Artifacts a;
  a.results = ctx.header();
  a.results["observations"] = obs.n() + 1;
  a.results["Q"] = to_json(r.Q);
  a.results["iterations"] = r.iterations;
  a.results["converged"] = r.converged;
  a.results["max_violation"] = r.max_violation;
  a.results["loglik"] = r.loglik.empty() ? json(nullptr) : json(r.loglik.back());
  json idx = json::array();
  for (const auto& [k, l] : r.rate_index) idx.push_back({k, l});
  a.results["rate_index"] = idx;
  a.results["cov"] = to_json(r.cov);
  a.results["warnings"] = r.warnings;
  CsvWriter sw({"iteration", "loglik"}, ctx.seed, ctx.command);
  for (std::size_t i = 0; i < r.loglik.size(); ++i) sw.row({std::to_string(i), num(r.loglik[i])});
  a.series = sw.str();
  a.ellipse = CsvWriter({"estimator", "replicate", "point", "x", "y"}, ctx.seed, ctx.command).str();
  return a;
}

// ---------------------------------------------------------------- sobol

json sobol_json(const SobolResult& r) {
  json j = {{"first", to_json(r.first)}, {"flags", r.flags}, {"calls", r.calls}};
  if (r.total.size()) j["total"] = to_json(r.total);
  if (r.sd_first.size()) j["sd_first"] = to_json(r.sd_first);
  if (r.sd_total.size()) j["sd_total"] = to_json(r.sd_total);
  return j;
}

Artifacts cmd_sobol(ConfigView& c, Ctx& ctx) {
  const std::string response = c.choice("response", "sir_final_size", {"sir_final_size", "additive"});
  SobolDesign d;
  d.n = c.integer("n", 10000, 32);
  d.n_regression = c.integer("n_regression", 0, 0);
  d.bootstrap = static_cast<int>(c.integer("bootstrap", 100, 0));
  d.totals = c.flag("totals", false);
  d.seed = {ctx.seed, 0};
  const double K = c.positive("K", 1.0);

  std::vector<std::pair<std::string, std::array<double, 2>>> ranges;
  const json in = c.raw("inputs");
  if (!in.is_null()) {
    if (!in.is_object() || in.empty()) throw ConfigError("inputs", "expected {name: [lo, hi], ...}");
    for (const auto& [name, v] : in.items()) {
      if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number() ||
          !(v[0].get<double>() < v[1].get<double>()))
        throw ConfigError("inputs." + name, "expected [lo, hi] with lo < hi");
      ranges.push_back({name, {v[0].get<double>(), v[1].get<double>()}});
    }
  }
  ModelPtr sir;
  double N = 0;
  long S0 = 0, I0 = 0;
  std::vector<double> coef;
  double noise = 0.0;
  if (response == "sir_final_size") {
    N = c.positive("N", 1200);
    S0 = c.integer("S0", 1190, 0);
    I0 = c.integer("I0", 10, 1);
    if (S0 + I0 > N) throw ConfigError("S0", "S0 + I0 exceeds N");
    if (ranges.empty()) ranges = {{"gamma", {1.0 / 15, 3.0 / 15}}, {"lambda", {0.08, 0.24}}};
    std::map<std::string, std::array<double, 2>> by(ranges.begin(), ranges.end());
    if (ranges.size() != 2 || !by.count("lambda") || !by.count("gamma"))
      throw ConfigError("inputs", "sir_final_size takes exactly lambda and gamma");
    ranges = {{"lambda", by["lambda"]}, {"gamma", by["gamma"]}};
    sir = build_model("sir");
    c.accept("coefficients");
    c.accept("noise");
  } else {
    coef = c.numbers("coefficients", {1.0, 2.0});
    noise = c.number("noise", 0.0);
    if (noise < 0) throw ConfigError("noise", "must be >= 0");
    if (ranges.empty())
      for (std::size_t i = 0; i < coef.size(); ++i) ranges.push_back({"x" + std::to_string(i + 1), {0.0, 1.0}});
    if (ranges.size() != coef.size()) throw ConfigError("inputs", "one input per coefficient");
    c.accept("N");
    c.accept("S0");
    c.accept("I0");
  }
  c.finish();

  for (const auto& [name, r] : ranges) d.inputs.push_back(uniform_input(name, r[0], r[1]));
  if (response == "sir_final_size") {
    const Vec x0 = (Vec(2) << S0, I0).finished();
    d.f = [sir, N, x0](const Vec& x, Rng& r) {
      return final_size(gillespie(sir, x, N, x0, 1e6, {r.engine()(), 0}));
    };
  } else {
    d.f = [coef, noise](const Vec& x, Rng& r) {
      double y = noise > 0 ? noise * r.normal() : 0.0;
      for (std::size_t i = 0; i < coef.size(); ++i) y += coef[i] * x[static_cast<int>(i)];
      return y;
    };
  }
  const SobolComparison cmp = sobol_all(d, K);

  Artifacts a;
  a.results = ctx.header();
  a.results["response"] = response;
  std::vector<std::string> names;
  for (const auto& in : d.inputs) names.push_back(in.name);
  a.results["inputs"] = names;
  a.results["jansen"] = sobol_json(cmp.jansen);
  a.results["nadaraya_watson"] = sobol_json(cmp.nw);
  a.results["wavelet"] = sobol_json(cmp.wavelet);
  CsvWriter sw({"method", "input", "first", "sd_first", "total", "sd_total"}, ctx.seed, ctx.command);
  for (const SobolResult* r : {&cmp.jansen, &cmp.nw, &cmp.wavelet})
    for (std::size_t l = 0; l < names.size(); ++l) {
      const int i = static_cast<int>(l);
      sw.row({r->method, names[l], num(r->first[i]), r->sd_first.size() ? num(r->sd_first[i]) : "",
              r->total.size() ? num(r->total[i]) : "", r->sd_total.size() ? num(r->sd_total[i]) : ""});
    }
  a.series = sw.str();
  a.ellipse = CsvWriter({"estimator", "replicate", "point", "x", "y"}, ctx.seed, ctx.command).str();
  return a;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> v = {"simulate", "estimate", "mcmc", "abc", "em", "sobol"};
  return v;
}

Artifacts run_command(const std::string& command, const json& config, const Overrides& o) {
  ConfigView c(config, "");
  Ctx ctx;
  ctx.command = command;
  ctx.o = &o;
  ctx.seed = o.seed ? *o.seed : c.seed("seed", 1);
  c.accept("seed");
  ctx.resolved = config;
  ctx.resolved["seed"] = ctx.seed;
  if (o.replicates) ctx.resolved["replicates"] = *o.replicates;
  if (command == "simulate") return cmd_simulate(c, ctx);
  if (command == "estimate") return cmd_estimate(c, ctx);
  if (command == "mcmc") return cmd_mcmc(c, ctx);
  if (command == "abc") return cmd_abc(c, ctx);
  if (command == "em") return cmd_em(c, ctx);
  if (command == "sobol") return cmd_sobol(c, ctx);
  throw ConfigError("command", "unknown command '" + command + "'");
}

}  // namespace epicli
