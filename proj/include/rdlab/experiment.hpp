// Experiment pipeline: a parsed config drives spectrum -> classify ->
// simulate -> diagnose, with every artifact written under a hash-keyed
// directory so reruns of an identical config are served from disk.
#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <random>
#include <thread>

#include "rdlab/classifier.hpp"
#include "rdlab/config.hpp"
#include "rdlab/csv.hpp"

namespace rdlab {

struct InitialSpec {
  std::string kind;  // bump | constant | eigenfunction
  double height = 0.1;
  double center = 0.0;
  double width = 1.0;
  double jitter = 0.0;
  unsigned long long seed = 0;
};

struct ExperimentSetup {
  ModelManifold manifold;
  RadialGrid grid;
  Bc bc = Bc::DirichletAtR;
  std::optional<Nonlinearity> reaction;
  InitialSpec initial;
  SchemeConfig scheme;
  std::vector<std::pair<double, int>> spectrum_schedule;
  std::vector<std::string> monitors;  // resolved list, or the single entry "auto"
  double monitor_T = -1.0;            // <0: pick from the outcome
  double monitor_delta = 1.0;
  double monitor_slack = 0.1;
  double classify_S = 8.0;
  double classify_C_bar = 1.0;
  double classify_r_max = 20.0;
  std::string out_dir = "runs";
};

namespace detail {

inline Nonlinearity reaction_from(const Config& cfg, const std::string& prefix) {
  const std::string kind = cfg.get_string(prefix + ".kind");
  if (kind == "power") return Nonlinearity::power(cfg.get_double(prefix + ".p"));
  if (kind == "piecewise")
    return Nonlinearity::piecewise_linear_power(cfg.get_double(prefix + ".alpha"),
                                                cfg.get_double(prefix + ".p"));
  if (kind == "expm1") return Nonlinearity::exp_minus_one(cfg.get_double(prefix + ".beta"));
  if (kind == "file") return Nonlinearity::tabulated_from_file(cfg.get_string(prefix + ".file"));
  throw config_error("config: unknown " + prefix + ".kind '" + kind + "'");
}

inline std::vector<std::pair<double, int>> parse_schedule(const std::string& text) {
  std::vector<std::pair<double, int>> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos)
      throw config_error("config: spectrum.schedule entry '" + item + "' is not R:n");
    try {
      out.emplace_back(std::stod(item.substr(0, colon)), std::stoi(item.substr(colon + 1)));
    } catch (const std::exception&) {
      throw config_error("config: spectrum.schedule entry '" + item + "' is not R:n");
    }
  }
  if (out.empty()) throw config_error("config: spectrum.schedule is empty");
  return out;
}

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// One cell, one line: commas and hashes would corrupt the CSV / key=value
// containers these strings land in.
inline std::string sanitize_cell(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '#') c = ';';
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

inline const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys = {
      "manifold.kind", "manifold.dimension", "manifold.kappa",  "manifold.a",
      "manifold.b",    "manifold.file",      "grid.R",          "grid.n",
      "bc",            "initial.kind",       "initial.height",  "initial.center",
      "initial.width", "initial.jitter",     "initial.seed",    "scheme.kind",
      "scheme.dt0",    "scheme.dt_min",      "scheme.U_max",    "scheme.T_end",
      "scheme.cfl",    "spectrum.schedule",  "monitors",        "monitor.T",
      "monitor.delta", "monitor.slack",      "classify.S",      "classify.c_bar",
      "classify.r_max"};
  return keys;
}

}  // namespace detail

// Validates everything cheap up front; unknown keys are rejected so a typo
// cannot silently fall back to a default.
inline ExperimentSetup build_setup(const Config& cfg) {
  for (const auto& [key, value] : cfg.items()) {
    (void)value;
    if (key.rfind("reaction.", 0) == 0 || key.rfind("output.", 0) == 0) continue;
    const auto& known = detail::known_config_keys();
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw config_error("config: unknown key '" + key + "'");
  }

  const std::string mkind = cfg.get_string("manifold.kind");
  const int dim = cfg.get_int("manifold.dimension", 3);
  ModelManifold manifold = [&] {
    if (mkind == "euclidean") return ModelManifold::euclidean(dim);
    if (mkind == "hyperbolic")
      return ModelManifold::hyperbolic(dim, cfg.get_double("manifold.kappa", 1.0));
    if (mkind == "pinched")
      return ModelManifold::pinched(dim, cfg.get_double("manifold.a"), cfg.get_double("manifold.b"));
    if (mkind == "file") return ModelManifold::tabulated_from_file(dim, cfg.get_string("manifold.file"));
    throw config_error("config: unknown manifold.kind '" + mkind + "'");
  }();

  ExperimentSetup s{std::move(manifold), RadialGrid(cfg.get_double("grid.R"), cfg.get_int("grid.n"))};

  const std::string bc = cfg.get_string("bc", "dirichlet");
  if (bc == "dirichlet")
    s.bc = Bc::DirichletAtR;
  else if (bc == "neumann")
    s.bc = Bc::NeumannAtR;
  else
    throw config_error("config: unknown bc '" + bc + "'");

  if (cfg.has("reaction.kind") && cfg.get_string("reaction.kind") != "none") {
    Nonlinearity f = detail::reaction_from(cfg, "reaction");
    if (cfg.has("reaction.minorant.kind"))
      f = f.with_minorant(detail::reaction_from(cfg, "reaction.minorant"));
    s.reaction = std::move(f);
  }

  s.initial.kind = cfg.get_string("initial.kind", "bump");
  if (s.initial.kind != "bump" && s.initial.kind != "constant" &&
      s.initial.kind != "eigenfunction")
    throw config_error("config: unknown initial.kind '" + s.initial.kind + "'");
  s.initial.height = cfg.get_double("initial.height", 0.1);
  s.initial.center = cfg.get_double("initial.center", 0.0);
  s.initial.width = cfg.get_double("initial.width", 1.0);
  s.initial.jitter = cfg.get_double("initial.jitter", 0.0);
  s.initial.seed = static_cast<unsigned long long>(cfg.get_double("initial.seed", 0.0));
  if (s.initial.height < 0.0) throw config_error("config: initial.height must be >= 0");
  if (s.initial.jitter < 0.0) throw config_error("config: initial.jitter must be >= 0");
  if (s.initial.kind == "eigenfunction" && s.bc != Bc::DirichletAtR)
    throw config_error("config: eigenfunction initial data needs bc = dirichlet");

  const std::string scheme = cfg.get_string("scheme.kind", "imex-cn");
  if (scheme == "imex-cn")
    s.scheme.scheme = Scheme::ImexCN;
  else if (scheme == "imex-be")
    s.scheme.scheme = Scheme::ImexBE;
  else
    throw config_error("config: unknown scheme.kind '" + scheme + "'");
  s.scheme.dt0 = cfg.get_double("scheme.dt0", 1e-3);
  s.scheme.dt_min = cfg.get_double("scheme.dt_min", 1e-10);
  s.scheme.U_max = cfg.get_double("scheme.U_max", 1e8);
  s.scheme.T_end = cfg.get_double("scheme.T_end", 1.0);
  s.scheme.cfl_reaction = cfg.get_double("scheme.cfl", 0.1);

  s.spectrum_schedule =
      detail::parse_schedule(cfg.get_string("spectrum.schedule", "20:1000,30:1500,40:2000"));
  s.monitors = detail::split_list(cfg.get_string("monitors", "auto"));
  s.monitor_T = cfg.get_double("monitor.T", -1.0);
  s.monitor_delta = cfg.get_double("monitor.delta", 1.0);
  s.monitor_slack = cfg.get_double("monitor.slack", 0.1);
  s.classify_S = cfg.get_double("classify.S", 8.0);
  s.classify_C_bar = cfg.get_double("classify.c_bar", 1.0);
  s.classify_r_max = cfg.get_double("classify.r_max", std::max(20.0, s.grid.R));
  s.out_dir = cfg.get_string("output.dir", "runs");
  return s;
}

inline RadialField make_initial(const ExperimentSetup& s) {
  if (s.initial.kind == "constant")
    return constant_field(s.manifold, s.grid, s.initial.height);
  if (s.initial.kind == "eigenfunction") {
    const auto eig = lambda1_ball(s.manifold, s.grid.R, s.grid.n);
    RadialField u0 = eig.eigenfunction;
    const double top = u0.sup();
    for (auto& v : u0.values) v *= s.initial.height / top;
    return u0;
  }
  double center = s.initial.center;
  if (s.initial.jitter > 0.0) {
    std::mt19937_64 rng(s.initial.seed);
    std::uniform_real_distribution<double> shift(-s.initial.jitter, s.initial.jitter);
    center = std::max(0.0, center + shift(rng));
  }
  return bump_field(s.manifold, s.grid, center, s.initial.width, s.initial.height);
}

struct StageResult {
  std::string stage;
  bool ok = false;
  std::string message;
};

struct RunRecord {
  std::string config_hash;
  std::string dir;
  bool cached = false;
  std::string predicted = "Undetermined";
  std::string observed;  // Global | BlowUp | Inconclusive
  double t_star_or_horizon = 0.0;
  std::vector<StageResult> stages;
  std::vector<std::string> artifacts;  // file names inside dir
  double wall_seconds = 0.0;
};

namespace detail {

inline RunRecord load_cached(const std::string& dir, const Config& verdict) {
  RunRecord rec;
  rec.cached = true;
  rec.dir = dir;
  rec.config_hash = verdict.get_string("hash", "");
  rec.predicted = verdict.get_string("predicted", "Undetermined");
  rec.observed = verdict.get_string("observed", "");
  rec.t_star_or_horizon = verdict.get_double("t_star_or_horizon", 0.0);
  for (const auto& [k, v] : verdict.items()) {
    if (k.rfind("stage.", 0) == 0)
      rec.stages.push_back({k.substr(6), v.rfind("ok", 0) == 0, v});
    if (k.rfind("artifact.", 0) == 0) rec.artifacts.push_back(v);
  }
  return rec;
}

inline std::string outcome_name(const SimulationOutcome& o) {
  if (std::holds_alternative<Global>(o)) return "Global";
  if (std::holds_alternative<BlowUp>(o)) return "BlowUp";
  return "Inconclusive";
}

}  // namespace detail

inline RunRecord run_experiment(const Config& cfg) {
  namespace fs = std::filesystem;
  const ExperimentSetup setup = build_setup(cfg);
  const auto t_begin = std::chrono::steady_clock::now();

  RunRecord rec;
  rec.config_hash = cfg.hash_hex();
  const fs::path dir = fs::path(setup.out_dir) / rec.config_hash;
  rec.dir = dir.string();

  if (fs::exists(dir / "verdict.txt"))
    return detail::load_cached(rec.dir, Config::from_file((dir / "verdict.txt").string()));

  fs::create_directories(dir);
  {
    std::ofstream out(dir / "config.txt");
    out << cfg.serialize();
  }

  Config verdict;
  verdict.set("hash", rec.config_hash);
  auto add_artifact = [&](const std::string& name) {
    verdict.set("artifact." + std::to_string(rec.artifacts.size()), name);
    rec.artifacts.push_back(name);
  };
  auto run_stage = [&](const std::string& name, auto&& body) {
    StageResult sr{name, false, ""};
    try {
      body();
      sr.ok = true;
      sr.message = "ok";
    } catch (const std::exception& e) {
      sr.message = detail::sanitize_cell(e.what());
    }
    verdict.set("stage." + name, sr.ok ? "ok" : "failed: " + sr.message);
    rec.stages.push_back(sr);
    return sr.ok;
  };

  std::optional<SpectralEstimate> spec;
  std::optional<RegimePrediction> pred;
  std::optional<RadialField> u0;
  std::optional<EigenResult> ball;
  std::optional<Trajectory> traj;
  std::optional<SimulationOutcome> outcome;

  bool ok = run_stage("spectrum", [&] {
    spec = lambda1_manifold(setup.manifold, setup.spectrum_schedule);
    CsvWriter csv((dir / "spectrum.csv").string(), {"R", "lambda"});
    for (std::size_t i = 0; i < spec->radii.size(); ++i)
      csv.row({spec->radii[i], spec->lambdas[i]});
    add_artifact("spectrum.csv");
    verdict.set("spectrum.lambda1", spec->extrapolated);
    verdict.set("spectrum.errbar", spec->errbar);
  });

  if (ok)
    ok = run_stage("classify", [&] {
      u0 = make_initial(setup);
      if (!setup.reaction) {
        verdict.set("predicted", rec.predicted);
        return;
      }
      ManifoldChecks checks{check_stochastic_completeness(setup.manifold, setup.classify_r_max),
                            check_bound_condition(setup.manifold, setup.classify_r_max),
                            faber_krahn_probe(setup.manifold, {0.5, 1.0, 2.0, 4.0})};
      U0Props props = u0_props(*u0);
      if (setup.bc == Bc::DirichletAtR) {
        ball = lambda1_ball(setup.manifold, setup.grid.R, setup.grid.n);
        RadialField w = ball->eigenfunction;
        const double mass = w.mass();
        for (auto& v : w.values) v /= mass;
        props.kaplan_w0 = w.weighted_dot(*u0);
        props.kaplan_threshold = reaction_drain_threshold(*setup.reaction, ball->lambda);
        verdict.set("ball.lambda1", ball->lambda);
        verdict.set("ball.w0", *props.kaplan_w0);
        verdict.set("ball.threshold", *props.kaplan_threshold);
      }
      ClassifierOptions copt;
      copt.S = setup.classify_S;
      copt.C_bar = setup.classify_C_bar;
      pred = predict_regime(*spec, *setup.reaction, checks, props, copt);
      rec.predicted = to_string(pred->verdict);
      verdict.set("predicted", rec.predicted);
      if (pred->certificate) {
        verdict.set("certificate.alpha", pred->certificate->alpha);
        verdict.set("certificate.delta", pred->certificate->delta);
        verdict.set("certificate.sup_bound", pred->certificate->sup_bound);
        verdict.set("certificate.l1_bound", pred->certificate->l1_bound);
      }
      CsvWriter csv((dir / "classify.csv").string(), {"hypothesis", "pass", "evidence"});
      for (const auto& item : pred->checklist)
        csv.row({detail::sanitize_cell(item.hypothesis), item.pass ? "1" : "0",
                 detail::sanitize_cell(item.evidence)});
      add_artifact("classify.csv");
    });

  if (ok)
    ok = run_stage("simulate", [&] {
      auto [out, tr] = simulate(setup.manifold, setup.grid, setup.reaction, *u0, setup.scheme,
                                setup.bc);
      outcome = std::move(out);
      traj = std::move(tr);
      rec.observed = detail::outcome_name(*outcome);
      if (const auto* b = std::get_if<BlowUp>(&*outcome)) {
        rec.t_star_or_horizon = b->t_star;
        verdict.set("blowup.method", detail::sanitize_cell(b->method));
      } else if (const auto* g = std::get_if<Global>(&*outcome)) {
        rec.t_star_or_horizon = g->horizon;
      } else {
        rec.t_star_or_horizon = traj->times.back();
        verdict.set("observed.reason",
                    detail::sanitize_cell(std::get<Inconclusive>(*outcome).reason));
      }
      verdict.set("observed", rec.observed);
      verdict.set("t_star_or_horizon", rec.t_star_or_horizon);
      CsvWriter csv((dir / "run.csv").string(), {"t", "sup", "mass", "dt"});
      for (std::size_t k = 0; k < traj->times.size(); ++k)
        csv.row({traj->times[k], traj->sups[k], traj->masses[k], traj->dts[k]});
      add_artifact("run.csv");
    });

  if (ok)
    run_stage("diagnose", [&] {
      std::vector<std::string> wanted = setup.monitors;
      if (wanted.size() == 1 && wanted[0] == "auto") {
        wanted.clear();
        if (setup.reaction) {
          const bool blew = std::holds_alternative<BlowUp>(*outcome);
          if (blew) {
            wanted.push_back("phi_ode");
            if (tail_reciprocal_integral(setup.reaction->h(), 1.0).finite)
              wanted.push_back("g_decay");
          } else if (pred && pred->certificate) {
            wanted.push_back("supersolution");
          }
          if (setup.bc == Bc::DirichletAtR && traj->fields.size() >= 3)
            wanted.push_back("kaplan_ball");
        }
      }
      if (wanted.size() == 1 && wanted[0] == "none") wanted.clear();
      if (wanted.empty()) {
        verdict.set("monitors.run", "0");
        return;
      }

      CsvWriter csv((dir / "diagnostics.csv").string(),
                    {"check", "applicable", "pass", "worst_margin", "location", "note"});
      std::optional<PhiSeries> phi;
      auto need_phi = [&]() -> const PhiSeries& {
        if (!phi) {
          double T = setup.monitor_T;
          if (T <= 0.0) T = 0.8 * rec.t_star_or_horizon;
          T = std::min(T, traj->times.back());
          phi = kaplan_phi(*traj, setup.manifold, setup.grid, T, setup.scheme.dt0);
          CsvWriter pcsv((dir / "phi.csv").string(), {"t", "phi", "weight_mass"});
          for (std::size_t k = 0; k < phi->times.size(); ++k)
            pcsv.row({phi->times[k], phi->values[k], phi->weight_mass[k]});
          add_artifact("phi.csv");
          verdict.set("phi0.paired", phi->phi0_paired);
          verdict.set("phi0.center", phi->phi0_center_value);
        }
        return *phi;
      };

      bool all_ok = true;
      auto emit = [&](const MonitorReport& r) {
        csv.row({r.check, r.applicable ? "1" : "0", r.pass ? "1" : "0",
                 detail::format_g17(r.worst_margin), detail::format_g17(r.location),
                 detail::sanitize_cell(r.note)});
        verdict.set("monitor." + r.check, r.applicable ? (r.pass ? "pass" : "fail") : "n/a");
      };
      for (const std::string& name : wanted) {
        try {
          if (!setup.reaction && name != "supersolution")
            throw config_error("monitor '" + name + "' needs a reaction");
          if (name == "phi_ode") {
            emit(check_phi_ode(need_phi(), setup.reaction->h(), setup.monitor_slack));
          } else if (name == "g_decay") {
            emit(g_functional_check(need_phi(), setup.reaction->h(), setup.monitor_delta,
                                    setup.monitor_slack));
          } else if (name == "supersolution") {
            if (pred && pred->certificate) {
              emit(supersolution_check(*traj, setup.manifold, setup.grid,
                                       pred->certificate->alpha, 1e-6,
                                       pred->certificate->delta));
            } else {
              MonitorReport r;
              r.check = "supersolution";
              r.applicable = false;
              r.pass = true;
              r.note = "no linear certificate";
              emit(r);
            }
          } else if (name == "kaplan_ball") {
            if (!ball) ball = lambda1_ball(setup.manifold, setup.grid.R, setup.grid.n);
            const auto kb = bounded_domain_kaplan(*traj, ball->lambda, ball->eigenfunction,
                                                  *setup.reaction, setup.monitor_slack);
            emit(kb.monitor);
            verdict.set("ball.crossed", kb.crossed ? "true" : "false");
          } else {
            throw config_error("unknown monitor '" + name + "'");
          }
        } catch (const std::exception& e) {
          MonitorReport r;
          r.check = name;
          r.note = std::string("error: ") + e.what();
          emit(r);
          all_ok = false;
        }
      }
      add_artifact("diagnostics.csv");
      verdict.set("monitors.run", static_cast<int>(wanted.size()));
      if (!all_ok) throw numerical_error("one or more monitors failed to evaluate");
    });

  verdict.set("predicted", rec.predicted);
  if (!verdict.has("observed")) verdict.set("observed", rec.observed);
  if (!verdict.has("t_star_or_horizon")) verdict.set("t_star_or_horizon", rec.t_star_or_horizon);
  {
    std::ofstream out(dir / "verdict.txt");
    out << verdict.serialize();
  }
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
  return rec;
}

// Sweep points share nothing but the output root: each value lands in its own
// hash-keyed directory, so a bounded pool can run them concurrently.
inline std::vector<RunRecord> run_sweep(const Config& base, const std::string& axis,
                                        const std::vector<double>& values, int workers = 1) {
  namespace fs = std::filesystem;
  if (!base.has(axis)) throw config_error("sweep: axis '" + axis + "' not present in base config");
  base.get_double(axis);  // must already be numeric

  const std::string out_root = base.get_string("output.dir", "runs");
  std::string axis_dir = axis;
  for (char& c : axis_dir)
    if (c == '.') c = '-';
  const fs::path sweep_dir = fs::path(out_root) / ("sweep-" + axis_dir);
  fs::create_directories(sweep_dir);

  // Duplicate values would race on the same hash directory; run unique points.
  std::vector<std::string> keys(values.size());
  std::map<std::string, std::size_t> first;
  std::vector<std::size_t> unique_idx;
  for (std::size_t i = 0; i < values.size(); ++i) {
    keys[i] = detail::format_g17(values[i]);
    if (first.emplace(keys[i], i).second) unique_idx.push_back(i);
  }

  std::vector<RunRecord> unique_recs(unique_idx.size());
  auto run_point = [&](std::size_t slot) {
    Config cfg = base;
    cfg.set(axis, values[unique_idx[slot]]);
    try {
      unique_recs[slot] = run_experiment(cfg);
    } catch (const std::exception& e) {
      RunRecord rec;
      rec.config_hash = cfg.hash_hex();
      rec.predicted = "error";
      rec.observed = "error";
      rec.stages.push_back({"pipeline", false, e.what()});
      unique_recs[slot] = std::move(rec);
    }
  };

  const int pool = std::max(1, std::min<int>(workers, 8));
  if (pool == 1 || unique_idx.size() <= 1) {
    for (std::size_t s = 0; s < unique_idx.size(); ++s) run_point(s);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> threads;
    const int spawn = std::min<int>(pool, static_cast<int>(unique_idx.size()));
    threads.reserve(spawn);
    for (int t = 0; t < spawn; ++t)
      threads.emplace_back([&] {
        for (std::size_t s = next.fetch_add(1); s < unique_idx.size(); s = next.fetch_add(1))
          run_point(s);
      });
    for (auto& th : threads) th.join();
  }

  std::vector<RunRecord> records(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::size_t slot =
        std::lower_bound(unique_idx.begin(), unique_idx.end(), first.at(keys[i])) -
        unique_idx.begin();
    records[i] = unique_recs[slot];
  }

  CsvWriter summary((sweep_dir / "summary.csv").string(),
                    {"value", "predicted", "observed", "t_star_or_horizon"});
  for (std::size_t i = 0; i < values.size(); ++i)
    summary.row({keys[i], records[i].predicted, records[i].observed,
                 detail::format_g17(records[i].t_star_or_horizon)});
  return records;
}

}  // namespace rdlab
