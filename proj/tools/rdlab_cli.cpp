// Command-line front end. Subcommands mirror the pipeline stages; every one
// reads the same flat key=value config format. Exit codes: 0 success,
// 1 invalid input, 2 numerical failure, 3 acceptance gate failure.
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "acceptance/acceptance.hpp"
#include "rdlab/experiment.hpp"

namespace {

std::vector<double> parse_value_list(const std::string& s, const char* what) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const auto comma = s.find(',', pos);
    std::string tok =
        s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    const auto a = tok.find_first_not_of(" \t");
    const auto b = tok.find_last_not_of(" \t");
    tok = a == std::string::npos ? "" : tok.substr(a, b - a + 1);
    if (tok.empty()) throw rdlab::config_error(std::string(what) + ": empty entry in list");
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = std::string::npos;
    }
    if (used != tok.size())
      throw rdlab::config_error(std::string(what) + ": '" + tok + "' is not a number");
    out.push_back(v);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) throw rdlab::config_error(std::string(what) + ": empty list");
  return out;
}

rdlab::Config load_config(const std::string& path, const std::string& out_override,
                          double slack_override) {
  auto cfg = rdlab::Config::from_file(path);
  if (!out_override.empty()) cfg.set("output.dir", out_override);
  if (slack_override >= 0.0) cfg.set("monitor.slack", slack_override);
  return cfg;
}

void print_kv(const std::string& k, const std::string& v) { std::cout << k << " = " << v << "\n"; }
void print_kv(const std::string& k, double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  print_kv(k, os.str());
}

int print_record(const rdlab::RunRecord& rec) {
  print_kv("hash", rec.config_hash);
  print_kv("dir", rec.dir);
  print_kv("cached", rec.cached ? "true" : "false");
  print_kv("predicted", rec.predicted);
  print_kv("observed", rec.observed);
  print_kv("t_star_or_horizon", rec.t_star_or_horizon);
  bool failed = false;
  for (const auto& st : rec.stages) {
    print_kv("stage." + st.stage, st.ok ? "ok" : "failed: " + st.message);
    failed = failed || !st.ok;
  }
  for (const auto& a : rec.artifacts) print_kv("artifact", a);
  print_kv("wall_seconds", rec.wall_seconds);
  return failed ? 2 : 0;
}

int cmd_spectrum(const rdlab::Config& cfg, const std::string& out_dir) {
  const auto setup = rdlab::build_setup(cfg);
  const auto est = rdlab::lambda1_manifold(setup.manifold, setup.spectrum_schedule);
  for (std::size_t i = 0; i < est.radii.size(); ++i) {
    std::cout << "R=" << std::setw(8) << std::left << est.radii[i] << " lambda="
              << std::setprecision(10) << est.lambdas[i] << "\n";
  }
  print_kv("extrapolated", est.extrapolated);
  print_kv("errbar", est.errbar);
  if (est.analytic) print_kv("analytic", *est.analytic);
  if (est.rel_error) print_kv("rel_error", *est.rel_error);
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    const auto path = std::filesystem::path(out_dir) / "spectrum.csv";
    rdlab::CsvWriter csv(path.string(), {"R", "lambda"});
    for (std::size_t i = 0; i < est.radii.size(); ++i) csv.row({est.radii[i], est.lambdas[i]});
    print_kv("csv", path.string());
  }
  return 0;
}

int cmd_kernel(const rdlab::Config& cfg, const std::string& out_dir, const std::string& times_arg,
               double dt) {
  const auto setup = rdlab::build_setup(cfg);
  const auto& m = setup.manifold;
  const auto& g = setup.grid;
  const auto times = parse_value_list(times_arg, "kernel --times");
  const auto u0 = rdlab::delta_bump(m, g, 4.0 * g.h());
  const auto snaps =
      rdlab::evolve_with_snapshots(m, g, u0, times, dt, {rdlab::Bc::DirichletAtR, true});

  const bool closed_form = cfg.get_string("manifold.kind", "") == "hyperbolic" &&
                           m.dimension == 3 && cfg.get_double("manifold.kappa", 1.0) == 1.0;
  std::cout << "t, p(o,o,t), mass" << (closed_form ? ", closed_form, rel_err" : "") << "\n";
  for (std::size_t k = 0; k < times.size(); ++k) {
    std::cout << std::setprecision(10) << times[k] << ", " << snaps[k].center_value() << ", "
              << snaps[k].mass();
    if (closed_form) {
      const double exact = rdlab::hyperbolic3_kernel(0.0, times[k]);
      std::cout << ", " << exact << ", " << std::abs(snaps[k].center_value() - exact) / exact;
    }
    std::cout << "\n";
  }
  if (!out_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    {
      rdlab::CsvWriter csv((fs::path(out_dir) / "kernel_trace.csv").string(),
                           {"t", "center", "mass"});
      for (std::size_t k = 0; k < times.size(); ++k)
        csv.row({times[k], snaps[k].center_value(), snaps[k].mass()});
    }
    {
      std::vector<std::string> header = {"rho", "value"};
      if (closed_form) header.push_back("closed_form");
      rdlab::CsvWriter csv((fs::path(out_dir) / "kernel_profile.csv").string(), header);
      const auto& last = snaps.back();
      for (int i = 0; i <= g.n; ++i) {
        const double rho = i * g.h();
        std::vector<double> row = {rho, last.values[static_cast<std::size_t>(i)]};
        if (closed_form) row.push_back(rdlab::hyperbolic3_kernel(rho, times.back()));
        csv.row(row);
      }
    }
    print_kv("csv_dir", out_dir);
  }
  return 0;
}

int cmd_classify(const rdlab::Config& cfg) {
  const auto setup = rdlab::build_setup(cfg);
  if (!setup.reaction) throw rdlab::config_error("classify: the config declares no reaction");
  const auto est = rdlab::lambda1_manifold(setup.manifold, setup.spectrum_schedule);
  print_kv("lambda1", est.extrapolated);
  print_kv("errbar", est.errbar);

  rdlab::ManifoldChecks checks{
      rdlab::check_stochastic_completeness(setup.manifold, setup.classify_r_max),
      rdlab::check_bound_condition(setup.manifold, setup.classify_r_max),
      rdlab::faber_krahn_probe(setup.manifold, {0.5, 1.0, 2.0, 4.0})};
  const auto u0 = rdlab::make_initial(setup);
  rdlab::U0Props props = rdlab::u0_props(u0);
  if (setup.bc == rdlab::Bc::DirichletAtR) {
    const auto ball = rdlab::lambda1_ball(setup.manifold, setup.grid.R, setup.grid.n);
    rdlab::RadialField w = ball.eigenfunction;
    const double mass = w.mass();
    for (auto& v : w.values) v /= mass;
    props.kaplan_w0 = w.weighted_dot(u0);
    props.kaplan_threshold = rdlab::reaction_drain_threshold(*setup.reaction, ball.lambda);
    print_kv("ball.lambda1", ball.lambda);
    print_kv("ball.w0", *props.kaplan_w0);
    print_kv("ball.threshold", *props.kaplan_threshold);
  }
  rdlab::ClassifierOptions copt;
  copt.S = setup.classify_S;
  copt.C_bar = setup.classify_C_bar;
  const auto pred = rdlab::predict_regime(est, *setup.reaction, checks, props, copt);
  for (const auto& item : pred.checklist)
    std::cout << (item.pass ? "PASS " : "FAIL ") << item.hypothesis << " (" << item.evidence
              << ")\n";
  print_kv("verdict", rdlab::to_string(pred.verdict));
  if (pred.certificate) {
    print_kv("certificate.alpha", pred.certificate->alpha);
    print_kv("certificate.delta", pred.certificate->delta);
    print_kv("certificate.sup_bound", pred.certificate->sup_bound);
    print_kv("certificate.l1_bound", pred.certificate->l1_bound);
  }
  return 0;
}

int cmd_diagnose(const rdlab::Config& cfg) {
  const auto rec = rdlab::run_experiment(cfg);
  bool failed = false;
  for (const auto& st : rec.stages) {
    print_kv("stage." + st.stage, st.ok ? "ok" : "failed: " + st.message);
    failed = failed || !st.ok;
  }
  const auto verdict =
      rdlab::Config::from_file((std::filesystem::path(rec.dir) / "verdict.txt").string());
  static const char* prefixes[] = {"monitor.", "phi0.",        "ball.",    "blowup.",
                                   "spectrum.", "certificate.", "observed", "predicted",
                                   "t_star_or_horizon"};
  for (const auto& [k, v] : verdict.items()) {
    for (const char* p : prefixes) {
      if (k.rfind(p, 0) == 0) {
        print_kv(k, v);
        break;
      }
    }
  }
  return failed ? 2 : 0;
}

int cmd_sweep(const rdlab::Config& cfg, const std::string& axis, const std::string& values_arg,
              int workers) {
  const auto values = parse_value_list(values_arg, "sweep --values");
  const auto records = rdlab::run_sweep(cfg, axis, values, workers);
  for (std::size_t i = 0; i < records.size(); ++i) {
    std::ostringstream os;
    os << std::setprecision(12) << values[i] << " -> predicted=" << records[i].predicted
       << " observed=" << records[i].observed << " t=" << records[i].t_star_or_horizon << " dir="
       << records[i].dir;
    std::cout << os.str() << "\n";
  }
  std::string axis_dir = axis;
  for (char& c : axis_dir)
    if (c == '.') c = '-';
  const auto summary = std::filesystem::path(cfg.get_string("output.dir", "runs")) /
                       ("sweep-" + axis_dir) / "summary.csv";
  print_kv("summary", summary.string());
  return 0;
}

int cmd_accept(const std::string& out_dir, double slack) {
  acceptance::Options opts;
  opts.slack = slack;
  const auto results = acceptance::run_all(opts);
  acceptance::print_report(results, std::cout);
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    const auto path = std::filesystem::path(out_dir) / "acceptance.txt";
    std::ofstream f(path);
    acceptance::print_report(results, f);
    print_kv("report", path.string());
  }
  return acceptance::all_pass(results) ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reaction-diffusion laboratory on rotationally symmetric model manifolds"};
  app.require_subcommand(1);

  std::string config_path, out_dir, axis, values_arg;
  std::string times_arg = "0.5,1,2";
  int workers = 1;
  double slack = -1.0;        // < 0 means: keep the config's monitor slack
  double accept_slack = 0.1;  // matches the proof monitors' default
  double kernel_dt = 1e-3;

  auto* sc_spectrum = app.add_subcommand("spectrum", "estimate the spectral bottom");
  auto* sc_kernel = app.add_subcommand("kernel", "evolve a point source and trace the kernel");
  auto* sc_simulate = app.add_subcommand("simulate", "run the full pipeline on one config");
  auto* sc_classify = app.add_subcommand("classify", "predict the regime from the hypotheses");
  auto* sc_diagnose = app.add_subcommand("diagnose", "run and print the proof monitors");
  auto* sc_sweep = app.add_subcommand("sweep", "run the pipeline across one numeric axis");
  auto* sc_accept = app.add_subcommand("accept", "run the acceptance matrix");

  for (auto* sc : {sc_spectrum, sc_kernel, sc_simulate, sc_classify, sc_diagnose, sc_sweep})
    sc->add_option("--config", config_path, "path to a key=value config file")->required();
  for (auto* sc : {sc_spectrum, sc_kernel, sc_simulate, sc_diagnose, sc_sweep, sc_accept})
    sc->add_option("--out", out_dir, "output directory (overrides output.dir)");
  for (auto* sc : {sc_simulate, sc_diagnose, sc_sweep})
    sc->add_option("--slack", slack, "relative slack for the proof monitors");
  sc_accept->add_option("--slack", accept_slack, "relative slack for the proof monitors");
  sc_sweep->add_option("--axis", axis, "config key to sweep")->required();
  sc_sweep->add_option("--values", values_arg, "comma-separated axis values")->required();
  sc_sweep->add_option("--workers", workers, "parallel pipeline workers");
  sc_kernel->add_option("--times", times_arg, "comma-separated snapshot times");
  sc_kernel->add_option("--dt", kernel_dt, "time step for the kernel evolution");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (app.got_subcommand(sc_accept)) return cmd_accept(out_dir, accept_slack);
    const auto cfg = load_config(config_path, out_dir, slack);
    if (app.got_subcommand(sc_spectrum)) return cmd_spectrum(cfg, out_dir);
    if (app.got_subcommand(sc_kernel)) return cmd_kernel(cfg, out_dir, times_arg, kernel_dt);
    if (app.got_subcommand(sc_simulate)) return print_record(rdlab::run_experiment(cfg));
    if (app.got_subcommand(sc_classify)) return cmd_classify(cfg);
    if (app.got_subcommand(sc_diagnose)) return cmd_diagnose(cfg);
    if (app.got_subcommand(sc_sweep)) return cmd_sweep(cfg, axis, values_arg, workers);
  } catch (const rdlab::numerical_error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
