#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "rdlab/experiment.hpp"

using namespace rdlab;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Supercritical homogeneous run: constant datum on a Neumann ball reduces to
// the u' = f(u) ODE, blowing up near t = 1/3 well before the horizon.
Config blowup_config(const std::string& out_dir) {
  Config cfg;
  cfg.set("manifold.kind", "hyperbolic");
  cfg.set("manifold.dimension", 3);
  cfg.set("grid.R", 5.0);
  cfg.set("grid.n", 100);
  cfg.set("bc", "neumann");
  cfg.set("reaction.kind", "piecewise");
  cfg.set("reaction.alpha", 3.0);
  cfg.set("reaction.p", 2.0);
  cfg.set("initial.kind", "constant");
  cfg.set("initial.height", 1.0);
  cfg.set("scheme.T_end", 0.6);
  cfg.set("scheme.dt0", 1e-3);
  cfg.set("spectrum.schedule", "10:300,15:450,20:600");
  cfg.set("output.dir", out_dir);
  return cfg;
}

Config global_config(const std::string& out_dir) {
  Config cfg;
  cfg.set("manifold.kind", "hyperbolic");
  cfg.set("manifold.dimension", 3);
  cfg.set("grid.R", 5.0);
  cfg.set("grid.n", 100);
  cfg.set("bc", "dirichlet");
  cfg.set("reaction.kind", "piecewise");
  cfg.set("reaction.alpha", 0.5);
  cfg.set("reaction.p", 2.0);
  cfg.set("initial.kind", "bump");
  cfg.set("initial.height", 0.01);
  cfg.set("initial.width", 1.0);
  cfg.set("scheme.T_end", 1.0);
  cfg.set("scheme.dt0", 2e-3);
  cfg.set("spectrum.schedule", "10:300,15:450,20:600");
  cfg.set("output.dir", out_dir);
  return cfg;
}

}  // namespace

TEST_CASE("config parsing: comments, trim, and round-trip") {
  const std::string text =
      "# experiment header\n"
      "grid.R = 10.0   # trailing comment\n"
      "\n"
      "  manifold.kind=hyperbolic\n"
      "scheme.dt0 = 1e-3\n";
  const auto cfg = Config::parse(text);
  CHECK(cfg.get_double("grid.R") == 10.0);
  CHECK(cfg.get_string("manifold.kind") == "hyperbolic");
  CHECK(cfg.get_double("scheme.dt0") == 1e-3);
  CHECK_FALSE(cfg.has("missing"));

  const auto again = Config::parse(cfg.serialize());
  CHECK(again.serialize() == cfg.serialize());
  CHECK(again.hash() == cfg.hash());
}

TEST_CASE("config parsing rejects malformed input") {
  CHECK_THROWS_AS(Config::parse("just a line without equals\n"), config_error);
  CHECK_THROWS_AS(Config::parse("a = 1\na = 2\n"), config_error);
  CHECK_THROWS_AS(Config::parse("bad key! = 1\n"), config_error);
  CHECK_THROWS_AS(Config::parse("= 1\n"), config_error);
}

TEST_CASE("config typed getters validate") {
  const auto cfg = Config::parse("x = 3.5\nn = 7\nflag = true\nword = abc\n");
  CHECK(cfg.get_double("x") == 3.5);
  CHECK(cfg.get_int("n") == 7);
  CHECK(cfg.get_bool("flag", false));
  CHECK(cfg.get_double("absent", 2.0) == 2.0);
  CHECK(cfg.get_int("absent", 4) == 4);
  CHECK_THROWS_AS(cfg.get_double("word"), config_error);
  CHECK_THROWS_AS(cfg.get_int("x"), config_error);
  CHECK_THROWS_AS(cfg.get_bool("word", false), config_error);
  CHECK_THROWS_AS(cfg.get_string("absent"), config_error);
}

TEST_CASE("config hash ignores key order and output keys") {
  const auto a = Config::parse("grid.R = 5\ngrid.n = 100\n");
  const auto b = Config::parse("grid.n = 100\ngrid.R = 5\n");
  CHECK(a.hash() == b.hash());

  auto c = a;
  c.set("output.dir", "elsewhere");
  CHECK(c.hash() == a.hash());

  auto d = a;
  d.set("grid.n", 200);
  CHECK(d.hash() != a.hash());
  CHECK(a.hash_hex().size() == 16);
}

TEST_CASE("csv writer: exact doubles, fixed width") {
  const fs::path p = "cfg_csv_probe.csv";
  {
    CsvWriter csv(p.string(), {"a", "b"});
    csv.row({1.0 / 3.0, 1e-300});
    CHECK_THROWS_AS(csv.row({1.0}), config_error);
  }
  const std::string text = read_file(p);
  CHECK(text.rfind("a,b\n", 0) == 0);
  const auto comma = text.find(',', 4);
  const double back = std::stod(text.substr(4, comma - 4));
  CHECK(back == 1.0 / 3.0);
  fs::remove(p);
}

TEST_CASE("setup validation happens before any compute") {
  auto cfg = blowup_config("cfg_runs_invalid");
  fs::remove_all("cfg_runs_invalid");

  SECTION("negative dimension") {
    cfg.set("manifold.dimension", -3);
    CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);
  }
  SECTION("unknown key") {
    cfg.set("grid.spacing", 0.1);
    CHECK_THROWS_AS(run_experiment(cfg), config_error);
  }
  SECTION("unknown enum values") {
    auto bad_bc = cfg;
    bad_bc.set("bc", "absorbing");
    CHECK_THROWS_AS(build_setup(bad_bc), config_error);
    auto bad_scheme = cfg;
    bad_scheme.set("scheme.kind", "rk4");
    CHECK_THROWS_AS(build_setup(bad_scheme), config_error);
    auto bad_init = cfg;
    bad_init.set("initial.kind", "plateau");
    CHECK_THROWS_AS(build_setup(bad_init), config_error);
  }
  SECTION("schedule grammar") {
    cfg.set("spectrum.schedule", "10-300,20-600");
    CHECK_THROWS_AS(build_setup(cfg), config_error);
  }
  SECTION("eigenfunction data needs a Dirichlet ball") {
    cfg.set("initial.kind", "eigenfunction");
    CHECK_THROWS_AS(build_setup(cfg), config_error);
  }
  CHECK_FALSE(fs::exists("cfg_runs_invalid"));
}

TEST_CASE("initial data construction") {
  auto cfg = blowup_config("unused");
  const auto setup = build_setup(cfg);

  SECTION("constant fills every node") {
    const auto u0 = make_initial(setup);
    for (double v : u0.values) CHECK(v == 1.0);
  }
  SECTION("bump jitter is seed-deterministic") {
    auto jcfg = cfg;
    jcfg.set("initial.kind", "bump");
    jcfg.set("initial.height", 0.5);
    jcfg.set("initial.center", 1.0);
    jcfg.set("initial.jitter", 0.5);
    jcfg.set("initial.seed", 7);
    const auto a = make_initial(build_setup(jcfg));
    const auto b = make_initial(build_setup(jcfg));
    CHECK(a.values == b.values);
    jcfg.set("initial.seed", 8);
    const auto c = make_initial(build_setup(jcfg));
    CHECK(a.values != c.values);
  }
  SECTION("eigenfunction initial peaks at the requested height") {
    auto ecfg = global_config("unused");
    ecfg.set("initial.kind", "eigenfunction");
    ecfg.set("initial.height", 2.0);
    const auto u0 = make_initial(build_setup(ecfg));
    CHECK(u0.sup() == Catch::Approx(2.0).epsilon(1e-12));
    CHECK(u0.min_value() >= 0.0);
  }
}

TEST_CASE("pipeline: supercritical run end to end") {
  fs::remove_all("cfg_runs_blowup");
  const auto cfg = blowup_config("cfg_runs_blowup");
  const auto rec = run_experiment(cfg);

  CHECK_FALSE(rec.cached);
  CHECK(rec.config_hash == cfg.hash_hex());
  REQUIRE(rec.stages.size() == 4);
  for (const auto& s : rec.stages) {
    INFO(s.stage << ": " << s.message);
    CHECK(s.ok);
  }
  CHECK(rec.predicted == "BlowsUpAllData");
  CHECK(rec.observed == "BlowUp");
  CHECK(rec.t_star_or_horizon == Catch::Approx(1.0 / 3.0).epsilon(0.05));

  for (const char* name : {"spectrum.csv", "classify.csv", "run.csv", "phi.csv",
                           "diagnostics.csv"}) {
    INFO(name);
    CHECK(fs::exists(fs::path(rec.dir) / name));
  }
  const auto verdict = Config::from_file((fs::path(rec.dir) / "verdict.txt").string());
  CHECK(verdict.get_string("predicted") == "BlowsUpAllData");
  CHECK(verdict.get_string("observed") == "BlowUp");
  CHECK(verdict.get_string("monitor.phi_ode") == "pass");
  CHECK(verdict.get_string("monitor.g_decay") == "pass");
  CHECK(verdict.get_double("spectrum.lambda1") == Catch::Approx(1.0).epsilon(0.05));

  const auto rerun = run_experiment(cfg);
  CHECK(rerun.cached);
  CHECK(rerun.predicted == rec.predicted);
  CHECK(rerun.observed == rec.observed);
  CHECK(rerun.t_star_or_horizon == rec.t_star_or_horizon);
  CHECK(rerun.artifacts.size() == rec.artifacts.size());
}

TEST_CASE("pipeline: subcritical Dirichlet run with ball monitors") {
  fs::remove_all("cfg_runs_global");
  const auto cfg = global_config("cfg_runs_global");
  const auto rec = run_experiment(cfg);

  for (const auto& s : rec.stages) {
    INFO(s.stage << ": " << s.message);
    CHECK(s.ok);
  }
  CHECK(rec.predicted == "GlobalForSmallData");
  CHECK(rec.observed == "Global");
  CHECK(rec.t_star_or_horizon == 1.0);

  const auto verdict = Config::from_file((fs::path(rec.dir) / "verdict.txt").string());
  CHECK(verdict.get_double("certificate.alpha") == Catch::Approx(0.5));
  CHECK(verdict.get_string("monitor.supersolution") == "pass");
  CHECK(verdict.get_string("monitor.kaplan_ball") == "pass");
  CHECK(verdict.get_string("ball.crossed") == "false");
  CHECK(verdict.get_double("ball.threshold") > 0.0);
}

TEST_CASE("identical configs produce byte-identical data files") {
  fs::remove_all("cfg_runs_bits_a");
  fs::remove_all("cfg_runs_bits_b");
  auto a = global_config("cfg_runs_bits_a");
  auto b = global_config("cfg_runs_bits_b");
  const auto ra = run_experiment(a);
  const auto rb = run_experiment(b);
  CHECK(ra.config_hash == rb.config_hash);
  for (const char* name : {"spectrum.csv", "classify.csv", "run.csv", "verdict.txt"}) {
    INFO(name);
    CHECK(read_file(fs::path(ra.dir) / name) == read_file(fs::path(rb.dir) / name));
  }
}

TEST_CASE("stage failure is recorded and cached, partial outputs kept") {
  fs::remove_all("cfg_runs_fail");
  auto cfg = blowup_config("cfg_runs_fail");
  cfg.set("scheme.U_max", 0.5);  // below the initial sup: simulate rejects it
  const auto rec = run_experiment(cfg);

  REQUIRE(rec.stages.size() == 3);
  CHECK(rec.stages[0].ok);
  CHECK(rec.stages[1].ok);
  CHECK_FALSE(rec.stages[2].ok);
  CHECK(rec.stages[2].stage == "simulate");
  CHECK_FALSE(rec.stages[2].message.empty());
  CHECK(rec.observed.empty());
  CHECK(fs::exists(fs::path(rec.dir) / "spectrum.csv"));
  CHECK(fs::exists(fs::path(rec.dir) / "classify.csv"));
  CHECK_FALSE(fs::exists(fs::path(rec.dir) / "run.csv"));

  const auto rerun = run_experiment(cfg);
  CHECK(rerun.cached);
  bool saw_failed_simulate = false;
  for (const auto& s : rerun.stages)
    if (s.stage == "simulate" && !s.ok) saw_failed_simulate = true;
  CHECK(saw_failed_simulate);
}

TEST_CASE("sweep: summary rows in input order, failures isolated") {
  fs::remove_all("cfg_runs_sweep");
  auto base = blowup_config("cfg_runs_sweep");
  base.set("scheme.T_end", 0.4);

  SECTION("empty value list") {
    const auto recs = run_sweep(base, "reaction.alpha", {});
    CHECK(recs.empty());
    const auto text = read_file("cfg_runs_sweep/sweep-reaction-alpha/summary.csv");
    CHECK(text == "value,predicted,observed,t_star_or_horizon\n");
  }

  SECTION("axis validation") {
    CHECK_THROWS_AS(run_sweep(base, "reaction.gamma", {1.0}), config_error);
    auto strcfg = base;
    strcfg.set("note.text", "abc");
    CHECK_THROWS_AS(run_sweep(strcfg, "note.text", {1.0}), config_error);
  }

  SECTION("bad point is isolated, pool runs the rest") {
    const auto recs = run_sweep(base, "reaction.alpha", {3.0, -1.0}, 2);
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].predicted == "BlowsUpAllData");
    CHECK(recs[0].observed == "BlowUp");
    CHECK(recs[1].predicted == "error");
    REQUIRE_FALSE(recs[1].stages.empty());
    CHECK_FALSE(recs[1].stages.back().ok);

    const auto text = read_file("cfg_runs_sweep/sweep-reaction-alpha/summary.csv");
    CHECK(text.find("BlowsUpAllData,BlowUp") != std::string::npos);
    CHECK(text.find("error,error") != std::string::npos);
  }

  SECTION("duplicate values share one run directory") {
    const auto recs = run_sweep(base, "reaction.alpha", {3.0, 3.0}, 2);
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].config_hash == recs[1].config_hash);
    CHECK(recs[0].observed == recs[1].observed);
    CHECK(recs[0].t_star_or_horizon == recs[1].t_star_or_horizon);
  }

  SECTION("resolution sweep emits a blow-up time table") {
    const auto recs = run_sweep(base, "grid.n", {50.0, 100.0}, 2);
    REQUIRE(recs.size() == 2);
    for (const auto& rec : recs) {
      CHECK(rec.observed == "BlowUp");
      CHECK(rec.t_star_or_horizon == Catch::Approx(1.0 / 3.0).margin(1.0 / 60.0));
    }
    const auto text = read_file("cfg_runs_sweep/sweep-grid-n/summary.csv");
    CHECK(text.find("50,") != std::string::npos);
    CHECK(text.find("100,") != std::string::npos);
  }
}
