// Batch harness: config parsing, override handling, run outputs, exit codes,
// and the trace comparison tool.
#include <filesystem>

#include "csahom/compare.hpp"
#include "csahom/config.hpp"
#include "csahom/error.hpp"
#include "csahom/runner.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace csahom;
namespace fs = std::filesystem;

namespace {

std::string base_config(const std::string& out_dir, const std::string& extra = "") {
  std::string s;
  s += "macro_mesh = " + testutil::data_file("macro/lshape16.txt") + "\n";
  s += "micro_mesh = " + testutil::data_file("micro/cell_tiny.txt") + "\n";
  s += "material.1.K = 5.7e9\nmaterial.1.mu = 1.35e9\n";
  s += "material.2.K = 43.21e9\nmaterial.2.mu = 28.46e9\n";
  s += "method = csa\nrho = 0.005\nseed = 42\nsteps = 3\n";
  s += "fix.1 = xy\ntraction.2.x = 0 0 5e8\n";
  s += "probe.A = 0.05 0.05\nprobe.D = 0.3 0.1\n";
  s += "vtk = 0\n";
  s += "out = " + out_dir + "\n";
  s += extra;
  return s;
}

}  // namespace

TEST_CASE("configs parse every supported key") {
  const auto dir = testutil::fresh_tmp_dir("csahom_test_cfg");
  const auto path = dir / "run.cfg";
  std::string text = base_config((dir / "out").string());
  text += "shear_metric = tensor\n";
  text += "eps_macro = 2e-7\neps_micro = 5e-10\n";
  text += "max_macro_iter = 31\nmax_micro_iter = 17\nmax_substep_splits = 5\n";
  text += "threads = 2\n";
  text += "delta = 0.01\npod.nt = 7\npod.bound = 0.012\npod.dense = 1\n";
  text += "displace.4.y = 0 0 0.001\n";
  text += "body_force = 0 -9.81\n";
  testutil::write_file(path, text);

  const RunConfig cfg = load_config(path.string());
  CHECK(cfg.method == "csa");
  CHECK(cfg.rho == 0.005);
  CHECK(cfg.seed == 42);
  CHECK(cfg.tensor_shear_metric);
  CHECK(cfg.materials.at(1).K == 5.7e9);
  CHECK(cfg.materials.at(2).mu == 28.46e9);
  CHECK(cfg.load.n_steps == 3);
  CHECK(cfg.load.fixed.at(1)[0]);
  CHECK(cfg.load.fixed.at(1)[1]);
  CHECK(cfg.load.tractions.at(2).cy.x() == 5e8);
  CHECK(cfg.load.tractions.at(2).c0.x() == 0.0);
  CHECK(cfg.load.displacements.at(4).cy.y() == 0.001);
  CHECK(cfg.load.body_force.y() == -9.81);
  CHECK(cfg.eps_macro == 2e-7);
  CHECK(cfg.eps_micro == 5e-10);
  CHECK(cfg.max_macro_iter == 31);
  CHECK(cfg.max_micro_iter == 17);
  CHECK(cfg.max_substep_splits == 5);
  CHECK(cfg.threads == 2);
  CHECK(cfg.pod.delta == 0.01);
  CHECK(cfg.pod.n_t == 7);
  CHECK(cfg.pod.bound_max == 0.012);
  CHECK(cfg.pod.bound_min == -0.012);
  CHECK(cfg.pod.force_dense);
  CHECK(cfg.probes.size() == 2);
  CHECK(cfg.probes.at("A").x() == 0.05);
  CHECK(!cfg.vtk);

  const MicroParams mp = cfg.micro_params();
  CHECK(mp.eps_inner == 5e-10);
  CHECK(mp.max_inner == 17);
  CHECK(mp.materials.size() == 2);
}

TEST_CASE("relative mesh paths resolve against the config directory") {
  const auto dir = testutil::fresh_tmp_dir("csahom_test_cfg_rel");
  fs::create_directories(dir / "sub");
  const Mesh m = load_mesh(testutil::data_file("micro/cell_tiny.txt"));
  write_mesh(m, (dir / "cell.txt").string());

  std::string text = "macro_mesh = ../cell.txt\nmicro_mesh = ../cell.txt\n";
  text += "material.1.K = 1e9\nmaterial.1.mu = 4e8\nsteps = 1\n";
  testutil::write_file(dir / "sub" / "run.cfg", text);
  const RunConfig cfg = load_config((dir / "sub" / "run.cfg").string());
  CHECK(fs::path(cfg.macro_mesh).is_absolute());
  CHECK(fs::equivalent(fs::path(cfg.macro_mesh), dir / "cell.txt"));
}

TEST_CASE("broken configs fail with located parse errors") {
  const auto dir = testutil::fresh_tmp_dir("csahom_test_cfg_bad");
  auto expect_parse_fail = [&](const std::string& text, int line) {
    const auto p = dir / "bad.cfg";
    testutil::write_file(p, text);
    try {
      load_config(p.string());
      FAIL("expected parse failure for: " << text);
    } catch (const ParseError& e) {
      CHECK(e.line() == line);
    }
  };

  expect_parse_fail("definitely_not_a_key = 1\n", 1);
  expect_parse_fail("steps = three\n", 1);
  expect_parse_fail("macro_mesh = a\nrho = -0.5 extra\n", 2);
  expect_parse_fail("fix.1 = sideways\n", 1);
  expect_parse_fail("traction.2.x = 1 2\n", 1);  // needs one or three values
  expect_parse_fail("probe.P = 0.1\n", 1);

  // Semantic gaps surface as config errors.
  auto expect_config_fail = [&](const std::string& text) {
    const auto p = dir / "bad.cfg";
    testutil::write_file(p, text);
    CHECK_THROWS_AS(load_config(p.string()), ConfigError);
  };
  expect_config_fail("micro_mesh = cell.txt\nmaterial.1.K = 1e9\nmaterial.1.mu = 1e8\n");
  expect_config_fail("macro_mesh = a\nmicro_mesh = b\n");  // no materials
  expect_config_fail("macro_mesh = a\nmicro_mesh = b\nmaterial.1.K = 1e9\n" +
                     std::string("material.1.mu = 1e8\nrho = 0\n"));
  expect_config_fail("macro_mesh = a\nmicro_mesh = b\nmaterial.1.K = 1e9\n" +
                     std::string("material.1.mu = 1e8\nsteps = 0\n"));

  CHECK_THROWS_AS(load_config((dir / "missing.cfg").string()), Error);
}

TEST_CASE("command-line overrides replace config values") {
  const auto dir = testutil::fresh_tmp_dir("csahom_test_cfg_ov");
  testutil::write_file(dir / "run.cfg", base_config((dir / "out").string()));
  RunConfig cfg = load_config((dir / "run.cfg").string());

  ConfigOverrides ov;
  ov.method = "pod";
  ov.rho = 0.001;
  ov.delta = 0.05;
  ov.seed = 7;
  ov.out = (dir / "elsewhere").string();
  ov.threads = 3;
  ov.steps = 5;
  apply_overrides(cfg, ov);

  CHECK(cfg.method == "pod");
  CHECK(cfg.rho == 0.001);
  CHECK(cfg.pod.delta == 0.05);
  CHECK(cfg.seed == 7);
  CHECK(cfg.out == (dir / "elsewhere").string());
  CHECK(cfg.threads == 3);
  CHECK(cfg.load.n_steps == 5);

  RunConfig cfg2 = load_config((dir / "run.cfg").string());
  apply_overrides(cfg2, ConfigOverrides{});  // no-op
  CHECK(cfg2.method == "csa");
  CHECK(cfg2.load.n_steps == 3);
}

TEST_CASE("failed setups exit with the input error code") {
  const auto dir = testutil::fresh_tmp_dir("csahom_test_run_bad");
  const RunOutcome miss = run_simulation_file((dir / "absent.cfg").string());
  CHECK(miss.exit_code == 2);
  CHECK(!miss.reason.empty());

  testutil::write_file(dir / "badmesh.cfg",
                       "macro_mesh = nope.txt\nmicro_mesh = nope.txt\n"
                       "material.1.K = 1e9\nmaterial.1.mu = 4e8\nsteps = 1\n"
                       "out = " + (dir / "out").string() + "\n");
  const RunOutcome bad = run_simulation_file((dir / "badmesh.cfg").string());
  CHECK(bad.exit_code == 2);

  // A solve pushed past its iteration budget is a solver failure, not an
  // input failure.
  const auto out3 = (dir / "out3").string();
  testutil::write_file(dir / "tight.cfg", base_config(out3, "max_macro_iter = 1\n"));
  const RunOutcome tight = run_simulation_file((dir / "tight.cfg").string());
  CHECK(tight.exit_code == 3);
  CHECK(!tight.reason.empty());
  CHECK(fs::exists(fs::path(out3) / "run_meta.json"));
  const std::string meta = testutil::read_file(fs::path(out3) / "run_meta.json");
  CHECK(meta.find("\"exit_code\": 3") != std::string::npos);
}

TEST_CASE("a full run produces the advertised artifacts and is repeatable") {
  const auto dir = testutil::fresh_tmp_dir("csahom_test_run");
  const auto out1 = (dir / "r1").string();
  const auto out2 = (dir / "r2").string();
  testutil::write_file(dir / "run.cfg", base_config(out1));

  const RunOutcome r1 = run_simulation_file((dir / "run.cfg").string());
  REQUIRE(r1.exit_code == 0);
  for (const char* f : {"metrics.csv", "qp_states.csv", "qp_coeffs.csv", "convergence.log",
                        "centroids.txt", "run_meta.json", "timing.json"})
    CHECK(fs::exists(fs::path(out1) / f));
  CHECK(!fs::exists(fs::path(out1) / "vtk"));  // vtk disabled in the config

  ConfigOverrides ov;
  ov.out = out2;
  const RunOutcome r2 = run_simulation_file((dir / "run.cfg").string(), ov);
  REQUIRE(r2.exit_code == 0);
  CHECK(testutil::read_file(fs::path(out1) / "metrics.csv") ==
        testutil::read_file(fs::path(out2) / "metrics.csv"));
  CHECK(testutil::read_file(fs::path(out1) / "centroids.txt") ==
        testutil::read_file(fs::path(out2) / "centroids.txt"));
  CHECK(testutil::read_file(fs::path(out1) / "qp_coeffs.csv") ==
        testutil::read_file(fs::path(out2) / "qp_coeffs.csv"));
}

TEST_CASE("comparison rejects runs that were not set up identically") {
  const auto dir = testutil::fresh_tmp_dir("csahom_test_cmp");
  const auto out_a = (dir / "a").string();
  const auto out_b = (dir / "b").string();
  testutil::write_file(dir / "a.cfg", base_config(out_a));
  // Same macro problem, different cell: not comparable.
  std::string b = base_config(out_b);
  const std::string from = testutil::data_file("micro/cell_tiny.txt");
  const std::string to = testutil::data_file("micro/cell_sym.txt");
  b.replace(b.find(from), from.size(), to);
  testutil::write_file(dir / "b.cfg", b);

  REQUIRE(run_simulation_file((dir / "a.cfg").string()).exit_code == 0);
  REQUIRE(run_simulation_file((dir / "b.cfg").string()).exit_code == 0);

  const CompareResult bad = compare_runs(out_a, out_b);
  CHECK(bad.exit_code == 2);
  CHECK(!bad.reason.empty());

  const CompareResult missing = compare_runs(out_a, (dir / "nowhere").string());
  CHECK(missing.exit_code == 2);

  // A run against itself replays cleanly with zero displacement error.
  const CompareResult self = compare_runs(out_a, out_a);
  REQUIRE(self.exit_code == 0);
  CHECK(self.records > 0);
  CHECK(self.replay_micro_steps > 0);
  for (double e : self.u_err) CHECK(e == 0.0);
  CHECK(self.max_err_S < 0.05);  // coarse cover: small but nonzero drift
  CHECK(fs::exists(fs::path(out_a) / "compare_metrics.csv"));
  CHECK(fs::exists(fs::path(out_a) / "compare_summary.json"));
}
