// Batch CLI for the two-scale homogenization engine: `run` executes one
// configured simulation, `compare` quantifies a run against the full cell
// model, `bench` executes a method-comparison matrix.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "csahom/bench.hpp"
#include "csahom/compare.hpp"
#include "csahom/runner.hpp"

namespace {

int report_failure(const char* what, int code, const std::string& reason) {
  std::fprintf(stderr, "csahomog %s: exit=%d reason=%s\n", what, code, reason.c_str());
  return code;
}

int cmd_run(const std::string& config, const csahom::ConfigOverrides& ov) {
  const csahom::RunOutcome out = csahom::run_simulation_file(config, ov);
  if (out.exit_code != 0) return report_failure("run", out.exit_code, out.reason);
  return 0;
}

int cmd_compare(const std::string& dir_a, const std::string& dir_b,
                const std::vector<std::string>& probes, int threads) {
  csahom::CompareOptions opt;
  opt.probes = probes;
  opt.threads = threads;
  const csahom::CompareResult res = csahom::compare_runs(dir_a, dir_b, opt);
  if (res.exit_code != 0) return report_failure("compare", res.exit_code, res.reason);
  std::printf("records replayed: %ld (micro solves %ld)\n", res.records, res.replay_micro_steps);
  std::printf("max relative error   S %.6e   A %.6e\n", res.max_err_S, res.max_err_A);
  std::printf("cumulative error     S %.6e   A %.6e\n", res.cum_err_S, res.cum_err_A);
  for (const auto& [name, v] : res.probe_cum_S)
    std::printf("probe %-8s cum S %.6e   cum A %.6e\n", name.c_str(), v,
                res.probe_cum_A.at(name));
  for (size_t k = 0; k < res.u_err.size(); ++k)
    std::printf("step %2zu displacement error vs reference %.6e\n", k, res.u_err[k]);
  return 0;
}

int cmd_bench(const std::string& matrix, const std::string& out_dir, int threads) {
  const csahom::BenchReport rep = csahom::run_bench(matrix, out_dir, threads);
  if (rep.exit_code == 2 && rep.cases.empty())
    return report_failure("bench", rep.exit_code, rep.reason);
  std::printf("%-16s %-6s %4s %10s %10s %10s %12s %6s\n", "case", "method", "exit", "total[s]",
              "offline[s]", "coeff[s]", "micro_solves", "adapt");
  for (const csahom::BenchCase& c : rep.cases)
    std::printf("%-16s %-6s %4d %10.3f %10.3f %10.3f %12ld %6ld\n", c.label.c_str(),
                c.method.c_str(), c.outcome.exit_code, c.total_s, c.offline_s, c.coefficients_s,
                c.micro_solves, c.adaptations);
  if (rep.exit_code != 0) return report_failure("bench", rep.exit_code, rep.reason);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-scale homogenization for locally periodic hyperelastic structures"};
  app.require_subcommand(1);

  // run
  std::string run_config;
  csahom::ConfigOverrides ov;
  double opt_rho = -1.0, opt_delta = -1.0;
  long long opt_seed = -1;
  int opt_threads = -1, opt_steps = -1;
  std::string opt_method, opt_out;
  CLI::App* run = app.add_subcommand("run", "execute one configured simulation");
  run->add_option("config", run_config, "run configuration file")->required();
  run->add_option("--method", opt_method, "override the coefficient method (fe2|csa|pod)");
  run->add_option("--rho", opt_rho, "override the cluster coverage radius");
  run->add_option("--delta", opt_delta, "override the basis truncation tolerance");
  run->add_option("--seed", opt_seed, "override the clustering seed");
  run->add_option("--out", opt_out, "override the output directory");
  run->add_option("--threads", opt_threads, "worker threads (0 = hardware)");
  run->add_option("--steps", opt_steps, "override the load step count");

  // compare
  std::string cmp_a, cmp_b, cmp_probes;
  int cmp_threads = -1;
  CLI::App* cmp = app.add_subcommand("compare", "replay a run through the full cell model");
  cmp->add_option("run", cmp_a, "output directory of the run to evaluate")->required();
  cmp->add_option("reference", cmp_b, "output directory of the reference run")->required();
  cmp->add_option("--probes", cmp_probes, "comma-separated probe names (default: all)");
  cmp->add_option("--threads", cmp_threads, "worker threads (0 = hardware)");

  // bench
  std::string bench_matrix, bench_out = "bench_out";
  int bench_threads = -1;
  CLI::App* bench = app.add_subcommand("bench", "execute a method-comparison matrix");
  bench->add_option("matrix", bench_matrix, "bench matrix file")->required();
  bench->add_option("--out", bench_out, "report/output directory");
  bench->add_option("--threads", bench_threads, "worker threads (0 = hardware)");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    ov.method = opt_method;
    ov.rho = opt_rho;
    ov.delta = opt_delta;
    ov.seed = opt_seed;
    ov.out = opt_out;
    ov.threads = opt_threads;
    ov.steps = opt_steps;
    return cmd_run(run_config, ov);
  }
  if (cmp->parsed()) {
    std::vector<std::string> probes;
    std::string cur;
    for (char c : cmp_probes) {
      if (c == ',') {
        if (!cur.empty()) probes.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    if (!cur.empty()) probes.push_back(cur);
    return cmd_compare(cmp_a, cmp_b, probes, cmp_threads);
  }
  return cmd_bench(bench_matrix, bench_out, bench_threads);
}
