#include "csahom/bench.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "csahom/error.hpp"

namespace csahom {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

struct CaseSpec {
  std::string method;
  ConfigOverrides ov;
};

void apply_token(const std::string& tok, CaseSpec& spec, const std::string& file, int line) {
  const size_t eq = tok.find('=');
  if (eq == std::string::npos) throw ParseError("expected key=value, got '" + tok + "'", file, line);
  const std::string key = tok.substr(0, eq);
  const std::string val = tok.substr(eq + 1);
  try {
    if (key == "rho") spec.ov.rho = std::stod(val);
    else if (key == "delta") spec.ov.delta = std::stod(val);
    else if (key == "seed") spec.ov.seed = std::stoll(val);
    else if (key == "steps") spec.ov.steps = std::stoi(val);
    else if (key == "threads") spec.ov.threads = std::stoi(val);
    else throw ParseError("unknown override '" + key + "'", file, line);
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception&) {
    throw ParseError("bad value for '" + key + "': '" + val + "'", file, line);
  }
}

}  // namespace

BenchReport run_bench(const std::string& matrix_path, const std::string& out_dir, int threads) {
  BenchReport report;
  std::string base_cfg;
  std::vector<CaseSpec> specs;
  try {
    std::ifstream is(matrix_path);
    if (!is) throw ConfigError("cannot open bench matrix: " + matrix_path);
    const std::string base_dir = fs::path(matrix_path).parent_path().string();
    std::string raw;
    int lineno = 0;
    while (std::getline(is, raw)) {
      ++lineno;
      const size_t hash = raw.find('#');
      if (hash != std::string::npos) raw.erase(hash);
      const auto toks = split_ws(raw);
      if (toks.empty()) continue;
      if (toks[0] == "base") {
        if (toks.size() != 3 || toks[1] != "=")
          throw ParseError("expected 'base = <config path>'", matrix_path, lineno);
        const fs::path p(toks[2]);
        base_cfg = p.is_absolute() || base_dir.empty()
                       ? p.string()
                       : (fs::path(base_dir) / p).lexically_normal().string();
      } else if (toks[0] == "run") {
        if (toks.size() < 2) throw ParseError("expected 'run <method> ...'", matrix_path, lineno);
        CaseSpec spec;
        spec.method = toks[1];
        spec.ov.method = toks[1];
        for (size_t i = 2; i < toks.size(); ++i)
          apply_token(toks[i], spec, matrix_path, lineno);
        specs.push_back(std::move(spec));
      } else {
        throw ParseError("unknown directive '" + toks[0] + "'", matrix_path, lineno);
      }
    }
    if (base_cfg.empty()) throw ConfigError(matrix_path + ": no 'base =' line");
    if (specs.empty()) throw ConfigError(matrix_path + ": no 'run' lines");
    fs::create_directories(out_dir);
  } catch (const Error& e) {
    report.exit_code = 2;
    report.reason = e.what();
    return report;
  }

  for (size_t i = 0; i < specs.size(); ++i) {
    CaseSpec spec = specs[i];
    if (threads >= 0 && spec.ov.threads < 0) spec.ov.threads = threads;
    char label[64];
    std::snprintf(label, sizeof label, "run_%02d_%s", static_cast<int>(i), spec.method.c_str());
    spec.ov.out = (fs::path(out_dir) / label).string();

    BenchCase bc;
    bc.label = label;
    bc.method = spec.method;
    bc.outcome = run_simulation_file(base_cfg, spec.ov);
    try {
      const json tj = [&] {
        std::ifstream ts(fs::path(spec.ov.out) / "timing.json");
        json j;
        if (ts) ts >> j;
        return j;
      }();
      if (tj.contains("total_s")) {
        bc.total_s = tj["total_s"].get<double>();
        bc.offline_s = tj["offline_s"].get<double>();
        bc.coefficients_s = tj["coefficients_s"].get<double>();
        bc.steps_done = tj["steps_done"].get<int>();
        bc.micro_solves = tj["counters"]["micro_steps"].get<long>();
        bc.adaptations = tj["counters"]["adaptations"].get<long>();
      }
    } catch (const std::exception&) {
      // keep zeros when a failed case left no timing data
    }
    if (bc.outcome.exit_code != 0 && report.exit_code == 0) {
      report.exit_code = bc.outcome.exit_code;
      report.reason = std::string(label) + ": " + bc.outcome.reason;
    }
    report.cases.push_back(std::move(bc));
  }

  json out;
  out["base"] = fs::absolute(base_cfg).string();
  for (const BenchCase& bc : report.cases) {
    json c;
    c["label"] = bc.label;
    c["method"] = bc.method;
    c["exit_code"] = bc.outcome.exit_code;
    c["reason"] = bc.outcome.reason;
    c["total_s"] = bc.total_s;
    c["offline_s"] = bc.offline_s;
    c["coefficients_s"] = bc.coefficients_s;
    c["micro_solves"] = bc.micro_solves;
    c["adaptations"] = bc.adaptations;
    c["steps_done"] = bc.steps_done;
    out["cases"].push_back(c);
  }
  std::ofstream os(fs::path(out_dir) / "bench_report.json");
  os << out.dump(2) << "\n";
  return report;
}

}  // namespace csahom
