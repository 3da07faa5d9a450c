#include "csahom/compare.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "csahom/error.hpp"
#include "csahom/fe2.hpp"
#include "csahom/parallel.hpp"

namespace csahom {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json load_json(const fs::path& p) {
  std::ifstream is(p);
  if (!is) throw Error("cannot open " + p.string());
  json j;
  is >> j;
  return j;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double to_num(const std::string& s, const fs::path& file) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw Error(file.string() + ": bad number '" + s + "'");
  return v;
}

struct Block {
  int step = 0;
  int iter = 0;
  std::vector<Mat2> f;                   // per qp
  std::vector<Mat3> s_rec;               // recorded stress per qp
  std::vector<std::array<double, 16>> a_rec;  // recorded in-plane moduli per qp
};

std::vector<Block> read_traces(const fs::path& dir, int n_qp) {
  std::vector<Block> blocks;
  {
    std::ifstream is(dir / "qp_states.csv");
    if (!is) throw Error("cannot open " + (dir / "qp_states.csv").string());
    std::string line;
    std::getline(is, line);  // header
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      const auto v = split_csv(line);
      if (v.size() != 7) throw Error("qp_states.csv: expected 7 columns");
      const int step = static_cast<int>(to_num(v[0], dir));
      const int iter = static_cast<int>(to_num(v[1], dir));
      const int qp = static_cast<int>(to_num(v[2], dir));
      if (blocks.empty() || blocks.back().step != step || blocks.back().iter != iter) {
        Block b;
        b.step = step;
        b.iter = iter;
        b.f.resize(static_cast<size_t>(n_qp));
        blocks.push_back(std::move(b));
      }
      if (qp < 0 || qp >= n_qp) throw Error("qp_states.csv: qp index out of range");
      Mat2 f;
      f << to_num(v[3], dir), to_num(v[4], dir), to_num(v[5], dir), to_num(v[6], dir);
      blocks.back().f[static_cast<size_t>(qp)] = f;
    }
  }
  {
    std::ifstream is(dir / "qp_coeffs.csv");
    if (!is) throw Error("cannot open " + (dir / "qp_coeffs.csv").string());
    std::string line;
    std::getline(is, line);
    size_t bi = 0;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      const auto v = split_csv(line);
      if (v.size() != 23) throw Error("qp_coeffs.csv: expected 23 columns");
      const int step = static_cast<int>(to_num(v[0], dir));
      const int iter = static_cast<int>(to_num(v[1], dir));
      const int qp = static_cast<int>(to_num(v[2], dir));
      while (bi < blocks.size() && (blocks[bi].step != step || blocks[bi].iter != iter)) ++bi;
      if (bi >= blocks.size()) throw Error("qp_coeffs.csv: unmatched (step, iter) block");
      Block& b = blocks[bi];
      if (b.s_rec.empty()) {
        b.s_rec.assign(static_cast<size_t>(n_qp), Mat3::Zero());
        b.a_rec.assign(static_cast<size_t>(n_qp), {});
      }
      Mat3 s = Mat3::Zero();
      s(0, 0) = to_num(v[3], dir);
      s(1, 1) = to_num(v[4], dir);
      s(2, 2) = to_num(v[5], dir);
      s(0, 1) = s(1, 0) = to_num(v[6], dir);
      b.s_rec[static_cast<size_t>(qp)] = s;
      for (int c = 0; c < 16; ++c)
        b.a_rec[static_cast<size_t>(qp)][static_cast<size_t>(c)] = to_num(v[static_cast<size_t>(7 + c)], dir);
    }
  }
  for (const Block& b : blocks)
    if (b.s_rec.empty()) throw Error("qp_coeffs.csv: missing block for a recorded state");
  return blocks;
}

/// quantity "u" rows of metrics.csv: value of the last iteration per step.
/// Key: (step, probe) -> (u1, u2).
std::map<std::pair<int, std::string>, Vec2> read_u_trace(const fs::path& dir) {
  std::ifstream is(dir / "metrics.csv");
  if (!is) throw Error("cannot open " + (dir / "metrics.csv").string());
  std::map<std::pair<int, std::string>, std::pair<int, Vec2>> best;  // value + iter
  std::string line;
  std::getline(is, line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto v = split_csv(line);
    if (v.size() != 6) throw Error("metrics.csv: expected 6 columns");
    if (v[3] != "u") continue;
    const int step = static_cast<int>(to_num(v[0], dir));
    const int iter = static_cast<int>(to_num(v[1], dir));
    const int comp = static_cast<int>(to_num(v[4], dir));
    auto& slot = best[{step, v[2]}];
    if (iter > slot.first) {
      slot.first = iter;
      // A fresh final iteration invalidates previously stored components;
      // both components repeat per iteration so they are overwritten in pairs.
    }
    if (iter == slot.first) slot.second[comp - 1] = to_num(v[5], dir);
    }
  std::map<std::pair<int, std::string>, Vec2> out;
  for (const auto& [k, v] : best) out[k] = v.second;
  return out;
}

double rel_component_err(double a, double ref, double denom) {
  const double num = std::abs(a - ref);
  if (denom == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return num / denom;
}

}  // namespace

CompareResult compare_runs(const std::string& dir_a, const std::string& dir_b,
                           const CompareOptions& opt) {
  CompareResult res;
  json meta_a, meta_b;
  try {
    meta_a = load_json(fs::path(dir_a) / "run_meta.json");
    meta_b = load_json(fs::path(dir_b) / "run_meta.json");
  } catch (const std::exception& e) {
    res.exit_code = 2;
    res.reason = e.what();
    return res;
  }

  try {
    if (meta_a.at("macro_checksum") != meta_b.at("macro_checksum"))
      throw Error("runs use different macro meshes");
    if (meta_a.at("micro_checksum") != meta_b.at("micro_checksum"))
      throw Error("runs use different cell meshes");
    if (meta_a.at("materials") != meta_b.at("materials"))
      throw Error("runs use different materials");
    if (meta_a.at("steps") != meta_b.at("steps"))
      throw Error("runs use different load step counts");

    // Probe selection and bindings.
    std::vector<std::pair<std::string, int>> probes;  // name -> qp
    if (opt.probes.empty()) {
      for (const auto& [name, p] : meta_a.at("probes").items())
        probes.emplace_back(name, p.at("qp").get<int>());
    } else {
      for (const std::string& name : opt.probes) {
        if (!meta_a.at("probes").contains(name))
          throw Error("probe '" + name + "' is not recorded in " + dir_a);
        probes.emplace_back(name, meta_a.at("probes").at(name).at("qp").get<int>());
      }
    }
    for (const auto& [name, qp] : probes) {
      (void)qp;
      res.probe_cum_S[name] = 0.0;
      res.probe_cum_A[name] = 0.0;
    }

    // Rebuild the cell model with the run's own settings.
    const Mesh micro_mesh = load_mesh(meta_a.at("micro_mesh").get<std::string>());
    if (mesh_checksum(micro_mesh) != meta_a.at("micro_checksum").get<std::uint64_t>())
      throw Error("cell mesh file changed since the run was recorded");
    const PeriodicCell cell = match_periodic(micro_mesh);
    MicroParams mp;
    for (const auto& [region, m] : meta_a.at("materials").items())
      mp.materials[std::stoi(region)] = MaterialParams{m.at("K").get<double>(),
                                                       m.at("mu").get<double>()};
    mp.eps_inner = meta_a.at("eps_micro").get<double>();
    mp.max_inner = meta_a.at("max_micro_iter").get<int>();
    mp.max_substep_splits = meta_a.at("max_substep_splits").get<int>();

    const int n_qp = meta_a.at("n_qp").get<int>();
    const std::vector<Block> blocks = read_traces(dir_a, n_qp);

    MicroState ref = make_micro_state(cell, mp);
    solve_correctors(ref);
    std::vector<MicroState> states(static_cast<size_t>(n_qp), ref);
    SolveCounters counters;
    const int threads = resolve_threads(opt.threads);

    std::ofstream cm(fs::path(dir_a) / "compare_metrics.csv");
    cm << "step,iter,probe,quantity,value\n";

    std::vector<double> err_s(static_cast<size_t>(n_qp));
    std::vector<double> err_a(static_cast<size_t>(n_qp));
    for (const Block& b : blocks) {
      parallel_for(n_qp, threads, [&](int q) {
        const PolarFactors pf = polar_decompose(b.f[static_cast<size_t>(q)]);
        const CoefficientSet cs =
            advance_to_stretch(states[static_cast<size_t>(q)], pf.U, false, &counters);
        const Mat3 r3 = embed_deformation(pf.R);
        const Mat3 s_ref = rotate(cs.S, r3);
        const Tensor4 a_ref = rotate(cs.A, r3);

        const double dens = s_ref.norm();  // Frobenius
        double fs2 = 0.0;
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
              for (int l = 0; l < 2; ++l) fs2 += a_ref(i, j, k, l) * a_ref(i, j, k, l);
        const double dena = std::sqrt(fs2);

        const Mat3& s_a = b.s_rec[static_cast<size_t>(q)];
        double es = 0.0;
        const int sidx[4][2] = {{0, 0}, {1, 1}, {2, 2}, {0, 1}};
        for (const auto& ij : sidx)
          es = std::max(es, rel_component_err(s_a(ij[0], ij[1]), s_ref(ij[0], ij[1]), dens));
        double ea = 0.0;
        int c = 0;
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
              for (int l = 0; l < 2; ++l) {
                ea = std::max(ea, rel_component_err(b.a_rec[static_cast<size_t>(q)][static_cast<size_t>(c)],
                                                    a_ref(i, j, k, l), dena));
                ++c;
              }
        err_s[static_cast<size_t>(q)] = es;
        err_a[static_cast<size_t>(q)] = ea;
      });

      double rec_s = 0.0, rec_a = 0.0;
      for (const auto& [name, qp] : probes) {
        const double es = err_s[static_cast<size_t>(qp)];
        const double ea = err_a[static_cast<size_t>(qp)];
        res.probe_cum_S[name] += es;
        res.probe_cum_A[name] += ea;
        rec_s = std::max(rec_s, es);
        rec_a = std::max(rec_a, ea);
        cm << b.step << ',' << b.iter << ',' << name << ",S," << g17(es) << '\n';
        cm << b.step << ',' << b.iter << ',' << name << ",A," << g17(ea) << '\n';
      }
      res.cum_err_S += rec_s;
      res.cum_err_A += rec_a;
      for (int q = 0; q < n_qp; ++q) {
        res.max_err_S = std::max(res.max_err_S, err_s[static_cast<size_t>(q)]);
        res.max_err_A = std::max(res.max_err_A, err_a[static_cast<size_t>(q)]);
      }
      res.records++;
    }
    res.replay_micro_steps = counters.micro_steps.load();

    // Displacement error against run B, end-of-step values.
    const auto u_a = read_u_trace(dir_a);
    const auto u_b = read_u_trace(dir_b);
    const int steps = meta_a.at("steps_done").get<int>();
    const int steps_b = meta_b.at("steps_done").get<int>();
    res.u_err.assign(static_cast<size_t>(std::min(steps, steps_b)), 0.0);
    for (size_t k = 0; k < res.u_err.size(); ++k) {
      double worst = 0.0;
      for (const auto& [name, qp] : probes) {
        (void)qp;
        const auto ia = u_a.find({static_cast<int>(k), name});
        const auto ib = u_b.find({static_cast<int>(k), name});
        if (ia == u_a.end() || ib == u_b.end()) continue;
        const double den = ib->second.norm();
        const double num = (ia->second - ib->second).norm();
        worst = std::max(worst, den == 0.0 ? (num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity())
                                           : num / den);
      }
      res.u_err[k] = worst;
      cm << k << ",-1,all,u," << g17(worst) << '\n';
    }

    json summary;
    summary["run_a"] = fs::absolute(dir_a).string();
    summary["run_b"] = fs::absolute(dir_b).string();
    summary["records"] = res.records;
    summary["max_err_S"] = res.max_err_S;
    summary["max_err_A"] = res.max_err_A;
    summary["cum_err_S"] = res.cum_err_S;
    summary["cum_err_A"] = res.cum_err_A;
    for (const auto& [name, v] : res.probe_cum_S) summary["probe_cum_S"][name] = v;
    for (const auto& [name, v] : res.probe_cum_A) summary["probe_cum_A"][name] = v;
    summary["u_err"] = res.u_err;
    summary["replay_micro_steps"] = res.replay_micro_steps;
    std::ofstream ss(fs::path(dir_a) / "compare_summary.json");
    ss << summary.dump(2) << "\n";
  } catch (const std::exception& e) {
    res.exit_code = 2;
    res.reason = e.what();
    return res;
  }
  return res;
}

}  // namespace csahom
