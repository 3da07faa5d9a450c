#include "csahom/runner.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>

#include <json.hpp>

#include "csahom/csa.hpp"
#include "csahom/error.hpp"
#include "csahom/fe2.hpp"
#include "csahom/pod.hpp"
#include "csahom/vtk.hpp"

namespace csahom {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// In-plane stress components reported per probe: (row, col) in the 3x3 frame.
constexpr int kSIdx[4][2] = {{0, 0}, {1, 1}, {2, 2}, {0, 1}};
const char* const kSName[4] = {"11", "22", "33", "12"};
// Moduli components reported per probe.
constexpr int kAIdx[6][4] = {{0, 0, 0, 0}, {0, 0, 1, 1}, {0, 0, 0, 1},
                             {1, 1, 1, 1}, {1, 1, 0, 1}, {0, 1, 0, 1}};
const char* const kAName[6] = {"1111", "1122", "1112", "2222", "2212", "1212"};

struct ProbeBinding {
  std::string name;
  Vec2 pos = Vec2::Zero();
  int qp = -1;
  int node = -1;
};

std::vector<ProbeBinding> bind_probes(const RunConfig& cfg, const Mesh& mesh0,
                                      const std::vector<Vec2>& qp_pos) {
  std::vector<ProbeBinding> out;
  for (const auto& [name, pos] : cfg.probes) {
    ProbeBinding b;
    b.name = name;
    b.pos = pos;
    double bq = 0.0, bn = 0.0;
    for (size_t q = 0; q < qp_pos.size(); ++q) {
      const double d = (qp_pos[q] - pos).squaredNorm();
      if (b.qp < 0 || d < bq) {
        b.qp = static_cast<int>(q);
        bq = d;
      }
    }
    for (size_t i = 0; i < mesh0.nodes.size(); ++i) {
      const double d = (mesh0.nodes[i] - pos).squaredNorm();
      if (b.node < 0 || d < bn) {
        b.node = static_cast<int>(i);
        bn = d;
      }
    }
    out.push_back(b);
  }
  return out;
}

/// Forwards coefficient requests, accumulating wall time.
class TimedBackend : public CoefficientBackend {
 public:
  TimedBackend(CoefficientBackend& inner, double& acc) : inner_(inner), acc_(acc) {}
  void get_coefficients(const std::vector<Mat2>& f_qp, CoefficientField& out) override {
    const auto t0 = Clock::now();
    inner_.get_coefficients(f_qp, out);
    acc_ += seconds_since(t0);
  }
  long adaptation_count() const override { return inner_.adaptation_count(); }
  long micro_solves() const override { return inner_.micro_solves(); }

 private:
  CoefficientBackend& inner_;
  double& acc_;
};

void write_step_vtk(const std::string& path, const MacroState& st,
                    const CoefficientField& coeffs) {
  std::vector<Vec2> disp(st.mesh0.nodes.size());
  for (size_t i = 0; i < disp.size(); ++i)
    disp[i] = Vec2(st.u_total[2 * static_cast<int>(i)], st.u_total[2 * static_cast<int>(i) + 1]);
  std::vector<Mat3> stress(st.mesh0.elements.size(), Mat3::Zero());
  if (coeffs.size() == static_cast<size_t>(st.n_qp())) {
    for (size_t e = 0; e < stress.size(); ++e) {
      const int q0 = st.qp_offset[e];
      const int q1 = st.qp_offset[e + 1];
      for (int q = q0; q < q1; ++q) stress[e] += coeffs[static_cast<size_t>(q)].S;
      stress[e] /= double(q1 - q0);
    }
  }
  write_vtk(path, st.mesh, {{"displacement", &disp}}, {{"cauchy_stress", &stress}});
}

}  // namespace

RunOutcome run_simulation(const RunConfig& cfg) {
  const auto t_total = Clock::now();
  double t_offline = 0.0, t_coeffs = 0.0, t_vtk = 0.0;

  RunOutcome outcome;

  // ---- setup (input problems -> exit 2) ------------------------------------
  Mesh macro_mesh, micro_mesh;
  std::unique_ptr<PeriodicCell> cell;
  try {
    fs::create_directories(cfg.out);
    if (cfg.vtk) fs::create_directories(fs::path(cfg.out) / "vtk");
    macro_mesh = load_mesh(cfg.macro_mesh);
    micro_mesh = load_mesh(cfg.micro_mesh);
    cell = std::make_unique<PeriodicCell>(match_periodic(micro_mesh));
  } catch (const Error& e) {
    return {2, e.what()};
  }

  NewtonOptions nopt;
  nopt.eps = cfg.eps_macro;
  nopt.max_iter = cfg.max_macro_iter;
  MacroSolver solver(macro_mesh, cfg.load, nopt);
  const std::vector<ProbeBinding> probes =
      bind_probes(cfg, macro_mesh, solver.qp_positions_reference());
  const int n_qp = solver.state().n_qp();

  // ---- backend (offline solve problems -> exit 4) --------------------------
  SolveCounters counters;
  const MicroParams mp = cfg.micro_params();
  std::unique_ptr<CoefficientBackend> backend;
  CsaBackend* csa = nullptr;
  try {
    const auto t0 = Clock::now();
    if (cfg.method == "fe2") {
      backend = std::make_unique<Fe2Backend>(*cell, mp, n_qp, cfg.threads, &counters);
    } else if (cfg.method == "csa") {
      CsaParams cp;
      cp.rho = cfg.rho;
      cp.seed = cfg.seed;
      cp.tensor_shear_metric = cfg.tensor_shear_metric;
      auto cb = std::make_unique<CsaBackend>(*cell, mp, cp, cfg.threads, &counters);
      csa = cb.get();
      backend = std::move(cb);
    } else if (cfg.method == "pod") {
      ReducedBasis basis;
      bool loaded = false;
      if (!cfg.pod.basis_file.empty() && fs::exists(cfg.pod.basis_file)) {
        try {
          basis = load_basis(cfg.pod.basis_file);
          loaded = basis.mesh_checksum == mesh_checksum(cell->mesh) && basis.delta == cfg.pod.delta;
        } catch (const Error&) {
          loaded = false;
        }
      }
      if (!loaded) {
        const SnapshotBank bank = generate_snapshots(*cell, mp, cfg.pod, cfg.threads, &counters);
        basis = build_basis(bank, cfg.pod.delta, cfg.pod.force_dense);
        if (!cfg.pod.basis_file.empty()) save_basis(basis, cfg.pod.basis_file);
      }
      backend = std::make_unique<PodBackend>(*cell, mp, basis, n_qp, cfg.threads, &counters);
    } else {
      return {2, "unknown method: " + cfg.method};
    }
    t_offline = seconds_since(t0);
  } catch (const ConfigError& e) {
    return {2, e.what()};
  } catch (const Error& e) {
    return {4, std::string("cell model setup failed: ") + e.what()};
  }
  TimedBackend timed(*backend, t_coeffs);

  // ---- output streams ------------------------------------------------------
  const fs::path out(cfg.out);
  std::ofstream metrics(out / "metrics.csv");
  std::ofstream qp_states(out / "qp_states.csv");
  std::ofstream qp_coeffs(out / "qp_coeffs.csv");
  std::ofstream conv(out / "convergence.log");
  if (!metrics || !qp_states || !qp_coeffs || !conv)
    return {2, "cannot create output files under " + cfg.out};
  metrics << "step,iter,probe,quantity,component,value\n";
  qp_states << "step,iter,qp,F11,F12,F21,F22\n";
  qp_coeffs << "step,iter,qp,S11,S22,S33,S12";
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l)
          qp_coeffs << ",A" << (i + 1) << (j + 1) << (k + 1) << (l + 1);
  qp_coeffs << "\n";

  CoefficientField last_coeffs;
  const IterationHook hook = [&](int step, int iter, const FieldVector& u_total,
                                 const std::vector<Mat2>& f_qp, const CoefficientField& coeffs,
                                 double /*residual*/) {
    last_coeffs = coeffs;
    for (int q = 0; q < n_qp; ++q) {
      const Mat2& f = f_qp[static_cast<size_t>(q)];
      qp_states << step << ',' << iter << ',' << q << ',' << g17(f(0, 0)) << ',' << g17(f(0, 1))
                << ',' << g17(f(1, 0)) << ',' << g17(f(1, 1)) << '\n';
      const QpCoefficients& c = coeffs[static_cast<size_t>(q)];
      qp_coeffs << step << ',' << iter << ',' << q << ',' << g17(c.S(0, 0)) << ','
                << g17(c.S(1, 1)) << ',' << g17(c.S(2, 2)) << ',' << g17(c.S(0, 1));
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          for (int k = 0; k < 2; ++k)
            for (int l = 0; l < 2; ++l) qp_coeffs << ',' << g17(c.A(i, j, k, l));
      qp_coeffs << '\n';
    }
    for (const ProbeBinding& pb : probes) {
      const QpCoefficients& c = coeffs[static_cast<size_t>(pb.qp)];
      for (int s = 0; s < 4; ++s)
        metrics << step << ',' << iter << ',' << pb.name << ",S," << kSName[s] << ','
                << g17(c.S(kSIdx[s][0], kSIdx[s][1])) << '\n';
      for (int a = 0; a < 6; ++a)
        metrics << step << ',' << iter << ',' << pb.name << ",A," << kAName[a] << ','
                << g17(c.A(kAIdx[a][0], kAIdx[a][1], kAIdx[a][2], kAIdx[a][3])) << '\n';
      metrics << step << ',' << iter << ',' << pb.name << ",u,1," << g17(u_total[2 * pb.node])
              << '\n';
      metrics << step << ',' << iter << ',' << pb.name << ",u,2," << g17(u_total[2 * pb.node + 1])
              << '\n';
    }
  };

  // ---- load stepping -------------------------------------------------------
  bool oscillated = false;
  int oscillation_step = -1;
  try {
    for (int k = 0; k < cfg.load.n_steps; ++k) {
      const StepResult r = solver.newton_solve(timed, hook);
      for (const IterationRecord& rec : r.history)
        conv << "step " << rec.step << " iter " << rec.iter << " residual " << g17(rec.residual)
             << " scale " << g17(rec.scale) << " adaptations " << rec.adaptations << "\n";
      if (r.oscillation) {
        conv << "step " << r.step << " terminated on residual oscillation after " << r.iterations
             << " iterations\n";
        if (!oscillated) oscillation_step = r.step;
        oscillated = true;
      } else {
        conv << "step " << r.step << " converged in " << r.iterations << " iterations\n";
      }
      if (cfg.vtk) {
        const auto t0 = Clock::now();
        char name[32];
        std::snprintf(name, sizeof name, "step_%03d.vtk", k);
        write_step_vtk((out / "vtk" / name).string(), solver.state(), last_coeffs);
        t_vtk += seconds_since(t0);
      }
    }
    if (oscillated) {
      outcome.exit_code = 3;
      outcome.reason =
          "macro solve oscillated in step " + std::to_string(oscillation_step) + "; run completed";
    }
  } catch (const MicroBackendError& e) {
    outcome = {4, e.what()};
  } catch (const Error& e) {
    outcome = {3, std::string("macro solve failed: ") + e.what()};
  }
  if (csa && csa->registry().fallback_count() > 0)
    conv << "warning: " << csa->registry().fallback_count()
         << " coefficient queries fell outside all coverage balls\n";

  // ---- centroid table ------------------------------------------------------
  {
    std::ofstream cent(out / "centroids.txt");
    if (csa)
      csa->registry().export_text(cent);
    else
      cent << "# id source e11 e22 e12\n";
  }

  // ---- metadata and timings ------------------------------------------------
  {
    nlohmann::json meta;
    meta["method"] = cfg.method;
    meta["macro_mesh"] = fs::absolute(cfg.macro_mesh).string();
    meta["macro_checksum"] = mesh_checksum(macro_mesh);
    meta["micro_mesh"] = fs::absolute(cfg.micro_mesh).string();
    meta["micro_checksum"] = mesh_checksum(micro_mesh);
    for (const auto& [region, m] : cfg.materials) {
      meta["materials"][std::to_string(region)] = {{"K", m.K}, {"mu", m.mu}};
    }
    meta["steps"] = cfg.load.n_steps;
    meta["steps_done"] = solver.state().steps_done;
    meta["rho"] = cfg.rho;
    meta["delta"] = cfg.pod.delta;
    meta["seed"] = cfg.seed;
    meta["shear_metric"] = cfg.tensor_shear_metric ? "tensor" : "plain";
    meta["eps_macro"] = cfg.eps_macro;
    meta["eps_micro"] = cfg.eps_micro;
    meta["max_micro_iter"] = cfg.max_micro_iter;
    meta["max_substep_splits"] = cfg.max_substep_splits;
    meta["n_qp"] = n_qp;
    for (const ProbeBinding& pb : probes)
      meta["probes"][pb.name] = {
          {"x", pb.pos.x()}, {"y", pb.pos.y()}, {"qp", pb.qp}, {"node", pb.node}};
    meta["adaptations"] = backend->adaptation_count();
    meta["micro_solves"] = backend->micro_solves();
    meta["exit_code"] = outcome.exit_code;
    meta["reason"] = outcome.reason;
    meta["oscillation_step"] = oscillation_step;
    std::ofstream ms(out / "run_meta.json");
    ms << meta.dump(2) << "\n";
  }
  {
    nlohmann::json tj;
    tj["total_s"] = seconds_since(t_total);
    tj["offline_s"] = t_offline;
    tj["coefficients_s"] = t_coeffs;
    tj["vtk_s"] = t_vtk;
    tj["steps_done"] = solver.state().steps_done;
    tj["counters"] = {{"micro_steps", counters.micro_steps.load()},
                      {"equilibrations", counters.equilibrations.load()},
                      {"inner_iterations", counters.inner_iterations.load()},
                      {"factorizations", counters.factorizations.load()},
                      {"linear_solves", counters.linear_solves.load()},
                      {"adaptations", backend->adaptation_count()}};
    std::ofstream ts(out / "timing.json");
    ts << tj.dump(2) << "\n";
  }
  return outcome;
}

RunOutcome run_simulation_file(const std::string& config_path, const ConfigOverrides& ov) {
  RunConfig cfg;
  try {
    cfg = load_config(config_path);
    apply_overrides(cfg, ov);
  } catch (const Error& e) {
    return {2, e.what()};
  }
  return run_simulation(cfg);
}

}  // namespace csahom
