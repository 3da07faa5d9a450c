#include "csahom/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "csahom/error.hpp"

namespace csahom {

MicroParams RunConfig::micro_params() const {
  MicroParams mp;
  mp.materials = materials;
  mp.eps_inner = eps_micro;
  mp.max_inner = max_micro_iter;
  mp.max_substep_splits = max_substep_splits;
  return mp;
}

namespace {

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

struct Line {
  std::string file;
  int number;
  std::string key;
  std::vector<std::string> values;
  // Highest value index a handler has read; anything beyond it is a typo the
  // user should hear about rather than silently ignored.
  mutable size_t used = 0;

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, file, number); }

  double num(size_t i) const {
    if (i >= values.size()) fail("missing value for '" + key + "'");
    used = std::max(used, i + 1);
    try {
      size_t pos = 0;
      const double v = std::stod(values[i], &pos);
      if (pos != values[i].size()) fail("bad number '" + values[i] + "'");
      return v;
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception&) {
      fail("bad number '" + values[i] + "'");
    }
  }
  long long integer(size_t i) const {
    const double v = num(i);
    const long long n = static_cast<long long>(v);
    if (static_cast<double>(n) != v) fail("expected an integer, got '" + values[i] + "'");
    return n;
  }
  bool flag(size_t i) const {
    if (i >= values.size()) fail("missing value for '" + key + "'");
    used = std::max(used, i + 1);
    const std::string& v = values[i];
    if (v == "1" || v == "true" || v == "on") return true;
    if (v == "0" || v == "false" || v == "off") return false;
    fail("expected a boolean (0/1/true/false), got '" + v + "'");
  }
  const std::string& str(size_t i) const {
    if (i >= values.size()) fail("missing value for '" + key + "'");
    used = std::max(used, i + 1);
    return values[i];
  }
  void expect_count(size_t n) const {
    if (values.size() != n)
      fail("'" + key + "' expects " + std::to_string(n) + " value(s), got " +
           std::to_string(values.size()));
    used = std::max(used, n);
  }
  void check_consumed() const {
    if (used < values.size())
      fail("unexpected trailing value '" + values[used] + "' for '" + key + "'");
  }
};

std::vector<std::string> split_key(const std::string& key) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : key) {
    if (c == '.') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  return parts;
}

int parse_tag(const Line& ln, const std::string& s) {
  try {
    size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    ln.fail("expected an integer tag, got '" + s + "'");
  }
}

void set_poly(const Line& ln, TractionPoly& poly, const std::string& comp) {
  int c;
  if (comp == "x") c = 0;
  else if (comp == "y") c = 1;
  else ln.fail("component must be 'x' or 'y', got '" + comp + "'");
  if (ln.values.size() != 1 && ln.values.size() != 3)
    ln.fail("'" + ln.key + "' expects 1 (constant) or 3 (c0 cx cy) values");
  poly.c0[c] = ln.num(0);
  if (ln.values.size() == 3) {
    poly.cx[c] = ln.num(1);
    poly.cy[c] = ln.num(2);
  }
}

std::string resolve_path(const std::string& base_dir, const std::string& p) {
  const std::filesystem::path fp(p);
  if (fp.is_absolute() || base_dir.empty()) return p;
  return (std::filesystem::path(base_dir) / fp).lexically_normal().string();
}

}  // namespace

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  const std::string base_dir = std::filesystem::path(path).parent_path().string();

  RunConfig cfg;
  std::string raw;
  int lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    const size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const size_t eq = raw.find('=');
    if (eq == std::string::npos) {
      if (!split_ws(raw).empty())
        throw ParseError("expected 'key = value'", path, lineno);
      continue;
    }
    Line ln;
    ln.file = path;
    ln.number = lineno;
    {
      const auto keys = split_ws(raw.substr(0, eq));
      if (keys.size() != 1) ln.fail("expected exactly one key before '='");
      ln.key = keys[0];
    }
    ln.values = split_ws(raw.substr(eq + 1));
    const auto parts = split_key(ln.key);

    if (ln.key == "macro_mesh") {
      cfg.macro_mesh = resolve_path(base_dir, ln.str(0));
    } else if (ln.key == "micro_mesh") {
      cfg.micro_mesh = resolve_path(base_dir, ln.str(0));
    } else if (parts.size() == 3 && parts[0] == "material") {
      const int region = parse_tag(ln, parts[1]);
      ln.expect_count(1);
      if (parts[2] == "K") cfg.materials[region].K = ln.num(0);
      else if (parts[2] == "mu") cfg.materials[region].mu = ln.num(0);
      else ln.fail("material property must be 'K' or 'mu'");
    } else if (ln.key == "method") {
      cfg.method = ln.str(0);
      if (cfg.method != "fe2" && cfg.method != "csa" && cfg.method != "pod")
        ln.fail("method must be fe2, csa, or pod");
    } else if (ln.key == "rho") {
      cfg.rho = ln.num(0);
    } else if (ln.key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(ln.integer(0));
    } else if (ln.key == "shear_metric") {
      const std::string& v = ln.str(0);
      if (v == "plain") cfg.tensor_shear_metric = false;
      else if (v == "tensor") cfg.tensor_shear_metric = true;
      else ln.fail("shear_metric must be 'plain' or 'tensor'");
    } else if (ln.key == "delta") {
      cfg.pod.delta = ln.num(0);
    } else if (ln.key == "pod.nt") {
      cfg.pod.n_t = static_cast<int>(ln.integer(0));
    } else if (ln.key == "pod.bound") {
      const double b = ln.num(0);
      cfg.pod.bound_min = -b;
      cfg.pod.bound_max = b;
    } else if (ln.key == "pod.bound_min") {
      cfg.pod.bound_min = ln.num(0);
    } else if (ln.key == "pod.bound_max") {
      cfg.pod.bound_max = ln.num(0);
    } else if (ln.key == "pod.dense") {
      cfg.pod.force_dense = ln.flag(0);
    } else if (ln.key == "pod.basis") {
      cfg.pod.basis_file = resolve_path(base_dir, ln.str(0));
    } else if (ln.key == "steps") {
      cfg.load.n_steps = static_cast<int>(ln.integer(0));
    } else if (ln.key == "eps_macro") {
      cfg.eps_macro = ln.num(0);
    } else if (ln.key == "eps_micro") {
      cfg.eps_micro = ln.num(0);
    } else if (ln.key == "max_macro_iter") {
      cfg.max_macro_iter = static_cast<int>(ln.integer(0));
    } else if (ln.key == "max_micro_iter") {
      cfg.max_micro_iter = static_cast<int>(ln.integer(0));
    } else if (ln.key == "max_substep_splits") {
      cfg.max_substep_splits = static_cast<int>(ln.integer(0));
    } else if (ln.key == "threads") {
      cfg.threads = static_cast<int>(ln.integer(0));
    } else if (ln.key == "out") {
      cfg.out = resolve_path(base_dir, ln.str(0));
    } else if (ln.key == "vtk") {
      cfg.vtk = ln.flag(0);
    } else if (parts.size() == 2 && parts[0] == "fix") {
      const int tag = parse_tag(ln, parts[1]);
      const std::string& v = ln.str(0);
      std::array<bool, 2> f{false, false};
      if (v == "x") f[0] = true;
      else if (v == "y") f[1] = true;
      else if (v == "xy" || v == "yx") f[0] = f[1] = true;
      else ln.fail("fix value must be x, y, or xy");
      cfg.load.fixed[tag] = f;
    } else if (parts.size() == 3 && parts[0] == "traction") {
      set_poly(ln, cfg.load.tractions[parse_tag(ln, parts[1])], parts[2]);
    } else if (parts.size() == 3 && parts[0] == "displace") {
      set_poly(ln, cfg.load.displacements[parse_tag(ln, parts[1])], parts[2]);
    } else if (ln.key == "body_force") {
      ln.expect_count(2);
      cfg.load.body_force = Vec2(ln.num(0), ln.num(1));
    } else if (parts.size() == 2 && parts[0] == "probe") {
      ln.expect_count(2);
      cfg.probes[parts[1]] = Vec2(ln.num(0), ln.num(1));
    } else {
      ln.fail("unknown key '" + ln.key + "'");
    }
    ln.check_consumed();
  }

  if (cfg.macro_mesh.empty()) throw ConfigError(path + ": macro_mesh is required");
  if (cfg.micro_mesh.empty()) throw ConfigError(path + ": micro_mesh is required");
  if (cfg.materials.empty()) throw ConfigError(path + ": at least one material is required");
  if (cfg.load.n_steps < 1) throw ConfigError(path + ": steps must be >= 1");
  if (!(cfg.rho > 0.0)) throw ConfigError(path + ": rho must be positive");
  return cfg;
}

void apply_overrides(RunConfig& cfg, const ConfigOverrides& ov) {
  if (!ov.method.empty()) {
    if (ov.method != "fe2" && ov.method != "csa" && ov.method != "pod")
      throw ConfigError("method must be fe2, csa, or pod");
    cfg.method = ov.method;
  }
  if (ov.rho >= 0.0) cfg.rho = ov.rho;
  if (ov.delta >= 0.0) cfg.pod.delta = ov.delta;
  if (ov.seed >= 0) cfg.seed = static_cast<std::uint64_t>(ov.seed);
  if (!ov.out.empty()) cfg.out = ov.out;
  if (ov.threads >= 0) cfg.threads = ov.threads;
  if (ov.steps > 0) cfg.load.n_steps = ov.steps;
}

}  // namespace csahom
