#pragma once

// Plain key = value run configuration.  '#' starts a comment; keys are
// namespaced with dots; values are whitespace-separated tokens.  Unknown keys
// are rejected.  Relative paths are resolved against the config file's
// directory.

#include <cstdint>
#include <map>
#include <string>

#include "csahom/macro.hpp"
#include "csahom/micro.hpp"
#include "csahom/pod.hpp"

namespace csahom {

struct RunConfig {
  std::string macro_mesh;
  std::string micro_mesh;
  std::map<int, MaterialParams> materials;

  std::string method = "fe2";  // fe2 | csa | pod
  double rho = 0.005;
  std::uint64_t seed = 0;
  bool tensor_shear_metric = false;
  PodParams pod;

  LoadCase load;
  std::map<std::string, Vec2> probes;  // name -> reference position

  double eps_macro = 1e-6;
  int max_macro_iter = 25;
  double eps_micro = 1e-9;
  int max_micro_iter = 20;
  int max_substep_splits = 8;

  int threads = 0;  // 0 = hardware concurrency
  std::string out = "out";
  bool vtk = true;

  MicroParams micro_params() const;
};

/// Parses a config file.  Throws ParseError (with file/line) on malformed
/// input and ConfigError on inconsistent settings.
RunConfig load_config(const std::string& path);

/// Command-line overrides applied after parsing; empty strings / negative
/// numbers mean "keep the file's value".
struct ConfigOverrides {
  std::string method;
  double rho = -1.0;
  double delta = -1.0;
  long long seed = -1;
  std::string out;
  int threads = -1;
  int steps = -1;
};

void apply_overrides(RunConfig& cfg, const ConfigOverrides& ov);

}  // namespace csahom
