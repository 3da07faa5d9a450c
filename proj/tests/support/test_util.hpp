// Shared helpers for the test suite: data locations, scratch directories,
// reference materials, random sampling, and finite-difference probes.
#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "csahom/material.hpp"
#include "csahom/tensor.hpp"

namespace testutil {

inline std::filesystem::path data_dir() { return std::filesystem::path(CSAHOM_DATA_DIR); }

inline std::string data_file(const std::string& rel) { return (data_dir() / rel).string(); }

/// Fresh empty scratch directory under the system temp root.
inline std::filesystem::path fresh_tmp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

/// Stiff-phase / compliant-phase parameters used throughout the shipped
/// example data (glass-like inclusion in an epoxy-like matrix).
inline csahom::MaterialParams matrix_material() { return csahom::MaterialParams{5.7e9, 1.35e9}; }
inline csahom::MaterialParams inclusion_material() {
  return csahom::MaterialParams{43.21e9, 28.46e9};
}

/// Random in-plane deformation gradient with a safely positive determinant.
inline csahom::Mat2 random_def(std::mt19937& rng, double spread = 0.25) {
  std::uniform_real_distribution<double> u(-spread, spread);
  for (;;) {
    csahom::Mat2 f;
    f << 1.0 + u(rng), u(rng), u(rng), 1.0 + u(rng);
    if (f.determinant() > 0.3) return f;
  }
}

inline csahom::Mat2 random_grad(std::mt19937& rng, double spread = 1.0) {
  std::uniform_real_distribution<double> u(-spread, spread);
  csahom::Mat2 g;
  g << u(rng), u(rng), u(rng), u(rng);
  return g;
}

inline double rel_diff(const csahom::Mat3& a, const csahom::Mat3& b) {
  const double scale = b.cwiseAbs().maxCoeff();
  return (a - b).cwiseAbs().maxCoeff() / (scale > 0.0 ? scale : 1.0);
}

inline double rel_diff(const csahom::Tensor4& a, const csahom::Tensor4& b) {
  const double scale = csahom::max_abs(b);
  return csahom::max_abs(a - b) / (scale > 0.0 ? scale : 1.0);
}

/// Max-norm relative difference restricted to the in-plane block
/// (all indices in {0,1}); the cell average only populates that block.
inline double rel_diff_inplane(const csahom::Tensor4& a, const csahom::Tensor4& b) {
  double scale = 0.0, diff = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) {
          scale = std::max(scale, std::abs(b(i, j, k, l)));
          diff = std::max(diff, std::abs(a(i, j, k, l) - b(i, j, k, l)));
        }
  return diff / (scale > 0.0 ? scale : 1.0);
}

inline double frob_rel_diff(const csahom::Mat3& a, const csahom::Mat3& b) {
  const double scale = b.norm();
  return (a - b).norm() / (scale > 0.0 ? scale : 1.0);
}

inline double frob_rel_diff(const csahom::Tensor4& a, const csahom::Tensor4& b) {
  const double scale = csahom::frobenius(b);
  return csahom::frobenius(a - b) / (scale > 0.0 ? scale : 1.0);
}

/// Central difference of h -> fn((I + h G) F) at h = 0.  fn returns either a
/// Mat3 or a Tensor4; both support the needed arithmetic.
template <class Fn>
auto central_diff(const csahom::Mat2& f, const csahom::Mat2& g, double h, Fn&& fn) {
  const csahom::Mat2 fp = (csahom::Mat2::Identity() + h * g) * f;
  const csahom::Mat2 fm = (csahom::Mat2::Identity() - h * g) * f;
  auto diff = fn(fp);  // concrete value type (Mat3 or Tensor4)
  diff -= fn(fm);
  diff *= 1.0 / (2.0 * h);
  return diff;
}

/// Relative finite-difference error of an analytic directional derivative,
/// measured with the max norm against the analytic value.
template <class Fn, class Val>
double fd_error(const csahom::Mat2& f, const csahom::Mat2& g, double h, Fn&& fn,
                const Val& analytic) {
  const auto fd = central_diff(f, g, h, fn);
  return rel_diff(fd, analytic);
}

}  // namespace testutil
