#pragma once

// Adaptive cluster database in stretch space.  Macro quadrature points are
// characterized by the symmetric right-stretch part of their deformation
// gradient (coordinates e = (U11-1, U22-1, U12)).  Cell problems are solved
// with sensitivities only at cluster centroids; everywhere else coefficients
// come from a first-order expansion about the nearby centroids, blended with
// weights that vanish continuously on the coverage-ball boundary.  The
// centroid database is append-only and grows on demand via a minimal-k
// k-means pass over the currently uncovered points.

#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include "csahom/macro.hpp"
#include "csahom/micro.hpp"

namespace csahom {

struct CsaParams {
  double rho = 0.005;           // coverage radius in stretch coordinates
  std::uint64_t seed = 0;       // k-means RNG seed
  bool tensor_shear_metric = false;  // weight the shear coordinate by sqrt(2)
  int kmeans_max_iter = 100;
  int kmeans_restarts = 1;      // deterministic restarts per k (best inertia wins)
};

/// Stretch coordinates of a symmetric map I + e_hat: (e11, e22, e12), with the
/// shear coordinate scaled by sqrt(2) when the tensor metric is selected.
Vec3 stretch_coords(const Mat2& u, bool tensor_metric);
/// Inverse of stretch_coords: the symmetric matrix U with those coordinates.
Mat2 stretch_matrix(const Vec3& e, bool tensor_metric);

/// Exact relative map g with (I + g)(U_from) == U_to (both given in stretch
/// coordinates): the multiplicative step between two stretch states.
Mat2 relative_deformation(const Vec3& e_to, const Vec3& e_from, bool tensor_metric);

struct Centroid {
  Vec3 center = Vec3::Zero();   // stretch coordinates
  int id = 0;
  int source_id = -1;           // centroid whose state seeded this solve (-1: reference)
  MicroState state;             // equilibrated cell at `center`
  CoefficientSet coeffs;        // with sensitivities, unrotated frame
};

/// Covering centroids and leftover points of a classification pass.
struct Classification {
  std::vector<std::vector<int>> covering;  // per point: centroid ids with dist < rho
  std::vector<int> uncovered;              // indices of points with no cover
};

class CentroidRegistry {
 public:
  /// The registry solves its own reference state (correctors at identity).
  CentroidRegistry(const PeriodicCell& cell, const MicroParams& mp, const CsaParams& cp);

  const std::vector<Centroid>& centroids() const { return cents_; }
  int size() const { return static_cast<int>(cents_.size()); }
  long fallback_count() const { return fallback_count_.load(); }

  /// Strict-inequality coverage query, ids in ascending order.
  std::vector<int> in_range(const Vec3& e) const;
  /// Nearest centroid id (lowest id wins ties); -1 when the registry is empty.
  int nearest(const Vec3& e) const;
  Classification classify(const std::vector<Vec3>& points) const;

  /// Ensures every listed point is strictly covered.  Seeds the registry with
  /// a centroid at the origin on first use, then places new centroids with the
  /// smallest k for which a k-means clustering of the still-uncovered points
  /// covers them all.  New centroid states are advanced from the nearest
  /// pre-existing centroid and solved (with sensitivities) in parallel;
  /// results are appended in sorted center order, so growth is deterministic.
  void cover(const std::vector<Vec3>& points, int threads, SolveCounters* counters);

  /// Blended first-order coefficients at e: sum over covering centroids l of
  /// w_l * (A_l + dA_l . c(sym g_l)), with g_l the exact relative map from the
  /// centroid to e and weights w_l proportional to (rho - dist_l)^2.  Points
  /// without cover fall back to the nearest centroid with weight one (counted,
  /// reported by fallback_count).
  CoefficientSet blend(const Vec3& e) const;

  /// Blend weights over an explicit centroid id set (positive distances
  /// required); exposed for continuity diagnostics.
  std::vector<double> blend_weights(const Vec3& e, const std::vector<int>& ids) const;

  /// First-order estimate of the deformed cell node coordinates at the state
  /// (e, R): blended centroid configurations advanced by their corrector
  /// expansions, then rotated by R about the mean node position.
  std::vector<Vec2> approximate_microstructure(const Vec3& e, const Mat2& r) const;

  /// One line per centroid: id source e11 e22 e12 (full precision).
  void export_text(std::ostream& os) const;

 private:
  double dist(const Vec3& a, const Vec3& b) const { return (a - b).norm(); }

  CsaParams p_;
  MicroState ref_;
  std::mt19937_64 rng_;
  std::vector<Centroid> cents_;
  mutable std::atomic<long> fallback_count_{0};
};

class CsaBackend : public CoefficientBackend {
 public:
  CsaBackend(const PeriodicCell& cell, const MicroParams& mp, const CsaParams& cp, int threads,
             SolveCounters* counters = nullptr);

  /// Classify all quadrature points by total stretch, grow the registry to
  /// cover the uncovered ones, then blend.  Outputs are rotated forward by the
  /// per-point polar rotation.
  void get_coefficients(const std::vector<Mat2>& f_qp, CoefficientField& out) override;

  long adaptation_count() const override { return registry_.size(); }
  long micro_solves() const override { return counters_->micro_steps.load(); }

  CentroidRegistry& registry() { return registry_; }
  const CentroidRegistry& registry() const { return registry_; }

 private:
  CsaParams p_;
  int threads_;
  SolveCounters own_;
  SolveCounters* counters_;
  CentroidRegistry registry_;
};

}  // namespace csahom
