#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "oryon/geometry.h"
#include "oryon/matcher.h"

namespace oryon {

struct RegistrationParams {
  double inlier_threshold = 0.01;         // epsilon, meters
  double compatibility_tolerance = 0.01;  // beta, meters
  int iterations = 1000;
  std::uint64_t seed = 0;
  // A consensus must hold at least max(3, ceil(ratio * n)) matches.
  double min_inlier_ratio = 0.1;
  int threads = 1;

  void Validate() const;
};

struct RegistrationResult {
  Pose pose;
  std::vector<std::size_t> inliers;  // ascending
  double mean_residual = 0.0;        // over inliers, meters
};

// Weighted least-squares rigid fit minimizing sum w_i |R src_i + t - dst_i|^2
// with det(R) = +1. Throws DegenerateConfigurationError for fewer than three
// points or when either set is collinear/coincident within 1e-9 m.
Pose Kabsch(std::span<const Vec3> src, std::span<const Vec3> dst,
            std::span<const double> weights = {});
// Non-throwing variant for degenerate configurations.
std::optional<Pose> TryKabsch(std::span<const Vec3> src, std::span<const Vec3> dst,
                              std::span<const double> weights = {});

// Pairwise length-consistency: |‖p_i - p_j‖ - ‖q_i - q_j‖| <= beta, i != j.
// Returns the row-major n x n matrix.
std::vector<std::uint8_t> CompatibilityMatrix(std::span<const Vec3> src,
                                              std::span<const Vec3> dst, double beta);

// Spatial-consistency registration: seed triplets are drawn with probability
// proportional to each match's compatible-neighbor count and restricted to
// mutually compatible matches; every triplet yields a Kabsch hypothesis, the
// max-inlier hypothesis (ties: lower mean residual) is refit on its inliers
// until the inlier set is stable.
// Throws TooFewMatchesError below three matches and NoConsensusError when no
// hypothesis reaches the minimum consensus.
RegistrationResult RegisterSpatialConsistency(std::span<const Vec3> src,
                                              std::span<const Vec3> dst,
                                              const RegistrationParams& params = {});
RegistrationResult RegisterSpatialConsistency(const MatchSet& matches,
                                              const RegistrationParams& params = {});

// Plain RANSAC baseline: uniform triplets, no compatibility scoring; same
// hypothesis selection and refinement.
RegistrationResult RegisterRansac(std::span<const Vec3> src, std::span<const Vec3> dst,
                                  const RegistrationParams& params = {});
RegistrationResult RegisterRansac(const MatchSet& matches, const RegistrationParams& params = {});

}  // namespace oryon
