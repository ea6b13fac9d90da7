#include "oryon/registration.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "oryon/parallel.h"
#include "oryon/random.h"

namespace oryon {

void RegistrationParams::Validate() const {
  if (!(inlier_threshold > 0.0)) throw InvalidArgumentError("inlier threshold must be positive");
  if (!(compatibility_tolerance > 0.0)) {
    throw InvalidArgumentError("compatibility tolerance must be positive");
  }
  if (iterations < 1) throw InvalidArgumentError("iterations must be >= 1");
  if (!(min_inlier_ratio >= 0.0 && min_inlier_ratio <= 1.0)) {
    throw InvalidArgumentError("min_inlier_ratio must lie in [0, 1]");
  }
}

namespace {

constexpr double kDegenerateSpread = 1e-9;

// Second-largest principal spread (RMS distance from the best-fit line).
double LateralSpread(std::span<const Vec3> pts, std::span<const double> w, const Vec3& mean,
                     double total_weight) {
  Mat3 scatter = Mat3::Zero();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    Vec3 d = pts[i] - mean;
    scatter += (w.empty() ? 1.0 : w[i]) * d * d.transpose();
  }
  scatter /= total_weight;
  Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, eig.eigenvalues()[1]));  // ascending order
}

}  // namespace

std::optional<Pose> TryKabsch(std::span<const Vec3> src, std::span<const Vec3> dst,
                              std::span<const double> weights) {
  if (src.size() != dst.size()) throw DimensionMismatchError("kabsch: point counts differ");
  if (!weights.empty() && weights.size() != src.size()) {
    throw DimensionMismatchError("kabsch: weight count differs from point count");
  }
  if (src.size() < 3) return std::nullopt;

  double total = 0.0;
  Vec3 mean_src = Vec3::Zero();
  Vec3 mean_dst = Vec3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    double w = weights.empty() ? 1.0 : weights[i];
    if (!(w >= 0.0)) throw InvalidArgumentError("kabsch: weights must be non-negative");
    total += w;
    mean_src += w * src[i];
    mean_dst += w * dst[i];
  }
  if (!(total > 0.0)) return std::nullopt;
  mean_src /= total;
  mean_dst /= total;

  if (LateralSpread(src, weights, mean_src, total) < kDegenerateSpread ||
      LateralSpread(dst, weights, mean_dst, total) < kDegenerateSpread) {
    return std::nullopt;
  }

  Mat3 cross = Mat3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    double w = weights.empty() ? 1.0 : weights[i];
    cross += w * (src[i] - mean_src) * (dst[i] - mean_dst).transpose();
  }
  Eigen::JacobiSVD<Mat3> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3& u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  Mat3 correction = Mat3::Identity();
  if ((v * u.transpose()).determinant() < 0.0) correction(2, 2) = -1.0;
  Mat3 rotation = v * correction * u.transpose();
  return Pose(rotation, mean_dst - rotation * mean_src);
}

Pose Kabsch(std::span<const Vec3> src, std::span<const Vec3> dst,
            std::span<const double> weights) {
  auto pose = TryKabsch(src, dst, weights);
  if (!pose) {
    throw DegenerateConfigurationError(
        "kabsch needs at least three non-collinear correspondences");
  }
  return *pose;
}

std::vector<std::uint8_t> CompatibilityMatrix(std::span<const Vec3> src,
                                              std::span<const Vec3> dst, double beta) {
  const std::size_t n = src.size();
  std::vector<std::uint8_t> compat(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double diff = std::abs((src[i] - src[j]).norm() - (dst[i] - dst[j]).norm());
      std::uint8_t ok = diff <= beta ? 1 : 0;
      compat[i * n + j] = ok;
      compat[j * n + i] = ok;
    }
  }
  return compat;
}

namespace {

using Triplet = std::array<std::size_t, 3>;
using Sampler = std::function<std::optional<Triplet>(Rng&)>;

struct Hypothesis {
  bool valid = false;
  std::size_t inliers = 0;
  double mean_residual = std::numeric_limits<double>::infinity();
  Pose pose;
};

struct Consensus {
  std::vector<std::size_t> inliers;
  double mean_residual = 0.0;
};

Consensus Evaluate(const Pose& pose, std::span<const Vec3> src, std::span<const Vec3> dst,
                   double threshold) {
  Consensus c;
  CompensatedSum sum;
  for (std::size_t i = 0; i < src.size(); ++i) {
    double r = (pose * src[i] - dst[i]).norm();
    if (r <= threshold) {
      c.inliers.push_back(i);
      sum.Add(r);
    }
  }
  if (!c.inliers.empty()) c.mean_residual = sum.Value() / c.inliers.size();
  return c;
}

bool Better(std::size_t count, double residual, std::size_t best_count, double best_residual) {
  return count > best_count || (count == best_count && residual < best_residual);
}

// Weighted draw over `candidates` with weights `weight[c]`.
std::optional<std::size_t> WeightedPick(Rng& rng, std::span<const std::size_t> candidates,
                                        std::span<const double> weight) {
  double total = 0.0;
  for (std::size_t c : candidates) total += weight[c];
  if (!(total > 0.0)) return std::nullopt;
  double target = UniformUnit(rng) * total;
  double acc = 0.0;
  for (std::size_t c : candidates) {
    acc += weight[c];
    if (target < acc) return c;
  }
  return candidates.back();
}

RegistrationResult Register(std::span<const Vec3> src, std::span<const Vec3> dst,
                            const RegistrationParams& params, std::uint64_t stream_seed,
                            const Sampler& sampler) {
  const std::size_t n = src.size();
  std::size_t min_consensus = std::max<std::size_t>(
      3, static_cast<std::size_t>(std::ceil(params.min_inlier_ratio * static_cast<double>(n))));

  std::vector<Hypothesis> hypotheses(static_cast<std::size_t>(params.iterations));
  ParallelFor(hypotheses.size(), params.threads, [&](std::size_t h) {
    Rng rng(DeriveSeed(stream_seed, static_cast<std::uint64_t>(h)));
    auto triplet = sampler(rng);
    if (!triplet) return;
    std::array<Vec3, 3> s{src[(*triplet)[0]], src[(*triplet)[1]], src[(*triplet)[2]]};
    std::array<Vec3, 3> d{dst[(*triplet)[0]], dst[(*triplet)[1]], dst[(*triplet)[2]]};
    auto pose = TryKabsch(s, d);
    if (!pose) return;
    Consensus c = Evaluate(*pose, src, dst, params.inlier_threshold);
    hypotheses[h] = Hypothesis{true, c.inliers.size(), c.mean_residual, *pose};
  });

  const Hypothesis* best = nullptr;
  for (const auto& h : hypotheses) {
    if (!h.valid) continue;
    if (!best || Better(h.inliers, h.mean_residual, best->inliers, best->mean_residual)) {
      best = &h;
    }
  }
  if (!best || best->inliers < min_consensus) {
    throw NoConsensusError("no hypothesis reached a consensus of " +
                           std::to_string(min_consensus) + " matches");
  }

  // Refit on the consensus until it stops changing. The returned pose is
  // always a least-squares fit; inliers are re-evaluated under it.
  Pose pose = best->pose;
  Consensus consensus = Evaluate(pose, src, dst, params.inlier_threshold);
  constexpr int kMaxRefinements = 20;
  for (int it = 0; it < kMaxRefinements && consensus.inliers.size() >= 3; ++it) {
    std::vector<Vec3> s, d;
    s.reserve(consensus.inliers.size());
    d.reserve(consensus.inliers.size());
    for (std::size_t i : consensus.inliers) {
      s.push_back(src[i]);
      d.push_back(dst[i]);
    }
    auto refit = TryKabsch(s, d);
    if (!refit) break;
    pose = *refit;
    Consensus next = Evaluate(pose, src, dst, params.inlier_threshold);
    bool converged = next.inliers == consensus.inliers;
    consensus = std::move(next);
    if (converged) break;
  }
  if (consensus.inliers.size() < min_consensus) {
    throw NoConsensusError("refined consensus fell below the minimum");
  }
  return RegistrationResult{pose, std::move(consensus.inliers), consensus.mean_residual};
}

void CheckInputs(std::span<const Vec3> src, std::span<const Vec3> dst,
                 const RegistrationParams& params) {
  params.Validate();
  if (src.size() != dst.size()) throw DimensionMismatchError("registration: point counts differ");
  if (src.size() < 3) throw TooFewMatchesError("registration needs at least three matches");
}

void RequireLifted(const MatchSet& matches) {
  if (matches.anchor_points.size() != matches.matches.size() ||
      matches.query_points.size() != matches.matches.size()) {
    throw InvalidArgumentError("match set has not been lifted to 3D");
  }
}

}  // namespace

RegistrationResult RegisterSpatialConsistency(std::span<const Vec3> src,
                                              std::span<const Vec3> dst,
                                              const RegistrationParams& params) {
  CheckInputs(src, dst, params);
  const std::size_t n = src.size();
  std::vector<std::uint8_t> compat = CompatibilityMatrix(src, dst, params.compatibility_tolerance);
  std::vector<double> score(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) score[i] += compat[i * n + j];
  }
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;

  Sampler sampler = [&](Rng& rng) -> std::optional<Triplet> {
    auto first = WeightedPick(rng, all, score);
    if (!first) return std::nullopt;
    std::vector<std::size_t> candidates;
    for (std::size_t j = 0; j < n; ++j) {
      if (compat[*first * n + j]) candidates.push_back(j);
    }
    auto second = WeightedPick(rng, candidates, score);
    if (!second) return std::nullopt;
    candidates.clear();
    for (std::size_t k = 0; k < n; ++k) {
      if (compat[*first * n + k] && compat[*second * n + k]) candidates.push_back(k);
    }
    auto third = WeightedPick(rng, candidates, score);
    if (!third) return std::nullopt;
    return Triplet{*first, *second, *third};
  };
  return Register(src, dst, params, DeriveSeed(params.seed, "spatial-consistency"), sampler);
}

RegistrationResult RegisterSpatialConsistency(const MatchSet& matches,
                                              const RegistrationParams& params) {
  RequireLifted(matches);
  return RegisterSpatialConsistency(matches.anchor_points, matches.query_points, params);
}

RegistrationResult RegisterRansac(std::span<const Vec3> src, std::span<const Vec3> dst,
                                  const RegistrationParams& params) {
  CheckInputs(src, dst, params);
  const std::size_t n = src.size();
  Sampler sampler = [n](Rng& rng) -> std::optional<Triplet> {
    Triplet t{};
    t[0] = UniformIndex(rng, n);
    do t[1] = UniformIndex(rng, n); while (t[1] == t[0]);
    do t[2] = UniformIndex(rng, n); while (t[2] == t[0] || t[2] == t[1]);
    return t;
  };
  return Register(src, dst, params, DeriveSeed(params.seed, "ransac"), sampler);
}

RegistrationResult RegisterRansac(const MatchSet& matches, const RegistrationParams& params) {
  RequireLifted(matches);
  return RegisterRansac(matches.anchor_points, matches.query_points, params);
}

}  // namespace oryon
