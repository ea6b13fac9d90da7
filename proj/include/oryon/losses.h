#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "oryon/geometry.h"
#include "oryon/image.h"

namespace oryon {

struct LossParams {
  double positive_margin = 0.2;   // mu_P
  double negative_margin = 0.9;   // mu_N
  double exclusion_radius = 5.0;  // tau, pixels
  double positive_weight = 0.5;   // lambda_P
  double negative_weight = 0.5;   // lambda_N
  double mask_weight = 1.0;       // lambda_M
  int threads = 1;

  void Validate() const;
};

using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// C sampled descriptors (one per row) with their pixel coordinates.
struct FeatureSet {
  FeatureMatrix features;
  std::vector<Vec2> coords;

  FeatureSet() = default;
  FeatureSet(FeatureMatrix f, std::vector<Vec2> x);

  std::size_t size() const { return coords.size(); }
  int dim() const { return static_cast<int>(features.cols()); }
};

// Mean hinge (dist(fa_i, fq_i) - margin)_+ over the pairs (fa_i, fq_i).
// Throws EmptyMatchSetError for empty sets.
double PositiveLoss(const FeatureSet& anchor, const FeatureSet& query, double margin,
                    int threads = 1);

inline constexpr std::size_t kNoNegative = static_cast<std::size_t>(-1);

struct HardestNegative {
  std::size_t index = kNoNegative;  // kNoNegative when no candidate exists
  double distance = 0.0;
};

// For each feature, the nearest other feature of the same set whose pixel lies
// at least `exclusion_radius` away. Ties go to the lowest index.
std::vector<HardestNegative> MineHardestNegatives(const FeatureSet& set,
                                                  double exclusion_radius, int threads = 1);

struct NegativeLossResult {
  double value = 0.0;
  // Terms with no candidate negative; they contribute zero.
  std::size_t skipped = 0;
  std::vector<HardestNegative> anchor_negatives;
  std::vector<HardestNegative> query_negatives;
};

// sum over pairs of (1 / 2|P|) [(mu_N - d_i)_+ + (mu_N - d_j)_+], where d is the
// hardest-negative distance inside each feature's own set.
NegativeLossResult HardestNegativeLoss(const FeatureSet& anchor, const FeatureSet& query,
                                       double margin, double exclusion_radius, int threads = 1);

double FeatureLoss(double positive, double negative, double positive_weight,
                   double negative_weight);

inline constexpr double kDiceSmooth = 1e-6;

// 1 - 2 sum(p g) / (sum p + sum g + smooth).
double DiceLoss(const Image<double>& activations, const BinaryMask& gt);

double TotalLoss(double mask_loss, double feature_loss, double mask_weight);

struct LossReport {
  double positive = 0.0;
  double negative = 0.0;
  double feature = 0.0;
  double mask = 0.0;
  double total = 0.0;
  std::size_t pairs = 0;
  std::size_t skipped_negatives = 0;
};

// All terms at once; `activations`/`gt` may be null to skip the mask term.
LossReport EvaluateLosses(const FeatureSet& anchor, const FeatureSet& query,
                          const LossParams& params, const Image<double>* activations = nullptr,
                          const BinaryMask* gt = nullptr);

}  // namespace oryon
