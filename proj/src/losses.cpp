#include "oryon/losses.h"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "oryon/errors.h"
#include "oryon/matcher.h"
#include "oryon/parallel.h"

namespace oryon {

void LossParams::Validate() const {
  if (!(positive_margin >= 0.0 && positive_margin < negative_margin && negative_margin <= 1.0)) {
    throw InvalidArgumentError("margins must satisfy 0 <= mu_P < mu_N <= 1");
  }
  if (!(exclusion_radius >= 0.0)) throw InvalidArgumentError("tau must be non-negative");
  if (!(positive_weight >= 0.0 && negative_weight >= 0.0 && mask_weight >= 0.0)) {
    throw InvalidArgumentError("loss weights must be non-negative");
  }
}

FeatureSet::FeatureSet(FeatureMatrix f, std::vector<Vec2> x)
    : features(std::move(f)), coords(std::move(x)) {
  if (static_cast<std::size_t>(features.rows()) != coords.size()) {
    throw DimensionMismatchError("feature count differs from coordinate count");
  }
  if (!features.allFinite()) throw InvalidArgumentError("features must be finite");
}

namespace {

void RequirePaired(const FeatureSet& a, const FeatureSet& q) {
  if (a.size() != q.size()) throw DimensionMismatchError("paired feature sets differ in size");
  if (a.size() == 0) throw EmptyMatchSetError("no positive pairs");
  if (a.dim() != q.dim()) throw DimensionMismatchError("feature dimensions differ");
}

std::vector<double> SquaredNorms(const FeatureMatrix& f) {
  std::vector<double> out(static_cast<std::size_t>(f.rows()));
  for (Eigen::Index i = 0; i < f.rows(); ++i) out[i] = f.row(i).squaredNorm();
  return out;
}

double Sum(const std::vector<double>& terms) {
  CompensatedSum s;
  for (double t : terms) s.Add(t);
  return s.Value();
}

}  // namespace

double PositiveLoss(const FeatureSet& anchor, const FeatureSet& query, double margin,
                    int threads) {
  RequirePaired(anchor, query);
  const std::size_t n = anchor.size();
  std::vector<double> terms(n);
  ParallelFor(n, threads, [&](std::size_t i) {
    auto a = anchor.features.row(i);
    auto q = query.features.row(i);
    double d = FeatureDistanceFromDot(a.dot(q), a.squaredNorm(), q.squaredNorm());
    terms[i] = std::max(0.0, d - margin);
  });
  return Sum(terms) / static_cast<double>(n);
}

std::vector<HardestNegative> MineHardestNegatives(const FeatureSet& set,
                                                  double exclusion_radius, int threads) {
  const std::size_t n = set.size();
  std::vector<double> norms = SquaredNorms(set.features);
  const double r2 = exclusion_radius * exclusion_radius;
  std::vector<HardestNegative> out(n);
  ParallelFor(n, threads, [&](std::size_t i) {
    HardestNegative best;
    auto fi = set.features.row(i);
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i) continue;
      if ((set.coords[i] - set.coords[k]).squaredNorm() < r2) continue;
      double d = FeatureDistanceFromDot(fi.dot(set.features.row(k)), norms[i], norms[k]);
      if (best.index == kNoNegative || d < best.distance) best = HardestNegative{k, d};
    }
    out[i] = best;
  });
  return out;
}

NegativeLossResult HardestNegativeLoss(const FeatureSet& anchor, const FeatureSet& query,
                                       double margin, double exclusion_radius, int threads) {
  RequirePaired(anchor, query);
  NegativeLossResult r;
  r.anchor_negatives = MineHardestNegatives(anchor, exclusion_radius, threads);
  r.query_negatives = MineHardestNegatives(query, exclusion_radius, threads);
  const std::size_t n = anchor.size();
  std::vector<double> terms;
  terms.reserve(2 * n);
  for (const auto* side : {&r.anchor_negatives, &r.query_negatives}) {
    for (const HardestNegative& h : *side) {
      if (h.index == kNoNegative) {
        ++r.skipped;
        continue;
      }
      terms.push_back(std::max(0.0, margin - h.distance));
    }
  }
  if (r.skipped > 0) {
    std::clog << "hardest negative: " << r.skipped
              << " feature(s) without candidate negatives contribute zero\n";
  }
  r.value = Sum(terms) / (2.0 * static_cast<double>(n));
  return r;
}

double FeatureLoss(double positive, double negative, double positive_weight,
                   double negative_weight) {
  if (!(positive >= 0.0 && negative >= 0.0)) {
    throw InvalidArgumentError("loss terms must be non-negative");
  }
  return negative_weight * negative + positive_weight * positive;
}

double DiceLoss(const Image<double>& activations, const BinaryMask& gt) {
  RequireSameShape(activations, gt, "dice loss");
  CompensatedSum inter, pred_sum, gt_sum;
  auto p = activations.data();
  auto g = gt.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] >= 0.0 && p[i] <= 1.0)) {
      throw InvalidArgumentError("activations must lie in [0, 1]");
    }
    double gi = g[i] != 0 ? 1.0 : 0.0;
    inter.Add(p[i] * gi);
    pred_sum.Add(p[i]);
    gt_sum.Add(gi);
  }
  return 1.0 - 2.0 * inter.Value() / (pred_sum.Value() + gt_sum.Value() + kDiceSmooth);
}

double TotalLoss(double mask_loss, double feature_loss, double mask_weight) {
  return mask_weight * mask_loss + feature_loss;
}

LossReport EvaluateLosses(const FeatureSet& anchor, const FeatureSet& query,
                          const LossParams& params, const Image<double>* activations,
                          const BinaryMask* gt) {
  params.Validate();
  LossReport r;
  r.pairs = anchor.size();
  r.positive = PositiveLoss(anchor, query, params.positive_margin, params.threads);
  NegativeLossResult neg = HardestNegativeLoss(anchor, query, params.negative_margin,
                                               params.exclusion_radius, params.threads);
  r.negative = neg.value;
  r.skipped_negatives = neg.skipped;
  r.feature = FeatureLoss(r.positive, r.negative, params.positive_weight, params.negative_weight);
  if (activations && gt) r.mask = DiceLoss(*activations, *gt);
  r.total = TotalLoss(r.mask, r.feature, params.mask_weight);
  return r;
}

}  // namespace oryon
