#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oryon/geometry.h"
#include "oryon/image.h"

namespace oryon {

inline constexpr double kDefaultOcclusionTolerance = 0.015;  // meters

// {step, 2 step, ..., count * step}, each computed as step * k.
std::vector<double> ThresholdSteps(double step, std::size_t count);

// BOP-style threshold grids.
std::vector<double> MssdThresholds(double diameter);        // 5%..50% of d
std::vector<double> MspdThresholds(int image_width);        // r * w / 640, r = 5..50
std::vector<double> VsdTolerances(double diameter);         // 5%..50% of d
std::vector<double> VsdErrorThresholds();                   // 0.05..0.5

// min over symmetries S of max_p |pred(p) - gt(S p)|, meters.
double MssdError(const ObjectModel& model, const Pose& gt, const Pose& pred);

struct MspdResult {
  double error = 0.0;  // pixels; +inf when every point was excluded
  // Points skipped under the selected symmetry because either projection fell
  // behind the camera.
  std::size_t excluded_points = 0;
};

// Same as MSSD with both transformed clouds projected into the image first.
MspdResult MspdError(const ObjectModel& model, const Pose& gt, const Pose& pred,
                     const CameraIntrinsics& camera);

// Visible Surface Discrepancy for each misalignment tolerance. Renders
// distance maps by point splatting, estimates visibility against the scene
// depth with `occlusion_tolerance`, and returns the fraction of pixels in the
// union of visibility masks that are visible in only one map or differ by
// more than the tolerance. Throws EmptyRenderError if neither pose renders.
std::vector<double> VsdErrors(const ObjectModel& model, const Pose& gt, const Pose& pred,
                              const DepthMap& scene_depth, const CameraIntrinsics& camera,
                              std::span<const double> tolerances,
                              double occlusion_tolerance = kDefaultOcclusionTolerance);
double VsdError(const ObjectModel& model, const Pose& gt, const Pose& pred,
                const DepthMap& scene_depth, const CameraIntrinsics& camera,
                double tolerance, double occlusion_tolerance = kDefaultOcclusionTolerance);

// Mean over thresholds of the fraction of errors strictly below each one.
double RecallAverage(std::span<const double> errors, std::span<const double> thresholds);

double AddError(const ObjectModel& model, const Pose& gt, const Pose& pred);
// Mean closest-point distance, for symmetric objects.
double AddSError(const ObjectModel& model, const Pose& gt, const Pose& pred);

struct AddResult {
  double error = 0.0;
  bool success = false;
};

// ADD for models with a trivial symmetry set, ADD-S otherwise; success iff
// error < 0.1 d.
AddResult AddRecall(const ObjectModel& model, const Pose& gt, const Pose& pred);

// |pred & gt| / |pred | gt|, 1 when both masks are empty.
double Iou(const BinaryMask& pred, const BinaryMask& gt);

// AR is the plain mean of the three BOP recalls. Every report computes it
// through this function.
inline double AverageRecall(double vsd, double mssd, double mspd) {
  return (vsd + mssd + mspd) / 3.0;
}

struct MetricOptions {
  double occlusion_tolerance = kDefaultOcclusionTolerance;
  double add_fraction = 0.1;
  // VSD misalignment tolerances as fractions of the diameter; empty selects
  // 0.05..0.5.
  std::vector<double> vsd_tolerance_fractions;
};

struct PairMetrics {
  std::string id;
  // Raw errors.
  double mssd_error = 0.0;
  double mspd_error = 0.0;
  double add_error = 0.0;
  std::vector<double> vsd_errors;  // one per tolerance
  // 1/0 success per threshold; VSD hits are averaged over tolerances.
  std::vector<double> vsd_hits;
  std::vector<double> mssd_hits;
  std::vector<double> mspd_hits;
  // Recall scores in [0, 1].
  double vsd = 0.0;
  double mssd = 0.0;
  double mspd = 0.0;
  double add = 0.0;
  double ar = 0.0;
  std::optional<double> miou;
};

struct MetricReport {
  double vsd = 0.0;
  double mssd = 0.0;
  double mspd = 0.0;
  double add = 0.0;
  double ar = 0.0;
  double miou = 0.0;
  bool has_miou = false;
  // Dataset recall at each threshold index.
  std::vector<double> vsd_curve;   // per error threshold, averaged over tolerances
  std::vector<double> mssd_curve;
  std::vector<double> mspd_curve;
  std::vector<PairMetrics> pairs;
};

// Scores one predicted pose against the ground truth in a single scene.
PairMetrics EvaluatePose(const ObjectModel& model, const Pose& gt, const Pose& pred,
                         const DepthMap& scene_depth, const CameraIntrinsics& camera,
                         const MetricOptions& options = {});

// Dataset means of the per-pair scores; ar = AverageRecall(vsd, mssd, mspd),
// which equals the mean of per-pair ARs up to rounding.
MetricReport Aggregate(std::vector<PairMetrics> pairs);

}  // namespace oryon
