#include "oryon/metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "oryon/parallel.h"
#include "oryon/render.h"
#include "oryon/spatial_index.h"

namespace oryon {

std::vector<double> ThresholdSteps(double step, std::size_t count) {
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k) out[k] = step * static_cast<double>(k + 1);
  return out;
}

namespace {

std::vector<double> Scaled(std::vector<double> values, double scale) {
  for (double& v : values) v *= scale;
  return values;
}

void RequireModel(const ObjectModel& model) {
  if (model.points().empty()) throw InvalidArgumentError("object model has no points");
}

}  // namespace

std::vector<double> MssdThresholds(double diameter) {
  return Scaled(ThresholdSteps(0.05, 10), diameter);
}

std::vector<double> MspdThresholds(int image_width) {
  return Scaled(ThresholdSteps(5.0, 10), image_width / 640.0);
}

std::vector<double> VsdTolerances(double diameter) {
  return Scaled(ThresholdSteps(0.05, 10), diameter);
}

std::vector<double> VsdErrorThresholds() { return ThresholdSteps(0.05, 10); }

double MssdError(const ObjectModel& model, const Pose& gt, const Pose& pred) {
  RequireModel(model);
  double best = std::numeric_limits<double>::infinity();
  for (const Pose& sym : model.symmetries()) {
    Pose gt_sym = gt * sym;
    double worst = 0.0;
    for (const Vec3& p : model.points()) {
      worst = std::max(worst, (pred * p - gt_sym * p).norm());
    }
    best = std::min(best, worst);
  }
  return best;
}

MspdResult MspdError(const ObjectModel& model, const Pose& gt, const Pose& pred,
                     const CameraIntrinsics& camera) {
  RequireModel(model);
  std::vector<std::optional<Vec2>> pred_px;
  pred_px.reserve(model.points().size());
  for (const Vec3& p : model.points()) pred_px.push_back(ProjectPoint(pred * p, camera));

  MspdResult best{std::numeric_limits<double>::infinity(), model.points().size()};
  for (const Pose& sym : model.symmetries()) {
    Pose gt_sym = gt * sym;
    double worst = 0.0;
    std::size_t excluded = 0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < model.points().size(); ++i) {
      auto gt_px = ProjectPoint(gt_sym * model.points()[i], camera);
      if (!gt_px || !pred_px[i]) {
        ++excluded;
        continue;
      }
      ++used;
      worst = std::max(worst, (*pred_px[i] - *gt_px).norm());
    }
    if (used == 0) continue;
    if (worst < best.error) best = MspdResult{worst, excluded};
  }
  return best;
}

std::vector<double> VsdErrors(const ObjectModel& model, const Pose& gt, const Pose& pred,
                              const DepthMap& scene_depth, const CameraIntrinsics& camera,
                              std::span<const double> tolerances, double occlusion_tolerance) {
  RequireModel(model);
  if (scene_depth.width() != camera.width() || scene_depth.height() != camera.height()) {
    throw DimensionMismatchError("scene depth does not match camera image size");
  }
  SplatRender render_gt = SplatPoints(Transform(gt, model.points()), camera);
  SplatRender render_pred = SplatPoints(Transform(pred, model.points()), camera);
  DepthMap dist_gt = DepthToDistance(render_gt.depth, camera);
  DepthMap dist_pred = DepthToDistance(render_pred.depth, camera);
  DepthMap dist_scene = DepthToDistance(scene_depth, camera);

  bool any_gt = false, any_pred = false;
  std::vector<std::uint8_t> visible_gt(dist_gt.size()), visible_pred(dist_gt.size());
  auto gt_data = dist_gt.data();
  auto pred_data = dist_pred.data();
  auto scene_data = dist_scene.data();
  for (std::size_t i = 0; i < gt_data.size(); ++i) {
    double s = scene_data[i];
    any_gt |= gt_data[i] > 0.0;
    any_pred |= pred_data[i] > 0.0;
    // A rendered surface is visible unless the scene is observed clearly in
    // front of it; missing scene depth never occludes.
    visible_gt[i] = gt_data[i] > 0.0 && (s == 0.0 || gt_data[i] - s <= occlusion_tolerance);
    visible_pred[i] =
        (pred_data[i] > 0.0 && (s == 0.0 || pred_data[i] - s <= occlusion_tolerance)) ||
        (visible_gt[i] && pred_data[i] > 0.0);
  }
  if (!any_gt && !any_pred) throw EmptyRenderError("model renders outside the image");

  std::vector<double> errors;
  errors.reserve(tolerances.size());
  for (double tau : tolerances) {
    std::size_t union_count = 0, cost = 0;
    for (std::size_t i = 0; i < gt_data.size(); ++i) {
      if (!visible_gt[i] && !visible_pred[i]) continue;
      ++union_count;
      bool agree = visible_gt[i] && visible_pred[i] &&
                   std::abs(pred_data[i] - gt_data[i]) <= tau;
      cost += agree ? 0 : 1;
    }
    errors.push_back(union_count == 0 ? 1.0
                                      : static_cast<double>(cost) / static_cast<double>(union_count));
  }
  return errors;
}

double VsdError(const ObjectModel& model, const Pose& gt, const Pose& pred,
                const DepthMap& scene_depth, const CameraIntrinsics& camera, double tolerance,
                double occlusion_tolerance) {
  double tau[] = {tolerance};
  return VsdErrors(model, gt, pred, scene_depth, camera, tau, occlusion_tolerance).front();
}

double RecallAverage(std::span<const double> errors, std::span<const double> thresholds) {
  if (thresholds.empty()) throw InvalidArgumentError("recall needs at least one threshold");
  if (errors.empty()) return 0.0;
  CompensatedSum total;
  for (double th : thresholds) {
    std::size_t hits = 0;
    for (double e : errors) hits += e < th;
    total.Add(static_cast<double>(hits) / static_cast<double>(errors.size()));
  }
  return total.Value() / static_cast<double>(thresholds.size());
}

double AddError(const ObjectModel& model, const Pose& gt, const Pose& pred) {
  RequireModel(model);
  CompensatedSum sum;
  for (const Vec3& p : model.points()) sum.Add((pred * p - gt * p).norm());
  return sum.Value() / static_cast<double>(model.points().size());
}

double AddSError(const ObjectModel& model, const Pose& gt, const Pose& pred) {
  RequireModel(model);
  std::vector<Vec3> gt_points = Transform(gt, model.points());
  KdTree tree(gt_points);
  CompensatedSum sum;
  for (const Vec3& p : model.points()) {
    sum.Add(std::sqrt(tree.Nearest(pred * p).squared_distance));
  }
  return sum.Value() / static_cast<double>(model.points().size());
}

AddResult AddRecall(const ObjectModel& model, const Pose& gt, const Pose& pred) {
  double e = model.IsSymmetric() ? AddSError(model, gt, pred) : AddError(model, gt, pred);
  return {e, e < 0.1 * model.diameter()};
}

double Iou(const BinaryMask& pred, const BinaryMask& gt) {
  RequireSameShape(pred, gt, "iou");
  std::size_t inter = 0, uni = 0;
  auto a = pred.data();
  auto b = gt.data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    bool x = a[i] != 0, y = b[i] != 0;
    inter += x && y;
    uni += x || y;
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

std::vector<double> Hits(double error, std::span<const double> thresholds) {
  std::vector<double> out;
  out.reserve(thresholds.size());
  for (double th : thresholds) out.push_back(error < th ? 1.0 : 0.0);
  return out;
}

double Mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  CompensatedSum sum;
  for (double v : values) sum.Add(v);
  return sum.Value() / static_cast<double>(values.size());
}

}  // namespace

PairMetrics EvaluatePose(const ObjectModel& model, const Pose& gt, const Pose& pred,
                         const DepthMap& scene_depth, const CameraIntrinsics& camera,
                         const MetricOptions& options) {
  PairMetrics m;
  const double d = model.diameter();
  m.mssd_error = MssdError(model, gt, pred);
  m.mspd_error = MspdError(model, gt, pred, camera).error;
  std::vector<double> taus = VsdTolerances(d);
  if (!options.vsd_tolerance_fractions.empty()) taus = Scaled(options.vsd_tolerance_fractions, d);
  m.vsd_errors = VsdErrors(model, gt, pred, scene_depth, camera, taus, options.occlusion_tolerance);

  m.mssd_hits = Hits(m.mssd_error, MssdThresholds(d));
  m.mspd_hits = Hits(m.mspd_error, MspdThresholds(camera.width()));
  auto thetas = VsdErrorThresholds();
  m.vsd_hits.assign(thetas.size(), 0.0);
  for (std::size_t k = 0; k < thetas.size(); ++k) {
    std::vector<double> per_tau;
    for (double e : m.vsd_errors) per_tau.push_back(e < thetas[k] ? 1.0 : 0.0);
    m.vsd_hits[k] = Mean(per_tau);
  }
  m.mssd = Mean(m.mssd_hits);
  m.mspd = Mean(m.mspd_hits);
  m.vsd = Mean(m.vsd_hits);

  m.add_error = model.IsSymmetric() ? AddSError(model, gt, pred) : AddError(model, gt, pred);
  m.add = m.add_error < options.add_fraction * d ? 1.0 : 0.0;
  m.ar = AverageRecall(m.vsd, m.mssd, m.mspd);
  return m;
}

namespace {

std::vector<double> MeanCurve(const std::vector<PairMetrics>& pairs,
                              std::vector<double> PairMetrics::*field) {
  if (pairs.empty()) return {};
  std::size_t len = (pairs.front().*field).size();
  std::vector<double> curve(len, 0.0);
  for (std::size_t k = 0; k < len; ++k) {
    std::vector<double> column;
    for (const auto& p : pairs) {
      if ((p.*field).size() != len) {
        throw DimensionMismatchError("per-pair threshold grids differ in length");
      }
      column.push_back((p.*field)[k]);
    }
    curve[k] = Mean(column);
  }
  return curve;
}

}  // namespace

MetricReport Aggregate(std::vector<PairMetrics> pairs) {
  MetricReport r;
  std::vector<double> vsd, mssd, mspd, add, miou;
  for (const auto& p : pairs) {
    vsd.push_back(p.vsd);
    mssd.push_back(p.mssd);
    mspd.push_back(p.mspd);
    add.push_back(p.add);
    if (p.miou) miou.push_back(*p.miou);
  }
  r.vsd = Mean(vsd);
  r.mssd = Mean(mssd);
  r.mspd = Mean(mspd);
  r.add = Mean(add);
  r.ar = AverageRecall(r.vsd, r.mssd, r.mspd);
  r.has_miou = !miou.empty();
  r.miou = Mean(miou);
  r.vsd_curve = MeanCurve(pairs, &PairMetrics::vsd_hits);
  r.mssd_curve = MeanCurve(pairs, &PairMetrics::mssd_hits);
  r.mspd_curve = MeanCurve(pairs, &PairMetrics::mspd_hits);
  r.pairs = std::move(pairs);
  return r;
}

}  // namespace oryon
