#pragma once

// Brute-force reference implementations used by the unit and acceptance
// tests. They follow the metric definitions directly, without the spatial
// indices, composed transforms or compensated sums of the library code.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "oryon/geometry.h"
#include "oryon/image.h"
#include "oryon/random.h"

namespace oracle {

using oryon::CameraIntrinsics;
using oryon::DepthMap;
using oryon::Mat3;
using oryon::Pose;
using oryon::Vec2;
using oryon::Vec3;

inline Vec3 Apply(const Pose& p, const Vec3& x) {
  const Mat3& r = p.rotation();
  const Vec3& t = p.translation();
  return Vec3(r(0, 0) * x[0] + r(0, 1) * x[1] + r(0, 2) * x[2] + t[0],
              r(1, 0) * x[0] + r(1, 1) * x[1] + r(1, 2) * x[2] + t[1],
              r(2, 0) * x[0] + r(2, 1) * x[1] + r(2, 2) * x[2] + t[2]);
}

inline double Dist(const Vec3& a, const Vec3& b) {
  double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

inline double Diameter(const std::vector<Vec3>& pts) {
  double best = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) best = std::max(best, Dist(pts[i], pts[j]));
  return best;
}

inline double Mssd(const std::vector<Vec3>& pts, const std::vector<Pose>& syms, const Pose& gt,
                   const Pose& est) {
  double best = std::numeric_limits<double>::infinity();
  for (const Pose& s : syms) {
    double worst = 0.0;
    for (const Vec3& p : pts) worst = std::max(worst, Dist(Apply(est, p), Apply(gt, Apply(s, p))));
    best = std::min(best, worst);
  }
  return best;
}

inline Vec2 Proj(const Vec3& x, const CameraIntrinsics& k) {
  return Vec2(k.fx() * x[0] / x[2] + k.cx(), k.fy() * x[1] / x[2] + k.cy());
}

// All points are assumed to lie in front of the camera.
inline double Mspd(const std::vector<Vec3>& pts, const std::vector<Pose>& syms, const Pose& gt,
                   const Pose& est, const CameraIntrinsics& k) {
  double best = std::numeric_limits<double>::infinity();
  for (const Pose& s : syms) {
    double worst = 0.0;
    for (const Vec3& p : pts) {
      Vec2 a = Proj(Apply(est, p), k);
      Vec2 b = Proj(Apply(gt, Apply(s, p)), k);
      worst = std::max(worst, std::hypot(a[0] - b[0], a[1] - b[1]));
    }
    best = std::min(best, worst);
  }
  return best;
}

inline double Add(const std::vector<Vec3>& pts, const Pose& gt, const Pose& est) {
  double sum = 0.0;
  for (const Vec3& p : pts) sum += Dist(Apply(est, p), Apply(gt, p));
  return sum / static_cast<double>(pts.size());
}

inline double AddS(const std::vector<Vec3>& pts, const Pose& gt, const Pose& est) {
  double sum = 0.0;
  for (const Vec3& p : pts) {
    Vec3 e = Apply(est, p);
    double best = std::numeric_limits<double>::infinity();
    for (const Vec3& q : pts) best = std::min(best, Dist(e, Apply(gt, q)));
    sum += best;
  }
  return sum / static_cast<double>(pts.size());
}

inline double Iou(const oryon::BinaryMask& a, const oryon::BinaryMask& b) {
  long inter = 0, uni = 0;
  for (int v = 0; v < a.height(); ++v)
    for (int u = 0; u < a.width(); ++u) {
      inter += a(u, v) && b(u, v);
      uni += a(u, v) || b(u, v);
    }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// Mean over thresholds of the fraction of errors strictly below each one.
inline double Recall(const std::vector<double>& errors, const std::vector<double>& thresholds) {
  double total = 0.0;
  for (double th : thresholds) {
    long hits = 0;
    for (double e : errors) hits += e < th;
    total += static_cast<double>(hits) / static_cast<double>(errors.size());
  }
  return total / static_cast<double>(thresholds.size());
}

inline DepthMap ToDistance(const DepthMap& depth, const CameraIntrinsics& k) {
  DepthMap out(depth.width(), depth.height(), 0.0);
  for (int v = 0; v < depth.height(); ++v)
    for (int u = 0; u < depth.width(); ++u) {
      double z = depth(u, v);
      if (z <= 0.0) continue;
      double x = (u - k.cx()) * z / k.fx();
      double y = (v - k.cy()) * z / k.fy();
      out(u, v) = std::sqrt(x * x + y * y + z * z);
    }
  return out;
}

// Distance-from-camera map of a splatted cloud (nearest depth wins per
// pixel, ties keep the earlier point).
inline DepthMap DistanceMap(const std::vector<Vec3>& pts, const Pose& pose,
                            const CameraIntrinsics& k) {
  DepthMap depth(k.width(), k.height(), 0.0);
  for (const Vec3& p : pts) {
    Vec3 x = Apply(pose, p);
    if (!(x[2] > 0.0)) continue;
    Vec2 uv = Proj(x, k);
    int u = static_cast<int>(std::floor(uv[0] + 0.5));
    int v = static_cast<int>(std::floor(uv[1] + 0.5));
    if (u < 0 || v < 0 || u >= k.width() || v >= k.height()) continue;
    if (depth(u, v) == 0.0 || x[2] < depth(u, v)) depth(u, v) = x[2];
  }
  return ToDistance(depth, k);
}

// Per-pixel VSD cost averaged over the union of visibility masks.
inline double Vsd(const std::vector<Vec3>& pts, const Pose& gt, const Pose& est,
                  const DepthMap& scene_depth, const CameraIntrinsics& k, double tau,
                  double delta) {
  DepthMap dg = DistanceMap(pts, gt, k);
  DepthMap de = DistanceMap(pts, est, k);
  DepthMap ds = ToDistance(scene_depth, k);
  long uni = 0, cost = 0;
  for (int v = 0; v < k.height(); ++v)
    for (int u = 0; u < k.width(); ++u) {
      double g = dg(u, v), e = de(u, v), s = ds(u, v);
      bool vg = g > 0.0 && (s == 0.0 || g - s <= delta);
      bool ve = (e > 0.0 && (s == 0.0 || e - s <= delta)) || (vg && e > 0.0);
      if (!vg && !ve) continue;
      ++uni;
      if (!(vg && ve && std::abs(g - e) <= tau)) ++cost;
    }
  return uni == 0 ? 1.0 : static_cast<double>(cost) / static_cast<double>(uni);
}

inline double CosDist(const double* a, const double* b, int d) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (int i = 0; i < d; ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  double c = dot / (std::sqrt(na) * std::sqrt(nb));
  c = std::max(-1.0, std::min(1.0, c));
  return (1.0 - c) / 2.0;
}

// Hardest negative index by exhaustive scan, -1 if none.
inline std::vector<long> HardestNegatives(const std::vector<std::vector<double>>& f,
                                          const std::vector<Vec2>& x, double tau) {
  std::vector<long> out(f.size(), -1);
  for (std::size_t i = 0; i < f.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < f.size(); ++k) {
      if (k == i) continue;
      if (std::hypot(x[i][0] - x[k][0], x[i][1] - x[k][1]) < tau) continue;
      double d = CosDist(f[i].data(), f[k].data(), static_cast<int>(f[i].size()));
      if (d < best) {
        best = d;
        out[i] = static_cast<long>(k);
      }
    }
  }
  return out;
}

inline Pose RandomPose(oryon::Rng& rng, double depth, double spread) {
  Eigen::Quaterniond q(oryon::Gaussian(rng), oryon::Gaussian(rng), oryon::Gaussian(rng),
                       oryon::Gaussian(rng));
  Mat3 r = q.normalized().toRotationMatrix();
  Vec3 t(oryon::Uniform(rng, -spread, spread), oryon::Uniform(rng, -spread, spread), depth);
  return Pose::FromApproximate(r, t);
}

inline Mat3 RandomRotation(oryon::Rng& rng) { return RandomPose(rng, 1.0, 0.0).rotation(); }

}  // namespace oracle
