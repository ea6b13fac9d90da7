#include "oryon/geometry.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/SVD>

namespace oryon {

bool IsRotation(const Mat3& rotation, double tolerance) {
  if (!rotation.allFinite()) return false;
  double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tolerance && std::abs(rotation.determinant() - 1.0) <= tolerance;
}

Pose::Pose(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
  if (!IsRotation(rotation)) {
    throw InvalidArgumentError("pose rotation is not in SO(3)");
  }
  if (!translation.allFinite()) {
    throw InvalidArgumentError("pose translation is not finite");
  }
}

Pose Pose::FromApproximate(const Mat3& rotation, const Vec3& translation, double tolerance) {
  if (!IsRotation(rotation, tolerance)) {
    throw InvalidArgumentError("matrix is not close to a rotation");
  }
  Eigen::JacobiSVD<Mat3> svd(rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  return Pose(r, translation);
}

Pose Pose::operator*(const Pose& other) const {
  return Pose(rotation_ * other.rotation_, rotation_ * other.translation_ + translation_,
              Unchecked{});
}

Pose Pose::Inverse() const {
  Mat3 rt = rotation_.transpose();
  return Pose(rt, -(rt * translation_), Unchecked{});
}

Eigen::Matrix4d Pose::Matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

double RotationError(const Pose& a, const Pose& b) {
  Mat3 delta = a.rotation().transpose() * b.rotation();
  double c = std::clamp((delta.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

double TranslationError(const Pose& a, const Pose& b) {
  return (a.translation() - b.translation()).norm();
}

std::vector<Vec3> Transform(const Pose& pose, std::span<const Vec3> points) {
  std::vector<Vec3> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(pose * p);
  return out;
}

CameraIntrinsics::CameraIntrinsics(double fx, double fy, double cx, double cy, int width,
                                   int height)
    : fx_(fx), fy_(fy), cx_(cx), cy_(cy), width_(width), height_(height) {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw InvalidArgumentError("focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw InvalidArgumentError("image size must be positive");
  }
  if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height)) {
    throw InvalidArgumentError("principal point outside the image");
  }
}

void ValidateDepth(const DepthMap& depth) {
  for (double z : depth.data()) {
    if (!std::isfinite(z) || z < 0.0) {
      throw InvalidArgumentError("depth values must be finite and non-negative");
    }
  }
}

Vec3 UnprojectPixel(Pixel pixel, double depth, const CameraIntrinsics& camera) {
  return Vec3(depth * (pixel.u - camera.cx()) / camera.fx(),
              depth * (pixel.v - camera.cy()) / camera.fy(), depth);
}

namespace {

void RequireCameraShape(const DepthMap& depth, const CameraIntrinsics& camera) {
  if (depth.width() != camera.width() || depth.height() != camera.height()) {
    throw DimensionMismatchError("depth map does not match camera image size");
  }
}

PointCloud UnprojectImpl(const DepthMap& depth, const CameraIntrinsics& camera,
                         const BinaryMask* mask) {
  RequireCameraShape(depth, camera);
  if (mask) RequireSameShape(depth, *mask, "unproject mask");
  PointCloud cloud;
  for (int v = 0; v < depth.height(); ++v) {
    for (int u = 0; u < depth.width(); ++u) {
      double z = depth(u, v);
      if (!(z > 0.0)) continue;
      if (mask && (*mask)(u, v) == 0) continue;
      cloud.points.push_back(UnprojectPixel({u, v}, z, camera));
      cloud.pixels.push_back({u, v});
    }
  }
  return cloud;
}

}  // namespace

PointCloud Unproject(const DepthMap& depth, const CameraIntrinsics& camera) {
  return UnprojectImpl(depth, camera, nullptr);
}

PointCloud Unproject(const DepthMap& depth, const CameraIntrinsics& camera,
                     const BinaryMask& mask) {
  return UnprojectImpl(depth, camera, &mask);
}

std::optional<Vec2> ProjectPoint(const Vec3& point, const CameraIntrinsics& camera) {
  if (!(point.z() > 0.0)) return std::nullopt;
  return Vec2(camera.fx() * point.x() / point.z() + camera.cx(),
              camera.fy() * point.y() / point.z() + camera.cy());
}

Projection Project(std::span<const Vec3> points, const CameraIntrinsics& camera) {
  Projection out;
  out.pixels.reserve(points.size());
  out.status.reserve(points.size());
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  for (const auto& p : points) {
    auto uv = ProjectPoint(p, camera);
    if (!uv) {
      out.pixels.emplace_back(kNaN, kNaN);
      out.status.push_back(ProjectionStatus::kBehindCamera);
      ++out.behind_camera;
      continue;
    }
    out.pixels.push_back(*uv);
    // Pixel centers sit at integer coordinates, so the image spans
    // [-0.5, width - 0.5) x [-0.5, height - 0.5).
    bool inside = (*uv).x() >= -0.5 && (*uv).x() < camera.width() - 0.5 &&
                  (*uv).y() >= -0.5 && (*uv).y() < camera.height() - 0.5;
    out.status.push_back(inside ? ProjectionStatus::kInImage : ProjectionStatus::kOutsideImage);
    if (!inside) ++out.outside_image;
  }
  return out;
}

double Diameter(std::span<const Vec3> points) {
  if (points.size() < 2) {
    throw InvalidArgumentError("diameter needs at least two points");
  }
  Vec3 centroid = Vec3::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());

  std::vector<double> radius(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) radius[i] = (points[i] - centroid).norm();
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return radius[a] > radius[b]; });

  // |p_i - p_j| <= r_i + r_j. The bound is inflated slightly so rounding in
  // the radii can never prune the true maximum.
  constexpr double kSlack = 1.0 + 1e-12;
  double best_sq = 0.0;
  double best = 0.0;
  for (std::size_t a = 0; a < order.size(); ++a) {
    std::size_t i = order[a];
    if ((radius[i] + radius[order[0]]) * kSlack < best) break;
    for (std::size_t b = a + 1; b < order.size(); ++b) {
      std::size_t j = order[b];
      if ((radius[i] + radius[j]) * kSlack < best) break;
      double d2 = (points[i] - points[j]).squaredNorm();
      if (d2 > best_sq) {
        best_sq = d2;
        best = std::sqrt(d2);
      }
    }
  }
  return std::sqrt(best_sq);
}

namespace {

std::vector<Pose> WithIdentity(std::vector<Pose> symmetries) {
  auto is_identity = [](const Pose& p) {
    return (p.rotation() - Mat3::Identity()).cwiseAbs().maxCoeff() <= 1e-12 &&
           p.translation().cwiseAbs().maxCoeff() <= 1e-12;
  };
  if (std::none_of(symmetries.begin(), symmetries.end(), is_identity)) {
    symmetries.insert(symmetries.begin(), Pose::Identity());
  }
  return symmetries;
}

}  // namespace

ObjectModel::ObjectModel(std::vector<Vec3> points, std::vector<Pose> symmetries)
    : points_(std::move(points)), symmetries_(WithIdentity(std::move(symmetries))) {
  for (const auto& p : points_) {
    if (!p.allFinite()) throw InvalidArgumentError("model point is not finite");
  }
  diameter_ = Diameter(points_);
}

ObjectModel::ObjectModel(std::vector<Vec3> points, std::vector<Pose> symmetries,
                         double diameter)
    : ObjectModel(std::move(points), std::move(symmetries)) {
  if (std::abs(diameter - diameter_) > 1e-9) {
    throw InvalidArgumentError("declared diameter " + std::to_string(diameter) +
                               " disagrees with point cloud diameter " +
                               std::to_string(diameter_));
  }
}

std::vector<Pose> DiscretizeContinuousSymmetry(const Vec3& axis, double step_degrees) {
  if (!(step_degrees > 0.0) || step_degrees > 360.0) {
    throw InvalidArgumentError("symmetry step must be in (0, 360] degrees");
  }
  if (axis.norm() < 1e-12) throw InvalidArgumentError("symmetry axis is zero");
  int count = std::max(1, static_cast<int>(std::lround(360.0 / step_degrees)));
  Vec3 unit = axis.normalized();
  std::vector<Pose> out;
  out.reserve(count);
  out.push_back(Pose::Identity());
  for (int k = 1; k < count; ++k) {
    double angle = 2.0 * M_PI * k / count;
    out.emplace_back(Eigen::AngleAxisd(angle, unit).toRotationMatrix(), Vec3::Zero());
  }
  return out;
}

}  // namespace oryon
