#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "oryon/image.h"

namespace oryon {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Integer pixel, (u, v) = (column, row).
struct Pixel {
  int u = 0;
  int v = 0;
  auto operator<=>(const Pixel&) const = default;
};

// Rigid SE(3) transform x -> R x + t, translation in meters.
class Pose {
 public:
  static constexpr double kOrthonormalTolerance = 1e-9;

  Pose() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}
  // Throws InvalidArgumentError unless rotation is in SO(3) within 1e-9.
  Pose(const Mat3& rotation, const Vec3& translation);

  static Pose Identity() { return Pose(); }
  // Projects an approximately orthonormal matrix onto SO(3); rejects
  // matrices further than `tolerance` from a rotation.
  static Pose FromApproximate(const Mat3& rotation, const Vec3& translation,
                              double tolerance = 1e-6);

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Vec3 operator*(const Vec3& point) const { return rotation_ * point + translation_; }
  Pose operator*(const Pose& other) const;
  Pose Inverse() const;
  Eigen::Matrix4d Matrix() const;

 private:
  struct Unchecked {};
  Pose(const Mat3& rotation, const Vec3& translation, Unchecked)
      : rotation_(rotation), translation_(translation) {}

  Mat3 rotation_;
  Vec3 translation_;
};

bool IsRotation(const Mat3& rotation, double tolerance = Pose::kOrthonormalTolerance);

// a * b: apply b first, then a.
inline Pose Compose(const Pose& a, const Pose& b) { return a * b; }
inline Pose Inverse(const Pose& p) { return p.Inverse(); }
// T_{A->Q} = T_Q * T_A^-1 maps anchor-camera points onto query-camera points.
inline Pose RelativePose(const Pose& anchor, const Pose& query) {
  return Compose(query, Inverse(anchor));
}

// Geodesic angle between rotations, radians.
double RotationError(const Pose& a, const Pose& b);
double TranslationError(const Pose& a, const Pose& b);

std::vector<Vec3> Transform(const Pose& pose, std::span<const Vec3> points);

class CameraIntrinsics {
 public:
  CameraIntrinsics() = default;
  // Throws InvalidArgumentError when fx, fy <= 0 or the principal point lies
  // outside [0, width) x [0, height).
  CameraIntrinsics(double fx, double fy, double cx, double cy, int width, int height);

  double fx() const { return fx_; }
  double fy() const { return fy_; }
  double cx() const { return cx_; }
  double cy() const { return cy_; }
  int width() const { return width_; }
  int height() const { return height_; }

  bool operator==(const CameraIntrinsics&) const = default;

 private:
  double fx_ = 1.0;
  double fy_ = 1.0;
  double cx_ = 0.0;
  double cy_ = 0.0;
  int width_ = 1;
  int height_ = 1;
};

struct PointCloud {
  std::vector<Vec3> points;
  // Source pixel per point; empty when the cloud did not come from a depth map.
  std::vector<Pixel> pixels;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

// Throws InvalidArgumentError on negative or non-finite depth.
void ValidateDepth(const DepthMap& depth);

Vec3 UnprojectPixel(Pixel pixel, double depth, const CameraIntrinsics& camera);

// Back-projects every pixel with depth > 0 (and mask != 0 when a mask is
// given). Points are emitted in row-major pixel order.
PointCloud Unproject(const DepthMap& depth, const CameraIntrinsics& camera);
PointCloud Unproject(const DepthMap& depth, const CameraIntrinsics& camera,
                     const BinaryMask& mask);

enum class ProjectionStatus { kInImage, kOutsideImage, kBehindCamera };

struct Projection {
  std::vector<Vec2> pixels;  // NaN for points behind the camera
  std::vector<ProjectionStatus> status;
  std::size_t behind_camera = 0;
  std::size_t outside_image = 0;
};

// Pinhole projection u = fx x / z + cx, v = fy y / z + cy. Points with z <= 0
// are flagged, out-of-image points are flagged but keep their coordinates.
std::optional<Vec2> ProjectPoint(const Vec3& point, const CameraIntrinsics& camera);
Projection Project(std::span<const Vec3> points, const CameraIntrinsics& camera);

// Maximum pairwise Euclidean distance. Exact; pruned brute force.
double Diameter(std::span<const Vec3> points);

// Point-cloud object model with its diameter and a finite symmetry set.
class ObjectModel {
 public:
  ObjectModel() = default;
  // Computes the diameter. The identity is prepended to `symmetries` unless
  // already present. Requires at least 2 points.
  explicit ObjectModel(std::vector<Vec3> points, std::vector<Pose> symmetries = {});
  // Verifies `diameter` against the points within 1e-9.
  ObjectModel(std::vector<Vec3> points, std::vector<Pose> symmetries, double diameter);

  const std::vector<Vec3>& points() const { return points_; }
  double diameter() const { return diameter_; }
  const std::vector<Pose>& symmetries() const { return symmetries_; }
  bool IsSymmetric() const { return symmetries_.size() > 1; }

 private:
  std::vector<Vec3> points_;
  double diameter_ = 0.0;
  std::vector<Pose> symmetries_;
};

// Rotations about `axis` (through the object origin) in steps of
// `step_degrees`, starting at the identity. 360 / step is rounded to the
// nearest integer count.
std::vector<Pose> DiscretizeContinuousSymmetry(const Vec3& axis, double step_degrees = 10.0);

}  // namespace oryon
