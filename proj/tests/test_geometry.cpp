#include <gtest/gtest.h>

#include <cmath>

#include "oracles.h"
#include "oryon/geometry.h"
#include "oryon/random.h"

namespace oryon {
namespace {

TEST(Pose, RejectsNonRotation) {
  Mat3 bad = Mat3::Identity();
  bad(0, 0) = 1.1;
  EXPECT_THROW(Pose(bad, Vec3::Zero()), InvalidArgumentError);
  Mat3 reflection = Vec3(1, 1, -1).asDiagonal();
  EXPECT_THROW(Pose(reflection, Vec3::Zero()), InvalidArgumentError);
  EXPECT_THROW(Pose(Mat3::Identity(), Vec3(NAN, 0, 0)), InvalidArgumentError);
}

TEST(Pose, FromApproximateProjectsOntoSO3) {
  Rng rng(1);
  Mat3 r = oracle::RandomRotation(rng);
  Mat3 noisy = r;
  noisy(0, 1) += 1e-8;
  Pose p = Pose::FromApproximate(noisy, Vec3(1, 2, 3));
  EXPECT_TRUE(IsRotation(p.rotation(), 1e-12));
  EXPECT_LT((p.rotation() - r).cwiseAbs().maxCoeff(), 1e-7);
  noisy(0, 1) += 0.1;
  EXPECT_THROW(Pose::FromApproximate(noisy, Vec3::Zero()), InvalidArgumentError);
}

TEST(Pose, ComposeAndInverse) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    Pose a = oracle::RandomPose(rng, 0.5, 0.2);
    Pose b = oracle::RandomPose(rng, 0.3, 0.2);
    Vec3 x(Uniform(rng, -1, 1), Uniform(rng, -1, 1), Uniform(rng, -1, 1));
    EXPECT_LT(((a * b) * x - a * (b * x)).norm(), 1e-12);
    EXPECT_LT((a.Inverse() * (a * x) - x).norm(), 1e-12);
    EXPECT_LT(((a * a.Inverse()).Matrix() - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff(),
              1e-12);
  }
}

TEST(Pose, RelativePoseMapsAnchorOntoQuery) {
  Rng rng(3);
  Pose anchor = oracle::RandomPose(rng, 0.5, 0.05);
  Pose query = oracle::RandomPose(rng, 0.6, 0.05);
  Pose rel = RelativePose(anchor, query);
  Vec3 obj(0.01, -0.02, 0.03);
  EXPECT_LT((rel * (anchor * obj) - query * obj).norm(), 1e-12);
  EXPECT_LT(RotationError(RelativePose(anchor, anchor), Pose::Identity()), 1e-7);
}

TEST(Pose, RotationErrorKnownAngle) {
  Mat3 r = Eigen::AngleAxisd(0.3, Vec3(1, 2, 3).normalized()).toRotationMatrix();
  EXPECT_NEAR(RotationError(Pose(r, Vec3::Zero()), Pose::Identity()), 0.3, 1e-12);
  EXPECT_NEAR(TranslationError(Pose(Mat3::Identity(), Vec3(3, 4, 0)), Pose::Identity()), 5.0,
              1e-15);
}

TEST(Camera, Validation) {
  EXPECT_THROW(CameraIntrinsics(0, 1, 1, 1, 4, 4), InvalidArgumentError);
  EXPECT_THROW(CameraIntrinsics(1, 1, 1, 1, 0, 4), InvalidArgumentError);
  EXPECT_THROW(CameraIntrinsics(1, 1, 5, 1, 4, 4), InvalidArgumentError);
  EXPECT_NO_THROW(CameraIntrinsics(500, 500, 319.5, 239.5, 640, 480));
}

TEST(Unproject, ProjectRoundTrip) {
  CameraIntrinsics cam(500, 480, 31.5, 23.5, 64, 48);
  Rng rng(4);
  DepthMap depth(64, 48, 0.0);
  for (int v = 0; v < 48; ++v)
    for (int u = 0; u < 64; ++u)
      if (UniformUnit(rng) < 0.7) depth(u, v) = Uniform(rng, 0.2, 3.0);
  PointCloud cloud = Unproject(depth, cam);
  ASSERT_EQ(cloud.points.size(), cloud.pixels.size());
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    auto uv = ProjectPoint(cloud.points[i], cam);
    ASSERT_TRUE(uv);
    EXPECT_NEAR(uv->x(), cloud.pixels[i].u, 1e-9);
    EXPECT_NEAR(uv->y(), cloud.pixels[i].v, 1e-9);
    EXPECT_EQ(cloud.points[i].z(), depth(cloud.pixels[i].u, cloud.pixels[i].v));
  }
}

TEST(Unproject, SkipsInvalidAndMasked) {
  CameraIntrinsics cam(100, 100, 1.5, 1.5, 4, 4);
  DepthMap depth(4, 4, 1.0);
  depth(0, 0) = 0.0;
  BinaryMask mask(4, 4, 1);
  mask(3, 3) = 0;
  PointCloud cloud = Unproject(depth, cam, mask);
  EXPECT_EQ(cloud.points.size(), 14u);
  EXPECT_EQ(cloud.pixels.front(), (Pixel{1, 0}));  // row-major order
  EXPECT_THROW(Unproject(DepthMap(3, 4, 1.0), cam), DimensionMismatchError);
  EXPECT_THROW(Unproject(depth, cam, BinaryMask(4, 3, 1)), DimensionMismatchError);
}

TEST(Unproject, PrincipalPointMapsToOpticalAxis) {
  CameraIntrinsics cam(320, 320, 95.5, 95.5, 192, 192);
  Vec3 p = UnprojectPixel({95, 95}, 2.0, cam);
  EXPECT_NEAR(p.x(), -2.0 * 0.5 / 320, 1e-15);
  EXPECT_EQ(p.z(), 2.0);
}

TEST(Project, FlagsBehindAndOutside) {
  CameraIntrinsics cam(100, 100, 4.5, 4.5, 10, 10);
  std::vector<Vec3> pts{Vec3(0, 0, 1), Vec3(0, 0, -1), Vec3(1, 0, 1), Vec3(0, 0, 0)};
  Projection proj = Project(pts, cam);
  EXPECT_EQ(proj.status[0], ProjectionStatus::kInImage);
  EXPECT_EQ(proj.status[1], ProjectionStatus::kBehindCamera);
  EXPECT_TRUE(std::isnan(proj.pixels[1].x()));
  EXPECT_EQ(proj.status[2], ProjectionStatus::kOutsideImage);
  EXPECT_EQ(proj.status[3], ProjectionStatus::kBehindCamera);
  EXPECT_EQ(proj.behind_camera, 2u);
  EXPECT_EQ(proj.outside_image, 1u);
}

TEST(Diameter, MatchesBruteForce) {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Vec3> pts;
    int n = 2 + static_cast<int>(UniformIndex(rng, 400));
    for (int i = 0; i < n; ++i) {
      pts.emplace_back(Uniform(rng, -1, 1), Uniform(rng, -0.3, 0.3), Gaussian(rng) * 0.2);
    }
    EXPECT_EQ(Diameter(pts), oracle::Diameter(pts));
  }
  EXPECT_THROW(Diameter(std::vector<Vec3>{Vec3::Zero()}), InvalidArgumentError);
}

TEST(Diameter, CubeCorners) {
  std::vector<Vec3> pts;
  for (int x : {0, 1})
    for (int y : {0, 1})
      for (int z : {0, 1}) pts.emplace_back(x, y, z);
  EXPECT_NEAR(Diameter(pts), std::sqrt(3.0), 1e-15);
}

TEST(ObjectModel, PrependsIdentityAndChecksDiameter) {
  std::vector<Vec3> pts{Vec3(0, 0, 0), Vec3(1, 0, 0)};
  ObjectModel plain(pts);
  EXPECT_EQ(plain.symmetries().size(), 1u);
  EXPECT_FALSE(plain.IsSymmetric());
  Pose flip(Eigen::AngleAxisd(M_PI, Vec3::UnitZ()).toRotationMatrix(), Vec3::Zero());
  ObjectModel sym(pts, {flip});
  EXPECT_EQ(sym.symmetries().size(), 2u);
  EXPECT_TRUE(sym.IsSymmetric());
  EXPECT_NO_THROW(ObjectModel(pts, {}, 1.0));
  EXPECT_THROW(ObjectModel(pts, {}, 1.1), InvalidArgumentError);
}

TEST(Symmetry, DiscretizedAxis) {
  auto s = DiscretizeContinuousSymmetry(Vec3(0, 0, 2), 10.0);
  ASSERT_EQ(s.size(), 36u);
  EXPECT_LT(RotationError(s[0], Pose::Identity()), 1e-7);
  EXPECT_NEAR(RotationError(s[9], Pose::Identity()), M_PI / 2, 1e-12);
  EXPECT_THROW(DiscretizeContinuousSymmetry(Vec3::Zero()), InvalidArgumentError);
  EXPECT_THROW(DiscretizeContinuousSymmetry(Vec3::UnitZ(), 0.0), InvalidArgumentError);
}

}  // namespace
}  // namespace oryon
