#pragma once

#include <cstddef>
#include <vector>

#include "oryon/geometry.h"
#include "oryon/image.h"

namespace oryon {

inline constexpr double kDefaultMatchRadius = 0.002;     // meters
inline constexpr std::size_t kDefaultMinMatches = 100;

// One RGB-D observation of an annotated object.
struct SceneView {
  DepthMap depth;
  BinaryMask mask;
  CameraIntrinsics camera;
  Pose object_pose;  // object -> camera
};

// Ground-truth pixel correspondences between an anchor and a query scene.
struct GtPair {
  std::vector<Pixel> anchor_pixels;
  std::vector<Pixel> query_pixels;
  // 3D distance of each pair after alignment, meters.
  std::vector<double> distances;
  Pose relative_pose;  // T_{A->Q}

  std::size_t size() const { return anchor_pixels.size(); }
};

// Masks both depth maps, aligns the anchor cloud with T_Q * T_A^-1 and keeps,
// for every anchor point, its nearest query point when it lies within
// `nn_radius`. Throws EmptyMaskError when either masked cloud is empty.
GtPair GenerateGtMatches(const SceneView& anchor, const SceneView& query,
                         double nn_radius = kDefaultMatchRadius);

inline bool AcceptPair(const GtPair& pair, std::size_t min_matches = kDefaultMinMatches) {
  return pair.size() >= min_matches;
}

}  // namespace oryon
