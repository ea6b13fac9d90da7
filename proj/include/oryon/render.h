#pragma once

#include <cstdint>
#include <span>

#include "oryon/geometry.h"
#include "oryon/image.h"

namespace oryon {

struct SplatRender {
  DepthMap depth;                 // 0 where nothing was splatted
  Image<std::int32_t> point_index;  // -1 where nothing was splatted
};

// Z-buffered point splatting: every point in front of the camera lands on the
// pixel nearest to its projection; the smallest depth wins, ties go to the
// lowest point index. Points must be in camera coordinates.
SplatRender SplatPoints(std::span<const Vec3> camera_points, const CameraIntrinsics& camera);

// Converts a depth map into a map of distances from the camera center.
DepthMap DepthToDistance(const DepthMap& depth, const CameraIntrinsics& camera);

}  // namespace oryon
