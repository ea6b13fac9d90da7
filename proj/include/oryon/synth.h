#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "oryon/geometry.h"
#include "oryon/image.h"
#include "oryon/matcher.h"
#include "oryon/matchgen.h"
#include "oryon/random.h"

namespace oryon {

enum class ModelKind { kSphere, kBox, kCylinder, kBlob };

ModelKind ParseModelKind(const std::string& name);
std::string ModelKindName(ModelKind kind);

// Finite rotation group generated by a cyclic rotation about the object z axis
// and, optionally, a half turn about x. The point cloud is closed under the
// group, so declared symmetries hold exactly for the samples.
struct SymmetrySpec {
  int cyclic_order = 1;
  bool flip = false;

  std::vector<Pose> Group() const;
};

struct ModelSpec {
  ModelKind kind = ModelKind::kBox;
  int n_points = 20000;
  // Full extents in meters. Sphere uses x as the diameter; cylinder uses x as
  // the diameter and z as the height; blob uses x as the mean diameter.
  Vec3 size = Vec3(0.12, 0.10, 0.08);
  SymmetrySpec symmetry;
  std::uint64_t seed = 0;
};

ObjectModel MakeModel(const ModelSpec& spec);

// Fronto-parallel plane at `plane_depth` (0 disables it) plus clutter spheres
// given in camera coordinates.
struct Background {
  double plane_depth = 0.8;
  std::vector<Vec3> sphere_centers;
  std::vector<double> sphere_radii;

  DepthMap Render(const CameraIntrinsics& camera) const;
};

struct SynthScene {
  SceneView view;  // depth includes the background; mask marks the object
  // Model-point index per object pixel, -1 elsewhere.
  Image<std::int32_t> index_map;
};

SynthScene RenderScene(const ObjectModel& model, const Pose& pose, const CameraIntrinsics& camera,
                       const Background& background = {});

struct SynthPair {
  SynthScene anchor;
  SynthScene query;
  // Exact correspondences from the index maps: each anchor object pixel is
  // paired with the query object pixel whose model point is nearest to its own
  // model point, when within `radius`.
  GtPair oracle;
};

SynthPair MakePair(const ObjectModel& model, const Pose& anchor_pose, const Pose& query_pose,
                   const CameraIntrinsics& anchor_camera, const CameraIntrinsics& query_camera,
                   const Background& anchor_background = {},
                   const Background& query_background = {},
                   double radius = kDefaultMatchRadius);

struct DescriptorParams {
  double noise = 0.0;             // per-channel Gaussian sigma on unit vectors
  double outlier_fraction = 0.0;  // object cells given random descriptors
  int dim = kDefaultFeatureDim;
  std::uint64_t seed = 0;
};

struct DescriptorFields {
  FeatureMap anchor;
  FeatureMap query;
};

// Image-resolution descriptor maps. Query object pixels carry a unit vector
// hashed from their model-point index; anchor pixels copy the descriptor of
// their oracle partner. Everything else is random.
DescriptorFields MakeDescriptorFields(const SynthPair& pair, const DescriptorParams& params);

// Camera used by the synthetic fixtures: 192 x 192, f = 320.
CameraIntrinsics DefaultSynthCamera();

// Random rotation, object centred near the optical axis at `depth`.
Pose RandomObjectPose(Rng& rng, double depth = 0.5, double lateral = 0.03);

// Rotates `pose` about the object centre by a random axis and an angle in
// [0, max_angle] radians, with a small random translation.
Pose PerturbPose(Rng& rng, const Pose& pose, double max_angle, double max_shift);

}  // namespace oryon
