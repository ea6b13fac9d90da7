#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "oryon/geometry.h"
#include "oryon/image.h"
#include "oryon/matcher.h"
#include "oryon/matchgen.h"

namespace oryon::io {

namespace fs = std::filesystem;
using nlohmann::json;

// Writes to a sibling temporary file and renames it into place.
void WriteFileAtomic(const fs::path& path, const std::string& bytes);
std::string ReadFile(const fs::path& path);

json ReadJson(const fs::path& path);
// Pretty-printed with a trailing newline.
void WriteJson(const fs::path& path, const json& value);

// 16-bit binary PGM, millimeters. Depth is rounded to the nearest millimeter;
// values above 65.535 m are rejected.
void WriteDepthPgm(const fs::path& path, const DepthMap& depth);
// Accepts 8- or 16-bit binary PGM; returns meters.
DepthMap ReadDepthPgm(const fs::path& path);

// 8-bit binary PGM with 0/255 values; any non-zero value reads as set.
void WriteMaskPgm(const fs::path& path, const BinaryMask& mask);
BinaryMask ReadMaskPgm(const fs::path& path);

// {"R": 9 row-major reals, "t": 3 reals}.
json PoseToJson(const Pose& pose);
// Matrices within 1e-9 of SO(3) are taken as is; up to 1e-6 they are
// re-orthonormalized.
Pose PoseFromJson(const json& value);

json CameraToJson(const CameraIntrinsics& camera);
CameraIntrinsics CameraFromJson(const json& value);

// "ORYT", u32 H, W, D little-endian, then H*W*D float32 little-endian.
std::string EncodeFeatureMap(const FeatureMap& features);
FeatureMap DecodeFeatureMap(const std::string& bytes);
void WriteFeatureMap(const fs::path& path, const FeatureMap& features);
FeatureMap ReadFeatureMap(const fs::path& path);

// Whitespace-separated XYZ text plus a sidecar JSON with the same stem:
// {"diameter": d, "symmetries": [pose...], "continuous_axes": [[x, y, z]...]}.
// Continuous axes are discretized with `symmetry_step_degrees` on load.
fs::path ModelSidecarPath(const fs::path& xyz_path);
void WriteModel(const fs::path& xyz_path, const ObjectModel& model,
                const std::vector<Vec3>& continuous_axes = {});
ObjectModel ReadModel(const fs::path& xyz_path, double symmetry_step_degrees = 10.0);

json GtPairToJson(const GtPair& pair);
GtPair GtPairFromJson(const json& value);

}  // namespace oryon::io
