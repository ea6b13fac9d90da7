#include "oryon/io.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "oryon/errors.h"

namespace oryon::io {

void WriteFileAtomic(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string());
}

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json ReadJson(const fs::path& path) {
  try {
    return json::parse(ReadFile(path));
  } catch (const json::exception& e) {
    throw IoError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

void WriteJson(const fs::path& path, const json& value) {
  WriteFileAtomic(path, value.dump(2) + "\n");
}

namespace {

struct PgmHeader {
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::size_t data_offset = 0;
};

PgmHeader ParsePgmHeader(const std::string& bytes, const fs::path& path) {
  std::size_t pos = 0;
  auto fail = [&](const std::string& why) -> IoError {
    return IoError(path.string() + ": " + why);
  };
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&] {
    skip_space();
    std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos) throw fail("malformed PGM header");
    return std::stoi(bytes.substr(start, pos - start));
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') throw fail("not a binary PGM (P5)");
  pos = 2;
  PgmHeader h;
  h.width = read_int();
  h.height = read_int();
  h.maxval = read_int();
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw fail("malformed PGM header");
  }
  ++pos;
  h.data_offset = pos;
  if (h.width <= 0 || h.height <= 0) throw fail("PGM size must be positive");
  if (h.maxval <= 0 || h.maxval > 65535) throw fail("PGM maxval out of range");
  std::size_t bytes_per = h.maxval > 255 ? 2 : 1;
  std::size_t need = static_cast<std::size_t>(h.width) * h.height * bytes_per;
  if (bytes.size() - pos < need) throw fail("truncated PGM data");
  return h;
}

std::string PgmHeaderText(int width, int height, int maxval) {
  return "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n" +
         std::to_string(maxval) + "\n";
}

std::vector<int> ReadPgmValues(const fs::path& path, int* width, int* height, int* maxval) {
  std::string bytes = ReadFile(path);
  PgmHeader h = ParsePgmHeader(bytes, path);
  std::vector<int> values(static_cast<std::size_t>(h.width) * h.height);
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data() + h.data_offset);
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = h.maxval > 255 ? (data[2 * i] << 8) | data[2 * i + 1] : data[i];
  }
  *width = h.width;
  *height = h.height;
  *maxval = h.maxval;
  return values;
}

}  // namespace

void WriteDepthPgm(const fs::path& path, const DepthMap& depth) {
  std::string out = PgmHeaderText(depth.width(), depth.height(), 65535);
  for (double z : depth.data()) {
    if (!std::isfinite(z) || z < 0.0) throw InvalidArgumentError("depth must be finite and >= 0");
    double mm = std::round(z * 1000.0);
    if (mm > 65535.0) throw InvalidArgumentError("depth exceeds the 16-bit millimeter range");
    auto v = static_cast<std::uint16_t>(mm);
    out.push_back(static_cast<char>(v >> 8));
    out.push_back(static_cast<char>(v & 0xff));
  }
  WriteFileAtomic(path, out);
}

DepthMap ReadDepthPgm(const fs::path& path) {
  int w, h, maxval;
  std::vector<int> values = ReadPgmValues(path, &w, &h, &maxval);
  DepthMap depth(w, h, 0.0);
  auto data = depth.data();
  for (std::size_t i = 0; i < values.size(); ++i) data[i] = values[i] / 1000.0;
  return depth;
}

void WriteMaskPgm(const fs::path& path, const BinaryMask& mask) {
  std::string out = PgmHeaderText(mask.width(), mask.height(), 255);
  for (std::uint8_t m : mask.data()) out.push_back(static_cast<char>(m ? 255 : 0));
  WriteFileAtomic(path, out);
}

BinaryMask ReadMaskPgm(const fs::path& path) {
  int w, h, maxval;
  std::vector<int> values = ReadPgmValues(path, &w, &h, &maxval);
  BinaryMask mask(w, h, 0);
  auto data = mask.data();
  for (std::size_t i = 0; i < values.size(); ++i) data[i] = values[i] != 0 ? 1 : 0;
  return mask;
}

namespace {

template <typename T>
T Field(const json& value, const char* key) {
  if (!value.is_object() || !value.contains(key)) {
    throw IoError(std::string("missing field '") + key + "'");
  }
  try {
    return value.at(key).get<T>();
  } catch (const json::exception& e) {
    throw IoError(std::string("bad field '") + key + "': " + e.what());
  }
}

}  // namespace

json PoseToJson(const Pose& pose) {
  json r = json::array();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r.push_back(pose.rotation()(i, j));
  json t = json::array();
  for (int i = 0; i < 3; ++i) t.push_back(pose.translation()(i));
  return json{{"R", r}, {"t", t}};
}

Pose PoseFromJson(const json& value) {
  auto r = Field<std::vector<double>>(value, "R");
  auto t = Field<std::vector<double>>(value, "t");
  if (r.size() != 9 || t.size() != 3) throw IoError("pose needs 9 rotation and 3 translation values");
  Mat3 rot;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) rot(i, j) = r[3 * i + j];
  Vec3 trans(t[0], t[1], t[2]);
  try {
    if (IsRotation(rot)) return Pose(rot, trans);
    return Pose::FromApproximate(rot, trans);
  } catch (const InvalidArgumentError& e) {
    throw IoError(std::string("invalid pose: ") + e.what());
  }
}

json CameraToJson(const CameraIntrinsics& c) {
  return json{{"fx", c.fx()},       {"fy", c.fy()},         {"cx", c.cx()},
              {"cy", c.cy()},       {"width", c.width()},   {"height", c.height()}};
}

CameraIntrinsics CameraFromJson(const json& value) {
  try {
    return CameraIntrinsics(Field<double>(value, "fx"), Field<double>(value, "fy"),
                            Field<double>(value, "cx"), Field<double>(value, "cy"),
                            Field<int>(value, "width"), Field<int>(value, "height"));
  } catch (const InvalidArgumentError& e) {
    throw IoError(std::string("invalid camera: ") + e.what());
  }
}

namespace {

constexpr char kFeatureMagic[4] = {'O', 'R', 'Y', 'T'};

void PutU32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

std::uint32_t GetU32(const std::string& in, std::size_t pos) {
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + b])) << (8 * b);
  return v;
}

}  // namespace

std::string EncodeFeatureMap(const FeatureMap& f) {
  std::string out(kFeatureMagic, 4);
  PutU32(out, static_cast<std::uint32_t>(f.height()));
  PutU32(out, static_cast<std::uint32_t>(f.width()));
  PutU32(out, static_cast<std::uint32_t>(f.dim()));
  out.reserve(out.size() + f.values().size() * 4);
  for (float x : f.values()) {
    std::uint32_t bits;
    std::memcpy(&bits, &x, 4);
    PutU32(out, bits);
  }
  return out;
}

FeatureMap DecodeFeatureMap(const std::string& bytes) {
  if (bytes.size() < 16 || bytes.compare(0, 4, kFeatureMagic, 4) != 0) {
    throw IoError("not an ORYT feature blob");
  }
  std::uint32_t h = GetU32(bytes, 4), w = GetU32(bytes, 8), d = GetU32(bytes, 12);
  std::uint64_t count = static_cast<std::uint64_t>(h) * w * d;
  if (h == 0 || w == 0 || d == 0 || bytes.size() - 16 != count * 4) {
    throw IoError("feature blob size does not match its header");
  }
  std::vector<float> values(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint32_t bits = GetU32(bytes, 16 + 4 * i);
    std::memcpy(&values[i], &bits, 4);
  }
  try {
    return FeatureMap(static_cast<int>(h), static_cast<int>(w), static_cast<int>(d),
                      std::move(values));
  } catch (const InvalidArgumentError& e) {
    throw IoError(std::string("invalid feature blob: ") + e.what());
  }
}

void WriteFeatureMap(const fs::path& path, const FeatureMap& features) {
  WriteFileAtomic(path, EncodeFeatureMap(features));
}

FeatureMap ReadFeatureMap(const fs::path& path) {
  try {
    return DecodeFeatureMap(ReadFile(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

fs::path ModelSidecarPath(const fs::path& xyz_path) {
  fs::path p = xyz_path;
  return p.replace_extension(".json");
}

void WriteModel(const fs::path& xyz_path, const ObjectModel& model,
                const std::vector<Vec3>& continuous_axes) {
  std::string text;
  char line[96];
  for (const Vec3& p : model.points()) {
    std::snprintf(line, sizeof line, "%.17g %.17g %.17g\n", p.x(), p.y(), p.z());
    text += line;
  }
  WriteFileAtomic(xyz_path, text);
  json syms = json::array();
  for (const Pose& s : model.symmetries()) syms.push_back(PoseToJson(s));
  json axes = json::array();
  for (const Vec3& a : continuous_axes) axes.push_back({a.x(), a.y(), a.z()});
  WriteJson(ModelSidecarPath(xyz_path),
            json{{"diameter", model.diameter()}, {"symmetries", syms}, {"continuous_axes", axes}});
}

ObjectModel ReadModel(const fs::path& xyz_path, double symmetry_step_degrees) {
  std::istringstream in(ReadFile(xyz_path));
  std::vector<Vec3> points;
  double x, y, z;
  while (in >> x >> y >> z) points.emplace_back(x, y, z);
  if (!in.eof()) throw IoError(xyz_path.string() + ": malformed XYZ text");

  fs::path sidecar = ModelSidecarPath(xyz_path);
  std::vector<Pose> symmetries;
  std::optional<double> diameter;
  if (fs::exists(sidecar)) {
    json meta = ReadJson(sidecar);
    if (meta.contains("diameter")) diameter = Field<double>(meta, "diameter");
    if (meta.contains("symmetries")) {
      for (const json& s : meta.at("symmetries")) symmetries.push_back(PoseFromJson(s));
    }
    if (meta.contains("continuous_axes")) {
      for (const json& a : meta.at("continuous_axes")) {
        auto v = a.get<std::vector<double>>();
        if (v.size() != 3) throw IoError("continuous axis needs 3 values");
        for (const Pose& s : DiscretizeContinuousSymmetry(Vec3(v[0], v[1], v[2]),
                                                          symmetry_step_degrees)) {
          // Discretized axes overlap with explicit entries (at least the
          // identity); keep one copy of each.
          bool seen = std::any_of(symmetries.begin(), symmetries.end(), [&](const Pose& o) {
            return (o.rotation() - s.rotation()).cwiseAbs().maxCoeff() < 1e-12 &&
                   (o.translation() - s.translation()).cwiseAbs().maxCoeff() < 1e-12;
          });
          if (!seen) symmetries.push_back(s);
        }
      }
    }
  }
  try {
    if (diameter) return ObjectModel(std::move(points), std::move(symmetries), *diameter);
    return ObjectModel(std::move(points), std::move(symmetries));
  } catch (const InvalidArgumentError& e) {
    throw IoError(xyz_path.string() + ": " + e.what());
  }
}

json GtPairToJson(const GtPair& pair) {
  json a = json::array(), q = json::array();
  for (const Pixel& p : pair.anchor_pixels) a.push_back({p.u, p.v});
  for (const Pixel& p : pair.query_pixels) q.push_back({p.u, p.v});
  return json{{"count", pair.size()},
              {"relative_pose", PoseToJson(pair.relative_pose)},
              {"anchor_pixels", a},
              {"query_pixels", q},
              {"distances", pair.distances}};
}

GtPair GtPairFromJson(const json& value) {
  GtPair pair;
  pair.relative_pose = PoseFromJson(Field<json>(value, "relative_pose"));
  for (const auto& p : Field<std::vector<std::array<int, 2>>>(value, "anchor_pixels")) {
    pair.anchor_pixels.push_back({p[0], p[1]});
  }
  for (const auto& p : Field<std::vector<std::array<int, 2>>>(value, "query_pixels")) {
    pair.query_pixels.push_back({p[0], p[1]});
  }
  pair.distances = Field<std::vector<double>>(value, "distances");
  if (pair.anchor_pixels.size() != pair.query_pixels.size() ||
      pair.distances.size() != pair.anchor_pixels.size()) {
    throw IoError("ground-truth pair arrays differ in length");
  }
  return pair;
}

}  // namespace oryon::io
