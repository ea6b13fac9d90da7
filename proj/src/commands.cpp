#include "oryon/commands.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "oryon/errors.h"
#include "oryon/synth.h"

namespace oryon::cli {

namespace fs = std::filesystem;
using io::json;

void EvalConfig::Validate() const {
  if (threads < 1) throw InvalidArgumentError("threads must be >= 1");
  if (method != "spatial-consistency" && method != "ransac") {
    throw InvalidArgumentError("method must be 'spatial-consistency' or 'ransac'");
  }
  if (!(nn_radius > 0.0)) throw InvalidArgumentError("nn_radius must be positive");
  if (loss_pairs < 1) throw InvalidArgumentError("loss_pairs must be >= 1");
  if (!(symmetry_step > 0.0 && symmetry_step <= 360.0)) {
    throw InvalidArgumentError("symmetry_step must lie in (0, 360]");
  }
  if (!(metrics.occlusion_tolerance >= 0.0)) {
    throw InvalidArgumentError("occlusion tolerance must be >= 0");
  }
  for (double f : metrics.vsd_tolerance_fractions) {
    if (!(f > 0.0)) throw InvalidArgumentError("VSD tolerance fractions must be positive");
  }
  match.Validate();
  registration.Validate();
  losses.Validate();
  if (synth.pairs < 1) throw InvalidArgumentError("synth.pairs must be >= 1");
  if (synth.kinds.empty()) throw InvalidArgumentError("synth.kinds must not be empty");
  for (const auto& k : synth.kinds) ParseModelKind(k);
  if (synth.model_points < 100) throw InvalidArgumentError("synth.model_points must be >= 100");
  if (!(synth.noise >= 0.0)) throw InvalidArgumentError("synth.noise must be >= 0");
  if (!(synth.outlier_fraction >= 0.0 && synth.outlier_fraction <= 1.0)) {
    throw InvalidArgumentError("synth.outlier_fraction must lie in [0, 1]");
  }
  if (!(synth.depth > 0.0)) throw InvalidArgumentError("synth.depth must be positive");
}

namespace {

void CheckKeys(const json& obj, std::initializer_list<const char*> allowed, const char* where) {
  if (!obj.is_object()) throw InvalidArgumentError(std::string(where) + " must be a JSON object");
  std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& item : obj.items()) {
    if (!keys.count(item.key())) {
      throw InvalidArgumentError("unknown key '" + item.key() + "' in " + where);
    }
  }
}

template <typename T>
void Read(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InvalidArgumentError(std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace

EvalConfig ConfigFromJson(const json& value, EvalConfig c) {
  CheckKeys(value,
            {"input", "output", "predictions", "seed", "threads", "method", "nn_radius",
             "min_matches", "match", "registration", "losses", "loss_pairs", "metrics",
             "symmetry_step", "synth"},
            "config");
  Read(value, "input", c.input);
  Read(value, "output", c.output);
  Read(value, "predictions", c.predictions);
  Read(value, "seed", c.seed);
  Read(value, "threads", c.threads);
  Read(value, "method", c.method);
  Read(value, "nn_radius", c.nn_radius);
  Read(value, "min_matches", c.min_matches);
  Read(value, "loss_pairs", c.loss_pairs);
  Read(value, "symmetry_step", c.symmetry_step);
  if (value.contains("match")) {
    const json& m = value.at("match");
    CheckKeys(m, {"max_distance", "max_matches"}, "match");
    Read(m, "max_distance", c.match.max_distance);
    Read(m, "max_matches", c.match.max_matches);
  }
  if (value.contains("registration")) {
    const json& r = value.at("registration");
    CheckKeys(r, {"inlier_threshold", "compatibility_tolerance", "iterations", "min_inlier_ratio"},
              "registration");
    Read(r, "inlier_threshold", c.registration.inlier_threshold);
    Read(r, "compatibility_tolerance", c.registration.compatibility_tolerance);
    Read(r, "iterations", c.registration.iterations);
    Read(r, "min_inlier_ratio", c.registration.min_inlier_ratio);
  }
  if (value.contains("losses")) {
    const json& l = value.at("losses");
    CheckKeys(l, {"positive_margin", "negative_margin", "exclusion_radius", "positive_weight",
                  "negative_weight", "mask_weight"},
              "losses");
    Read(l, "positive_margin", c.losses.positive_margin);
    Read(l, "negative_margin", c.losses.negative_margin);
    Read(l, "exclusion_radius", c.losses.exclusion_radius);
    Read(l, "positive_weight", c.losses.positive_weight);
    Read(l, "negative_weight", c.losses.negative_weight);
    Read(l, "mask_weight", c.losses.mask_weight);
  }
  if (value.contains("metrics")) {
    const json& m = value.at("metrics");
    CheckKeys(m, {"occlusion_tolerance", "vsd_tolerance_fractions"}, "metrics");
    Read(m, "occlusion_tolerance", c.metrics.occlusion_tolerance);
    Read(m, "vsd_tolerance_fractions", c.metrics.vsd_tolerance_fractions);
  }
  if (value.contains("synth")) {
    const json& s = value.at("synth");
    CheckKeys(s, {"pairs", "kinds", "model_points", "noise", "outlier_fraction", "depth",
                  "max_relative_angle_deg", "max_shift", "clutter"},
              "synth");
    Read(s, "pairs", c.synth.pairs);
    Read(s, "kinds", c.synth.kinds);
    Read(s, "model_points", c.synth.model_points);
    Read(s, "noise", c.synth.noise);
    Read(s, "outlier_fraction", c.synth.outlier_fraction);
    Read(s, "depth", c.synth.depth);
    Read(s, "max_relative_angle_deg", c.synth.max_relative_angle_deg);
    Read(s, "max_shift", c.synth.max_shift);
    Read(s, "clutter", c.synth.clutter);
  }
  return c;
}

json ConfigToJson(const EvalConfig& c) {
  return json{
      {"input", c.input},
      {"output", c.output},
      {"predictions", c.predictions},
      {"seed", c.seed},
      {"threads", c.threads},
      {"method", c.method},
      {"nn_radius", c.nn_radius},
      {"min_matches", c.min_matches},
      {"loss_pairs", c.loss_pairs},
      {"symmetry_step", c.symmetry_step},
      {"match", {{"max_distance", c.match.max_distance}, {"max_matches", c.match.max_matches}}},
      {"registration",
       {{"inlier_threshold", c.registration.inlier_threshold},
        {"compatibility_tolerance", c.registration.compatibility_tolerance},
        {"iterations", c.registration.iterations},
        {"min_inlier_ratio", c.registration.min_inlier_ratio}}},
      {"losses",
       {{"positive_margin", c.losses.positive_margin},
        {"negative_margin", c.losses.negative_margin},
        {"exclusion_radius", c.losses.exclusion_radius},
        {"positive_weight", c.losses.positive_weight},
        {"negative_weight", c.losses.negative_weight},
        {"mask_weight", c.losses.mask_weight}}},
      {"metrics",
       {{"occlusion_tolerance", c.metrics.occlusion_tolerance},
        {"vsd_tolerance_fractions", c.metrics.vsd_tolerance_fractions}}},
      {"synth",
       {{"pairs", c.synth.pairs},
        {"kinds", c.synth.kinds},
        {"model_points", c.synth.model_points},
        {"noise", c.synth.noise},
        {"outlier_fraction", c.synth.outlier_fraction},
        {"depth", c.synth.depth},
        {"max_relative_angle_deg", c.synth.max_relative_angle_deg},
        {"max_shift", c.synth.max_shift},
        {"clutter", c.synth.clutter}}},
  };
}

// ---------------------------------------------------------------------------
// Fixtures

namespace {

constexpr const char* kManifest = "manifest.json";
constexpr const char* kPairFile = "pair.json";

fs::path RequireDir(const std::string& path, const char* what) {
  if (path.empty()) throw InvalidArgumentError(std::string(what) + " directory not set");
  return fs::path(path);
}

std::string SideField(const json& side, const char* key) {
  if (!side.contains(key)) throw IoError(std::string("pair.json side is missing '") + key + "'");
  return side.at(key).get<std::string>();
}

FixtureSide LoadSide(const fs::path& dir, const json& side) {
  CameraIntrinsics camera = io::CameraFromJson(io::ReadJson(dir / SideField(side, "camera")));
  DepthMap depth = io::ReadDepthPgm(dir / SideField(side, "depth"));
  BinaryMask mask = io::ReadMaskPgm(dir / SideField(side, "mask"));
  Pose pose = io::PoseFromJson(io::ReadJson(dir / SideField(side, "pose")));
  if (depth.width() != camera.width() || depth.height() != camera.height()) {
    throw IoError("depth map does not match the camera size in " + dir.string());
  }
  if (!mask.SameShape(depth)) throw IoError("mask does not match the depth map in " + dir.string());
  FixtureSide out{SceneView{std::move(depth), std::move(mask), camera, pose}, std::nullopt, {}};
  if (side.contains("gt_mask")) {
    out.gt_mask = io::ReadMaskPgm(dir / side.at("gt_mask").get<std::string>());
    if (!out.gt_mask->SameShape(out.view.depth)) {
      throw IoError("gt mask does not match the depth map in " + dir.string());
    }
  }
  if (side.contains("features")) out.features_path = dir / side.at("features").get<std::string>();
  return out;
}

}  // namespace

std::vector<std::string> ListPairs(const fs::path& input) {
  if (!fs::is_directory(input)) throw IoError("input directory " + input.string() + " not found");
  std::vector<std::string> ids;
  if (fs::exists(input / kManifest)) {
    json manifest = io::ReadJson(input / kManifest);
    if (!manifest.contains("pairs")) throw IoError("manifest.json has no 'pairs' list");
    ids = manifest.at("pairs").get<std::vector<std::string>>();
  } else {
    for (const auto& entry : fs::directory_iterator(input)) {
      if (entry.is_directory() && fs::exists(entry.path() / kPairFile)) {
        ids.push_back(entry.path().filename().string());
      }
    }
    std::sort(ids.begin(), ids.end());
  }
  if (ids.empty()) throw IoError("no scene pairs found in " + input.string());
  return ids;
}

Fixture LoadFixture(const fs::path& input, const std::string& id) {
  fs::path dir = input / id;
  json pair = io::ReadJson(dir / kPairFile);
  if (!pair.contains("anchor") || !pair.contains("query")) {
    throw IoError(id + ": pair.json needs 'anchor' and 'query'");
  }
  Fixture f{id, dir, {}, {}, LoadSide(dir, pair.at("anchor")), LoadSide(dir, pair.at("query"))};
  if (pair.contains("model")) f.model_path = dir / pair.at("model").get<std::string>();
  if (pair.contains("oracle_matches")) {
    f.oracle_path = dir / pair.at("oracle_matches").get<std::string>();
  }
  return f;
}

// ---------------------------------------------------------------------------
// Shared batch plumbing

namespace {

struct PairOutcome {
  bool ok = false;
  std::string error;
  json record;
  std::string log;
};

// Runs `fn` over every pair with a static worker pool. Per-pair errors are
// captured; output order follows the pair list.
template <typename Fn>
std::vector<PairOutcome> ForEachPair(const std::vector<std::string>& ids, int threads, Fn&& fn) {
  std::vector<PairOutcome> out(ids.size());
  ParallelFor(ids.size(), threads, [&](std::size_t i) {
    try {
      out[i] = fn(i, ids[i]);
      out[i].ok = true;
    } catch (const Error& e) {
      out[i] = PairOutcome{false, e.what(), json::object(), ""};
    } catch (const json::exception& e) {
      out[i] = PairOutcome{false, e.what(), json::object(), ""};
    }
  });
  return out;
}

int FlushLogs(const std::vector<std::string>& ids, const std::vector<PairOutcome>& outcomes,
              std::ostream& log) {
  int failures = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    log << outcomes[i].log;
    if (!outcomes[i].ok) {
      log << ids[i] << ": error: " << outcomes[i].error << "\n";
      ++failures;
    }
  }
  return failures == 0 ? kExitOk : kExitPartial;
}

std::string Fixed(double v, int digits = 4) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

json FiniteOrNull(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

// ---------------------------------------------------------------------------
// synth

namespace {

ModelSpec SpecFor(ModelKind kind, int points, std::uint64_t seed) {
  ModelSpec spec;
  spec.kind = kind;
  spec.n_points = points;
  spec.seed = seed;
  switch (kind) {
    case ModelKind::kBox:
      spec.size = Vec3(0.12, 0.10, 0.08);
      spec.symmetry = {2, true};
      break;
    case ModelKind::kCylinder:
      spec.size = Vec3(0.08, 0.08, 0.12);
      spec.symmetry = {36, true};
      break;
    case ModelKind::kSphere:
      spec.size = Vec3(0.10, 0.10, 0.10);
      spec.symmetry = {8, true};
      break;
    case ModelKind::kBlob:
      spec.size = Vec3(0.11, 0.11, 0.11);
      spec.symmetry = {1, false};
      break;
  }
  return spec;
}

Background SceneBackground(Rng& rng, const SynthOptions& opt) {
  Background bg;
  bg.plane_depth = opt.depth + 0.25;
  if (opt.clutter) {
    double side = UniformUnit(rng) < 0.5 ? -1.0 : 1.0;
    bg.sphere_centers.push_back(
        Vec3(side * Uniform(rng, 0.11, 0.14), Uniform(rng, -0.08, 0.08), opt.depth - 0.05));
    bg.sphere_radii.push_back(Uniform(rng, 0.02, 0.035));
  }
  return bg;
}

json SideJson(const std::string& prefix) {
  return json{{"camera", "camera.json"},
              {"depth", prefix + "_depth.pgm"},
              {"mask", prefix + "_mask.pgm"},
              {"gt_mask", prefix + "_mask.pgm"},
              {"pose", prefix + "_pose.json"},
              {"features", prefix + "_features.oryt"}};
}

}  // namespace

int RunSynth(const EvalConfig& config, std::ostream& log) {
  config.Validate();
  fs::path out = RequireDir(config.output, "output");
  const SynthOptions& opt = config.synth;
  const std::uint64_t stream = DeriveSeed(config.seed, "synth");
  const CameraIntrinsics camera = DefaultSynthCamera();

  std::vector<std::string> ids;
  for (int i = 0; i < opt.pairs; ++i) {
    std::ostringstream name;
    name << "pair_" << std::setw(3) << std::setfill('0') << i;
    ids.push_back(name.str());
  }

  auto outcomes = ForEachPair(ids, config.threads, [&](std::size_t i, const std::string& id) {
    const std::uint64_t pair_seed = DeriveSeed(stream, static_cast<std::uint64_t>(i));
    Rng rng(pair_seed);
    ModelKind kind = ParseModelKind(opt.kinds[i % opt.kinds.size()]);
    ObjectModel model = MakeModel(SpecFor(kind, opt.model_points, pair_seed));

    // Redraw poses until the pair has enough correspondences to be usable.
    constexpr int kAttempts = 20;
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
      Pose anchor_pose = RandomObjectPose(rng, opt.depth);
      Pose query_pose = PerturbPose(rng, anchor_pose, opt.max_relative_angle_deg * M_PI / 180.0,
                                    opt.max_shift);
      Background anchor_bg = SceneBackground(rng, opt);
      Background query_bg = SceneBackground(rng, opt);
      SynthPair pair = MakePair(model, anchor_pose, query_pose, camera, camera, anchor_bg,
                                query_bg, config.nn_radius);
      if (!AcceptPair(pair.oracle, config.min_matches)) continue;

      DescriptorParams dp{opt.noise, opt.outlier_fraction, kDefaultFeatureDim,
                          DeriveSeed(pair_seed, "descriptor")};
      DescriptorFields fields = MakeDescriptorFields(pair, dp);

      fs::path dir = out / id;
      io::WriteJson(dir / "camera.json", io::CameraToJson(camera));
      io::WriteModel(dir / "model.xyz", model);
      const std::pair<const char*, const SynthScene*> sides[] = {{"anchor", &pair.anchor},
                                                                 {"query", &pair.query}};
      for (const auto& [prefix, scene] : sides) {
        std::string p = prefix;
        io::WriteDepthPgm(dir / (p + "_depth.pgm"), scene->view.depth);
        io::WriteMaskPgm(dir / (p + "_mask.pgm"), scene->view.mask);
        io::WriteJson(dir / (p + "_pose.json"), io::PoseToJson(scene->view.object_pose));
      }
      io::WriteFeatureMap(dir / "anchor_features.oryt", fields.anchor);
      io::WriteFeatureMap(dir / "query_features.oryt", fields.query);
      io::WriteJson(dir / "oracle_matches.json", io::GtPairToJson(pair.oracle));
      io::WriteJson(dir / kPairFile, json{{"id", id},
                                          {"kind", ModelKindName(kind)},
                                          {"model", "model.xyz"},
                                          {"anchor", SideJson("anchor")},
                                          {"query", SideJson("query")},
                                          {"oracle_matches", "oracle_matches.json"}});
      PairOutcome o;
      o.record = id;
      o.log = id + ": " + ModelKindName(kind) + ", " + std::to_string(pair.oracle.size()) +
              " oracle matches\n";
      return o;
    }
    throw DegenerateConfigurationError("no pose draw produced " +
                                       std::to_string(config.min_matches) + " matches");
  });

  json written = json::array();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (outcomes[i].ok) written.push_back(ids[i]);
  }
  io::WriteJson(out / kManifest, json{{"seed", config.seed}, {"pairs", written}});
  return FlushLogs(ids, outcomes, log);
}

// ---------------------------------------------------------------------------
// gen-matches

int RunGenMatches(const EvalConfig& config, std::ostream& log) {
  config.Validate();
  fs::path in = RequireDir(config.input, "input");
  fs::path out = RequireDir(config.output, "output");
  std::vector<std::string> ids = ListPairs(in);

  auto outcomes = ForEachPair(ids, config.threads, [&](std::size_t, const std::string& id) {
    Fixture f = LoadFixture(in, id);
    // Ground truth is generated from annotated masks when they exist.
    SceneView anchor = f.anchor.view;
    SceneView query = f.query.view;
    if (f.anchor.gt_mask) anchor.mask = *f.anchor.gt_mask;
    if (f.query.gt_mask) query.mask = *f.query.gt_mask;
    GtPair pair = GenerateGtMatches(anchor, query, config.nn_radius);
    bool accepted = AcceptPair(pair, config.min_matches);
    io::WriteJson(out / id / "gt_matches.json", io::GtPairToJson(pair));
    PairOutcome o;
    o.record = json{{"id", id}, {"count", pair.size()}, {"accepted", accepted}};
    if (!accepted) {
      o.log = id + ": rejected, " + std::to_string(pair.size()) + " matches < " +
              std::to_string(config.min_matches) + "\n";
    }
    return o;
  });

  json pairs = json::array();
  json rejected = json::array();
  std::string rejection_log;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!outcomes[i].ok) {
      pairs.push_back(json{{"id", ids[i]}, {"error", outcomes[i].error}});
      continue;
    }
    pairs.push_back(outcomes[i].record);
    if (!outcomes[i].record.at("accepted").get<bool>()) {
      rejected.push_back(ids[i]);
      rejection_log += ids[i] + " " + std::to_string(outcomes[i].record.at("count").get<std::size_t>()) + "\n";
    }
  }
  io::WriteJson(out / "gen_matches.json",
                json{{"min_matches", config.min_matches},
                     {"nn_radius", config.nn_radius},
                     {"pairs", pairs},
                     {"rejected", rejected}});
  io::WriteFileAtomic(out / "rejected.log", rejection_log);
  return FlushLogs(ids, outcomes, log);
}

// ---------------------------------------------------------------------------
// register

namespace {

BinaryMask ToGrid(const BinaryMask& mask, const FeatureMap& features) {
  if (mask.width() == features.width() && mask.height() == features.height()) return mask;
  return ResampleMask(mask, features.width(), features.height());
}

}  // namespace

int RunRegister(const EvalConfig& config, std::ostream& log) {
  config.Validate();
  fs::path in = RequireDir(config.input, "input");
  fs::path out = RequireDir(config.output, "output");
  std::vector<std::string> ids = ListPairs(in);
  const std::uint64_t stream = DeriveSeed(config.seed, "registration");

  auto outcomes = ForEachPair(ids, config.threads, [&](std::size_t, const std::string& id) {
    Fixture f = LoadFixture(in, id);
    if (f.anchor.features_path.empty() || f.query.features_path.empty()) {
      throw IoError("pair.json lists no feature maps");
    }
    FeatureMap fa = io::ReadFeatureMap(f.anchor.features_path);
    FeatureMap fq = io::ReadFeatureMap(f.query.features_path);
    MatchParams mp = config.match;
    mp.threads = 1;
    MatchSet matches = MatchFeatures(fa, fq, ToGrid(f.anchor.view.mask, fa),
                                     ToGrid(f.query.view.mask, fq), mp);
    MatchSet lifted = LiftMatches(matches, f.anchor.view.depth, f.query.view.depth,
                                  f.anchor.view.camera, f.query.view.camera);
    RegistrationParams rp = config.registration;
    rp.threads = 1;
    rp.seed = DeriveSeed(stream, id);
    if (lifted.size() < 3) throw TooFewMatchesError("fewer than 3 lifted matches");
    RegistrationResult r = config.method == "ransac" ? RegisterRansac(lifted, rp)
                                                     : RegisterSpatialConsistency(lifted, rp);
    PairOutcome o;
    o.record = json{{"id", id},
                    {"status", "ok"},
                    {"pose", io::PoseToJson(r.pose)},
                    {"matches", lifted.size()},
                    {"inliers", r.inliers.size()},
                    {"mean_residual", r.mean_residual}};
    o.log = id + ": " + std::to_string(r.inliers.size()) + "/" + std::to_string(lifted.size()) +
            " inliers\n";
    return o;
  });

  json pairs = json::array();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    pairs.push_back(outcomes[i].ok ? outcomes[i].record
                                   : json{{"id", ids[i]}, {"status", "error"},
                                          {"error", outcomes[i].error}});
  }
  io::WriteJson(out / "poses.json",
                json{{"method", config.method}, {"seed", config.seed}, {"pairs", pairs}});
  return FlushLogs(ids, outcomes, log);
}

// ---------------------------------------------------------------------------
// eval

namespace {

PairMetrics MissingPrediction(const std::string& id) {
  PairMetrics m;
  m.id = id;
  const double inf = std::numeric_limits<double>::infinity();
  m.mssd_error = m.mspd_error = m.add_error = inf;
  m.vsd_hits = m.mssd_hits = m.mspd_hits = std::vector<double>(10, 0.0);
  m.ar = AverageRecall(m.vsd, m.mssd, m.mspd);
  return m;
}

json PairJson(const PairMetrics& m, const std::string& status) {
  json vsd_errors = json::array();
  for (double e : m.vsd_errors) vsd_errors.push_back(FiniteOrNull(e));
  return json{{"id", m.id},
              {"status", status},
              {"ar", m.ar},
              {"vsd", m.vsd},
              {"mssd", m.mssd},
              {"mspd", m.mspd},
              {"add", m.add},
              {"miou", m.miou ? json(*m.miou) : json(nullptr)},
              {"mssd_error", FiniteOrNull(m.mssd_error)},
              {"mspd_error", FiniteOrNull(m.mspd_error)},
              {"add_error", FiniteOrNull(m.add_error)},
              {"vsd_errors", vsd_errors}};
}

}  // namespace

int RunEval(const EvalConfig& config, std::ostream& log) {
  config.Validate();
  fs::path in = RequireDir(config.input, "input");
  fs::path out = RequireDir(config.output, "output");
  fs::path pred_path = config.predictions.empty() ? out / "poses.json" : fs::path(config.predictions);
  json predictions = io::ReadJson(pred_path);
  if (!predictions.contains("pairs")) throw IoError(pred_path.string() + " has no 'pairs' list");
  std::map<std::string, json> by_id;
  for (const json& p : predictions.at("pairs")) by_id[p.at("id").get<std::string>()] = p;
  std::vector<std::string> ids = ListPairs(in);

  std::vector<PairMetrics> metrics(ids.size());
  std::vector<std::string> status(ids.size(), "ok");
  auto outcomes = ForEachPair(ids, config.threads, [&](std::size_t i, const std::string& id) {
    Fixture f = LoadFixture(in, id);
    if (f.model_path.empty()) throw IoError("pair.json lists no model");
    ObjectModel model = io::ReadModel(f.model_path, config.symmetry_step);
    auto it = by_id.find(id);
    PairOutcome o;
    if (it == by_id.end() || it->second.value("status", "ok") != "ok") {
      metrics[i] = MissingPrediction(id);
      status[i] = "missing";
    } else {
      Pose relative = io::PoseFromJson(it->second.at("pose"));
      Pose predicted = relative * f.anchor.view.object_pose;
      metrics[i] = EvaluatePose(model, f.query.view.object_pose, predicted, f.query.view.depth,
                                f.query.view.camera, config.metrics);
      metrics[i].id = id;
    }
    if (f.anchor.gt_mask && f.query.gt_mask) {
      metrics[i].miou = (Iou(f.anchor.view.mask, *f.anchor.gt_mask) +
                         Iou(f.query.view.mask, *f.query.gt_mask)) / 2.0;
    }
    return o;
  });

  std::vector<PairMetrics> evaluated;
  json pairs = json::array();
  std::size_t missing = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!outcomes[i].ok) {
      pairs.push_back(json{{"id", ids[i]}, {"status", "error"}, {"error", outcomes[i].error}});
      continue;
    }
    if (status[i] == "missing") ++missing;
    pairs.push_back(PairJson(metrics[i], status[i]));
    evaluated.push_back(metrics[i]);
  }
  if (evaluated.empty()) throw IoError("no pair could be evaluated");
  MetricReport report = Aggregate(std::move(evaluated));

  json report_json{{"ar", report.ar},
                   {"vsd", report.vsd},
                   {"mssd", report.mssd},
                   {"mspd", report.mspd},
                   {"add", report.add},
                   {"miou", report.has_miou ? json(report.miou) : json(nullptr)},
                   {"pairs_evaluated", report.pairs.size()},
                   {"missing_predictions", missing},
                   {"curves",
                    {{"vsd", report.vsd_curve},
                     {"mssd", report.mssd_curve},
                     {"mspd", report.mspd_curve}}},
                   {"pairs", pairs}};
  io::WriteJson(out / "report.json", report_json);

  log << std::left << std::setw(12) << "pair" << std::right << std::setw(8) << "AR"
      << std::setw(8) << "VSD" << std::setw(8) << "MSSD" << std::setw(8) << "MSPD" << std::setw(8)
      << "ADD" << "\n";
  for (const PairMetrics& m : report.pairs) {
    log << std::left << std::setw(12) << m.id << std::right << std::setw(8) << Fixed(m.ar, 3)
        << std::setw(8) << Fixed(m.vsd, 3) << std::setw(8) << Fixed(m.mssd, 3) << std::setw(8)
        << Fixed(m.mspd, 3) << std::setw(8) << Fixed(m.add, 3) << "\n";
  }
  log << std::left << std::setw(12) << "mean" << std::right << std::setw(8) << Fixed(report.ar, 3)
      << std::setw(8) << Fixed(report.vsd, 3) << std::setw(8) << Fixed(report.mssd, 3)
      << std::setw(8) << Fixed(report.mspd, 3) << std::setw(8) << Fixed(report.add, 3) << "\n";
  if (report.has_miou) log << "mIoU " << Fixed(report.miou, 4) << "\n";

  int code = FlushLogs(ids, outcomes, log);
  return missing > 0 ? kExitPartial : code;
}

// ---------------------------------------------------------------------------
// losses

int RunLosses(const EvalConfig& config, std::ostream& log) {
  config.Validate();
  fs::path in = RequireDir(config.input, "input");
  fs::path out = RequireDir(config.output, "output");
  std::vector<std::string> ids = ListPairs(in);

  auto outcomes = ForEachPair(ids, config.threads, [&](std::size_t, const std::string& id) {
    Fixture f = LoadFixture(in, id);
    if (f.oracle_path.empty()) throw IoError("pair.json lists no oracle matches");
    GtPair gt = io::GtPairFromJson(io::ReadJson(f.oracle_path));
    if (gt.size() == 0) throw EmptyMatchSetError("no ground-truth matches");
    FeatureMap fa = io::ReadFeatureMap(f.anchor.features_path);
    FeatureMap fq = io::ReadFeatureMap(f.query.features_path);

    // Evenly strided subset, deterministic.
    std::size_t n = std::min(config.loss_pairs, gt.size());
    FeatureMatrix a(n, fa.dim()), q(n, fq.dim());
    std::vector<Vec2> xa(n), xq(n);
    auto cell = [](Pixel p, const FeatureMap& fm, const DepthMap& img) {
      return Pixel{p.u * fm.width() / img.width(), p.v * fm.height() / img.height()};
    };
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t idx = k * gt.size() / n;
      Pixel pa = gt.anchor_pixels[idx], pq = gt.query_pixels[idx];
      Pixel ca = cell(pa, fa, f.anchor.view.depth), cq = cell(pq, fq, f.query.view.depth);
      auto va = fa.At(ca.v, ca.u);
      auto vq = fq.At(cq.v, cq.u);
      for (int d = 0; d < fa.dim(); ++d) a(k, d) = va[d];
      for (int d = 0; d < fq.dim(); ++d) q(k, d) = vq[d];
      xa[k] = Vec2(pa.u, pa.v);
      xq[k] = Vec2(pq.u, pq.v);
    }
    LossParams lp = config.losses;
    lp.threads = 1;
    LossReport r = EvaluateLosses(FeatureSet(std::move(a), std::move(xa)),
                                  FeatureSet(std::move(q), std::move(xq)), lp);
    // Segmentation term: predicted masks as hard activations against the
    // annotated masks, averaged over both scenes.
    double dice = 0.0;
    bool has_dice = f.anchor.gt_mask && f.query.gt_mask;
    if (has_dice) {
      auto activations = [](const BinaryMask& m) {
        Image<double> img(m.width(), m.height(), 0.0);
        for (int v = 0; v < m.height(); ++v)
          for (int u = 0; u < m.width(); ++u) img(u, v) = m(u, v) ? 1.0 : 0.0;
        return img;
      };
      dice = (DiceLoss(activations(f.anchor.view.mask), *f.anchor.gt_mask) +
              DiceLoss(activations(f.query.view.mask), *f.query.gt_mask)) / 2.0;
    }
    r.mask = dice;
    r.total = TotalLoss(r.mask, r.feature, lp.mask_weight);
    PairOutcome o;
    o.record = json{{"id", id},
                    {"pairs", r.pairs},
                    {"positive", r.positive},
                    {"negative", r.negative},
                    {"feature", r.feature},
                    {"mask", has_dice ? json(r.mask) : json(nullptr)},
                    {"total", r.total},
                    {"skipped_negatives", r.skipped_negatives}};
    o.log = id + ": l_P " + Fixed(r.positive) + "  l_N " + Fixed(r.negative) + "  l_F " +
            Fixed(r.feature) + "  l " + Fixed(r.total) + "\n";
    return o;
  });

  json pairs = json::array();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    pairs.push_back(outcomes[i].ok ? outcomes[i].record
                                   : json{{"id", ids[i]}, {"error", outcomes[i].error}});
  }
  io::WriteJson(out / "losses.json", json{{"pairs", pairs}});
  return FlushLogs(ids, outcomes, log);
}

int RunCommand(const std::string& name, const EvalConfig& config, std::ostream& log,
               std::ostream& err) {
  try {
    if (name == "synth") return RunSynth(config, log);
    if (name == "gen-matches") return RunGenMatches(config, log);
    if (name == "register") return RunRegister(config, log);
    if (name == "eval") return RunEval(config, log);
    if (name == "losses") return RunLosses(config, log);
    err << "unknown command '" << name << "'\n";
    return kExitError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace oryon::cli
