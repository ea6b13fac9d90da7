#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "oryon/io.h"
#include "oryon/losses.h"
#include "oryon/matcher.h"
#include "oryon/matchgen.h"
#include "oryon/metrics.h"
#include "oryon/parallel.h"
#include "oryon/registration.h"

namespace oryon::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;  // some pairs failed, the rest were written
inline constexpr int kExitError = 2;    // configuration or I/O error

struct SynthOptions {
  int pairs = 8;
  std::vector<std::string> kinds{"box", "cylinder", "sphere", "blob"};
  int model_points = 30000;
  double noise = 0.0;
  double outlier_fraction = 0.0;
  double depth = 0.5;                    // object distance, meters
  double max_relative_angle_deg = 35.0;  // anchor -> query rotation
  double max_shift = 0.02;               // anchor -> query translation per axis
  bool clutter = true;
};

struct EvalConfig {
  std::string input;
  std::string output;
  std::string predictions;  // eval: poses JSON written by `register`
  std::uint64_t seed = 0;
  int threads = DefaultThreadCount();
  std::string method = "spatial-consistency";  // or "ransac"
  double nn_radius = kDefaultMatchRadius;
  std::size_t min_matches = kDefaultMinMatches;
  MatchParams match;
  RegistrationParams registration;
  LossParams losses;
  std::size_t loss_pairs = 500;  // matches sampled per pair for the loss diagnostics
  MetricOptions metrics;
  double symmetry_step = 10.0;  // degrees, for continuous symmetry axes
  SynthOptions synth;

  void Validate() const;
};

// Keys mirror the struct fields; nested objects "match", "registration",
// "losses", "metrics" and "synth". Unknown keys are rejected.
EvalConfig ConfigFromJson(const io::json& value, EvalConfig base = {});
io::json ConfigToJson(const EvalConfig& config);

// One side of a fixture pair as loaded from disk.
struct FixtureSide {
  SceneView view;  // mask is the predicted segmentation
  std::optional<BinaryMask> gt_mask;
  std::filesystem::path features_path;
};

struct Fixture {
  std::string id;
  std::filesystem::path dir;
  std::filesystem::path model_path;
  std::filesystem::path oracle_path;
  FixtureSide anchor;
  FixtureSide query;
};

// Pair ids from manifest.json, or every subdirectory holding pair.json.
// Throws IoError when the directory has no pairs.
std::vector<std::string> ListPairs(const std::filesystem::path& input);
Fixture LoadFixture(const std::filesystem::path& input, const std::string& id);

int RunSynth(const EvalConfig& config, std::ostream& log);
int RunGenMatches(const EvalConfig& config, std::ostream& log);
int RunRegister(const EvalConfig& config, std::ostream& log);
int RunEval(const EvalConfig& config, std::ostream& log);
int RunLosses(const EvalConfig& config, std::ostream& log);

// Dispatches by subcommand name and maps configuration and I/O errors to
// kExitError.
int RunCommand(const std::string& name, const EvalConfig& config, std::ostream& log,
               std::ostream& err);

}  // namespace oryon::cli
