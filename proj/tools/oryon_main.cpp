// Command-line front end: synth, gen-matches, register, eval, losses.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "oryon/commands.h"
#include "oryon/errors.h"

namespace {

using oryon::cli::EvalConfig;

// Flags that were given on the command line; applied over the JSON config.
struct Overrides {
  std::string config_path;
  std::optional<std::string> input, output, predictions, method;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads, iterations;
  std::optional<double> max_distance, inlier_threshold, compatibility_tolerance, min_inlier_ratio;
  std::optional<std::size_t> max_matches, min_matches, loss_pairs;
  std::optional<double> nn_radius, symmetry_step, occlusion_tolerance;
  std::optional<double> positive_margin, negative_margin, exclusion_radius;
  std::optional<int> pairs, model_points;
  std::optional<double> noise, outlier_fraction;
  std::optional<std::vector<std::string>> kinds;
};

void AddCommon(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config_path, "JSON config file; flags override it");
  cmd->add_option("-i,--input", o.input, "fixture directory");
  cmd->add_option("-o,--output", o.output, "output directory");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("-j,--threads", o.threads, "worker threads (default: ORYON_THREADS or all cores)");
}

template <typename T, typename U>
void Apply(const std::optional<T>& value, U& field) {
  if (value) field = *value;
}

EvalConfig Resolve(const Overrides& o) {
  EvalConfig c;
  if (!o.config_path.empty()) c = oryon::cli::ConfigFromJson(oryon::io::ReadJson(o.config_path));
  Apply(o.input, c.input);
  Apply(o.output, c.output);
  Apply(o.predictions, c.predictions);
  Apply(o.method, c.method);
  Apply(o.seed, c.seed);
  Apply(o.threads, c.threads);
  Apply(o.iterations, c.registration.iterations);
  Apply(o.max_distance, c.match.max_distance);
  Apply(o.max_matches, c.match.max_matches);
  Apply(o.inlier_threshold, c.registration.inlier_threshold);
  Apply(o.compatibility_tolerance, c.registration.compatibility_tolerance);
  Apply(o.min_inlier_ratio, c.registration.min_inlier_ratio);
  Apply(o.min_matches, c.min_matches);
  Apply(o.loss_pairs, c.loss_pairs);
  Apply(o.nn_radius, c.nn_radius);
  Apply(o.symmetry_step, c.symmetry_step);
  Apply(o.occlusion_tolerance, c.metrics.occlusion_tolerance);
  Apply(o.positive_margin, c.losses.positive_margin);
  Apply(o.negative_margin, c.losses.negative_margin);
  Apply(o.exclusion_radius, c.losses.exclusion_radius);
  Apply(o.pairs, c.synth.pairs);
  Apply(o.model_points, c.synth.model_points);
  Apply(o.noise, c.synth.noise);
  Apply(o.outlier_fraction, c.synth.outlier_fraction);
  Apply(o.kinds, c.synth.kinds);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-scene pose estimation toolkit"};
  app.require_subcommand(1);
  Overrides o;

  auto* synth = app.add_subcommand("synth", "generate a synthetic fixture directory");
  AddCommon(synth, o);
  synth->add_option("--pairs", o.pairs, "number of scene pairs");
  synth->add_option("--kinds", o.kinds, "model kinds: sphere, box, cylinder, blob");
  synth->add_option("--model-points", o.model_points, "points per object model");
  synth->add_option("--noise", o.noise, "descriptor noise sigma");
  synth->add_option("--outlier-fraction", o.outlier_fraction, "fraction of random anchor descriptors");

  auto* gen = app.add_subcommand("gen-matches", "ground-truth correspondences per pair");
  AddCommon(gen, o);
  gen->add_option("--nn-radius", o.nn_radius, "alignment radius in meters");
  gen->add_option("--min-matches", o.min_matches, "pairs below this count are rejected");

  auto* reg = app.add_subcommand("register", "match features and estimate relative poses");
  AddCommon(reg, o);
  reg->add_option("--method", o.method, "spatial-consistency or ransac");
  reg->add_option("--max-distance", o.max_distance, "feature distance threshold");
  reg->add_option("--max-matches", o.max_matches, "match cap");
  reg->add_option("--iterations", o.iterations, "hypotheses per pair");
  reg->add_option("--inlier-threshold", o.inlier_threshold, "inlier residual in meters");
  reg->add_option("--compatibility-tolerance", o.compatibility_tolerance,
                  "pairwise length tolerance in meters");
  reg->add_option("--min-inlier-ratio", o.min_inlier_ratio, "minimum consensus fraction");

  auto* eval = app.add_subcommand("eval", "score predicted poses");
  AddCommon(eval, o);
  eval->add_option("-p,--predictions", o.predictions, "poses JSON from register");
  eval->add_option("--symmetry-step", o.symmetry_step, "degrees for continuous symmetries");
  eval->add_option("--occlusion-tolerance", o.occlusion_tolerance, "VSD visibility tolerance (m)");

  auto* losses = app.add_subcommand("losses", "feature and mask loss diagnostics");
  AddCommon(losses, o);
  losses->add_option("--loss-pairs", o.loss_pairs, "matches sampled per pair");
  losses->add_option("--positive-margin", o.positive_margin, "mu_P");
  losses->add_option("--negative-margin", o.negative_margin, "mu_N");
  losses->add_option("--exclusion-radius", o.exclusion_radius, "tau in pixels");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : oryon::cli::kExitError;
  }

  EvalConfig config;
  try {
    config = Resolve(o);
  } catch (const oryon::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return oryon::cli::kExitError;
  }
  std::string name = app.get_subcommands().front()->get_name();
  return oryon::cli::RunCommand(name, config, std::cout, std::cerr);
}
