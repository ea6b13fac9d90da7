// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "oracles.h"
#include "oryon/losses.h"
#include "oryon/matchgen.h"
#include "oryon/metrics.h"
#include "oryon/registration.h"
#include "oryon/synth.h"
#include "pipeline.h"
#include "protocols.h"

using namespace oryon;
using io::json;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void Report(const char* name, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
  std::fflush(stdout);
}

double RelErr(double got, double want) {
  if (got == want) return 0.0;
  return std::abs(got - want) / std::max(std::abs(got), std::abs(want));
}

std::string Fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

ObjectModel RandomModel(Rng& rng, std::uint64_t seed, int max_points, bool force_symmetric) {
  ModelSpec s;
  const ModelKind kinds[] = {ModelKind::kBox, ModelKind::kCylinder, ModelKind::kSphere,
                             ModelKind::kBlob};
  s.kind = kinds[UniformIndex(rng, force_symmetric ? 3 : 4)];
  s.seed = seed;
  s.size = Vec3(Uniform(rng, 0.05, 0.15), Uniform(rng, 0.05, 0.15), Uniform(rng, 0.05, 0.15));
  if (s.kind == ModelKind::kBlob) {
    s.symmetry = {1, false};
  } else {
    const int orders[] = {1, 2, 3, 4, 6, 8};
    s.symmetry = {orders[UniformIndex(rng, 6)], UniformUnit(rng) < 0.5};
    if (force_symmetric && s.symmetry.cyclic_order == 1) s.symmetry.flip = true;
  }
  int group = s.symmetry.cyclic_order * (s.symmetry.flip ? 2 : 1);
  s.n_points = std::max(group * 2, static_cast<int>(UniformIndex(rng, max_points / group)) * group);
  if (s.n_points > max_points) s.n_points = max_points / group * group;
  return MakeModel(s);
}

// ---------------------------------------------------------------------------

Outcome MetricOracles() {
  auto start = Clock::now();
  const CameraIntrinsics cam(70.0, 70.0, 31.5, 31.5, 64, 64);
  double worst = 0.0;
  std::size_t checks = 0;
  for (int i = 0; i < 50; ++i) {
    Rng rng(DeriveSeed(1000, static_cast<std::uint64_t>(i)));
    ObjectModel m = RandomModel(rng, i, 500, false);
    const auto& pts = m.points();
    Pose gt = oracle::RandomPose(rng, 0.6, 0.03);
    Pose est = PerturbPose(rng, gt, 0.4, 0.02);
    auto track = [&](double got, double want) {
      worst = std::max(worst, RelErr(got, want));
      ++checks;
    };
    track(MssdError(m, gt, est), oracle::Mssd(pts, m.symmetries(), gt, est));
    track(MspdError(m, gt, est, cam).error, oracle::Mspd(pts, m.symmetries(), gt, est, cam));
    track(AddError(m, gt, est), oracle::Add(pts, gt, est));
    track(AddSError(m, gt, est), oracle::AddS(pts, gt, est));

    BinaryMask a(64, 64, 0), b(64, 64, 0);
    for (auto& x : a.data()) x = UniformUnit(rng) < 0.3;
    for (auto& x : b.data()) x = UniformUnit(rng) < 0.3;
    track(Iou(a, b), oracle::Iou(a, b));

    std::vector<double> errors(1 + UniformIndex(rng, 200));
    for (double& e : errors) e = Uniform(rng, 0.0, 0.6);
    std::vector<double> th = VsdErrorThresholds();
    track(RecallAverage(errors, th), oracle::Recall(errors, th));
  }
  // mIoU over a batch of mask pairs.
  Rng rng(1999);
  std::vector<PairMetrics> batch;
  double oracle_sum = 0.0;
  for (int i = 0; i < 50; ++i) {
    BinaryMask a(64, 64, 0), b(64, 64, 0);
    for (auto& x : a.data()) x = UniformUnit(rng) < 0.4;
    for (auto& x : b.data()) x = UniformUnit(rng) < 0.4;
    PairMetrics p;
    p.vsd_hits = p.mssd_hits = p.mspd_hits = std::vector<double>(10, 0.0);
    p.miou = Iou(a, b);
    oracle_sum += oracle::Iou(a, b);
    batch.push_back(p);
  }
  MetricReport r = Aggregate(batch);
  worst = std::max(worst, RelErr(r.miou, oracle_sum / 50.0));
  double secs = Seconds(start);
  return {worst <= 1e-12 && secs < 30.0,
          Fmt("%.0f comparisons, max relative error %.3g, %.1f s", static_cast<double>(checks + 1),
              worst, secs)};
}

Outcome ArDefinition() {
  const CameraIntrinsics cam(70.0, 70.0, 31.5, 31.5, 64, 64);
  int evaluated = 0, bad = 0;
  std::vector<PairMetrics> all;
  for (int i = 0; i < 50; ++i) {
    Rng rng(DeriveSeed(2000, static_cast<std::uint64_t>(i)));
    ObjectModel m = RandomModel(rng, i, 500, false);
    Pose gt = oracle::RandomPose(rng, 0.6, 0.02);
    Pose est = PerturbPose(rng, gt, Uniform(rng, 0.0, 0.3), 0.01);
    Background bg;
    bg.plane_depth = 0.65;
    DepthMap scene = RenderScene(m, gt, cam, bg).view.depth;
    PairMetrics p = EvaluatePose(m, gt, est, scene, cam);
    ++evaluated;
    bad += p.ar != (p.vsd + p.mssd + p.mspd) / 3.0;
    all.push_back(p);
  }
  MetricReport r = Aggregate(all);
  bad += r.ar != (r.vsd + r.mssd + r.mspd) / 3.0;
  return {bad == 0, Fmt("%.0f pairs and the aggregate, %.0f mismatches", evaluated, bad)};
}

Outcome SymmetryInvariance() {
  const CameraIntrinsics cam = DefaultSynthCamera();
  double worst = 0.0;
  int models = 0, compositions = 0;
  for (int i = 0; i < 100; ++i) {
    Rng rng(DeriveSeed(3000, static_cast<std::uint64_t>(i)));
    ObjectModel m = RandomModel(rng, i, 400, true);
    ++models;
    Pose gt = oracle::RandomPose(rng, 0.6, 0.03);
    Pose est = PerturbPose(rng, gt, 0.5, 0.02);
    double mssd = MssdError(m, gt, est), mspd = MspdError(m, gt, est, cam).error;
    double adds = AddSError(m, gt, est);
    for (const Pose& s : m.symmetries()) {
      Pose gs = gt * s;
      worst = std::max({worst, std::abs(MssdError(m, gs, est) - mssd),
                        std::abs(MspdError(m, gs, est, cam).error - mspd),
                        std::abs(AddSError(m, gs, est) - adds)});
      ++compositions;
    }
  }
  return {worst < 1e-9, Fmt("%.0f models, %.0f compositions, max change %.3g", models,
                            compositions, worst)};
}

struct McResult {
  int sc = 0;
  int ransac = 0;
  double seconds = 0.0;
};

McResult RunMonteCarlo() {
  McResult r;
  auto start = Clock::now();
  for (std::uint64_t t = 0; t < 100; ++t) {
    protocol::Correspondences c = protocol::RegistrationTrial(DeriveSeed(4000, t), 500, 0.3, 0.002);
    RegistrationParams p;
    p.seed = t;
    auto solved = [&](auto&& fn) {
      try {
        return protocol::Recovered(fn(c.src, c.dst, p).pose, c.truth);
      } catch (const Error&) {
        return false;
      }
    };
    r.sc += solved([](auto& s, auto& d, auto& q) { return RegisterSpatialConsistency(s, d, q); });
    r.ransac += solved([](auto& s, auto& d, auto& q) { return RegisterRansac(s, d, q); });
  }
  r.seconds = Seconds(start);
  return r;
}

Outcome RegistrationRecovery(const McResult& mc) {
  auto start = Clock::now();
  double worst = 0.0;
  for (std::uint64_t t = 0; t < 100; ++t) {
    protocol::Correspondences c = protocol::RegistrationTrial(DeriveSeed(4100, t), 500, 0.0, 0.0);
    RegistrationParams p;
    p.seed = t;
    RegistrationResult r = RegisterSpatialConsistency(c.src, c.dst, p);
    worst = std::max({worst, (r.pose.rotation() - c.truth.rotation()).cwiseAbs().maxCoeff(),
                      (r.pose.translation() - c.truth.translation()).norm()});
  }
  double secs = Seconds(start) + mc.seconds;
  return {mc.sc >= 95 && worst < 1e-9 && secs < 60.0,
          Fmt("%.0f/100 recovered at 30%% outliers and 2 mm noise, noiseless deviation %.3g, "
              "%.1f s",
              mc.sc, worst, secs)};
}

Outcome RansacBelowSpatialConsistency(const McResult& mc) {
  return {mc.ransac < mc.sc,
          Fmt("RANSAC %.0f/100 vs spatial consistency %.0f/100", mc.ransac, mc.sc)};
}

Outcome MatchGenerationClosure(const fs::path& data, const fs::path& scratch) {
  fs::path in = scratch / "closure_in";
  fs::copy(data, in, fs::copy_options::recursive);
  std::vector<std::string> ids = cli::ListPairs(in);
  // One extra pair whose annotated query mask is cut down to 30 pixels.
  fs::copy(in / ids[0], in / "pair_small", fs::copy_options::recursive);
  BinaryMask m = io::ReadMaskPgm(in / "pair_small" / "query_mask.pgm");
  int kept = 0;
  for (auto& x : m.data()) {
    if (x && kept < 30) {
      ++kept;
    } else {
      x = 0;
    }
  }
  io::WriteMaskPgm(in / "pair_small" / "query_mask.pgm", m);
  ids.push_back("pair_small");
  io::WriteJson(in / "manifest.json", json{{"pairs", ids}});

  cli::EvalConfig c;
  c.threads = 1;
  pipeline::Run run = pipeline::Command("gen-matches", pipeline::Stage(c, in, scratch / "closure_out"));
  if (run.code != cli::kExitOk) return {false, "gen-matches exit " + std::to_string(run.code)};

  std::size_t matches = 0, violations = 0, wrong_decisions = 0;
  json summary = io::ReadJson(scratch / "closure_out" / "gen_matches.json");
  for (const json& p : summary.at("pairs")) {
    std::string id = p.at("id");
    cli::Fixture f = cli::LoadFixture(in, id);
    const SceneView& a = f.anchor.view;
    const SceneView& q = f.query.view;
    GtPair g = io::GtPairFromJson(io::ReadJson(scratch / "closure_out" / id / "gt_matches.json"));
    Pose rel = RelativePose(a.object_pose, q.object_pose);
    for (std::size_t k = 0; k < g.size(); ++k) {
      Pixel pa = g.anchor_pixels[k], pq = g.query_pixels[k];
      Vec3 xa = UnprojectPixel(pa, a.depth(pa.u, pa.v), a.camera);
      Vec3 xq = UnprojectPixel(pq, q.depth(pq.u, pq.v), q.camera);
      violations += !(oracle::Dist(oracle::Apply(rel, xa), xq) <= 0.002);
      ++matches;
    }
    bool accepted = p.at("accepted");
    wrong_decisions += accepted != (g.size() >= 100);
  }
  bool small_rejected =
      io::ReadFile(scratch / "closure_out" / "rejected.log").find("pair_small ") != std::string::npos;
  return {violations == 0 && wrong_decisions == 0 && small_rejected,
          Fmt("%.0f matches over %.0f pairs, %.0f beyond 2 mm, %.0f wrong accept decisions",
              static_cast<double>(matches), static_cast<double>(ids.size()),
              static_cast<double>(violations), static_cast<double>(wrong_decisions)) +
              (small_rejected ? ", small pair rejected" : ", small pair NOT rejected")};
}

FeatureSet RandomSet(Rng& rng, int n, int d, double extent) {
  FeatureMatrix f(n, d);
  std::vector<Vec2> x;
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) f(i, k) = Gaussian(rng);
    x.emplace_back(Uniform(rng, 0, extent), Uniform(rng, 0, extent));
  }
  return FeatureSet(f, x);
}

Outcome LossFormulas() {
  // Orthogonal sets: every positive distance is 1/2, every negative 1/2.
  const int c = 16;
  FeatureMatrix fa = FeatureMatrix::Zero(c, 2 * c), fq = FeatureMatrix::Zero(c, 2 * c);
  std::vector<Vec2> x;
  for (int i = 0; i < c; ++i) {
    fa(i, i) = 1.0;
    fq(i, c + i) = 1.0;
    x.emplace_back(10.0 * i, 0.0);
  }
  FeatureSet a(fa, x), q(fq, x);
  LossParams lp;
  double lpos = PositiveLoss(a, q, lp.positive_margin);
  double lneg = HardestNegativeLoss(a, q, lp.negative_margin, lp.exclusion_radius).value;
  bool closed = std::abs(lpos - 0.3) <= 1e-12 && std::abs(lneg - 0.4) <= 1e-12;

  std::size_t mismatched = 0;
  Rng rng(5000);
  for (int t = 0; t < 20; ++t) {
    FeatureSet s = RandomSet(rng, 200, 32, 50);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 200; ++i) rows.emplace_back(s.features.row(i).begin(), s.features.row(i).end());
    auto want = oracle::HardestNegatives(rows, s.coords, lp.exclusion_radius);
    auto got = MineHardestNegatives(s, lp.exclusion_radius);
    for (int i = 0; i < 200; ++i) {
      std::size_t w = want[i] < 0 ? kNoNegative : static_cast<std::size_t>(want[i]);
      mismatched += got[i].index != w;
    }
  }

  std::size_t scale_breaks = 0;
  for (int t = 0; t < 20; ++t) {
    FeatureSet sa = RandomSet(rng, 200, 32, 50), sq = RandomSet(rng, 200, 32, 50);
    double p0 = PositiveLoss(sa, sq, lp.positive_margin);
    double n0 = HardestNegativeLoss(sa, sq, lp.negative_margin, lp.exclusion_radius).value;
    for (int i = 0; i < 200; ++i) {
      sa.features.row(i) *= std::ldexp(1.0, static_cast<int>(UniformIndex(rng, 40)) - 20);
      sq.features.row(i) *= std::ldexp(1.0, static_cast<int>(UniformIndex(rng, 40)) - 20);
    }
    scale_breaks += PositiveLoss(sa, sq, lp.positive_margin) != p0;
    scale_breaks += HardestNegativeLoss(sa, sq, lp.negative_margin, lp.exclusion_radius).value != n0;
  }
  return {closed && mismatched == 0 && scale_breaks == 0,
          Fmt("l_P %.15g, l_N %.15g, %.0f index mismatches in 4000, %.0f scaling changes", lpos,
              lneg, static_cast<double>(mismatched), static_cast<double>(scale_breaks))};
}

// Random object placement in front of the camera, unrelated to the truth.
json RandomPredictions(const fs::path& data) {
  json pairs = json::array();
  Rng rng(6000);
  for (const std::string& id : cli::ListPairs(data)) {
    cli::Fixture f = cli::LoadFixture(data, id);
    Pose query_guess = oracle::RandomPose(rng, Uniform(rng, 0.4, 0.7), 0.1);
    Pose rel = query_guess * f.anchor.view.object_pose.Inverse();
    pairs.push_back(json{{"id", id}, {"status", "ok"}, {"pose", io::PoseToJson(rel)}});
  }
  return json{{"pairs", pairs}};
}

Outcome EndToEnd(const fs::path& data, const fs::path& scratch, const cli::EvalConfig& base) {
  auto start = Clock::now();
  fs::path out = scratch / "run1";
  if (pipeline::Command("register", pipeline::Stage(base, data, out)).code != cli::kExitOk)
    return {false, "register failed"};
  if (pipeline::Command("eval", pipeline::Stage(base, data, out)).code != cli::kExitOk)
    return {false, "eval failed"};
  json report = io::ReadJson(out / "report.json");
  double ar = report.at("ar");
  bool ar_defined = true;
  for (const json& p : report.at("pairs")) {
    double v = p.at("vsd"), s = p.at("mssd"), d = p.at("mspd");
    ar_defined &= p.at("ar").get<double>() == (v + s + d) / 3.0;
  }

  fs::path control = scratch / "control";
  io::WriteJson(control / "random_poses.json", RandomPredictions(data));
  cli::EvalConfig cc = pipeline::Stage(base, data, control);
  cc.predictions = (control / "random_poses.json").string();
  if (pipeline::Command("eval", cc).code != cli::kExitOk) return {false, "control eval failed"};
  double control_ar = io::ReadJson(control / "report.json").at("ar");

  // Full rerun from scratch with another thread count.
  cli::EvalConfig again = base;
  again.threads = 2;
  fs::path data2 = scratch / "data2", out2 = scratch / "run2";
  pipeline::Command("synth", pipeline::Stage(again, "", data2));
  pipeline::Command("register", pipeline::Stage(again, data2, out2));
  pipeline::Command("eval", pipeline::Stage(again, data2, out2));
  // Reports name no paths, so equal bytes mean equal results.
  bool identical = fs::exists(out2 / "report.json") &&
                   io::ReadFile(out / "report.json") == io::ReadFile(out2 / "report.json") &&
                   io::ReadFile(out / "poses.json") == io::ReadFile(out2 / "poses.json");

  return {ar > 0.95 && control_ar < 0.05 && identical && ar_defined,
          Fmt("AR %.4f on %.0f noiseless pairs, random-pose control AR %.4f, %.1f s", ar,
              static_cast<double>(report.at("pairs").size()), control_ar, Seconds(start)) +
              (identical ? ", reports byte-identical" : ", reports differ")};
}

}  // namespace

int main() {
  fs::path scratch = pipeline::Scratch("acceptance");
  cli::EvalConfig base;
  base.seed = 2024;
  base.threads = 1;
  base.synth.pairs = 8;
  fs::path data = scratch / "data";
  pipeline::Run synth = pipeline::Command("synth", pipeline::Stage(base, "", data));
  if (synth.code != cli::kExitOk) {
    std::printf("FAIL setup: synth exit %d: %s\n", synth.code, synth.err.c_str());
    return 1;
  }

  Report("metric-oracles", MetricOracles);
  Report("ar-definition", ArDefinition);
  Report("symmetry-invariance", SymmetryInvariance);
  McResult mc = RunMonteCarlo();
  Report("registration-recovery", [&] { return RegistrationRecovery(mc); });
  Report("ransac-below-spatial-consistency", [&] { return RansacBelowSpatialConsistency(mc); });
  Report("match-generation-closure", [&] { return MatchGenerationClosure(data, scratch); });
  Report("loss-formulas", LossFormulas);
  Report("end-to-end", [&] { return EndToEnd(data, scratch, base); });

  fs::remove_all(scratch);
  return failures == 0 ? 0 : 1;
}
