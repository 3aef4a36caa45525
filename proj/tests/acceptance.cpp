// Acceptance criteria, one PASS/FAIL line each. Exit status is nonzero when
// any criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>

#include "fidmark/benchmark.hpp"
#include "fidmark/detector.hpp"
#include "fidmark/eval.hpp"
#include "fidmark/marker.hpp"
#include "fidmark/presets.hpp"
#include "fidmark/trace_io.hpp"
#include "support.hpp"

using namespace fidmark;
using namespace fidmark::testing;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

int failures = 0;

void report(int n, const std::string& name, bool pass, const std::string& detail) {
  std::cout << (pass ? "PASS" : "FAIL") << " criterion " << n << " " << name << ": " << detail << std::endl;
  if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

// Number of rotation classes, by brute force over all strings.
std::size_t brute_force_necklaces(int bits) {
  std::set<std::uint32_t> classes;
  const std::uint32_t mask = (1u << bits) - 1u;
  for (std::uint32_t s = 0; s <= mask; ++s) {
    std::uint32_t best = s;
    for (int r = 1; r < bits; ++r) best = std::min(best, ((s >> r) | (s << (bits - r))) & mask);
    classes.insert(best);
  }
  return classes.size();
}

void codec() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto book = necklace_codebook(8);
  const std::size_t oracle = brute_force_necklaces(8);
  std::vector<std::uint32_t> failed;
  for (std::uint32_t id : book) {
    MarkerSpec spec;
    spec.id = id;
    const GrayImage img = render_marker_bitmap(spec, 512);
    CameraIntrinsics cam;
    cam.fx = cam.fy = 512;
    cam.cx = cam.cy = 256;
    cam.width = cam.height = 512;
    const auto dets = detect_markers(img, cam, DetectorParams{});
    if (dets.size() != 1 || !dets[0].id || *dets[0].id != id) failed.push_back(id);
  }
  const double elapsed = seconds_since(t0);
  std::string detail = "codebook " + std::to_string(book.size()) + " vs brute force " + std::to_string(oracle) +
                       ", round-trip failures " + std::to_string(failed.size());
  for (auto id : failed) detail += " [id " + std::to_string(id) + "]";
  detail += ", " + fmt(elapsed, 3) + " s";
  report(1, "codec exhaustiveness", book.size() == oracle && failed.empty() && elapsed < 60.0, detail);
}

struct CorpusFrame {
  View view;
  double distance = 0;
  double tilt = 0;
  std::optional<MarkerDetection> det;
};

std::vector<CorpusFrame> pose_corpus() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> dist(1.0, 3.0), tilt(0.0, 45.0 * kPi / 180), az(0.0, 2 * kPi);
  std::vector<CorpusFrame> out;
  for (int i = 0; i < 200; ++i) {
    CorpusFrame f;
    f.distance = dist(rng);
    f.tilt = tilt(rng);
    const double a = az(rng);
    f.view = render_view(5, f.distance, f.tilt, a, 4.0, 1000 + i);
    const Detector det(default_camera(), DetectorParams{}, Variant::kEllipse, {5});
    auto dets = det.process(f.view.image, i, 0.0);
    if (dets.size() == 1) f.det = dets[0];
    out.push_back(std::move(f));
  }
  return out;
}

void pose_accuracy(const std::vector<CorpusFrame>& corpus) {
  int pos_ok = 0, normal_ok = 0;
  for (const auto& f : corpus) {
    if (!f.det) continue;
    const Vec3 truth_n = normal_of(f.view.truth.pose);
    if ((f.det->pose.position - f.view.truth.pose.position).norm() < 0.02 * f.distance) ++pos_ok;
    const double best = std::min(angle_between(normal_of(f.det->pose_a), truth_n),
                                 angle_between(normal_of(f.det->pose_b), truth_n));
    if (deg(best) < 3.0) ++normal_ok;
  }
  const int n = static_cast<int>(corpus.size());
  report(2, "pose accuracy", pos_ok >= 0.95 * n && normal_ok >= 0.95 * n,
         "position < 2% of range on " + std::to_string(pos_ok) + "/" + std::to_string(n) +
             ", a candidate normal within 3 deg on " + std::to_string(normal_ok) + "/" + std::to_string(n));
}

void ambiguity_signature(const std::vector<CorpusFrame>& corpus) {
  int oblique = 0, flipped = 0;
  for (const auto& f : corpus) {
    if (!f.det || f.tilt < 10.0 * kPi / 180) continue;
    ++oblique;
    MarkerDetection swapped = *f.det;
    swapped.choose(f.det->solution == Solution::kA ? Solution::kB : Solution::kA);
    update_derived(swapped, default_camera());
    const Vec3 a = f.det->position_target, b = swapped.position_target;
    const bool sign_ok = std::signbit(a.x()) != std::signbit(b.x()) && std::signbit(a.y()) != std::signbit(b.y()) &&
                         std::signbit(a.z()) == std::signbit(b.z());
    if (sign_ok) ++flipped;
  }
  report(3, "ambiguity signature", oblique > 0 && flipped == oblique,
         "east and north change sign on " + std::to_string(flipped) + "/" + std::to_string(oblique) +
             " oblique detections");
}

void classifier_exactness() {
  const Thresholds th{1.0, -0.8};
  bool ok = true;
  std::string detail;
  std::size_t clean_flags = 0;
  for (auto kind : {TrajectoryKind::kOrbitEastWest, TrajectoryKind::kOrbitNorthSouth, TrajectoryKind::kInOut,
                    TrajectoryKind::kPanTilt, TrajectoryKind::kStatic}) {
    clean_flags += classify_discontinuities(truth_trace(kind, 10.0), th).size();
  }
  ok = ok && clean_flags == 0;
  detail += "clean d = " + std::to_string(clean_flags);
  const PoseTrace clean = truth_trace(TrajectoryKind::kOrbitEastWest, 10.0);
  for (int k : {1, 3, 10}) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const auto inj = inject_flips(clean, k, seed, th);
      const auto flags = classify_discontinuities(inj.trace, th);
      if (flags.size() != static_cast<std::size_t>(k) || flags != inj.pairs) {
        ok = false;
        detail += ", k=" + std::to_string(k) + " seed " + std::to_string(seed) + " gave " +
                  std::to_string(flags.size());
      }
    }
  }
  detail += ", injected k in {1,3,10} x 3 seeds";
  PoseTrace spiky = clean;
  std::size_t spikes = 0;
  for (std::size_t i = 20; i < spiky.records.size(); i += 37, ++spikes) {
    spiky.records[i].q = Quaternion::from_axis_angle(Vec3::UnitY(), 2.5) * spiky.records[i].q;
  }
  const std::size_t spike_flags = classify_discontinuities(spiky, th).size();
  ok = ok && spike_flags == 0;
  detail += ", " + std::to_string(spikes) + " angular-only spikes gave " + std::to_string(spike_flags) + " flags";
  report(4, "classifier exactness", ok, detail);
}

PoseTrace run_detector(const Detector& det, const RenderedSequence& seq, const std::string& system,
                       const std::string& name) {
  PoseTrace tr{system, name, {}};
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    for (const auto& d : det.process(seq.frames[i], static_cast<int>(i), seq.truth[i].timestamp)) {
      tr.records.push_back(to_record(d));
    }
  }
  return tr;
}

void headline() {
  const Thresholds th{1.0, -0.8};
  const CameraIntrinsics cam = default_camera();
  bool ok = true;
  std::string detail;
  for (int s = 0; s < 3; ++s) {
    std::map<std::string, std::vector<double>> rd;
    for (Preset p : discontinuity_suite()) {
      p.render.noise_sigma = 8.0;
      p.render.seed += 1000u * static_cast<std::uint64_t>(s);
      const RenderedSequence seq = render_sequence(p.scene, p.trajectory, p.camera, p.render);
      DetectorParams single;
      single.circle_diameter = p.single_diameter;
      DetectorParams bundle;
      bundle.circle_diameter = p.bundle_diameter;
      const Detector orig(cam, single, Variant::kOrig, {p.single_id});
      const Detector ellipse(cam, single, Variant::kEllipse, {p.single_id});
      const Detector multi(cam, bundle, Variant::kMulti, p.bundle_ids);
      rd["orig"].push_back(evaluate_trace(run_detector(orig, seq, "orig", p.name), th).r_d);
      rd["ellipse"].push_back(evaluate_trace(run_detector(ellipse, seq, "ellipse", p.name), th).r_d);
      rd["multi"].push_back(evaluate_trace(run_detector(multi, seq, "multi", p.name), th).r_d);
    }
    const double o = mean_and_std(rd["orig"]).first;
    const double e = mean_and_std(rd["ellipse"]).first;
    const double m = mean_and_std(rd["multi"]).first;
    ok = ok && e <= o;
    detail += (s ? "; " : "") + std::string("seed set ") + std::to_string(s) + ": orig " + fmt(o) + " ellipse " +
              fmt(e) + " multi " + fmt(m);
  }
  report(5, "ellipse r_d <= orig r_d (33 cases, sigma 8)", ok, detail);
}

void bundle_correctness() {
  const CameraIntrinsics cam = default_camera();
  const Scene scene = standard_scene();
  int views = 0, normal_ok = 0, mean_ok = 0;
  double worst = 0.0;
  for (double tilt : {10.0, 20.0, 30.0}) {
    for (double az : {0.3, 1.3, 2.3, 3.3, 4.3, 5.3}) {
      Trajectory t;
      t.tilt_rad = tilt * kPi / 180;
      t.azimuth_rad = az;
      t.distance_m = 1.4;
      t.look_at = Vec3(0.25, -0.02, 0);
      const Pose camp = t.camera_pose(0);
      RenderSettings rs;
      rs.blur_sigma = 0.6;
      rs.noise_sigma = 4.0;
      const auto img = Renderer(cam).render(scene, camp, rs, 17 + views);
      const auto truth = ground_truth_for(scene, camp, cam, 0, 0.0);
      DetectorParams p;
      p.circle_diameter = 0.123;
      std::vector<MarkerDetection> wrong;
      for (auto d : detect_markers(img, cam, p)) {
        if (!d.id || *d.id == 5) continue;
        Vec3 n_true = Vec3::UnitZ();
        for (const auto& g : truth.markers) {
          if (g.id == *d.id) n_true = normal_of(g.pose);
        }
        const bool a_good =
            angle_between(normal_of(d.pose_a), n_true) < angle_between(normal_of(d.pose_b), n_true);
        d.choose(a_good ? Solution::kB : Solution::kA);
        wrong.push_back(d);
      }
      ++views;
      if (wrong.size() != 3) continue;
      const auto b = bundle_multi(wrong, cam);
      const double err = deg(angle_between(normal_of(b.pose), normal_of(truth.markers[1].pose)));
      worst = std::max(worst, err);
      if (err < 3.0) ++normal_ok;
      Vec3 mean = Vec3::Zero();
      for (const auto& d : wrong) mean += d.pose.position;
      mean /= 3.0;
      if (b.pose.position == mean) ++mean_ok;
    }
  }
  report(6, "bundle correctness", normal_ok == views && mean_ok == views,
         "normal within 3 deg on " + std::to_string(normal_ok) + "/" + std::to_string(views) + " (worst " +
             fmt(worst, 3) + " deg), position == mean on " + std::to_string(mean_ok) + "/" +
             std::to_string(views));
}

void rate_accounting() {
  bool exact = true;
  for (std::size_t n : {0u, 1u, 611u, 1800u}) {
    for (double t : {60.0, 0.3, 17.5}) exact = exact && detection_rate(n, t) == static_cast<double>(n) / t;
  }
  Preset p = find_preset("static-2m");
  p.trajectory.duration_s = 600 / p.trajectory.frame_rate_hz;
  const auto seq = render_sequence(p.scene, p.trajectory, p.camera, p.render);
  const Detector det(p.camera, DetectorParams{}, Variant::kEllipse, {p.single_id});
  auto timed = [&](BenchMode mode, double& outer) {
    const auto t0 = std::chrono::steady_clock::now();
    const BenchResult r = run_benchmark(seq.frames, p.trajectory.frame_rate_hz, det, mode);
    outer = seconds_since(t0);
    return r;
  };
  double w1 = 0, w2 = 0;
  const BenchResult a = timed(BenchMode::kPaced, w1);
  const BenchResult b = timed(BenchMode::kPaced, w2);
  const double consistency = std::max(std::abs(a.F * w1 - a.detections) / a.detections,
                                      std::abs(b.F * w2 - b.detections) / b.detections);
  const double repeat = std::abs(a.F - b.F) / std::max(a.F, b.F);
  report(7, "rate accounting", exact && seq.frames.size() == 600 && consistency <= 0.01 && repeat <= 0.10,
         std::string("detection_rate exact ") + (exact ? "yes" : "no") + ", frames " +
             std::to_string(seq.frames.size()) + ", F " + fmt(a.F) + " / " + fmt(b.F) +
             ", |F*wall - n|/n " + fmt(consistency, 3) + ", run-to-run " + fmt(repeat, 3));
}

void invariants() {
  std::mt19937_64 rng(808);
  std::uniform_real_distribution<double> ta(0.2, 20.0), tl(-3.0, -0.05);
  int good = 0;
  const int trials = 100;
  auto as_set = [](const std::vector<std::size_t>& v) { return std::set<std::size_t>(v.begin(), v.end()); };
  auto subset = [](const std::set<std::size_t>& small, const std::set<std::size_t>& big) {
    return std::includes(big.begin(), big.end(), small.begin(), small.end());
  };
  for (int i = 0; i < trials; ++i) {
    const PoseTrace tr = random_trace(rng, 150);
    const Thresholds th{ta(rng), tl(rng)};
    const auto base = as_set(classify_discontinuities(tr, th));
    Thresholds higher = th;
    higher.theta_a *= 1.0 + ta(rng);
    Thresholds lower = th;
    lower.theta_l -= 0.1 + 0.1 * ta(rng);
    const auto e1 = eq1_only(tr, th.theta_l), e2 = eq2_only(tr, th.theta_a);
    std::set<std::size_t> both;
    std::set_intersection(e1.begin(), e1.end(), e2.begin(), e2.end(), std::inserter(both, both.begin()));
    const bool ok = subset(as_set(classify_discontinuities(tr, higher)), base) &&
                    subset(as_set(classify_discontinuities(tr, lower)), base) && subset(base, e1) &&
                    subset(base, e2) && both == base;
    if (ok) ++good;
  }
  report(8, "threshold monotonicity and conjunction subset", good == trials,
         std::to_string(good) + "/" + std::to_string(trials) + " random traces");
}

int sh(const std::string& args) {
  const std::string cmd = std::string(FIDMARK_CLI) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    out[fs::relative(e.path(), dir).string()] = ss.str();
  }
  return out;
}

void determinism() {
  std::vector<std::map<std::string, std::string>> runs;
  bool commands_ok = true;
  for (int pass = 0; pass < 2; ++pass) {
    const fs::path d = scratch_dir("acceptance_pipeline_" + std::to_string(pass));
    const std::string frames = (d / "frames").string();
    commands_ok = commands_ok && sh("marker-gen --id 5 3 9 11 --out " + (d / "markers").string()) == 0 &&
                  sh("render --preset east-west-3 --seed 99 --out " + frames) == 0;
    for (const char* v : {"orig", "ellipse", "multi"}) {
      commands_ok = commands_ok && sh("detect " + frames + " --variant " + v + " --out " +
                                      (d / v / "east-west-3.jsonl").string()) == 0;
    }
    commands_ok = commands_ok && sh("evaluate " + (d / "orig" / "east-west-3.jsonl").string() + " " +
                                    (d / "ellipse" / "east-west-3.jsonl").string() + " " +
                                    (d / "multi" / "east-west-3.jsonl").string() + " --out " +
                                    (d / "report").string()) == 0;
    runs.push_back(tree(d));
  }
  std::size_t differing = 0;
  for (const auto& [name, bytes] : runs[0]) {
    auto it = runs[1].find(name);
    if (it == runs[1].end() || it->second != bytes) ++differing;
  }
  const bool ok = commands_ok && runs[0].size() == runs[1].size() && differing == 0 && !runs[0].empty();
  report(9, "pipeline determinism", ok,
         std::to_string(runs[0].size()) + " files, " + std::to_string(differing) + " differ" +
             (commands_ok ? "" : ", a command failed"));
}

}  // namespace

int main() {
  codec();
  const auto corpus = pose_corpus();
  pose_accuracy(corpus);
  ambiguity_signature(corpus);
  classifier_exactness();
  headline();
  bundle_correctness();
  rate_accounting();
  invariants();
  determinism();
  std::cout << (failures ? "acceptance: " + std::to_string(failures) + " criteria failed" : "acceptance: all passed")
            << std::endl;
  return failures ? 1 : 0;
}
