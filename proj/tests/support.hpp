#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <set>
#include <string>

#include "fidmark/eval.hpp"
#include "fidmark/geometry.hpp"
#include "fidmark/presets.hpp"
#include "fidmark/synth.hpp"
#include "fidmark/trace_io.hpp"

namespace fidmark::testing {

inline Quaternion random_quaternion(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  return Quaternion(g(rng), g(rng), g(rng), g(rng));
}

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vec3 v(g(rng), g(rng), g(rng));
  return v.normalized();
}

inline double deg(double rad) { return rad * 180.0 / M_PI; }

struct View {
  GrayImage image;
  GroundTruthMarker truth;
  Pose camera;
};

// One marker at the world origin seen from `distance` along a direction
// tilted by `tilt` towards `azimuth`.
inline View render_view(std::uint32_t id, double distance, double tilt, double azimuth, double noise = 0.0,
                        std::uint64_t seed = 1, double diameter = 0.3, double blur = 0.6) {
  const CameraIntrinsics cam = default_camera();
  Scene scene;
  SceneMarker m;
  m.spec.id = id;
  m.spec.diameter = diameter;
  scene.markers.push_back(m);
  Trajectory traj;
  traj.distance_m = distance;
  traj.tilt_rad = tilt;
  traj.azimuth_rad = azimuth;
  View v;
  v.camera = traj.camera_pose(0);
  RenderSettings rs;
  rs.noise_sigma = noise;
  rs.blur_sigma = blur;
  rs.seed = seed;
  v.image = Renderer(cam).render(scene, v.camera, rs, seed);
  v.truth = ground_truth_for(scene, v.camera, cam, 0, 0.0).markers.at(0);
  return v;
}

inline Vec3 normal_of(const Pose& p) { return p.orientation.rotation().col(2); }

// Ground-truth trace of marker 5 along an orbit, without rendering.
inline PoseTrace truth_trace(TrajectoryKind kind, double duration_s, double distance = 1.8,
                             double amplitude = 0.35) {
  Preset p = find_preset("east-west");
  p.trajectory.kind = kind;
  p.trajectory.duration_s = duration_s;
  p.trajectory.distance_m = distance;
  p.trajectory.amplitude_rad = amplitude;
  std::vector<GroundTruthRecord> truth;
  for (int f = 0; f < p.trajectory.frame_count(); ++f) {
    truth.push_back(ground_truth_for(p.scene, p.trajectory.camera_pose(f), p.camera, f,
                                     f / p.trajectory.frame_rate_hz));
  }
  return ground_truth_trace(truth, 5);
}

// Random trace: smooth drift with occasional sign flips, rotation jumps and
// both at once; irregular positive time steps.
inline PoseTrace random_trace(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  PoseTrace tr{"random", "case", {}};
  Vec3 p(g(rng), g(rng), -1.0 - uni(rng));
  Quaternion q = random_quaternion(rng);
  double t = 0.0;
  for (int i = 0; i < n; ++i) {
    TraceRecord r;
    r.frame = i;
    t += 0.01 + 0.05 * uni(rng);
    r.t = t;
    const double u = uni(rng);
    if (u < 0.1) {
      p.x() = -p.x() * (0.5 + uni(rng));
    } else if (u < 0.2) {
      q = random_quaternion(rng);
    } else if (u < 0.3) {
      p.y() = -p.y() * (0.5 + uni(rng));
      q = Quaternion::from_axis_angle(Vec3(g(rng), g(rng), g(rng)), 2.0 * uni(rng)) * q;
    } else {
      p += 0.01 * Vec3(g(rng), g(rng), g(rng));
      q = Quaternion::from_axis_angle(Vec3(g(rng), g(rng), g(rng)), 0.01) * q;
    }
    r.target = p;
    r.q = q;
    tr.records.push_back(r);
  }
  return tr;
}

inline std::set<std::size_t> eq1_only(const PoseTrace& tr, double theta_l) {
  std::set<std::size_t> s;
  for (std::size_t i = 0; i + 1 < tr.records.size(); ++i) {
    const Vec3& a = tr.records[i].target;
    const Vec3& b = tr.records[i + 1].target;
    for (int k = 0; k < 3; ++k) {
      if (std::abs(a(k)) > 1e-9 && b(k) / a(k) < theta_l) s.insert(i);
    }
  }
  return s;
}

inline std::set<std::size_t> eq2_only(const PoseTrace& tr, double theta_a) {
  std::set<std::size_t> s;
  for (std::size_t i = 0; i + 1 < tr.records.size(); ++i) {
    const auto& a = tr.records[i];
    const auto& b = tr.records[i + 1];
    const double dot = std::abs(a.q.w() * b.q.w() + a.q.x() * b.q.x() + a.q.y() * b.q.y() + a.q.z() * b.q.z());
    const double angle = 2.0 * std::acos(std::min(1.0, dot));
    if (angle / (b.t - a.t) > theta_a) s.insert(i);
  }
  return s;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("fidmark_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fidmark::testing
