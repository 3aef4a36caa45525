#include "fidmark/presets.hpp"

#include <array>
#include <cstdlib>
#include <numbers>
#include <sstream>
#include <string>

#include "fidmark/error.hpp"

namespace fidmark {

namespace {

constexpr double kPi = std::numbers::pi;

Preset base(const std::string& name, const std::string& group, std::uint64_t seed) {
  Preset p;
  p.name = name;
  p.group = group;
  p.scene = standard_scene();
  p.camera = default_camera();
  p.render.noise_sigma = 4.0;
  p.render.blur_sigma = 0.6;
  p.render.seed = seed;
  return p;
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

std::vector<Preset> build_discontinuity() {
  std::vector<Preset> out;
  constexpr std::array<double, 7> orbit_range{1.0, 1.3, 1.6, 2.0, 2.3, 2.6, 3.0};
  for (int i = 0; i < 7; ++i) {
    Preset p = base("east-west-" + std::to_string(i + 1), "discontinuity", 101 + i);
    p.trajectory.kind = TrajectoryKind::kOrbitEastWest;
    p.trajectory.distance_m = p.trajectory.distance_end_m = orbit_range[i];
    p.trajectory.amplitude_rad = 0.30;
    p.trajectory.tilt_rad = 0.08;
    p.trajectory.azimuth_rad = kPi / 2.0;
    out.push_back(p);
  }
  for (int i = 0; i < 7; ++i) {
    Preset p = base("north-south-" + std::to_string(i + 1), "discontinuity", 201 + i);
    p.trajectory.kind = TrajectoryKind::kOrbitNorthSouth;
    p.trajectory.distance_m = p.trajectory.distance_end_m = orbit_range[i];
    p.trajectory.amplitude_rad = 0.30;
    p.trajectory.tilt_rad = 0.08;
    p.trajectory.azimuth_rad = 0.0;
    out.push_back(p);
  }
  constexpr std::array<std::array<double, 2>, 7> in_out{
      {{1.0, 1.6}, {1.2, 1.9}, {1.4, 2.2}, {1.6, 2.5}, {1.8, 2.7}, {2.0, 2.9}, {2.2, 3.0}}};
  for (int i = 0; i < 7; ++i) {
    Preset p = base("in-out-" + std::to_string(i + 1), "discontinuity", 301 + i);
    p.trajectory.kind = TrajectoryKind::kInOut;
    // Alternate moving away and moving closer.
    p.trajectory.distance_m = in_out[i][i % 2];
    p.trajectory.distance_end_m = in_out[i][1 - i % 2];
    p.trajectory.tilt_rad = 0.15 + 0.05 * i;
    p.trajectory.azimuth_rad = 0.9 * i;
    out.push_back(p);
  }
  constexpr std::array<double, 6> pan_range{1.0, 1.4, 1.8, 2.2, 2.6, 3.0};
  for (int i = 0; i < 6; ++i) {
    Preset p = base("pan-tilt-" + std::to_string(i + 1), "discontinuity", 401 + i);
    p.trajectory.kind = TrajectoryKind::kPanTilt;
    p.trajectory.distance_m = p.trajectory.distance_end_m = pan_range[i];
    p.trajectory.amplitude_rad = 0.10;
    p.trajectory.tilt_rad = 0.25;
    p.trajectory.azimuth_rad = 1.1 * i;
    out.push_back(p);
  }
  constexpr std::array<double, 6> calib_range{0.96, 1.2, 1.5, 1.9, 2.4, 3.0};
  for (int i = 0; i < 6; ++i) {
    Preset p = base("calibration-z" + fixed(calib_range[i], 2), "discontinuity", 501 + i);
    p.trajectory.kind = TrajectoryKind::kStatic;
    p.trajectory.distance_m = p.trajectory.distance_end_m = calib_range[i];
    p.trajectory.tilt_rad = 0.35 + 0.04 * i;
    p.trajectory.azimuth_rad = 0.5 + 1.0 * i;
    out.push_back(p);
  }
  return out;
}

std::vector<Preset> build_rate() {
  // Still camera, 60 s per case, seven distances at two deflections.
  std::vector<Preset> out;
  constexpr std::array<int, 7> cm{100, 120, 150, 180, 210, 250, 300};
  for (int i = 0; i < 7; ++i) {
    for (int k = 0; k < 2; ++k) {
      Preset p = base("z" + std::to_string(cm[i]) + "cm-" + std::to_string(k), "rate", 601 + 2 * i + k);
      p.trajectory.kind = TrajectoryKind::kStatic;
      p.trajectory.duration_s = 60.0;
      p.trajectory.distance_m = p.trajectory.distance_end_m = cm[i] / 100.0;
      p.trajectory.tilt_rad = k == 0 ? 0.0 : 0.35;
      p.trajectory.azimuth_rad = 0.25 * i;
      out.push_back(p);
    }
  }
  return out;
}

std::vector<Preset> build_aliases() {
  std::vector<Preset> out;
  {
    Preset p = base("east-west", "alias", 11);
    p.trajectory.kind = TrajectoryKind::kOrbitEastWest;
    p.trajectory.distance_m = p.trajectory.distance_end_m = 1.5;
    p.trajectory.amplitude_rad = 0.30;
    p.trajectory.tilt_rad = 0.08;
    p.trajectory.azimuth_rad = kPi / 2.0;
    out.push_back(p);
  }
  {
    Preset p = base("north-south", "alias", 12);
    p.trajectory.kind = TrajectoryKind::kOrbitNorthSouth;
    p.trajectory.distance_m = p.trajectory.distance_end_m = 1.5;
    p.trajectory.amplitude_rad = 0.30;
    p.trajectory.tilt_rad = 0.08;
    out.push_back(p);
  }
  {
    Preset p = base("in-out", "alias", 13);
    p.trajectory.kind = TrajectoryKind::kInOut;
    p.trajectory.distance_m = 1.0;
    p.trajectory.distance_end_m = 3.0;
    p.trajectory.tilt_rad = 0.2;
    out.push_back(p);
  }
  {
    Preset p = base("pan-tilt", "alias", 14);
    p.trajectory.kind = TrajectoryKind::kPanTilt;
    p.trajectory.distance_m = p.trajectory.distance_end_m = 1.5;
    p.trajectory.amplitude_rad = 0.10;
    p.trajectory.tilt_rad = 0.25;
    out.push_back(p);
  }
  {
    Preset p = base("static-2m", "alias", 15);
    p.trajectory.kind = TrajectoryKind::kStatic;
    p.trajectory.distance_m = p.trajectory.distance_end_m = 2.0;
    out.push_back(p);
  }
  return out;
}

void apply_env(std::vector<Preset>& presets) {
  for (auto& p : presets) p.render.seed = seed_from_env(p.render.seed);
}

}  // namespace

CameraIntrinsics default_camera() {
  return CameraIntrinsics::from_horizontal_fov(640, 480, 77.0 * kPi / 180.0);
}

Scene standard_scene() {
  Scene scene;
  auto add = [&](std::uint32_t id, double diameter, double x, double y) {
    SceneMarker m;
    m.spec.id = id;
    m.spec.diameter = diameter;
    m.pose.position = Vec3(x, y, 0.0);
    scene.markers.push_back(m);
  };
  add(5, 0.3, -0.22, 0.0);
  add(3, 0.123, 0.16, -0.10);
  add(9, 0.123, 0.34, -0.10);
  add(11, 0.123, 0.25, 0.08);
  return scene;
}

std::uint64_t seed_from_env(std::uint64_t fallback) {
  const char* env = std::getenv("FIDMARK_SEED");
  if (!env || !*env) return fallback;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (end == env || *end != '\0') throw Error(std::string("FIDMARK_SEED is not an unsigned integer: ") + env);
  return v;
}

std::vector<Preset> discontinuity_suite() {
  auto v = build_discontinuity();
  apply_env(v);
  return v;
}

std::vector<Preset> rate_suite() {
  auto v = build_rate();
  apply_env(v);
  return v;
}

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& list : {build_discontinuity(), build_rate(), build_aliases()}) {
    for (const auto& p : list) names.push_back(p.name);
  }
  return names;
}

Preset find_preset(const std::string& name) {
  for (auto list : {build_discontinuity(), build_rate(), build_aliases()}) {
    for (auto& p : list) {
      if (p.name == name) {
        p.render.seed = seed_from_env(p.render.seed);
        return p;
      }
    }
  }
  std::string msg = "unknown preset '" + name + "'; available:";
  for (const auto& n : preset_names()) msg += " " + n;
  throw Error(msg);
}

}  // namespace fidmark
