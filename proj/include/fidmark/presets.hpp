#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "fidmark/geometry.hpp"
#include "fidmark/synth.hpp"

namespace fidmark {

/// A named synthetic test case: scene, camera motion and render settings.
struct Preset {
  std::string name;
  std::string group;  // "discontinuity", "rate" or "alias"
  Scene scene;
  Trajectory trajectory;
  CameraIntrinsics camera;
  RenderSettings render;
  std::uint32_t single_id = 5;
  double single_diameter = 0.3;
  std::set<std::uint32_t> bundle_ids{3, 9, 11};
  double bundle_diameter = 0.123;
};

/// 640x480, 77 degree horizontal field of view, no distortion.
CameraIntrinsics default_camera();

/// One large marker beside a three-marker bundle, all on the wall z = 0.
Scene standard_scene();

std::vector<std::string> preset_names();
/// Throws listing the available names. Applies the FIDMARK_SEED override.
Preset find_preset(const std::string& name);

std::vector<Preset> discontinuity_suite();  // 33 cases
std::vector<Preset> rate_suite();           // 14 cases

/// Seed from FIDMARK_SEED if set, otherwise `fallback`.
std::uint64_t seed_from_env(std::uint64_t fallback);

}  // namespace fidmark
