#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fidmark/geometry.hpp"
#include "fidmark/image.hpp"
#include "fidmark/marker.hpp"

namespace fidmark {

struct SceneMarker {
  MarkerSpec spec;
  Pose pose;  // marker frame -> world frame
};

/// Markers printed on white paper squares, mounted on a uniform wall.
struct Scene {
  std::vector<SceneMarker> markers;
  double ambient = 0.9;            // scales every reflectance, [0, 1]
  double paper_margin = 1.25;      // paper side / marker diameter
  double white_reflectance = 0.95;
  double black_reflectance = 0.05;
  double wall_reflectance = 0.65;

  void validate() const;
};

enum class TrajectoryKind { kOrbitEastWest, kOrbitNorthSouth, kInOut, kPanTilt, kStatic };

std::string to_string(TrajectoryKind kind);
TrajectoryKind trajectory_kind_from_string(const std::string& s);

/// Camera motion around the world origin. Angles are measured at the look-at
/// point between the wall normal and the camera; azimuth 0 tilts toward east.
struct Trajectory {
  TrajectoryKind kind = TrajectoryKind::kStatic;
  double duration_s = 3.0;
  double frame_rate_hz = 30.0;
  double distance_m = 2.0;      // start distance
  double distance_end_m = 2.0;  // in-out only
  double tilt_rad = 0.0;        // base viewing angle off the wall normal
  double azimuth_rad = 0.0;     // direction of the base tilt
  double amplitude_rad = 0.0;   // orbit / pan-tilt swing
  Vec3 look_at = Vec3::Zero();  // world point kept at the image center

  int frame_count() const;
  /// Camera frame -> world frame for frame i.
  Pose camera_pose(int frame) const;
  void validate() const;
};

struct GroundTruthMarker {
  std::uint32_t id = 0;
  Pose pose;               // marker -> camera
  Vec3 position_target;    // (east, north, up)
  Vec2 normalized_pixel;   // of the projected center
  Vec2 pixel;
};

struct GroundTruthRecord {
  int frame = 0;
  double timestamp = 0.0;
  std::vector<GroundTruthMarker> markers;
};

struct RenderSettings {
  double noise_sigma = 0.0;  // gray levels, additive Gaussian after blur
  double blur_sigma = 0.0;   // pixels
  std::uint64_t seed = 1;
  int supersample = 2;       // per axis; 2 gives 4 samples per pixel
};

struct RenderedSequence {
  std::vector<GrayImage> frames;
  std::vector<GroundTruthRecord> truth;
  CameraIntrinsics camera;
  double frame_rate_hz = 0.0;
  std::uint64_t seed = 0;
};

/// Inverse-mapping renderer bound to one camera model.
class Renderer {
 public:
  Renderer(const CameraIntrinsics& cam, int supersample = 2);

  const CameraIntrinsics& camera() const { return cam_; }
  GrayImage render(const Scene& scene, const Pose& camera_pose, const RenderSettings& settings,
                   std::uint64_t frame_seed) const;

 private:
  CameraIntrinsics cam_;
  int sub_;
  int ray_w_, ray_h_;
  std::vector<double> ray_x_, ray_y_;  // normalized ray per subsample
};

GroundTruthRecord ground_truth_for(const Scene& scene, const Pose& camera_pose, const CameraIntrinsics& cam,
                                   int frame, double timestamp);

/// Throws naming the first frame in which a marker leaves the image.
void check_markers_in_frame(const Scene& scene, const Trajectory& traj, const CameraIntrinsics& cam);

RenderedSequence render_sequence(const Scene& scene, const Trajectory& traj, const CameraIntrinsics& cam,
                                 const RenderSettings& settings);

/// Camera looking from `eye` at `target`, image up aligned with world +y.
Pose look_at(const Vec3& eye, const Vec3& target);

}  // namespace fidmark
