#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fidmark/geometry.hpp"
#include "fidmark/image.hpp"
#include "fidmark/marker.hpp"

namespace fidmark {

/// Detector configuration. Tolerances are percentages, as in the WhyCon
/// parameter files.
struct DetectorParams {
  int id_bits = 8;
  int id_samples = 360;
  int min_size = 30;
  double circle_diameter = 0.3;  // m
  double initial_circularity_tolerance = 100.0;
  double final_circularity_tolerance = 2.0;
  double area_ratio_tolerance = 40.0;
  double center_distance_tolerance_ratio = 10.0;
  double center_distance_tolerance_abs = 5.0;  // px
  int num_markers = 4;                         // upper bound per frame
  double field_length = 1.0;                   // unused, kept for parity
  double field_width = 1.0;
  MarkerGeometry geometry;
  double sampling_radius = 0.585;   // mid-teeth circle, fraction of the outer radius
  int edge_samples = 16;            // per radial line, ellipse variant
  double edge_half_length = 0.1;    // fraction of the outer radius

  void validate() const;
};

struct Segment {
  int size = 0;
  int min_x = 0, min_y = 0, max_x = 0, max_y = 0;
  Vec2 centroid = Vec2::Zero();
  double mxx = 0.0, mxy = 0.0, myy = 0.0;  // central second moments
  double mean_gray = 0.0;
  bool dark = true;  // outer ring (true) or inner white region
};

/// A black ring with its enclosed white region.
struct SegmentPair {
  Segment outer;
  Segment inner;
  Ellipse ellipse;       // outer boundary, from the moments of the union
  double threshold = 0;  // local gray threshold used for both floods
};

enum class Solution { kA, kB };

struct MarkerDetection {
  std::optional<std::uint32_t> id;
  Ellipse ellipse;
  double threshold = 0.0;
  Pose pose_a;
  Pose pose_b;
  Vec3 cone_axis = Vec3::UnitZ();
  Pose pose;  // chosen
  Solution solution = Solution::kA;
  double variance_a = 0.0;
  double variance_b = 0.0;
  bool fallback = false;  // ellipse variant fell back to the orig score
  Vec3 position_target = Vec3::Zero();
  Vec2 normalized_pixel = Vec2::Zero();
  YawPitchRoll ypr;
  double timestamp = 0.0;
  int frame = 0;

  const Pose& candidate(Solution s) const { return s == Solution::kA ? pose_a : pose_b; }
  void choose(Solution s);
};

/// Camera-to-marker vector in (east, north, up): marker x, marker y, marker normal.
Vec3 position_target(const Pose& pose);
Vec2 normalized_pixel(const Vec2& center, const CameraIntrinsics& cam);

std::vector<SegmentPair> segment_image(const GrayImage& image, const DetectorParams& params);

/// Candidates, id and derived attributes; the chosen pose defaults to A.
std::vector<MarkerDetection> detect_markers(const GrayImage& image, const CameraIntrinsics& cam,
                                            const DetectorParams& params);

/// Tooth-count variance along a candidate's predicted mid-teeth ellipse.
double orig_score(const Pose& candidate, const GrayImage& image, const CameraIntrinsics& cam,
                  const DetectorParams& params, double threshold);

struct EdgeScore {
  double variance = 0.0;
  int found = 0;
  int lines = 0;
};
/// Variance of the located tooth-edge fractions along radial lines.
EdgeScore ellipse_score(const Pose& candidate, std::uint32_t id, const GrayImage& image,
                        const CameraIntrinsics& cam, const DetectorParams& params);

void disambiguate_orig(MarkerDetection& det, const GrayImage& image, const CameraIntrinsics& cam,
                       const DetectorParams& params);
void disambiguate_ellipse(MarkerDetection& det, const GrayImage& image, const CameraIntrinsics& cam,
                          const DetectorParams& params);

/// Composite detection from >= 3 coplanar constituents. Uses each
/// constituent's chosen position and the lowest-id constituent's yaw.
MarkerDetection bundle_multi(const std::vector<MarkerDetection>& dets, const CameraIntrinsics& cam);

/// Fills position target, normalized pixel and angles from the chosen pose.
void update_derived(MarkerDetection& det, const CameraIntrinsics& cam);

enum class Variant { kOrig, kEllipse, kMulti };
std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

/// Per-frame pipeline: detect, drop id-less detections, disambiguate.
/// `ids` filters single-marker variants (empty keeps all) and is the bundle
/// set for the multi variant.
class Detector {
 public:
  Detector(CameraIntrinsics cam, DetectorParams params, Variant variant, std::set<std::uint32_t> ids = {});

  std::vector<MarkerDetection> process(const GrayImage& image, int frame, double timestamp) const;

  const DetectorParams& params() const { return params_; }
  Variant variant() const { return variant_; }

 private:
  CameraIntrinsics cam_;
  DetectorParams params_;
  Variant variant_;
  std::set<std::uint32_t> ids_;
};

}  // namespace fidmark
