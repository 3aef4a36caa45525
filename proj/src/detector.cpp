#include "fidmark/detector.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "fidmark/error.hpp"

namespace fidmark {

void MarkerDetection::choose(Solution s) {
  solution = s;
  pose = candidate(s);
}

Vec3 position_target(const Pose& pose) {
  return pose.orientation.conjugate().rotate(pose.position);
}

Vec2 normalized_pixel(const Vec2& center, const CameraIntrinsics& cam) {
  return {(2.0 * center.x() - cam.width) / cam.width, (2.0 * center.y() - cam.height) / cam.height};
}

void update_derived(MarkerDetection& det, const CameraIntrinsics& cam) {
  det.position_target = position_target(det.pose);
  det.normalized_pixel = normalized_pixel(det.ellipse.center, cam);
  det.ypr = quaternion_to_ypr(det.pose.orientation);
}

namespace {

// Right-handed frame with z = n and x as close as possible to camera x.
Mat3 provisional_frame(const Vec3& n) {
  Vec3 x = Vec3::UnitX() - Vec3::UnitX().dot(n) * n;
  if (x.norm() < 1e-6) x = Vec3::UnitY() - Vec3::UnitY().dot(n) * n;
  x.normalize();
  Mat3 r;
  r.col(0) = x;
  r.col(1) = n.cross(x);
  r.col(2) = n;
  return r;
}

// Samples the mid-teeth circle of a candidate and decodes it. Returns the
// marker rotation with x at the start of the canonical id.
std::optional<Mat3> read_ring(const GrayImage& image, const CameraIntrinsics& cam, const DetectorParams& params,
                              double threshold, const Vec3& center, const Vec3& normal,
                              std::vector<std::uint8_t>& ring, std::optional<std::uint32_t>& id) {
  const double radius = 0.5 * params.circle_diameter;
  const Mat3 frame = provisional_frame(normal);
  for (int k = 0; k < params.id_samples; ++k) {
    const double a = 2.0 * std::numbers::pi * k / params.id_samples;
    const Vec3 p = center + params.sampling_radius * radius * (std::cos(a) * frame.col(0) + std::sin(a) * frame.col(1));
    if (!(p.z() > 0.0)) return std::nullopt;
    const Vec2 px = project_point(p, cam);
    if (!image.contains(px.x(), px.y())) return std::nullopt;
    ring[static_cast<std::size_t>(k)] = image.sample(px.x(), px.y()) >= threshold ? 1 : 0;
  }
  const auto decoded = decode_ring(ring, params.id_bits);
  if (!decoded) return std::nullopt;
  id = decoded->id;
  Mat3 rot = frame;
  const double c = std::cos(decoded->phase), s = std::sin(decoded->phase);
  rot.col(0) = c * frame.col(0) + s * frame.col(1);
  rot.col(1) = normal.cross(rot.col(0));
  return rot;
}

}  // namespace

std::vector<MarkerDetection> detect_markers(const GrayImage& image, const CameraIntrinsics& cam,
                                            const DetectorParams& params) {
  params.validate();
  cam.validate();
  std::vector<MarkerDetection> out;
  std::vector<std::uint8_t> ring(static_cast<std::size_t>(params.id_samples));

  for (const SegmentPair& pair : segment_image(image, params)) {
    CirclePoseCandidates cand;
    try {
      cand = circle_pose_candidates(pair.ellipse, cam, params.circle_diameter);
    } catch (const Error&) {
      continue;
    }
    MarkerDetection det;
    det.ellipse = pair.ellipse;
    det.threshold = pair.threshold;
    det.cone_axis = cand.cone_axis;

    // Read the ring along candidate A's circle; if that fails, along B's and
    // recover A as its twin.
    std::optional<Pose> read_a, read_b;
    if (auto rot = read_ring(image, cam, params, pair.threshold, cand.center_a, cand.normal_a, ring, det.id)) {
      read_a = Pose{cand.center_a, Quaternion::from_rotation(*rot)};
    } else if (auto rot_b = read_ring(image, cam, params, pair.threshold, cand.center_b, cand.normal_b, ring, det.id)) {
      read_b = Pose{cand.center_b, Quaternion::from_rotation(*rot_b)};
    }
    if (read_b) {
      det.pose_b = *read_b;
      det.pose_a = ambiguity_twin(det.pose_b, cand.cone_axis);
    } else {
      det.pose_a = read_a ? *read_a : Pose{cand.center_a, Quaternion::from_rotation(provisional_frame(cand.normal_a))};
      det.pose_b = ambiguity_twin(det.pose_a, cand.cone_axis);
    }
    det.choose(Solution::kA);
    update_derived(det, cam);
    out.push_back(det);
  }
  return out;
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kOrig: return "orig";
    case Variant::kEllipse: return "ellipse";
    case Variant::kMulti: return "multi";
  }
  return "orig";
}

Variant variant_from_string(const std::string& s) {
  if (s == "orig") return Variant::kOrig;
  if (s == "ellipse") return Variant::kEllipse;
  if (s == "multi") return Variant::kMulti;
  throw Error("unknown variant '" + s + "' (expected orig, ellipse or multi)");
}

Detector::Detector(CameraIntrinsics cam, DetectorParams params, Variant variant, std::set<std::uint32_t> ids)
    : cam_(cam), params_(params), variant_(variant), ids_(std::move(ids)) {
  cam_.validate();
  params_.validate();
  if (variant_ == Variant::kMulti && ids_.size() < 3) {
    throw Error("the multi variant needs a bundle of at least 3 marker ids");
  }
}

std::vector<MarkerDetection> Detector::process(const GrayImage& image, int frame, double timestamp) const {
  std::vector<MarkerDetection> kept;
  for (auto& det : detect_markers(image, cam_, params_)) {
    if (!det.id) continue;
    if (!ids_.empty() && !ids_.count(*det.id)) continue;
    det.frame = frame;
    det.timestamp = timestamp;
    if (variant_ == Variant::kEllipse) {
      disambiguate_ellipse(det, image, cam_, params_);
    } else {
      disambiguate_orig(det, image, cam_, params_);
    }
    kept.push_back(det);
  }
  if (variant_ != Variant::kMulti) return kept;

  // One constituent per id; a bundle needs three distinct ids.
  std::map<std::uint32_t, MarkerDetection> by_id;
  for (auto& det : kept) by_id.emplace(*det.id, det);
  if (by_id.size() < 3) return {};
  std::vector<MarkerDetection> constituents;
  for (auto& [id, det] : by_id) constituents.push_back(det);
  try {
    return {bundle_multi(constituents, cam_)};
  } catch (const Error&) {
    return {};
  }
}

}  // namespace fidmark
