#include <algorithm>
#include <vector>

#include "fidmark/detector.hpp"
#include "fidmark/error.hpp"

namespace fidmark {

MarkerDetection bundle_multi(const std::vector<MarkerDetection>& dets, const CameraIntrinsics& cam) {
  if (dets.size() < 3) throw Error("a bundle needs at least 3 detections");
  std::vector<Vec3> positions;
  Vec3 mean = Vec3::Zero();
  const MarkerDetection* yaw_source = &dets.front();
  for (const auto& d : dets) {
    if (!d.id) throw Error("bundle constituents need decoded ids");
    positions.push_back(d.pose.position);
    mean += d.pose.position;
    if (*d.id < *yaw_source->id) yaw_source = &d;
  }
  mean /= static_cast<double>(dets.size());
  const Plane plane = fit_plane(positions);

  const Vec3 n = plane.normal;
  Vec3 x = yaw_source->pose.orientation.rotation().col(0);
  x -= x.dot(n) * n;
  if (x.norm() < 1e-9) throw Error("lowest-id constituent has no in-plane yaw axis");
  x.normalize();
  Mat3 r;
  r.col(0) = x;
  r.col(1) = n.cross(x);
  r.col(2) = n;

  MarkerDetection out;
  out.id = yaw_source->id;
  out.frame = yaw_source->frame;
  out.timestamp = yaw_source->timestamp;
  out.threshold = yaw_source->threshold;
  out.pose_a = Pose{mean, Quaternion::from_rotation(r)};
  out.pose_b = out.pose_a;
  out.cone_axis = mean.normalized();
  out.choose(Solution::kA);
  out.ellipse = Ellipse::make(project_point(mean, cam), 1.0, 1.0, 0.0);
  update_derived(out, cam);
  return out;
}

}  // namespace fidmark
