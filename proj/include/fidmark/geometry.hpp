#pragma once

#include <span>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace fidmark {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Unit quaternion (Hamilton, scalar first). Every constructor normalizes.
class Quaternion {
 public:
  Quaternion() = default;
  Quaternion(double w, double x, double y, double z);
  explicit Quaternion(const Eigen::Quaterniond& q);

  static Quaternion from_rotation(const Mat3& rotation);
  static Quaternion from_axis_angle(const Vec3& axis, double angle);

  double w() const { return q_.w(); }
  double x() const { return q_.x(); }
  double y() const { return q_.y(); }
  double z() const { return q_.z(); }

  double dot(const Quaternion& other) const { return q_.dot(other.q_); }
  Mat3 rotation() const { return q_.toRotationMatrix(); }
  Vec3 rotate(const Vec3& v) const { return q_ * v; }
  Quaternion conjugate() const { return Quaternion(q_.conjugate()); }
  Quaternion operator-() const { return Quaternion(-w(), -x(), -y(), -z()); }
  Quaternion operator*(const Quaternion& rhs) const { return Quaternion(q_ * rhs.q_); }
  const Eigen::Quaterniond& eigen() const { return q_; }

 private:
  Eigen::Quaterniond q_ = Eigen::Quaterniond::Identity();
};

enum class GeodesicConvention {
  kFullAngle,  // 2*acos(|<q1,q2>|), range [0, pi]
  kHalfAngle,  // acos(|<q1,q2>|), range [0, pi/2]
};

/// Rotation angle separating two orientations; invariant under q -> -q.
double geodesic_distance(const Quaternion& q1, const Quaternion& q2,
                         GeodesicConvention convention = GeodesicConvention::kFullAngle);

struct YawPitchRoll {
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;
};

// Intrinsic Z-Y-X: R = Rz(yaw) * Ry(pitch) * Rx(roll).
YawPitchRoll quaternion_to_ypr(const Quaternion& q);
Quaternion ypr_to_quaternion(const YawPitchRoll& ypr);

/// Rigid transform. For detections: marker frame -> camera frame, position is
/// the marker center in camera coordinates.
struct Pose {
  Vec3 position = Vec3::Zero();
  Quaternion orientation;

  Vec3 transform(const Vec3& p) const { return orientation.rotate(p) + position; }
  Pose inverse() const;
  Pose operator*(const Pose& rhs) const;
};

/// Pinhole camera with 5-coefficient plumb-bob distortion.
struct CameraIntrinsics {
  double fx = 0.0, fy = 0.0;
  double cx = 0.0, cy = 0.0;
  double k1 = 0.0, k2 = 0.0, p1 = 0.0, p2 = 0.0, k3 = 0.0;
  int width = 0, height = 0;

  void validate() const;
  bool has_distortion() const { return k1 != 0.0 || k2 != 0.0 || p1 != 0.0 || p2 != 0.0 || k3 != 0.0; }

  // Square pixels, principal point at the image center.
  static CameraIntrinsics from_horizontal_fov(int width, int height, double fov_rad);
};

Vec2 distort_normalized(const Vec2& xy, const CameraIntrinsics& cam);
Vec2 project_point(const Vec3& p, const CameraIntrinsics& cam);
/// Inverse of project_point up to scale; returns the ray (x, y, 1).
Vec3 undistort_pixel(const Vec2& uv, const CameraIntrinsics& cam);

/// Image ellipse. Invariant: semi_major >= semi_minor > 0, angle in [0, pi).
struct Ellipse {
  Vec2 center = Vec2::Zero();
  double semi_major = 0.0;
  double semi_minor = 0.0;
  double angle = 0.0;

  static Ellipse make(const Vec2& center, double axis_a, double axis_b, double angle);
  Vec2 point_at(double t) const;
};

/// normal . p == offset for points on the plane; |normal| == 1.
struct Plane {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;

  double signed_distance(const Vec3& p) const { return normal.dot(p) - offset; }
};

/// Total least squares plane, normal oriented toward the camera (normal.z < 0).
Plane fit_plane(std::span<const Vec3> points);

/// The two circle poses compatible with one imaged ellipse. Both candidates
/// lie on the same viewing cone; candidate B is candidate A rotated by pi
/// about the cone axis. Normals face the camera.
struct CirclePoseCandidates {
  Vec3 center_a = Vec3::Zero();
  Vec3 normal_a = -Vec3::UnitZ();
  Vec3 center_b = Vec3::Zero();
  Vec3 normal_b = -Vec3::UnitZ();
  Vec3 cone_axis = Vec3::UnitZ();  // unit, pointing into the scene
};

CirclePoseCandidates circle_pose_candidates(const Ellipse& ellipse, const CameraIntrinsics& cam,
                                            double diameter);

/// Same, from a conic x^T Q x = 0 in normalized camera coordinates.
CirclePoseCandidates circle_pose_from_conic(const Mat3& conic, double diameter);

/// Ambiguity twin of a circle pose: rotate the marker by pi about `axis`
/// (through the camera center) and by pi about its own normal. Keeps the up
/// component of the position target and negates east and north.
Pose ambiguity_twin(const Pose& pose, const Vec3& axis);

double angle_between(const Vec3& a, const Vec3& b);

}  // namespace fidmark
