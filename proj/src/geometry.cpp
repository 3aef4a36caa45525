#include "fidmark/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "fidmark/error.hpp"

namespace fidmark {

namespace {

constexpr double kPi = std::numbers::pi;

}  // namespace

Quaternion::Quaternion(double w, double x, double y, double z) : q_(w, x, y, z) {
  const double norm = q_.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw Error("quaternion has zero or non-finite norm");
  }
  q_.coeffs() /= norm;
}

Quaternion::Quaternion(const Eigen::Quaterniond& q) : Quaternion(q.w(), q.x(), q.y(), q.z()) {}

Quaternion Quaternion::from_rotation(const Mat3& rotation) {
  return Quaternion(Eigen::Quaterniond(rotation));
}

Quaternion Quaternion::from_axis_angle(const Vec3& axis, double angle) {
  const double n = axis.norm();
  if (!(n > 0.0)) throw Error("rotation axis has zero length");
  return Quaternion(Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis / n)));
}

double geodesic_distance(const Quaternion& q1, const Quaternion& q2, GeodesicConvention convention) {
  // 2*acos(|dot|), evaluated as the angle between the two 4-vectors with
  // atan2 so that it stays accurate near zero.
  const double s = q1.dot(q2) < 0.0 ? -1.0 : 1.0;
  const Eigen::Vector4d a(q1.w(), q1.x(), q1.y(), q1.z());
  const Eigen::Vector4d b(s * q2.w(), s * q2.x(), s * q2.y(), s * q2.z());
  const double half = 2.0 * std::atan2((a - b).norm(), (a + b).norm());
  return convention == GeodesicConvention::kFullAngle ? 2.0 * half : half;
}

YawPitchRoll quaternion_to_ypr(const Quaternion& q) {
  const Mat3 r = q.rotation();
  YawPitchRoll out;
  const double cos_pitch = std::hypot(r(0, 0), r(1, 0));
  out.pitch = std::atan2(-r(2, 0), cos_pitch);
  if (cos_pitch < 1e-12) {
    // Gimbal lock: only yaw - roll (or yaw + roll) is observable.
    out.roll = 0.0;
    out.yaw = std::atan2(-r(0, 1), r(1, 1));
  } else {
    out.yaw = std::atan2(r(1, 0), r(0, 0));
    out.roll = std::atan2(r(2, 1), r(2, 2));
  }
  return out;
}

Quaternion ypr_to_quaternion(const YawPitchRoll& ypr) {
  const Eigen::Quaterniond q = Eigen::AngleAxisd(ypr.yaw, Vec3::UnitZ()) *
                               Eigen::AngleAxisd(ypr.pitch, Vec3::UnitY()) *
                               Eigen::AngleAxisd(ypr.roll, Vec3::UnitX());
  return Quaternion(q);
}

Pose Pose::inverse() const {
  Pose out;
  out.orientation = orientation.conjugate();
  out.position = -out.orientation.rotate(position);
  return out;
}

Pose Pose::operator*(const Pose& rhs) const {
  Pose out;
  out.orientation = orientation * rhs.orientation;
  out.position = orientation.rotate(rhs.position) + position;
  return out;
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw Error("camera focal lengths must be positive");
  if (width <= 0 || height <= 0) throw Error("camera image size must be positive");
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    throw Error("camera principal point lies outside the image");
  }
}

CameraIntrinsics CameraIntrinsics::from_horizontal_fov(int width, int height, double fov_rad) {
  CameraIntrinsics cam;
  cam.width = width;
  cam.height = height;
  cam.fx = cam.fy = 0.5 * width / std::tan(0.5 * fov_rad);
  cam.cx = 0.5 * width;
  cam.cy = 0.5 * height;
  cam.validate();
  return cam;
}

Vec2 distort_normalized(const Vec2& xy, const CameraIntrinsics& cam) {
  const double x = xy.x(), y = xy.y();
  const double r2 = x * x + y * y;
  const double radial = 1.0 + r2 * (cam.k1 + r2 * (cam.k2 + r2 * cam.k3));
  return {x * radial + 2.0 * cam.p1 * x * y + cam.p2 * (r2 + 2.0 * x * x),
          y * radial + cam.p1 * (r2 + 2.0 * y * y) + 2.0 * cam.p2 * x * y};
}

Vec2 project_point(const Vec3& p, const CameraIntrinsics& cam) {
  if (!(p.z() > 0.0)) throw Error("cannot project a point at or behind the camera plane");
  const Vec2 d = distort_normalized(Vec2(p.x() / p.z(), p.y() / p.z()), cam);
  return {cam.fx * d.x() + cam.cx, cam.fy * d.y() + cam.cy};
}

Vec3 undistort_pixel(const Vec2& uv, const CameraIntrinsics& cam) {
  const Vec2 target((uv.x() - cam.cx) / cam.fx, (uv.y() - cam.cy) / cam.fy);
  if (!cam.has_distortion()) return {target.x(), target.y(), 1.0};

  // Newton iteration on the forward distortion map.
  Vec2 xy = target;
  double residual = 0.0;
  for (int iter = 0; iter < 20; ++iter) {
    const Vec2 err = distort_normalized(xy, cam) - target;
    residual = err.norm();
    if (residual < 1e-14) break;
    const double x = xy.x(), y = xy.y();
    const double r2 = x * x + y * y;
    const double radial = 1.0 + r2 * (cam.k1 + r2 * (cam.k2 + r2 * cam.k3));
    const double dradial = 2.0 * cam.k1 + r2 * (4.0 * cam.k2 + 6.0 * cam.k3 * r2);
    Eigen::Matrix2d jac;
    jac(0, 0) = radial + dradial * x * x + 2.0 * cam.p1 * y + 6.0 * cam.p2 * x;
    jac(0, 1) = dradial * x * y + 2.0 * cam.p1 * x + 2.0 * cam.p2 * y;
    jac(1, 0) = jac(0, 1);
    jac(1, 1) = radial + dradial * y * y + 6.0 * cam.p1 * y + 2.0 * cam.p2 * x;
    const double det = jac.determinant();
    if (!(std::abs(det) > 1e-12)) break;
    xy -= jac.inverse() * err;
  }
  residual = (distort_normalized(xy, cam) - target).norm();
  if (!(residual < 1e-8)) {
    throw Error("undistortion did not converge (extreme distortion at pixel)");
  }
  // A root past the fold of the radial map is not a physical ray.
  const double r2 = xy.squaredNorm();
  if (1.0 + r2 * (3.0 * cam.k1 + r2 * (5.0 * cam.k2 + r2 * 7.0 * cam.k3)) <= 0.0) {
    throw Error("pixel lies beyond the fold of the distortion model");
  }
  return {xy.x(), xy.y(), 1.0};
}

Ellipse Ellipse::make(const Vec2& center, double axis_a, double axis_b, double angle) {
  Ellipse e;
  e.center = center;
  if (axis_b > axis_a) {
    std::swap(axis_a, axis_b);
    angle += 0.5 * kPi;
  }
  if (!(axis_b > 0.0)) throw Error("ellipse semi-axes must be positive");
  e.semi_major = axis_a;
  e.semi_minor = axis_b;
  angle = std::fmod(angle, kPi);
  if (angle < 0.0) angle += kPi;
  if (angle >= kPi) angle = 0.0;
  e.angle = angle;
  return e;
}

Vec2 Ellipse::point_at(double t) const {
  const double c = std::cos(angle), s = std::sin(angle);
  const double x = semi_major * std::cos(t), y = semi_minor * std::sin(t);
  return {center.x() + c * x - s * y, center.y() + s * x + c * y};
}

Plane fit_plane(std::span<const Vec3> points) {
  if (points.size() < 3) throw Error("plane fit needs at least 3 points");
  Vec3 centroid = Vec3::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());

  Mat3 cov = Mat3::Zero();
  for (const auto& p : points) {
    const Vec3 d = p - centroid;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(points.size());

  Eigen::SelfAdjointEigenSolver<Mat3> solver(cov);
  const Vec3 ev = solver.eigenvalues();  // ascending
  if (!(ev(2) > 0.0) || ev(1) <= 1e-10 * ev(2)) {
    throw Error("plane fit input is degenerate (collinear or coincident points)");
  }
  Vec3 normal = solver.eigenvectors().col(0).normalized();
  const bool flip = std::abs(normal.z()) > 1e-12 ? normal.z() > 0.0 : normal.dot(centroid) > 0.0;
  if (flip) normal = -normal;
  return Plane{normal, normal.dot(centroid)};
}

CirclePoseCandidates circle_pose_from_conic(const Mat3& conic, double diameter) {
  if (!(diameter > 0.0)) throw Error("circle diameter must be positive");
  Mat3 q = 0.5 * (conic + conic.transpose());
  Eigen::SelfAdjointEigenSolver<Mat3> solver(q);
  Vec3 ev = solver.eigenvalues();
  Mat3 vecs = solver.eigenvectors();
  const int positives = (ev.array() > 0.0).count();
  if (positives == 1) {
    q = -q;
    solver.compute(q);
    ev = solver.eigenvalues();
    vecs = solver.eigenvectors();
  }
  // Ascending: ev(0) = lambda3 < 0 < ev(1) = lambda2 <= ev(2) = lambda1.
  const double l3 = ev(0), l2 = ev(1), l1 = ev(2);
  if (!(l3 < 0.0 && l2 > 0.0)) throw Error("conic is not the image of a circle (wrong signature)");

  Vec3 e1 = vecs.col(2);
  Vec3 e3 = vecs.col(0);
  if (e3.z() < 0.0) e3 = -e3;

  const double spread = l1 - l3;
  const double s = std::sqrt(std::max(0.0, (l1 - l2) / spread));
  const double c = std::sqrt(std::max(0.0, (l2 - l3) / spread));
  const double scale = 0.5 * diameter / std::sqrt(-l1 * l3);

  CirclePoseCandidates out;
  out.cone_axis = e3;
  std::array<Vec3, 2> normals, centers;
  for (int k = 0; k < 2; ++k) {
    const double sigma = k == 0 ? 1.0 : -1.0;
    const Vec3 away = (sigma * s * e1 + c * e3).normalized();
    centers[k] = scale * (l3 * sigma * s * e1 + l1 * c * e3);
    normals[k] = -away;
  }
  // Candidate A is the one closer to fronto-parallel.
  int a = 0;
  if (-normals[1].z() > -normals[0].z() + 1e-12) a = 1;
  out.center_a = centers[a];
  out.normal_a = normals[a];
  out.center_b = centers[1 - a];
  out.normal_b = normals[1 - a];
  return out;
}

CirclePoseCandidates circle_pose_candidates(const Ellipse& ellipse, const CameraIntrinsics& cam,
                                            double diameter) {
  cam.validate();
  if (!(diameter > 0.0)) throw Error("circle diameter must be positive");
  if (!(ellipse.semi_minor > 0.0) || ellipse.semi_minor / ellipse.semi_major < 0.05) {
    throw Error("ellipse is degenerate (axis ratio below 0.05)");
  }

  // Sample the boundary, undistort, and fit a conic in normalized coordinates.
  constexpr int kSamples = 64;
  std::array<Vec2, kSamples> pts;
  Vec2 mean = Vec2::Zero();
  for (int i = 0; i < kSamples; ++i) {
    const Vec2 px = ellipse.point_at(2.0 * kPi * i / kSamples);
    if (px.x() < -0.5 || px.y() < -0.5 || px.x() > cam.width - 0.5 || px.y() > cam.height - 0.5) {
      throw Error("ellipse extends outside the image");
    }
    const Vec3 ray = undistort_pixel(px, cam);
    pts[i] = ray.head<2>();
    mean += pts[i];
  }
  mean /= kSamples;
  double rms = 0.0;
  for (const auto& p : pts) rms += (p - mean).squaredNorm();
  rms = std::sqrt(rms / kSamples);
  const double k = std::sqrt(2.0) / rms;

  Eigen::Matrix<double, kSamples, 6> design;
  for (int i = 0; i < kSamples; ++i) {
    const Vec2 p = (pts[i] - mean) * k;
    design.row(i) << p.x() * p.x(), p.x() * p.y(), p.y() * p.y(), p.x(), p.y(), 1.0;
  }
  Eigen::JacobiSVD<Eigen::Matrix<double, kSamples, 6>> svd(design, Eigen::ComputeFullV);
  const Eigen::Matrix<double, 6, 1> v = svd.matrixV().col(5);
  Mat3 local;
  local << v(0), 0.5 * v(1), 0.5 * v(3),
           0.5 * v(1), v(2), 0.5 * v(4),
           0.5 * v(3), 0.5 * v(4), v(5);
  Mat3 t;
  t << k, 0.0, -k * mean.x(),
       0.0, k, -k * mean.y(),
       0.0, 0.0, 1.0;
  return circle_pose_from_conic(t.transpose() * local * t, diameter);
}

Pose ambiguity_twin(const Pose& pose, const Vec3& axis) {
  const Quaternion flip_axis = Quaternion::from_axis_angle(axis, kPi);
  const Quaternion flip_normal = Quaternion::from_axis_angle(Vec3::UnitZ(), kPi);
  Pose out;
  out.position = flip_axis.rotate(pose.position);
  out.orientation = flip_axis * pose.orientation * flip_normal;
  return out;
}

double angle_between(const Vec3& a, const Vec3& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

}  // namespace fidmark
