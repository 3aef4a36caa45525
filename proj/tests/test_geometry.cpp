#include <gtest/gtest.h>

#include <Eigen/Geometry>
#include <Eigen/SVD>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "fidmark/error.hpp"
#include "fidmark/geometry.hpp"
#include "support.hpp"

using namespace fidmark;
using fidmark::testing::random_quaternion;
using fidmark::testing::random_unit;

constexpr double kPi = std::numbers::pi;

TEST(Quaternion, ConstructorsNormalize) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const Quaternion q = random_quaternion(rng);
    EXPECT_NEAR(q.eigen().norm(), 1.0, 1e-9);
  }
  EXPECT_NEAR(Quaternion(2.0, 0.0, 0.0, 0.0).w(), 1.0, 1e-12);
  EXPECT_NEAR(Quaternion::from_axis_angle(Vec3(0, 0, 3), 0.5).eigen().norm(), 1.0, 1e-12);
}

TEST(Geodesic, AnchorValues) {
  std::mt19937_64 rng(2);
  const Quaternion q = random_quaternion(rng);
  EXPECT_NEAR(geodesic_distance(q, q), 0.0, 1e-7);
  EXPECT_NEAR(geodesic_distance(q, -q), 0.0, 1e-7);
  const Quaternion rz90 = Quaternion::from_axis_angle(Vec3::UnitZ(), kPi / 2);
  EXPECT_NEAR(geodesic_distance(Quaternion(), rz90), kPi / 2, 1e-12);
  EXPECT_NEAR(geodesic_distance(Quaternion(), rz90, GeodesicConvention::kHalfAngle), kPi / 4, 1e-12);
  const Quaternion flip = Quaternion::from_axis_angle(Vec3::UnitX(), kPi);
  EXPECT_NEAR(geodesic_distance(Quaternion(), flip), kPi, 1e-12);
}

TEST(Geodesic, MetricPropertiesOnRandomTriples) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    const Quaternion a = random_quaternion(rng), b = random_quaternion(rng), c = random_quaternion(rng);
    const double ab = geodesic_distance(a, b), ba = geodesic_distance(b, a);
    EXPECT_NEAR(ab, ba, 1e-9);
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, kPi + 1e-12);
    EXPECT_LE(ab, geodesic_distance(a, c) + geodesic_distance(c, b) + 1e-9);
  }
}

TEST(Geodesic, InvariantUnderLeftMultiplication) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 1000; ++i) {
    const Quaternion a = random_quaternion(rng), b = random_quaternion(rng), g = random_quaternion(rng);
    EXPECT_NEAR(geodesic_distance(g * a, g * b), geodesic_distance(a, b), 1e-7);
  }
}

TEST(Geodesic, MatchesRotationAngleOfRelativeRotation) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const Quaternion a = random_quaternion(rng), b = random_quaternion(rng);
    const Mat3 rel = a.rotation().transpose() * b.rotation();
    const double angle = std::acos(std::clamp((rel.trace() - 1.0) / 2.0, -1.0, 1.0));
    EXPECT_NEAR(geodesic_distance(a, b), angle, 1e-6);
  }
}

TEST(YawPitchRoll, AnchorValues) {
  const auto id = quaternion_to_ypr(Quaternion());
  EXPECT_NEAR(id.yaw, 0.0, 1e-12);
  EXPECT_NEAR(id.pitch, 0.0, 1e-12);
  EXPECT_NEAR(id.roll, 0.0, 1e-12);
  const auto z = quaternion_to_ypr(Quaternion::from_axis_angle(Vec3::UnitZ(), kPi / 2));
  EXPECT_NEAR(z.yaw, kPi / 2, 1e-12);
  EXPECT_NEAR(z.pitch, 0.0, 1e-12);
  EXPECT_NEAR(z.roll, 0.0, 1e-12);
}

TEST(YawPitchRoll, MatchesIntrinsicZYXComposition) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> yaw(-kPi, kPi), pitch(-1.5, 1.5), roll(-kPi, kPi);
  for (int i = 0; i < 200; ++i) {
    const YawPitchRoll a{yaw(rng), pitch(rng), roll(rng)};
    const Mat3 expected = (Eigen::AngleAxisd(a.yaw, Vec3::UnitZ()) * Eigen::AngleAxisd(a.pitch, Vec3::UnitY()) *
                           Eigen::AngleAxisd(a.roll, Vec3::UnitX()))
                              .toRotationMatrix();
    EXPECT_LT((ypr_to_quaternion(a).rotation() - expected).norm(), 1e-12);
  }
}

TEST(YawPitchRoll, RoundTripsOnThousandRandomQuaternions) {
  std::mt19937_64 rng(7);
  int checked = 0;
  while (checked < 1000) {
    const Quaternion q = random_quaternion(rng);
    const YawPitchRoll a = quaternion_to_ypr(q);
    if (std::abs(a.pitch) >= kPi / 2 - 1e-3) continue;
    ++checked;
    EXPECT_NEAR(geodesic_distance(ypr_to_quaternion(a), q), 0.0, 1e-7);
    const YawPitchRoll b = quaternion_to_ypr(ypr_to_quaternion(a));
    EXPECT_NEAR(b.yaw, a.yaw, 1e-9);
    EXPECT_NEAR(b.pitch, a.pitch, 1e-9);
    EXPECT_NEAR(b.roll, a.roll, 1e-9);
  }
}

TEST(YawPitchRoll, GimbalLockPutsFreeAngleInYaw) {
  const Quaternion q = ypr_to_quaternion({0.4, kPi / 2, 0.3});
  const YawPitchRoll a = quaternion_to_ypr(q);
  EXPECT_NEAR(a.roll, 0.0, 1e-12);
  EXPECT_NEAR(a.pitch, kPi / 2, 1e-6);
  EXPECT_LT((ypr_to_quaternion(a).rotation() - q.rotation()).norm(), 1e-6);
}

TEST(Pose, InverseAndComposition) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 50; ++i) {
    const Pose p{Vec3(0.3 * i, -1.0, 2.0), random_quaternion(rng)};
    const Pose id = p * p.inverse();
    EXPECT_LT(id.position.norm(), 1e-12);
    EXPECT_NEAR(geodesic_distance(id.orientation, Quaternion()), 0.0, 1e-7);
    const Vec3 x(0.1, 0.2, 0.3);
    EXPECT_LT((p.inverse().transform(p.transform(x)) - x).norm(), 1e-12);
  }
}

namespace {

CameraIntrinsics plain_camera() {
  CameraIntrinsics cam;
  cam.fx = cam.fy = 500.0;
  cam.cx = 320.0;
  cam.cy = 240.0;
  cam.width = 640;
  cam.height = 480;
  return cam;
}

// Plumb-bob forward model, written out independently of the library.
Vec2 forward(const CameraIntrinsics& c, double x, double y) {
  const double r2 = x * x + y * y;
  const double radial = 1 + c.k1 * r2 + c.k2 * r2 * r2 + c.k3 * r2 * r2 * r2;
  const double xd = x * radial + 2 * c.p1 * x * y + c.p2 * (r2 + 2 * x * x);
  const double yd = y * radial + c.p1 * (r2 + 2 * y * y) + 2 * c.p2 * x * y;
  return {c.fx * xd + c.cx, c.fy * yd + c.cy};
}

// Inverse by coarse-to-fine grid search over normalized coordinates.
Vec2 grid_inverse(const CameraIntrinsics& c, const Vec2& uv) {
  Vec2 best((uv.x() - c.cx) / c.fx, (uv.y() - c.cy) / c.fy);
  double step = 0.05;
  for (int level = 0; level < 40; ++level) {
    Vec2 next = best;
    double best_err = (forward(c, best.x(), best.y()) - uv).norm();
    for (int i = -10; i <= 10; ++i) {
      for (int j = -10; j <= 10; ++j) {
        const Vec2 p = best + step * Vec2(i, j);
        // Stay on the branch where the radial map is still increasing.
        const double r2 = p.squaredNorm();
        if (1 + 3 * c.k1 * r2 + 5 * c.k2 * r2 * r2 + 7 * c.k3 * r2 * r2 * r2 <= 0) continue;
        const double e = (forward(c, p.x(), p.y()) - uv).norm();
        if (e < best_err) {
          best_err = e;
          next = p;
        }
      }
    }
    best = next;
    step *= 0.3;
  }
  return best;
}

}  // namespace

TEST(Camera, ProjectAnchors) {
  CameraIntrinsics cam = plain_camera();
  const Vec2 c = project_point(Vec3(0, 0, 1), cam);
  EXPECT_NEAR(c.x(), 320.0, 1e-12);
  EXPECT_NEAR(c.y(), 240.0, 1e-12);
  EXPECT_NEAR(project_point(Vec3(0.1, 0, 1), cam).x(), 370.0, 1e-12);
  cam.k1 = -0.3;
  const Vec2 c2 = project_point(Vec3(0, 0, 4), cam);
  EXPECT_NEAR(c2.x(), 320.0, 1e-12);
  EXPECT_THROW(project_point(Vec3(0, 0, 0), cam), Error);
  EXPECT_THROW(project_point(Vec3(0, 0, -1), cam), Error);
}

TEST(Camera, UndistortAnchors) {
  CameraIntrinsics cam = plain_camera();
  const Vec3 r0 = undistort_pixel(Vec2(320, 240), cam);
  EXPECT_NEAR(r0.x(), 0.0, 1e-12);
  EXPECT_NEAR(r0.y(), 0.0, 1e-12);
  EXPECT_NEAR(r0.z(), 1.0, 1e-12);
  const Vec3 r1 = undistort_pixel(Vec2(320 + 500, 240), cam);
  EXPECT_NEAR(r1.x(), 1.0, 1e-12);
  EXPECT_NEAR(r1.y(), 0.0, 1e-12);
}

TEST(Camera, UndistortMatchesGridSearchInversion) {
  CameraIntrinsics cam = plain_camera();
  cam.k1 = -0.3;
  for (const Vec2& uv : {Vec2(600, 50), Vec2(400, 300), Vec2(100, 400), Vec2(321, 239), Vec2(60, 240)}) {
    const Vec3 ray = undistort_pixel(uv, cam);
    const Vec2 oracle = grid_inverse(cam, uv);
    EXPECT_NEAR(ray.x(), oracle.x(), 1e-6);
    EXPECT_NEAR(ray.y(), oracle.y(), 1e-6);
  }
  // Beyond the fold of r (1 - 0.3 r^2) only the mirrored branch remains.
  EXPECT_THROW(undistort_pixel(Vec2(10, 15), cam), Error);
}

TEST(Camera, ProjectUndistortRoundTripOnGrid) {
  std::vector<CameraIntrinsics> profiles(3, plain_camera());
  profiles[0].k1 = -0.3;
  profiles[0].k2 = 0.1;
  profiles[1].k1 = 0.15;
  profiles[1].p1 = 0.002;
  profiles[1].p2 = -0.003;
  profiles[2].k1 = -0.28;
  profiles[2].k2 = 0.08;
  profiles[2].p1 = 0.001;
  profiles[2].p2 = 0.001;
  profiles[2].k3 = -0.01;
  for (const auto& cam : profiles) {
    for (int i = 0; i < 20; ++i) {
      for (int j = 0; j < 20; ++j) {
        const Vec2 uv(5.0 + i * 630.0 / 19.0, 5.0 + j * 470.0 / 19.0);
        const Vec3 ray = undistort_pixel(uv, cam);
        EXPECT_LT((project_point(ray, cam) - uv).norm(), 1e-6);
        EXPECT_LT((forward(cam, ray.x(), ray.y()) - uv).norm(), 1e-6);
      }
    }
  }
}

TEST(Camera, UndistortRejectsUnreachablePixels) {
  CameraIntrinsics cam = plain_camera();
  cam.k1 = -1.0;  // the forward map folds back beyond r = 1/sqrt(3)
  EXPECT_THROW(undistort_pixel(Vec2(320 + 500, 240), cam), Error);
}

TEST(Camera, ValidateAndFov) {
  CameraIntrinsics cam = plain_camera();
  EXPECT_NO_THROW(cam.validate());
  cam.fx = 0;
  EXPECT_THROW(cam.validate(), Error);
  cam = plain_camera();
  cam.cx = 640;
  EXPECT_THROW(cam.validate(), Error);
  const auto fov = CameraIntrinsics::from_horizontal_fov(640, 480, 77.0 * kPi / 180.0);
  EXPECT_NEAR(2.0 * std::atan(320.0 / fov.fx), 77.0 * kPi / 180.0, 1e-12);
  EXPECT_NEAR(fov.fx, 402.6, 0.5);
}

TEST(Ellipse, MakeNormalizes) {
  const Ellipse e = Ellipse::make(Vec2(1, 2), 3.0, 5.0, 0.2);
  EXPECT_DOUBLE_EQ(e.semi_major, 5.0);
  EXPECT_DOUBLE_EQ(e.semi_minor, 3.0);
  EXPECT_NEAR(e.angle, 0.2 + kPi / 2, 1e-12);
  const Ellipse f = Ellipse::make(Vec2(0, 0), 5.0, 3.0, -0.5);
  EXPECT_GE(f.angle, 0.0);
  EXPECT_LT(f.angle, kPi);
  EXPECT_NEAR(f.angle, kPi - 0.5, 1e-12);
  EXPECT_THROW(Ellipse::make(Vec2(0, 0), 0.0, 1.0, 0.0), Error);
}

TEST(PlaneFit, ExactPlanes) {
  const std::vector<Vec3> three{{0, 0, 1}, {1, 0, 1}, {0, 1, 1}};
  const Plane p = fit_plane(three);
  EXPECT_LT((p.normal - Vec3(0, 0, -1)).norm(), 1e-9);
  EXPECT_NEAR(p.offset, -1.0, 1e-9);
  const std::vector<Vec3> four{{0, 0, 2}, {1, 0, 2}, {0, 1, 2}, {1, 1, 2}};
  const Plane q = fit_plane(four);
  EXPECT_LT((q.normal - Vec3(0, 0, -1)).norm(), 1e-9);
  EXPECT_NEAR(q.offset, -2.0, 1e-9);
  EXPECT_NEAR(q.normal.norm(), 1.0, 1e-9);
}

TEST(PlaneFit, Degenerate) {
  const std::vector<Vec3> two{{0, 0, 1}, {1, 0, 1}};
  EXPECT_THROW(fit_plane(two), Error);
  const std::vector<Vec3> line{{0, 0, 1}, {1, 0, 1}, {2, 0, 1}, {3, 0, 1}};
  EXPECT_THROW(fit_plane(line), Error);
  const std::vector<Vec3> same{{1, 1, 1}, {1, 1, 1}, {1, 1, 1}};
  EXPECT_THROW(fit_plane(same), Error);
}

TEST(PlaneFit, MonteCarloNoisyPlane) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> noise(0.0, 1e-3);
  std::uniform_real_distribution<double> uni(-0.5, 0.5);
  for (int trial = 0; trial < 20; ++trial) {
    Vec3 n = random_unit(rng);
    if (n.z() > 0) n = -n;
    if (n.z() > -0.2) continue;
    const Vec3 origin(0.1, -0.2, 2.0);
    const Vec3 u = n.unitOrthogonal(), v = n.cross(u);
    std::vector<Vec3> pts;
    for (int i = 0; i < 100; ++i) pts.push_back(origin + uni(rng) * u + uni(rng) * v + noise(rng) * n);
    const Plane p = fit_plane(pts);
    EXPECT_LT(fidmark::testing::deg(angle_between(p.normal, n)), 0.5);
    EXPECT_LT(p.normal.z(), 0.0);
  }
}

TEST(PlaneFit, ResidualNotBeatenByRandomPlanes) {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Vec3> pts;
  for (int i = 0; i < 30; ++i) pts.push_back(Vec3(g(rng), g(rng), 3.0 + 0.2 * g(rng) + 0.3 * g(rng)));
  const auto residual = [&](const Vec3& n, double off) {
    double s = 0;
    for (const auto& p : pts) s += std::pow(n.dot(p) - off, 2);
    return s;
  };
  const Plane best = fit_plane(pts);
  const double r_best = residual(best.normal, best.offset);
  Vec3 centroid = Vec3::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  for (int i = 0; i < 10000; ++i) {
    const Vec3 n = random_unit(rng);
    // Random offsets too; the centroid offset is the best one for a given normal.
    const double off = n.dot(centroid) + 0.1 * g(rng);
    EXPECT_LE(r_best, residual(n, off) + 1e-9);
  }
}

namespace {

// Conic through projected circle points, by SVD on the design matrix.
Mat3 conic_of_circle(const Vec3& center, const Vec3& normal, double radius) {
  const Vec3 u = normal.unitOrthogonal(), v = normal.cross(u);
  Eigen::MatrixXd a(36, 6);
  for (int k = 0; k < 36; ++k) {
    const double t = 2 * kPi * k / 36;
    const Vec3 p = center + radius * (std::cos(t) * u + std::sin(t) * v);
    const double x = p.x() / p.z(), y = p.y() / p.z();
    a.row(k) << x * x, x * y, y * y, x, y, 1.0;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd c = svd.matrixV().col(5);
  Mat3 q;
  q << c(0), c(1) / 2, c(3) / 2, c(1) / 2, c(2), c(4) / 2, c(3) / 2, c(4) / 2, c(5);
  return q;
}

}  // namespace

TEST(CirclePose, RecoversSyntheticCircle) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> off(-0.6, 0.6), dist(1.0, 3.0), tilt(0.05, 1.0), az(0, 2 * kPi);
  for (int i = 0; i < 200; ++i) {
    const Vec3 center(off(rng), off(rng), dist(rng));
    const double t = tilt(rng), a = az(rng);
    // Tilt the normal away from the line of sight.
    const Vec3 los = -center.normalized();
    const Vec3 side = los.unitOrthogonal();
    const Vec3 n = (Eigen::AngleAxisd(a, los) * (std::cos(t) * los + std::sin(t) * side)).normalized();
    const auto cand = circle_pose_from_conic(conic_of_circle(center, n, 0.15), 0.3);

    const double ea = angle_between(cand.normal_a, n), eb = angle_between(cand.normal_b, n);
    const bool a_true = ea < eb;
    EXPECT_LT(std::min(ea, eb), 1e-6);
    EXPECT_LT(((a_true ? cand.center_a : cand.center_b) - center).norm(), 1e-6 * center.norm());
    // Both candidates face the camera and sit on the same cone.
    EXPECT_LT(cand.normal_a.dot(cand.center_a), 0.0);
    EXPECT_LT(cand.normal_b.dot(cand.center_b), 0.0);
    // Bisector of the normals is the cone axis.
    const Vec3 bis = (cand.normal_a + cand.normal_b).normalized();
    EXPECT_LT(std::min((bis - cand.cone_axis).norm(), (bis + cand.cone_axis).norm()), 1e-6);
    // A is the normal nearer the optical axis.
    EXPECT_LE(angle_between(-cand.normal_a, Vec3::UnitZ()), angle_between(-cand.normal_b, Vec3::UnitZ()) + 1e-9);
  }
}

TEST(CirclePose, FrontalCircleHasCoincidentNormals) {
  const auto cand = circle_pose_from_conic(conic_of_circle(Vec3(0, 0, 2), Vec3(0, 0, -1), 0.15), 0.3);
  EXPECT_LT((cand.center_a - Vec3(0, 0, 2)).norm(), 1e-6);
  EXPECT_LT(angle_between(cand.normal_a, Vec3(0, 0, -1)), 1e-6);
  EXPECT_LT(angle_between(cand.normal_b, Vec3(0, 0, -1)), 1e-6);
}

TEST(CirclePose, FromImageEllipseAndDegenerateRejection) {
  const CameraIntrinsics cam = plain_camera();
  // Frontal circle of radius 0.15 at 2 m: image radius fx * 0.15 / 2.
  const Ellipse e = Ellipse::make(Vec2(320, 240), 37.5, 37.5, 0.0);
  const auto cand = circle_pose_candidates(e, cam, 0.3);
  EXPECT_LT((cand.center_a - Vec3(0, 0, 2)).norm(), 0.02);
  EXPECT_LT(angle_between(cand.normal_a, Vec3(0, 0, -1)), 1e-6);
  EXPECT_THROW(circle_pose_candidates(Ellipse::make(Vec2(320, 240), 40.0, 1.0, 0.0), cam, 0.3), Error);
  EXPECT_THROW(circle_pose_candidates(e, cam, 0.0), Error);
}

TEST(AmbiguityTwin, NegatesEastNorthAndKeepsUp) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 200; ++i) {
    const Pose p{Vec3(0.3, -0.2, 2.0), random_quaternion(rng)};
    const Vec3 axis = p.position.normalized();
    const Pose t = ambiguity_twin(p, axis);
    const Vec3 a = p.orientation.conjugate().rotate(p.position);
    const Vec3 b = t.orientation.conjugate().rotate(t.position);
    EXPECT_NEAR(b.x(), -a.x(), 1e-9);
    EXPECT_NEAR(b.y(), -a.y(), 1e-9);
    EXPECT_NEAR(b.z(), a.z(), 1e-9);
    // Twice is identity.
    const Pose back = ambiguity_twin(t, axis);
    EXPECT_LT((back.position - p.position).norm(), 1e-9);
    EXPECT_NEAR(geodesic_distance(back.orientation, p.orientation), 0.0, 1e-6);
  }
}
