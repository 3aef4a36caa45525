#include "fidmark/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "fidmark/detector.hpp"
#include "fidmark/error.hpp"

namespace fidmark {

namespace {

constexpr double kPi = std::numbers::pi;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t frame) {
  // splitmix64 finalizer over (seed, frame)
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (frame + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

Vec3 view_direction(const Vec2& tilt) {
  const double theta = tilt.norm();
  const double phi = std::atan2(tilt.y(), tilt.x());
  return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

}  // namespace

void Scene::validate() const {
  if (markers.empty()) throw Error("scene has no markers");
  if (!(ambient >= 0.0 && ambient <= 1.0)) throw Error("ambient light must be in [0, 1]");
  for (const auto& m : markers) m.spec.validate();
  // Markers share the wall plane; their paper squares must not overlap.
  for (std::size_t i = 0; i < markers.size(); ++i) {
    for (std::size_t j = i + 1; j < markers.size(); ++j) {
      const Vec3 d = markers[i].pose.position - markers[j].pose.position;
      const double min_gap = 0.5 * paper_margin * (markers[i].spec.diameter + markers[j].spec.diameter);
      if (std::max(std::abs(d.x()), std::abs(d.y())) < min_gap) {
        throw Error("scene markers overlap");
      }
    }
  }
}

std::string to_string(TrajectoryKind kind) {
  switch (kind) {
    case TrajectoryKind::kOrbitEastWest: return "orbit-east-west";
    case TrajectoryKind::kOrbitNorthSouth: return "orbit-north-south";
    case TrajectoryKind::kInOut: return "in-out";
    case TrajectoryKind::kPanTilt: return "pan-tilt";
    case TrajectoryKind::kStatic: return "static";
  }
  return "static";
}

TrajectoryKind trajectory_kind_from_string(const std::string& s) {
  for (auto k : {TrajectoryKind::kOrbitEastWest, TrajectoryKind::kOrbitNorthSouth, TrajectoryKind::kInOut,
                 TrajectoryKind::kPanTilt, TrajectoryKind::kStatic}) {
    if (to_string(k) == s) return k;
  }
  throw Error("unknown trajectory kind: " + s);
}

int Trajectory::frame_count() const {
  return std::max(1, static_cast<int>(std::lround(duration_s * frame_rate_hz)));
}

void Trajectory::validate() const {
  if (!(duration_s > 0.0) || !(frame_rate_hz > 0.0)) throw Error("trajectory duration and frame rate must be positive");
  if (!(distance_m > 0.0) || !(distance_end_m > 0.0)) throw Error("trajectory distances must be positive");
}

Pose look_at(const Vec3& eye, const Vec3& target) {
  const Vec3 z = (target - eye).normalized();
  Vec3 down = -Vec3::UnitY();
  down -= down.dot(z) * z;
  if (down.norm() < 1e-9) {
    down = Vec3::UnitX() - Vec3::UnitX().dot(z) * z;
  }
  const Vec3 y = down.normalized();
  const Vec3 x = y.cross(z);
  Mat3 r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return Pose{eye, Quaternion::from_rotation(r)};
}

Pose Trajectory::camera_pose(int frame) const {
  const int n = frame_count();
  const double s = n > 1 ? static_cast<double>(frame) / (n - 1) : 0.0;
  const Vec2 base(tilt_rad * std::cos(azimuth_rad), tilt_rad * std::sin(azimuth_rad));
  // Orbits swing to one side first, then sweep through to the other.
  const double swing = -amplitude_rad * std::sin(1.5 * kPi * s);
  switch (kind) {
    case TrajectoryKind::kOrbitEastWest:
      return fidmark::look_at(look_at + distance_m * view_direction(base + Vec2(swing, 0.0)), look_at);
    case TrajectoryKind::kOrbitNorthSouth:
      return fidmark::look_at(look_at + distance_m * view_direction(base + Vec2(0.0, swing)), look_at);
    case TrajectoryKind::kInOut: {
      const double d = distance_m + (distance_end_m - distance_m) * s;
      return fidmark::look_at(look_at + d * view_direction(base), look_at);
    }
    case TrajectoryKind::kPanTilt: {
      const Vec3 eye = look_at + distance_m * view_direction(base);
      const double reach = distance_m * std::tan(amplitude_rad);
      const Vec3 target = look_at + Vec3(reach * std::sin(2.0 * kPi * s), 0.5 * reach * std::sin(4.0 * kPi * s), 0.0);
      return fidmark::look_at(eye, target);
    }
    case TrajectoryKind::kStatic:
      break;
  }
  return fidmark::look_at(look_at + distance_m * view_direction(base), look_at);
}

GroundTruthRecord ground_truth_for(const Scene& scene, const Pose& camera_pose, const CameraIntrinsics& cam,
                                   int frame, double timestamp) {
  GroundTruthRecord rec;
  rec.frame = frame;
  rec.timestamp = timestamp;
  const Pose world_to_camera = camera_pose.inverse();
  for (const auto& m : scene.markers) {
    GroundTruthMarker g;
    g.id = m.spec.id;
    g.pose = world_to_camera * m.pose;
    g.position_target = position_target(g.pose);
    g.pixel = project_point(g.pose.position, cam);
    g.normalized_pixel = normalized_pixel(g.pixel, cam);
    rec.markers.push_back(g);
  }
  return rec;
}

void check_markers_in_frame(const Scene& scene, const Trajectory& traj, const CameraIntrinsics& cam) {
  constexpr int kBoundary = 48;
  constexpr double kMargin = 2.0;
  for (int f = 0; f < traj.frame_count(); ++f) {
    const Pose world_to_camera = traj.camera_pose(f).inverse();
    for (const auto& m : scene.markers) {
      const Pose marker_to_camera = world_to_camera * m.pose;
      for (int k = 0; k < kBoundary; ++k) {
        const double a = 2.0 * kPi * k / kBoundary;
        const Vec3 p = marker_to_camera.transform(m.spec.radius() * Vec3(std::cos(a), std::sin(a), 0.0));
        bool inside = p.z() > 0.0;
        if (inside) {
          const Vec2 px = project_point(p, cam);
          inside = px.x() >= kMargin && px.y() >= kMargin && px.x() <= cam.width - 1 - kMargin &&
                   px.y() <= cam.height - 1 - kMargin;
        }
        if (!inside) {
          throw Error("marker " + std::to_string(m.spec.id) + " leaves the image at frame " + std::to_string(f));
        }
      }
    }
  }
}

Renderer::Renderer(const CameraIntrinsics& cam, int supersample) : cam_(cam), sub_(supersample) {
  cam_.validate();
  if (sub_ < 1) throw Error("supersample factor must be >= 1");
  ray_w_ = cam_.width * sub_;
  ray_h_ = cam_.height * sub_;
  ray_x_.resize(static_cast<std::size_t>(ray_w_) * ray_h_);
  ray_y_.resize(ray_x_.size());
  for (int sy = 0; sy < ray_h_; ++sy) {
    for (int sx = 0; sx < ray_w_; ++sx) {
      const double u = (sx + 0.5) / sub_ - 0.5;
      const double v = (sy + 0.5) / sub_ - 0.5;
      const Vec3 ray = undistort_pixel(Vec2(u, v), cam_);
      const auto idx = static_cast<std::size_t>(sy) * ray_w_ + sx;
      ray_x_[idx] = ray.x();
      ray_y_[idx] = ray.y();
    }
  }
}

GrayImage Renderer::render(const Scene& scene, const Pose& camera_pose, const RenderSettings& settings,
                           std::uint64_t frame_seed) const {
  const double scale = 255.0 * scene.ambient;
  const float wall = static_cast<float>(scale * scene.wall_reflectance);
  const float white = static_cast<float>(scale * scene.white_reflectance);
  const float black = static_cast<float>(scale * scene.black_reflectance);
  FloatImage img(cam_.width, cam_.height, wall);

  struct Placed {
    const SceneMarker* marker;
    ToothPattern pattern;
    Mat3 rot;  // marker -> camera
    Vec3 t;
    Vec3 normal;
    double plane_d;
    double half_side;
    int x0, y0, x1, y1;
  };
  std::vector<Placed> placed;
  const Pose world_to_camera = camera_pose.inverse();
  for (const auto& m : scene.markers) {
    Placed p{&m, encode_id(m.spec.id, m.spec.id_bits), {}, {}, {}, 0.0, 0.5 * scene.paper_margin * m.spec.diameter,
             0, 0, cam_.width - 1, cam_.height - 1};
    const Pose mc = world_to_camera * m.pose;
    p.rot = mc.orientation.rotation();
    p.t = mc.position;
    p.normal = p.rot.col(2);
    p.plane_d = p.normal.dot(p.t);

    // Image-space bounding box of the paper square.
    bool all_front = true;
    double minx = 1e18, miny = 1e18, maxx = -1e18, maxy = -1e18;
    constexpr int kEdge = 16;
    for (int e = 0; e < 4 && all_front; ++e) {
      for (int k = 0; k <= kEdge; ++k) {
        const double s = -1.0 + 2.0 * k / kEdge;
        const Vec2 local = e == 0 ? Vec2(s, -1.0) : e == 1 ? Vec2(1.0, s) : e == 2 ? Vec2(-s, 1.0) : Vec2(-1.0, -s);
        const Vec3 pc = mc.transform(Vec3(local.x() * p.half_side, local.y() * p.half_side, 0.0));
        if (!(pc.z() > 1e-6)) {
          all_front = false;
          break;
        }
        const Vec2 px = project_point(pc, cam_);
        minx = std::min(minx, px.x());
        maxx = std::max(maxx, px.x());
        miny = std::min(miny, px.y());
        maxy = std::max(maxy, px.y());
      }
    }
    if (all_front) {
      if (maxx < -2.0 || maxy < -2.0 || minx > cam_.width + 1.0 || miny > cam_.height + 1.0) continue;
      p.x0 = std::max(0, static_cast<int>(std::floor(minx)) - 2);
      p.y0 = std::max(0, static_cast<int>(std::floor(miny)) - 2);
      p.x1 = std::min(cam_.width - 1, static_cast<int>(std::ceil(maxx)) + 2);
      p.y1 = std::min(cam_.height - 1, static_cast<int>(std::ceil(maxy)) + 2);
    }
    placed.push_back(std::move(p));
  }

  if (!placed.empty()) {
    int bx0 = cam_.width, by0 = cam_.height, bx1 = -1, by1 = -1;
    for (const auto& p : placed) {
      bx0 = std::min(bx0, p.x0);
      by0 = std::min(by0, p.y0);
      bx1 = std::max(bx1, p.x1);
      by1 = std::max(by1, p.y1);
    }
    const float inv_samples = 1.0f / static_cast<float>(sub_ * sub_);
    std::vector<const Placed*> active;
    for (int py = by0; py <= by1; ++py) {
      for (int px = bx0; px <= bx1; ++px) {
        active.clear();
        for (const auto& p : placed) {
          if (px >= p.x0 && px <= p.x1 && py >= p.y0 && py <= p.y1) active.push_back(&p);
        }
        if (active.empty()) continue;
        float acc = 0.0f;
        for (int sy = 0; sy < sub_; ++sy) {
          for (int sx = 0; sx < sub_; ++sx) {
            const auto idx = static_cast<std::size_t>(py * sub_ + sy) * ray_w_ + (px * sub_ + sx);
            const Vec3 ray(ray_x_[idx], ray_y_[idx], 1.0);
            float value = wall;
            double nearest = 1e18;
            for (const Placed* p : active) {
              const double denom = p->normal.dot(ray);
              if (std::abs(denom) < 1e-12) continue;
              const double lambda = p->plane_d / denom;
              if (!(lambda > 0.0) || lambda >= nearest) continue;
              const Vec3 local = p->rot.transpose() * (lambda * ray - p->t);
              const Surface s = marker_surface(p->marker->spec, p->pattern, local.x(), local.y(), p->half_side);
              if (s == Surface::kOutside) continue;
              nearest = lambda;
              value = s == Surface::kWhite ? white : black;
            }
            acc += value;
          }
        }
        img.at(px, py) = acc * inv_samples;
      }
    }
  }

  gaussian_blur(img, settings.blur_sigma);
  if (settings.noise_sigma > 0.0) {
    std::mt19937_64 rng(frame_seed);
    std::normal_distribution<float> noise(0.0f, static_cast<float>(settings.noise_sigma));
    for (auto& v : img.pixels) v += noise(rng);
  }
  return quantize(img);
}

RenderedSequence render_sequence(const Scene& scene, const Trajectory& traj, const CameraIntrinsics& cam,
                                 const RenderSettings& settings) {
  scene.validate();
  traj.validate();
  cam.validate();
  check_markers_in_frame(scene, traj, cam);

  RenderedSequence seq;
  seq.camera = cam;
  seq.frame_rate_hz = traj.frame_rate_hz;
  seq.seed = settings.seed;
  const Renderer renderer(cam, settings.supersample);
  const int n = traj.frame_count();
  seq.frames.reserve(static_cast<std::size_t>(n));
  seq.truth.reserve(static_cast<std::size_t>(n));
  for (int f = 0; f < n; ++f) {
    const Pose cam_pose = traj.camera_pose(f);
    const double t = f / traj.frame_rate_hz;
    seq.frames.push_back(renderer.render(scene, cam_pose, settings, mix_seed(settings.seed, static_cast<std::uint64_t>(f))));
    seq.truth.push_back(ground_truth_for(scene, cam_pose, cam, f, t));
  }
  return seq;
}

}  // namespace fidmark
