#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "fidmark/detector.hpp"
#include "fidmark/error.hpp"

namespace fidmark {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double variance(const std::vector<double>& v) {
  if (v.empty()) return kInf;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return acc / static_cast<double>(v.size());
}

// Image position of a marker-plane point (polar, radius as a fraction of the outer radius).
std::optional<Vec2> marker_point(const Pose& pose, double radius, double rho, double angle,
                                 const CameraIntrinsics& cam) {
  const Vec3 p = pose.transform(Vec3(rho * radius * std::cos(angle), rho * radius * std::sin(angle), 0.0));
  if (!(p.z() > 0.0)) return std::nullopt;
  return project_point(p, cam);
}

void require_id(const MarkerDetection& det) {
  if (!det.id) throw Error("disambiguation needs a decoded marker id");
}

}  // namespace

double orig_score(const Pose& candidate, const GrayImage& image, const CameraIntrinsics& cam,
                  const DetectorParams& params, double threshold) {
  const int n = params.id_samples;
  const double radius = 0.5 * params.circle_diameter;
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const auto px = marker_point(candidate, radius, params.sampling_radius, 2.0 * std::numbers::pi * k / n, cam);
    if (!px || !image.contains(px->x(), px->y())) return kInf;
    bits[static_cast<std::size_t>(k)] = image.sample(px->x(), px->y()) >= threshold ? 1 : 0;
  }

  int start = -1;
  for (int k = 0; k < n; ++k) {
    if (bits[static_cast<std::size_t>(k)] != bits[static_cast<std::size_t>((k + n - 1) % n)]) {
      start = k;
      break;
    }
  }
  if (start < 0) return kInf;

  // Same-colour neighbouring teeth merge into one run; split runs back into
  // whole teeth before counting samples per tooth.
  const double tooth = static_cast<double>(n) / (2 * params.id_bits);
  std::vector<double> counts;
  int len = 0;
  for (int i = 0; i < n; ++i) {
    const int k = (start + i) % n;
    ++len;
    const bool last = i == n - 1 || bits[static_cast<std::size_t>((k + 1) % n)] != bits[static_cast<std::size_t>(k)];
    if (last) {
      const int m = std::max(1, static_cast<int>(std::lround(len / tooth)));
      for (int j = 0; j < m; ++j) counts.push_back(static_cast<double>(len) / m);
      len = 0;
    }
  }
  return variance(counts);
}

EdgeScore ellipse_score(const Pose& candidate, std::uint32_t id, const GrayImage& image, const CameraIntrinsics& cam,
                        const DetectorParams& params) {
  const ToothPattern pattern = encode_id(id, params.id_bits);
  const double radius = 0.5 * params.circle_diameter;
  const double h = params.edge_half_length;
  const int m = params.edge_samples;
  EdgeScore score;
  std::vector<double> fractions;
  std::vector<double> g(static_cast<std::size_t>(m));
  for (const ToothCell& cell : pattern.cells) {
    ++score.lines;
    const double angle = 0.5 * (cell.start + cell.end);
    // White teeth end at the outer ring, black teeth start at the inner disc.
    const double edge = cell.white ? params.geometry.teeth_outer : params.geometry.inner_white;
    bool inside = true;
    bool above = false, below = false;
    for (int j = 0; j < m && inside; ++j) {
      const double rho = edge - h + 2.0 * h * j / (m - 1);
      const auto px = marker_point(candidate, radius, rho, angle, cam);
      if (!px || !image.contains(px->x(), px->y())) {
        inside = false;
        break;
      }
      g[static_cast<std::size_t>(j)] = image.sample(px->x(), px->y());
    }
    if (!inside) continue;
    // The segment must actually cross from white to black.
    const double threshold = 0.5 * (*std::max_element(g.begin(), g.end()) + *std::min_element(g.begin(), g.end()));
    for (int j = 0; j < m; ++j) {
      above = above || g[static_cast<std::size_t>(j)] >= threshold;
      below = below || g[static_cast<std::size_t>(j)] < threshold;
    }
    if (!(above && below) || g.front() <= g.back()) continue;

    int best = 0;
    double best_diff = -1.0;
    std::vector<double> diff(static_cast<std::size_t>(m - 1));
    for (int j = 0; j + 1 < m; ++j) {
      diff[static_cast<std::size_t>(j)] = std::abs(g[static_cast<std::size_t>(j + 1)] - g[static_cast<std::size_t>(j)]);
      if (diff[static_cast<std::size_t>(j)] > best_diff) {
        best_diff = diff[static_cast<std::size_t>(j)];
        best = j;
      }
    }
    // Parabolic peak refinement between finite-difference neighbours.
    double offset = 0.0;
    if (best > 0 && best + 2 < m) {
      const double l = diff[static_cast<std::size_t>(best - 1)], c = diff[static_cast<std::size_t>(best)],
                   r = diff[static_cast<std::size_t>(best + 1)];
      const double denom = l - 2.0 * c + r;
      if (denom < 0.0) offset = std::clamp(0.5 * (l - r) / denom, -0.5, 0.5);
    }
    fractions.push_back((best + 0.5 + offset) / (m - 1));
    ++score.found;
  }
  score.variance = variance(fractions);
  return score;
}

void disambiguate_orig(MarkerDetection& det, const GrayImage& image, const CameraIntrinsics& cam,
                       const DetectorParams& params) {
  require_id(det);
  det.variance_a = orig_score(det.pose_a, image, cam, params, det.threshold);
  det.variance_b = orig_score(det.pose_b, image, cam, params, det.threshold);
  det.fallback = false;
  det.choose(det.variance_b < det.variance_a ? Solution::kB : Solution::kA);
  update_derived(det, cam);
}

void disambiguate_ellipse(MarkerDetection& det, const GrayImage& image, const CameraIntrinsics& cam,
                          const DetectorParams& params) {
  require_id(det);
  const EdgeScore a = ellipse_score(det.pose_a, *det.id, image, cam, params);
  const EdgeScore b = ellipse_score(det.pose_b, *det.id, image, cam, params);
  const bool a_ok = 2 * a.found > a.lines;
  const bool b_ok = 2 * b.found > b.lines;
  if (!a_ok && !b_ok) {
    disambiguate_orig(det, image, cam, params);
    det.fallback = true;
    return;
  }
  det.fallback = false;
  det.variance_a = a_ok ? a.variance : kInf;
  det.variance_b = b_ok ? b.variance : kInf;
  det.choose(det.variance_b < det.variance_a ? Solution::kB : Solution::kA);
  update_derived(det, cam);
}

}  // namespace fidmark
