#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "fidmark/detector.hpp"
#include "fidmark/error.hpp"

namespace fidmark {

namespace {

struct Window {
  int x0, y0, x1, y1;
  bool contains(int x, int y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
};

struct Moments {
  double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0, sg = 0;
  int darkest_x = 0, darkest_y = 0;
  double darkest = 256.0;

  void add(int x, int y, double g) {
    if (g < darkest) {
      darkest = g;
      darkest_x = x;
      darkest_y = y;
    }
    n += 1;
    sx += x;
    sy += y;
    sxx += static_cast<double>(x) * x;
    sxy += static_cast<double>(x) * y;
    syy += static_cast<double>(y) * y;
    sg += g;
  }
  void add(const Moments& o) {
    n += o.n;
    sx += o.sx;
    sy += o.sy;
    sxx += o.sxx;
    sxy += o.sxy;
    syy += o.syy;
    sg += o.sg;
  }
  Vec2 centroid() const { return {sx / n, sy / n}; }
  Eigen::Matrix2d covariance() const {
    const Vec2 c = centroid();
    Eigen::Matrix2d m;
    m(0, 0) = sxx / n - c.x() * c.x();
    m(0, 1) = m(1, 0) = sxy / n - c.x() * c.y();
    m(1, 1) = syy / n - c.y() * c.y();
    return m;
  }
};

// Flood fill over pixels where pred holds, 4-connected, inside the window.
// Visited pixels get `label` in labels. Returns false if the fill touched the
// window border.
template <typename Pred>
bool flood(const GrayImage& img, int sx, int sy, const Window& win, Pred pred, std::vector<int>& labels, int label,
           std::vector<int>& stack, Segment& seg, Moments& mom) {
  const int w = img.width();
  bool enclosed = true;
  seg.min_x = seg.max_x = sx;
  seg.min_y = seg.max_y = sy;
  stack.clear();
  stack.push_back(sy * w + sx);
  labels[static_cast<std::size_t>(sy) * w + sx] = label;
  while (!stack.empty()) {
    const int idx = stack.back();
    stack.pop_back();
    const int x = idx % w, y = idx / w;
    mom.add(x, y, img.at(x, y));
    seg.min_x = std::min(seg.min_x, x);
    seg.max_x = std::max(seg.max_x, x);
    seg.min_y = std::min(seg.min_y, y);
    seg.max_y = std::max(seg.max_y, y);
    if (x == win.x0 || x == win.x1 || y == win.y0 || y == win.y1) enclosed = false;
    constexpr int dx[4] = {1, -1, 0, 0};
    constexpr int dy[4] = {0, 0, 1, -1};
    for (int k = 0; k < 4; ++k) {
      const int nx = x + dx[k], ny = y + dy[k];
      if (!win.contains(nx, ny)) continue;
      const auto nidx = static_cast<std::size_t>(ny) * w + nx;
      if (labels[nidx] == label || !pred(img.at(nx, ny))) continue;
      labels[nidx] = label;
      stack.push_back(static_cast<int>(nidx));
    }
  }
  seg.size = static_cast<int>(mom.n);
  seg.centroid = mom.centroid();
  const Eigen::Matrix2d cov = mom.covariance();
  seg.mxx = cov(0, 0);
  seg.mxy = cov(0, 1);
  seg.myy = cov(1, 1);
  seg.mean_gray = mom.sg / mom.n;
  return enclosed;
}

Ellipse ellipse_from_moments(const Moments& mom) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> solver(mom.covariance());
  // Each pixel is a unit square, not a point: add its own variance.
  const double l_small = std::max(solver.eigenvalues()(0), 0.0) + 1.0 / 12.0;
  const double l_big = std::max(solver.eigenvalues()(1), 0.0) + 1.0 / 12.0;
  const Vec2 major = solver.eigenvectors().col(1);
  return Ellipse::make(mom.centroid(), 2.0 * std::sqrt(l_big), 2.0 * std::sqrt(l_small),
                       std::atan2(major.y(), major.x()));
}

// Moments of the marker disc with fractional coverage near its outer edge:
// pixels within two pixels of the boundary are weighted by their gray level
// between the black ring and the surrounding paper.
Ellipse refine_ellipse(const GrayImage& img, const std::vector<int>& labels, int outer_label, int inner_label,
                       const Segment& outer, const Ellipse& coarse) {
  constexpr int kBand = 2, kPad = 4;
  const int w = img.width(), h = img.height();
  const int x0 = outer.min_x - kPad, y0 = outer.min_y - kPad, x1 = outer.max_x + kPad, y1 = outer.max_y + kPad;
  if (x0 < 0 || y0 < 0 || x1 >= w || y1 >= h) return coarse;
  const int lw = x1 - x0 + 1, lh = y1 - y0 + 1;
  auto in_disc = [&](int x, int y) {
    const int l = labels[static_cast<std::size_t>(y) * w + x];
    return l == outer_label || l == inner_label;
  };
  // Chebyshev distance to the other side of the boundary, capped at kPad.
  std::vector<int> dist(static_cast<std::size_t>(lw) * lh, kPad);
  for (int y = 0; y < lh; ++y) {
    for (int x = 0; x < lw; ++x) {
      const bool inside = in_disc(x0 + x, y0 + y);
      int best = kPad;
      for (int dy = -kPad + 1; dy < kPad && best > 1; ++dy) {
        for (int dx = -kPad + 1; dx < kPad; ++dx) {
          const int xx = x + dx, yy = y + dy;
          if (xx < 0 || yy < 0 || xx >= lw || yy >= lh) continue;
          if (in_disc(x0 + xx, y0 + yy) != inside) best = std::min(best, std::max(std::abs(dx), std::abs(dy)));
        }
      }
      dist[static_cast<std::size_t>(y) * lw + x] = best;
    }
  }
  double paper = 0.0, ink = 0.0;
  int n_paper = 0, n_ink = 0;
  for (int y = 0; y < lh; ++y) {
    for (int x = 0; x < lw; ++x) {
      const int d = dist[static_cast<std::size_t>(y) * lw + x];
      const int l = labels[static_cast<std::size_t>(y0 + y) * w + x0 + x];
      if (!in_disc(x0 + x, y0 + y) && d > kBand) {
        paper += img.at(x0 + x, y0 + y);
        ++n_paper;
      } else if (l == outer_label && d > kBand) {
        ink += img.at(x0 + x, y0 + y);
        ++n_ink;
      }
    }
  }
  if (n_paper == 0 || n_ink == 0) return coarse;
  paper /= n_paper;
  ink /= n_ink;
  if (paper - ink < 10.0) return coarse;

  double m = 0, mx = 0, my = 0, mxx = 0, mxy = 0, myy = 0;
  for (int y = 0; y < lh; ++y) {
    for (int x = 0; x < lw; ++x) {
      const int d = dist[static_cast<std::size_t>(y) * lw + x];
      const bool inside = in_disc(x0 + x, y0 + y);
      double wt = 0.0;
      if (d > kBand) {
        wt = inside ? 1.0 : 0.0;
      } else {
        wt = std::clamp((paper - img.at(x0 + x, y0 + y)) / (paper - ink), 0.0, 1.0);
      }
      if (wt == 0.0) continue;
      const double px = x0 + x, py = y0 + y;
      m += wt;
      mx += wt * px;
      my += wt * py;
      mxx += wt * px * px;
      mxy += wt * px * py;
      myy += wt * py * py;
    }
  }
  Moments mom;
  mom.n = m;
  mom.sx = mx;
  mom.sy = my;
  mom.sxx = mxx;
  mom.sxy = mxy;
  mom.syy = myy;
  mom.sg = 0.0;
  return ellipse_from_moments(mom);
}

}  // namespace

void DetectorParams::validate() const {
  if (id_bits < 1 || id_bits > 32) throw Error("id_bits must be in [1, 32]");
  if (id_samples < 4 * id_bits) throw Error("id_samples too small for id_bits");
  if (min_size < 1) throw Error("min_size must be positive");
  if (!(circle_diameter > 0.0)) throw Error("circle diameter must be positive");
  if (!(initial_circularity_tolerance > 0.0 && final_circularity_tolerance > 0.0 && area_ratio_tolerance > 0.0 &&
        center_distance_tolerance_ratio > 0.0 && center_distance_tolerance_abs > 0.0)) {
    throw Error("detector tolerances must be positive");
  }
  if (num_markers < 1) throw Error("num_markers must be positive");
  geometry.validate();
  if (!(sampling_radius > geometry.inner_white && sampling_radius < geometry.teeth_outer)) {
    throw Error("sampling radius must lie inside the teeth band");
  }
  if (edge_samples < 3 || !(edge_half_length > 0.0)) throw Error("invalid edge sampling parameters");
}

std::vector<SegmentPair> segment_image(const GrayImage& image, const DetectorParams& params) {
  std::vector<SegmentPair> pairs;
  if (image.empty()) return pairs;
  const int w = image.width(), h = image.height();
  const auto [lo_it, hi_it] = std::minmax_element(image.data().begin(), image.data().end());
  const double global_threshold = 0.5 * (static_cast<double>(*lo_it) + *hi_it);
  if (*hi_it - *lo_it < 16) return pairs;

  const double white_fraction =
      params.geometry.inner_white * params.geometry.inner_white +
      0.5 * (params.geometry.teeth_outer * params.geometry.teeth_outer -
             params.geometry.inner_white * params.geometry.inner_white);
  const double expected_ratio = white_fraction / (1.0 - white_fraction);

  std::vector<int> global_labels(image.data().size(), 0);
  std::vector<int> local_labels(image.data().size(), 0);
  std::vector<int> stack;
  std::vector<std::uint8_t> claimed(image.data().size(), 0);
  int next_local = 0;
  const Window full{0, 0, w - 1, h - 1};

  for (int y = 0; y < h && static_cast<int>(pairs.size()) < params.num_markers; ++y) {
    for (int x = 0; x < w && static_cast<int>(pairs.size()) < params.num_markers; ++x) {
      const auto idx = static_cast<std::size_t>(y) * w + x;
      if (global_labels[idx] != 0 || claimed[idx] || image.at(x, y) >= global_threshold) continue;
      Segment blob;
      Moments blob_mom;
      flood(image, x, y, full, [&](std::uint8_t g) { return g < global_threshold; }, global_labels, 1, stack, blob,
            blob_mom);
      if (blob.size < params.min_size) continue;

      // Local threshold from the neighbourhood of this blob.
      const int bw = blob.max_x - blob.min_x + 1, bh = blob.max_y - blob.min_y + 1;
      const Window win{std::max(0, blob.min_x - bw / 2), std::max(0, blob.min_y - bh / 2),
                       std::min(w - 1, blob.max_x + bw / 2), std::min(h - 1, blob.max_y + bh / 2)};
      int lo = 255, hi = 0;
      for (int yy = win.y0; yy <= win.y1; ++yy) {
        for (int xx = win.x0; xx <= win.x1; ++xx) {
          lo = std::min<int>(lo, image.at(xx, yy));
          hi = std::max<int>(hi, image.at(xx, yy));
        }
      }
      const double threshold = 0.5 * (lo + hi);
      // The scan hits the blob on its blurred rim; start from its darkest pixel.
      const int sx = blob_mom.darkest_x, sy = blob_mom.darkest_y;
      if (image.at(sx, sy) >= threshold) continue;

      SegmentPair pair;
      pair.threshold = threshold;
      Moments outer_mom;
      const int outer_label = ++next_local;
      flood(image, sx, sy, win, [&](std::uint8_t g) { return g < threshold; }, local_labels, outer_label, stack,
            pair.outer, outer_mom);
      pair.outer.dark = true;
      if (pair.outer.size < params.min_size) continue;

      const int ow = pair.outer.max_x - pair.outer.min_x + 1, oh = pair.outer.max_y - pair.outer.min_y + 1;
      const double bbox_area = std::numbers::pi / 4.0 * ow * oh;
      if (std::abs(pair.outer.size / bbox_area - 1.0) > params.initial_circularity_tolerance / 100.0) continue;

      // The white region must be enclosed by the ring.
      const int cx = static_cast<int>(std::lround(pair.outer.centroid.x()));
      const int cy = static_cast<int>(std::lround(pair.outer.centroid.y()));
      if (!full.contains(cx, cy) || image.at(cx, cy) < threshold) continue;
      const Window inner_win{pair.outer.min_x, pair.outer.min_y, pair.outer.max_x, pair.outer.max_y};
      Moments inner_mom;
      const int inner_label = ++next_local;
      const bool enclosed = flood(image, cx, cy, inner_win, [&](std::uint8_t g) { return g >= threshold; },
                                  local_labels, inner_label, stack, pair.inner, inner_mom);
      pair.inner.dark = false;
      if (!enclosed || pair.inner.size < 1) continue;

      const double ratio = static_cast<double>(pair.inner.size) / pair.outer.size;
      if (std::abs(ratio / expected_ratio - 1.0) > params.area_ratio_tolerance / 100.0) continue;

      Moments all = outer_mom;
      all.add(inner_mom);
      pair.ellipse = ellipse_from_moments(all);
      const double center_tol = params.center_distance_tolerance_abs +
                                params.center_distance_tolerance_ratio / 100.0 * pair.ellipse.semi_major;
      if ((pair.outer.centroid - pair.inner.centroid).norm() > center_tol) continue;

      const double ellipse_area = std::numbers::pi * pair.ellipse.semi_major * pair.ellipse.semi_minor;
      if (std::abs(all.n / ellipse_area - 1.0) > params.final_circularity_tolerance / 100.0) continue;
      pair.ellipse = refine_ellipse(image, local_labels, outer_label, inner_label, pair.outer, pair.ellipse);

      for (int yy = pair.outer.min_y; yy <= pair.outer.max_y; ++yy) {
        for (int xx = pair.outer.min_x; xx <= pair.outer.max_x; ++xx) {
          claimed[static_cast<std::size_t>(yy) * w + xx] = 1;
        }
      }
      pairs.push_back(pair);
    }
  }
  return pairs;
}

}  // namespace fidmark
