#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fidmark/detector.hpp"
#include "fidmark/geometry.hpp"

namespace fidmark {

struct TraceRecord {
  int frame = 0;
  double t = 0.0;
  std::uint32_t id = 0;
  Vec3 target = Vec3::Zero();  // east, north, up
  Quaternion q;
  Vec2 pixel = Vec2::Zero();   // normalized
  char solution = 'A';
  double var_a = 0.0;
  double var_b = 0.0;
};

TraceRecord to_record(const MarkerDetection& det);

struct PoseTrace {
  std::string system;
  std::string case_name;
  std::vector<TraceRecord> records;
};

struct Thresholds {
  double theta_a = 1.0;   // rad/s
  double theta_l = -0.8;  // unitless
  GeodesicConvention convention = GeodesicConvention::kFullAngle;

  void validate() const;
};

/// Per-axis ratio test on (east, north, up).
std::array<bool, 3> linear_discontinuity(const Vec3& prev, const Vec3& next, double theta_l);
double angular_speed(const Quaternion& q1, const Quaternion& q2, double dt,
                     GeodesicConvention convention = GeodesicConvention::kFullAngle);

/// Index i flags the pair (i, i+1). Pairs with non-positive time step are
/// skipped; their indices go to `skipped` when given, to stderr otherwise.
std::vector<std::size_t> classify_discontinuities(const PoseTrace& trace, const Thresholds& th,
                                                  std::vector<std::size_t>* skipped = nullptr);
double discontinuity_rate(const PoseTrace& trace, const Thresholds& th);
double detection_rate(std::size_t n, double t);

struct CaseResult {
  std::string system;
  std::string case_name;
  std::size_t n = 0;
  std::size_t d = 0;
  double r_d = 0.0;
  std::vector<std::size_t> flagged;
};
CaseResult evaluate_trace(const PoseTrace& trace, const Thresholds& th);

struct RateResult {
  std::string system;
  std::string case_name;
  double len_s = 0.0;
  std::size_t n = 0;
  double F = 0.0;
};

struct SystemSummary {
  std::string system;
  std::size_t cases = 0;
  double mean_rd = 0.0;
  std::optional<double> std_rd;  // undefined for a single case
  std::size_t rate_cases = 0;
  double mean_F = 0.0;
  std::optional<double> std_F;
};

/// Sample mean and (n-1) standard deviation.
std::pair<double, std::optional<double>> mean_and_std(const std::vector<double>& v);
/// One row per system, in order of first appearance.
std::vector<SystemSummary> summarize(const std::vector<CaseResult>& cases, const std::vector<RateResult>& rates);

/// Ambiguity twin of a trace record about the ray to the marker center:
/// east and north negate, up and the camera-frame position are unchanged.
TraceRecord twin_record(const TraceRecord& r);

struct FlipInjection {
  PoseTrace trace;
  std::vector<std::size_t> pairs;  // flagged pair indices created by the injection
};

/// Switches the trace between original and twin poses at k random eligible
/// indices, producing k discontinuous pairs. Eligible pairs turn into a
/// rotation faster than 1.5 theta_a and an east or north ratio below theta_l.
FlipInjection inject_flips(const PoseTrace& trace, int k, std::uint64_t seed, const Thresholds& th = {});

}  // namespace fidmark
