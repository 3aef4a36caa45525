#include "fidmark/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <random>

#include "fidmark/error.hpp"

namespace fidmark {

namespace {

constexpr double kGuard = 1e-9;

}  // namespace

TraceRecord to_record(const MarkerDetection& det) {
  if (!det.id) throw Error("trace records need a decoded id");
  TraceRecord r;
  r.frame = det.frame;
  r.t = det.timestamp;
  r.id = *det.id;
  r.target = det.position_target;
  r.q = det.pose.orientation;
  r.pixel = det.normalized_pixel;
  r.solution = det.solution == Solution::kA ? 'A' : 'B';
  r.var_a = det.variance_a;
  r.var_b = det.variance_b;
  return r;
}

void Thresholds::validate() const {
  if (!(theta_a > 0.0)) throw Error("theta_a must be positive");
  if (!(theta_l < 0.0)) throw Error("theta_l must be negative");
}

std::array<bool, 3> linear_discontinuity(const Vec3& prev, const Vec3& next, double theta_l) {
  if (!(theta_l < 0.0)) throw Error("theta_l must be negative");
  std::array<bool, 3> out{};
  for (int i = 0; i < 3; ++i) {
    out[static_cast<std::size_t>(i)] = std::abs(prev(i)) > kGuard && next(i) / prev(i) < theta_l;
  }
  return out;
}

double angular_speed(const Quaternion& q1, const Quaternion& q2, double dt, GeodesicConvention convention) {
  if (!(dt > 0.0)) throw Error("angular speed needs a positive time step");
  return geodesic_distance(q1, q2, convention) / dt;
}

std::vector<std::size_t> classify_discontinuities(const PoseTrace& trace, const Thresholds& th,
                                                  std::vector<std::size_t>* skipped) {
  th.validate();
  std::vector<std::size_t> flagged;
  const auto& r = trace.records;
  for (std::size_t i = 0; i + 1 < r.size(); ++i) {
    const double dt = r[i + 1].t - r[i].t;
    if (!(dt > 0.0)) {
      if (skipped) {
        skipped->push_back(i);
      } else {
        std::cerr << "fidmark: skipping pair " << i << " of " << trace.case_name << " (time step " << dt << ")\n";
      }
      continue;
    }
    if (angular_speed(r[i].q, r[i + 1].q, dt, th.convention) <= th.theta_a) continue;
    const auto lin = linear_discontinuity(r[i].target, r[i + 1].target, th.theta_l);
    if (lin[0] || lin[1] || lin[2]) flagged.push_back(i);
  }
  return flagged;
}

double discontinuity_rate(const PoseTrace& trace, const Thresholds& th) {
  if (trace.records.empty()) throw Error("discontinuity rate of an empty trace");
  return static_cast<double>(classify_discontinuities(trace, th).size()) / static_cast<double>(trace.records.size());
}

double detection_rate(std::size_t n, double t) {
  if (!(t > 0.0)) throw Error("detection rate needs a positive duration");
  return static_cast<double>(n) / t;
}

CaseResult evaluate_trace(const PoseTrace& trace, const Thresholds& th) {
  if (trace.records.empty()) throw Error("cannot evaluate empty trace: " + trace.case_name);
  CaseResult c;
  c.system = trace.system;
  c.case_name = trace.case_name;
  c.flagged = classify_discontinuities(trace, th);
  c.n = trace.records.size();
  c.d = c.flagged.size();
  c.r_d = static_cast<double>(c.d) / static_cast<double>(c.n);
  return c;
}

std::pair<double, std::optional<double>> mean_and_std(const std::vector<double>& v) {
  if (v.empty()) return {0.0, std::nullopt};
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (v.size() < 2) return {mean, std::nullopt};
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return {mean, std::sqrt(acc / static_cast<double>(v.size() - 1))};
}

std::vector<SystemSummary> summarize(const std::vector<CaseResult>& cases, const std::vector<RateResult>& rates) {
  std::vector<std::string> order;
  auto note = [&](const std::string& s) {
    if (std::find(order.begin(), order.end(), s) == order.end()) order.push_back(s);
  };
  for (const auto& c : cases) note(c.system);
  for (const auto& r : rates) note(r.system);

  std::vector<SystemSummary> out;
  for (const auto& system : order) {
    SystemSummary s;
    s.system = system;
    std::vector<double> rd, f;
    for (const auto& c : cases) {
      if (c.system == system) rd.push_back(c.r_d);
    }
    for (const auto& r : rates) {
      if (r.system == system) f.push_back(r.F);
    }
    s.cases = rd.size();
    std::tie(s.mean_rd, s.std_rd) = mean_and_std(rd);
    s.rate_cases = f.size();
    std::tie(s.mean_F, s.std_F) = mean_and_std(f);
    out.push_back(s);
  }
  return out;
}

TraceRecord twin_record(const TraceRecord& r) {
  const Vec3 t = r.q.rotate(r.target);
  if (t.norm() < kGuard) throw Error("cannot form the twin of a pose at the camera center");
  const Quaternion flip_axis = Quaternion::from_axis_angle(t.normalized(), std::numbers::pi);
  const Quaternion flip_normal = Quaternion::from_axis_angle(Vec3::UnitZ(), std::numbers::pi);
  TraceRecord out = r;
  out.q = flip_axis * r.q * flip_normal;
  out.target = Vec3(-r.target.x(), -r.target.y(), r.target.z());
  out.solution = r.solution == 'A' ? 'B' : 'A';
  return out;
}

FlipInjection inject_flips(const PoseTrace& trace, int k, std::uint64_t seed, const Thresholds& th) {
  FlipInjection out{trace, {}};
  if (k <= 0) return out;
  th.validate();
  const auto& r = trace.records;
  if (r.size() <= 2 * static_cast<std::size_t>(k)) throw Error("trace too short for the requested flip count");

  std::vector<TraceRecord> twins;
  twins.reserve(r.size());
  for (const auto& rec : r) twins.push_back(twin_record(rec));

  // Toggle index i (pair i-1, i) qualifies if switching state there gives a
  // clear discontinuity in either direction.
  std::vector<std::size_t> eligible;
  for (std::size_t i = 1; i < r.size(); ++i) {
    const double dt = r[i].t - r[i - 1].t;
    if (!(dt > 0.0)) continue;
    const double limit = 1.5 * th.theta_a * dt;
    if (geodesic_distance(r[i - 1].q, twins[i].q, th.convention) < limit) continue;
    if (geodesic_distance(twins[i - 1].q, r[i].q, th.convention) < limit) continue;
    bool sign = false;
    for (int axis = 0; axis < 2; ++axis) {
      const double prev = r[i - 1].target(axis), next = r[i].target(axis);
      sign = sign || (std::abs(prev) > 1e-6 && next / prev > -th.theta_l);
    }
    if (sign) eligible.push_back(i);
  }
  if (eligible.size() < static_cast<std::size_t>(k)) {
    throw Error("trace has only " + std::to_string(eligible.size()) + " eligible flip positions");
  }
  std::mt19937_64 rng(seed);
  std::shuffle(eligible.begin(), eligible.end(), rng);
  std::vector<std::size_t> toggles(eligible.begin(), eligible.begin() + k);
  std::sort(toggles.begin(), toggles.end());

  bool twin = false;
  std::size_t next = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (next < toggles.size() && toggles[next] == i) {
      twin = !twin;
      ++next;
      out.pairs.push_back(i - 1);
    }
    if (twin) {
      out.trace.records[i] = twins[i];
      // Inside a twin run the pose must still move smoothly.
      if (i > 0 && (next == 0 || toggles[next - 1] != i)) {
        const double dt = r[i].t - r[i - 1].t;
        if (dt > 0.0 && angular_speed(twins[i - 1].q, twins[i].q, dt, th.convention) > th.theta_a / 1.5) {
          throw Error("trace is not smooth enough for flip injection at record " + std::to_string(i));
        }
      }
    }
  }
  return out;
}

}  // namespace fidmark
