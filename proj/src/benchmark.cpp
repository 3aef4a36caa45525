#include "fidmark/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include "fidmark/error.hpp"

namespace fidmark {

std::string to_string(BenchMode m) { return m == BenchMode::kPaced ? "paced" : "throughput"; }

BenchMode bench_mode_from_string(const std::string& s) {
  if (s == "paced") return BenchMode::kPaced;
  if (s == "throughput") return BenchMode::kThroughput;
  throw Error("unknown benchmark mode '" + s + "' (expected paced or throughput)");
}

BenchResult run_benchmark(const std::vector<GrayImage>& frames, double frame_rate_hz, const Detector& detector,
                          BenchMode mode) {
  using Clock = std::chrono::steady_clock;
  if (frames.empty()) throw Error("benchmark needs at least one frame");
  if (mode == BenchMode::kPaced && !(frame_rate_hz > 0.0)) throw Error("paced benchmark needs a frame rate");
  for (const auto& f : frames) {
    if (f.empty()) throw Error("benchmark frame is empty");
  }

  BenchResult res;
  res.frames = frames.size();
  std::vector<double> latencies;
  latencies.reserve(frames.size());
  const auto start = Clock::now();
  const std::chrono::duration<double> period(mode == BenchMode::kPaced ? 1.0 / frame_rate_hz : 0.0);

  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (mode == BenchMode::kPaced) {
      const auto release = start + std::chrono::duration_cast<Clock::duration>(period * static_cast<double>(i));
      const auto now = Clock::now();
      if (now < release) {
        std::this_thread::sleep_until(release);
      } else if (now >= release + std::chrono::duration_cast<Clock::duration>(period)) {
        continue;  // the next frame is already due: this one is stale
      }
    }
    const auto t0 = Clock::now();
    const auto dets = detector.process(frames[i], static_cast<int>(i),
                                       frame_rate_hz > 0.0 ? i / frame_rate_hz : 0.0);
    const auto t1 = Clock::now();
    latencies.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    ++res.processed;
    if (!dets.empty()) ++res.detections;
  }
  if (mode == BenchMode::kPaced) {
    // The replay lasts until the end of the last frame slot.
    std::this_thread::sleep_until(
        start + std::chrono::duration_cast<Clock::duration>(period * static_cast<double>(frames.size())));
  }
  res.wall_s = std::chrono::duration<double>(Clock::now() - start).count();
  res.F = static_cast<double>(res.detections) / res.wall_s;

  if (!latencies.empty()) {
    double sum = 0.0;
    for (double l : latencies) sum += l;
    res.mean_ms = sum / static_cast<double>(latencies.size());
    std::sort(latencies.begin(), latencies.end());
    const std::size_t n = latencies.size();
    res.median_ms = n % 2 ? latencies[n / 2] : 0.5 * (latencies[n / 2 - 1] + latencies[n / 2]);
    const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
    res.p95_ms = latencies[std::min(n - 1, rank == 0 ? 0 : rank - 1)];
  }
  return res;
}

}  // namespace fidmark
