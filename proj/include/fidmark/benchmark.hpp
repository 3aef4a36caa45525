#pragma once

#include <string>
#include <vector>

#include "fidmark/detector.hpp"
#include "fidmark/image.hpp"

namespace fidmark {

enum class BenchMode { kPaced, kThroughput };
std::string to_string(BenchMode m);
BenchMode bench_mode_from_string(const std::string& s);

struct BenchResult {
  std::size_t frames = 0;      // offered
  std::size_t processed = 0;   // not dropped
  std::size_t detections = 0;  // processed frames with at least one detection
  double wall_s = 0.0;
  double F = 0.0;              // detections / wall_s
  double mean_ms = 0.0;
  double median_ms = 0.0;
  double p95_ms = 0.0;
};

/// Paced mode releases frame i at i / frame_rate and drops frames whose slot
/// has passed; throughput mode runs back to back. Monotonic clock.
BenchResult run_benchmark(const std::vector<GrayImage>& frames, double frame_rate_hz, const Detector& detector,
                          BenchMode mode);

}  // namespace fidmark
