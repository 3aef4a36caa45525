#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "fidmark/eval.hpp"
#include "fidmark/geometry.hpp"
#include "fidmark/presets.hpp"
#include "fidmark/synth.hpp"

namespace fidmark {

/// Sidecar describing a rendered frame directory.
struct Manifest {
  std::string preset;
  CameraIntrinsics camera;
  double frame_rate_hz = 30.0;
  std::uint64_t seed = 0;
  int frame_count = 0;
  double noise_sigma = 0.0;
  double blur_sigma = 0.0;
  struct Marker {
    std::uint32_t id = 0;
    double diameter = 0.0;
    Vec3 position = Vec3::Zero();  // world
  };
  std::vector<Marker> markers;
  std::uint32_t single_id = 0;
  std::set<std::uint32_t> bundle_ids;

  double diameter_of(std::uint32_t id) const;
};

/// Manifest describing a rendering of the preset.
Manifest manifest_for(const Preset& preset);

std::filesystem::path frame_path(const std::filesystem::path& dir, int frame);

void write_manifest(const Manifest& m, const std::filesystem::path& path);
Manifest read_manifest(const std::filesystem::path& path);

/// PNG frames, manifest.json and ground_truth.jsonl.
void write_sequence(const RenderedSequence& seq, const Manifest& manifest, const std::filesystem::path& dir);
/// Throws before returning anything if a frame is missing.
std::vector<GrayImage> read_frames(const std::filesystem::path& dir, const Manifest& manifest);

void write_ground_truth(const std::vector<GroundTruthRecord>& truth, const std::filesystem::path& path);
/// Ground truth of one marker as a trace (solution 'A', zero variances).
PoseTrace ground_truth_trace(const std::vector<GroundTruthRecord>& truth, std::uint32_t id);

void write_trace(const PoseTrace& trace, const std::filesystem::path& path);
PoseTrace read_trace(const std::filesystem::path& path, const std::string& system, const std::string& case_name);

}  // namespace fidmark
