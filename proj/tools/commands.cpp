#include "commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fidmark/benchmark.hpp"
#include "fidmark/detector.hpp"
#include "fidmark/error.hpp"
#include "fidmark/eval.hpp"
#include "fidmark/image.hpp"
#include "fidmark/marker.hpp"
#include "fidmark/presets.hpp"
#include "fidmark/report.hpp"
#include "fidmark/synth.hpp"
#include "fidmark/trace_io.hpp"
#include "json.hpp"

namespace fidmark::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// Settings shared by the subcommands. Unset fields fall back to the preset
// or manifest, then to library defaults.
struct RunConfig {
  std::optional<std::string> preset;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> variant;
  std::optional<std::string> mode;
  std::optional<double> theta_a, theta_l;
  std::optional<std::string> geodesic;
  std::optional<int> id_bits, id_samples;
  std::optional<double> diameter;
  std::optional<double> noise_sigma, blur_sigma;
  json detector = json::object();  // any other DetectorParams field by name
};

template <typename T>
void take(const json& j, const char* key, std::optional<T>& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

// Values in the config file win over command-line flags.
void apply_config_file(const fs::path& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw Error("config file must hold a JSON object");
  static const std::vector<std::string> known{"preset",     "seed",     "variant",     "mode",       "theta_a",
                                              "theta_l",    "geodesic", "id_bits",     "id_samples", "diameter",
                                              "noise_sigma", "blur_sigma", "detector"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw Error("unknown config key '" + key + "'");
    }
  }
  try {
    take(j, "preset", cfg.preset);
    take(j, "seed", cfg.seed);
    take(j, "variant", cfg.variant);
    take(j, "mode", cfg.mode);
    take(j, "theta_a", cfg.theta_a);
    take(j, "theta_l", cfg.theta_l);
    take(j, "geodesic", cfg.geodesic);
    take(j, "id_bits", cfg.id_bits);
    take(j, "id_samples", cfg.id_samples);
    take(j, "diameter", cfg.diameter);
    take(j, "noise_sigma", cfg.noise_sigma);
    take(j, "blur_sigma", cfg.blur_sigma);
    if (j.contains("detector")) cfg.detector = j.at("detector");
  } catch (const json::exception& e) {
    throw Error("bad value in config file: " + std::string(e.what()));
  }
}

DetectorParams detector_params(const RunConfig& cfg, double default_diameter) {
  DetectorParams p;
  p.circle_diameter = default_diameter;
  const json& d = cfg.detector;
  if (!d.is_object()) throw Error("config 'detector' must be an object");
  try {
    for (const auto& [key, v] : d.items()) {
      if (key == "min_size") p.min_size = v.get<int>();
      else if (key == "initial_circularity_tolerance") p.initial_circularity_tolerance = v.get<double>();
      else if (key == "final_circularity_tolerance") p.final_circularity_tolerance = v.get<double>();
      else if (key == "area_ratio_tolerance") p.area_ratio_tolerance = v.get<double>();
      else if (key == "center_distance_tolerance_ratio") p.center_distance_tolerance_ratio = v.get<double>();
      else if (key == "center_distance_tolerance_abs") p.center_distance_tolerance_abs = v.get<double>();
      else if (key == "num_markers") p.num_markers = v.get<int>();
      else if (key == "field_length") p.field_length = v.get<double>();
      else if (key == "field_width") p.field_width = v.get<double>();
      else if (key == "sampling_radius") p.sampling_radius = v.get<double>();
      else if (key == "edge_samples") p.edge_samples = v.get<int>();
      else if (key == "edge_half_length") p.edge_half_length = v.get<double>();
      else throw Error("unknown detector parameter '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw Error("bad detector parameter: " + std::string(e.what()));
  }
  if (cfg.id_bits) p.id_bits = *cfg.id_bits;
  if (cfg.id_samples) p.id_samples = *cfg.id_samples;
  if (cfg.diameter) p.circle_diameter = *cfg.diameter;
  p.validate();
  return p;
}

Thresholds thresholds(const RunConfig& cfg) {
  Thresholds th;
  if (cfg.theta_a) th.theta_a = *cfg.theta_a;
  if (cfg.theta_l) th.theta_l = *cfg.theta_l;
  if (cfg.geodesic) {
    if (*cfg.geodesic == "full") th.convention = GeodesicConvention::kFullAngle;
    else if (*cfg.geodesic == "half") th.convention = GeodesicConvention::kHalfAngle;
    else throw Error("geodesic must be 'full' or 'half'");
  }
  th.validate();
  return th;
}

// Builds a detector for the frames described by the manifest.
Detector make_detector(const RunConfig& cfg, const Manifest& manifest) {
  const Variant variant = variant_from_string(cfg.variant.value_or("ellipse"));
  std::set<std::uint32_t> ids;
  double diameter = 0.0;
  if (variant == Variant::kMulti) {
    ids = manifest.bundle_ids;
    if (ids.size() < 3) throw Error("the multi variant needs a manifest with at least 3 bundle ids");
    diameter = manifest.diameter_of(*ids.begin());
  } else {
    ids = {manifest.single_id};
    diameter = manifest.diameter_of(manifest.single_id);
  }
  return Detector(manifest.camera, detector_params(cfg, diameter), variant, ids);
}

Manifest load_manifest(const fs::path& frames_dir) {
  const fs::path path = frames_dir / "manifest.json";
  if (!fs::exists(path)) throw Error("missing manifest " + path.string());
  return read_manifest(path);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create directory " + dir.string() + ": " + ec.message());
}

int cmd_marker_gen(const RunConfig& cfg, const std::vector<std::uint32_t>& ids, int size, bool codebook,
                   const fs::path& out) {
  const int bits = cfg.id_bits.value_or(8);
  if (codebook) {
    const auto book = necklace_codebook(bits);
    if (out.has_parent_path()) ensure_dir(out.parent_path());
    std::ofstream f(out);
    if (!f) throw Error("cannot write " + out.string());
    f << "id,bits\n";
    for (auto id : book) f << id << ',' << bit_string(id, bits) << '\n';
    std::cout << "wrote " << book.size() << " ids to " << out.string() << '\n';
    return 0;
  }
  if (ids.empty()) throw Error("marker-gen needs --id or --codebook");
  ensure_dir(out);
  for (auto id : ids) {
    if (bits < 32 && id >> bits) throw Error("id " + std::to_string(id) + " does not fit in " + std::to_string(bits) + " bits");
    if (!is_canonical(id, bits)) {
      const auto c = canonicalize_necklace(id, bits);
      throw Error("id " + std::to_string(id) + " is not a canonical rotation; it prints as id " +
                  std::to_string(c.id));
    }
    MarkerSpec spec;
    spec.id = id;
    spec.id_bits = bits;
    if (cfg.diameter) spec.diameter = *cfg.diameter;
    const fs::path file = out / ("marker_" + std::to_string(id) + ".png");
    write_png(render_marker_bitmap(spec, size), file);
    std::cout << file.string() << '\n';
  }
  return 0;
}

int cmd_render(const RunConfig& cfg, const fs::path& out) {
  if (!cfg.preset) throw Error("render needs --preset");
  Preset p = find_preset(*cfg.preset);
  if (cfg.seed) p.render.seed = *cfg.seed;
  if (cfg.noise_sigma) p.render.noise_sigma = *cfg.noise_sigma;
  if (cfg.blur_sigma) p.render.blur_sigma = *cfg.blur_sigma;
  const RenderedSequence seq = render_sequence(p.scene, p.trajectory, p.camera, p.render);
  ensure_dir(out);
  write_sequence(seq, manifest_for(p), out);
  std::cout << "rendered " << seq.frames.size() << " frames of " << p.name << " to " << out.string() << '\n';
  return 0;
}

int cmd_detect(const RunConfig& cfg, const fs::path& frames_dir, const fs::path& out) {
  const Manifest manifest = load_manifest(frames_dir);
  const Detector detector = make_detector(cfg, manifest);
  const auto frames = read_frames(frames_dir, manifest);
  PoseTrace trace{to_string(detector.variant()), manifest.preset, {}};
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const double t = static_cast<double>(i) / manifest.frame_rate_hz;
    for (const auto& det : detector.process(frames[i], static_cast<int>(i), t)) {
      trace.records.push_back(to_record(det));
    }
  }
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  write_trace(trace, out);
  std::cout << trace.records.size() << " detections in " << frames.size() << " frames -> " << out.string() << '\n';
  return 0;
}

int cmd_evaluate(const RunConfig& cfg, const std::vector<fs::path>& traces, const std::vector<fs::path>& rate_files,
                 const fs::path& out) {
  const Thresholds th = thresholds(cfg);
  std::vector<PoseTrace> loaded;
  for (const auto& path : traces) {
    // The directory names the system and the file stem the case.
    const fs::path abs = fs::absolute(path);
    loaded.push_back(read_trace(path, abs.parent_path().filename().string(), path.stem().string()));
  }
  std::vector<RateResult> rates;
  for (const auto& path : rate_files) {
    auto more = read_rate_csv(path);
    rates.insert(rates.end(), more.begin(), more.end());
  }
  ensure_dir(out);
  const auto files = emit_report(loaded, rates, th, out);
  for (const auto& f : files.written) std::cout << f.string() << '\n';
  return 0;
}

int cmd_bench(const RunConfig& cfg, const fs::path& frames_dir, const fs::path& out) {
  const Manifest manifest = load_manifest(frames_dir);
  const Detector detector = make_detector(cfg, manifest);
  const BenchMode mode = bench_mode_from_string(cfg.mode.value_or("paced"));
  const auto frames = read_frames(frames_dir, manifest);
  const BenchResult r = run_benchmark(frames, manifest.frame_rate_hz, detector, mode);
  RateResult rate{to_string(detector.variant()), manifest.preset, r.wall_s, r.detections, r.F};
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  write_rate_csv({rate}, out);
  std::cout << "mode=" << to_string(mode) << " frames=" << r.frames << " processed=" << r.processed
            << " detections=" << r.detections << " wall_s=" << format_number(r.wall_s)
            << " F=" << format_number(r.F) << " mean_ms=" << format_number(r.mean_ms)
            << " median_ms=" << format_number(r.median_ms) << " p95_ms=" << format_number(r.p95_ms) << '\n';
  return 0;
}

int cmd_presets() {
  for (const auto& name : preset_names()) {
    const Preset p = find_preset(name);
    std::cout << p.name << ' ' << p.group << ' ' << to_string(p.trajectory.kind) << ' '
              << p.trajectory.frame_count() << '\n';
  }
  return 0;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Circular fiducial marker pipeline: generate, render, detect, evaluate, benchmark"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string config_path;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file; its values override flags");
  };
  auto add_detector_flags = [&](CLI::App* sub) {
    sub->add_option("--variant", cfg.variant, "orig, ellipse or multi")->check(CLI::IsMember({"orig", "ellipse", "multi"}));
    sub->add_option("--id-bits", cfg.id_bits, "ID bits on the ring");
    sub->add_option("--id-samples", cfg.id_samples, "samples along the ID circle");
    sub->add_option("--diameter", cfg.diameter, "outer marker diameter in metres");
  };

  std::vector<std::uint32_t> gen_ids;
  int gen_size = 512;
  bool gen_codebook = false;
  std::string gen_out = "markers";
  auto* gen = app.add_subcommand("marker-gen", "write marker bitmaps or the codebook");
  gen->add_option("--id", gen_ids, "canonical marker ids");
  gen->add_option("--id-bits", cfg.id_bits, "ID bits on the ring");
  gen->add_option("--size", gen_size, "bitmap side in pixels")->check(CLI::Range(16, 8192));
  gen->add_flag("--codebook", gen_codebook, "write every canonical id as CSV to --out");
  gen->add_option("--out", gen_out, "output directory (CSV path with --codebook)");
  add_common(gen);

  std::string render_out = "frames";
  auto* render = app.add_subcommand("render", "render a preset to frames, manifest and ground truth");
  render->add_option("--preset", cfg.preset, "preset name (see `presets`)");
  render->add_option("--seed", cfg.seed, "noise seed; overrides the preset and FIDMARK_SEED");
  render->add_option("--out", render_out, "output directory");
  add_common(render);

  std::string detect_in, detect_out = "trace.jsonl";
  auto* detect = app.add_subcommand("detect", "detect markers in rendered frames and write a trace");
  detect->add_option("frames", detect_in, "directory with manifest.json and frames")->required();
  detect->add_option("--out", detect_out, "trace JSONL path");
  add_detector_flags(detect);
  add_common(detect);

  std::vector<std::string> eval_traces, eval_rates;
  std::string eval_out = "report";
  auto* evaluate = app.add_subcommand("evaluate", "classify discontinuities and write the report");
  evaluate->add_option("traces", eval_traces, "trace files, <system>/<case>.jsonl")->required();
  evaluate->add_option("--rates", eval_rates, "rate CSV files from bench");
  evaluate->add_option("--theta-a", cfg.theta_a, "angular speed threshold, rad/s");
  evaluate->add_option("--theta-l", cfg.theta_l, "linear ratio threshold");
  evaluate->add_option("--geodesic", cfg.geodesic, "full or half angle")->check(CLI::IsMember({"full", "half"}));
  evaluate->add_option("--out", eval_out, "report directory");
  add_common(evaluate);

  std::string bench_in, bench_out = "rates.csv";
  auto* bench = app.add_subcommand("bench", "replay frames through the detector and measure detection rate");
  bench->add_option("frames", bench_in, "directory with manifest.json and frames")->required();
  bench->add_option("--mode", cfg.mode, "paced or throughput")->check(CLI::IsMember({"paced", "throughput"}));
  bench->add_option("--out", bench_out, "rate CSV path");
  add_detector_flags(bench);
  add_common(bench);

  auto* presets = app.add_subcommand("presets", "list presets: name, group, trajectory, frames");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (!config_path.empty()) apply_config_file(config_path, cfg);
    if (gen->parsed()) return cmd_marker_gen(cfg, gen_ids, gen_size, gen_codebook, gen_out);
    if (render->parsed()) return cmd_render(cfg, render_out);
    if (detect->parsed()) return cmd_detect(cfg, detect_in, detect_out);
    if (evaluate->parsed()) {
      std::vector<fs::path> traces(eval_traces.begin(), eval_traces.end());
      std::vector<fs::path> rates(eval_rates.begin(), eval_rates.end());
      return cmd_evaluate(cfg, traces, rates, eval_out);
    }
    if (bench->parsed()) return cmd_bench(cfg, bench_in, bench_out);
    if (presets->parsed()) return cmd_presets();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace fidmark::cli
