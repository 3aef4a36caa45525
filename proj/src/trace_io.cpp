#include "fidmark/trace_io.hpp"

#include <cstdio>
#include <fstream>
#include <limits>

#include "fidmark/detector.hpp"
#include "fidmark/error.hpp"
#include "json.hpp"

namespace fidmark {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open for reading: " + path.string());
  return in;
}

// Infinite scores are written as null.
double number_or_inf(const ojson& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

}  // namespace

double Manifest::diameter_of(std::uint32_t id) const {
  for (const auto& m : markers) {
    if (m.id == id) return m.diameter;
  }
  throw Error("manifest has no marker with id " + std::to_string(id));
}

Manifest manifest_for(const Preset& preset) {
  Manifest m;
  m.preset = preset.name;
  m.camera = preset.camera;
  m.frame_rate_hz = preset.trajectory.frame_rate_hz;
  m.seed = preset.render.seed;
  m.frame_count = preset.trajectory.frame_count();
  m.noise_sigma = preset.render.noise_sigma;
  m.blur_sigma = preset.render.blur_sigma;
  for (const auto& sm : preset.scene.markers) {
    m.markers.push_back({sm.spec.id, sm.spec.diameter, sm.pose.position});
  }
  m.single_id = preset.single_id;
  m.bundle_ids = preset.bundle_ids;
  return m;
}

fs::path frame_path(const fs::path& dir, int frame) {
  char name[32];
  std::snprintf(name, sizeof(name), "frame_%05d.png", frame);
  return dir / name;
}

void write_manifest(const Manifest& m, const fs::path& path) {
  ojson j;
  j["preset"] = m.preset;
  j["camera"] = {{"fx", m.camera.fx}, {"fy", m.camera.fy}, {"cx", m.camera.cx}, {"cy", m.camera.cy},
                 {"k1", m.camera.k1}, {"k2", m.camera.k2}, {"p1", m.camera.p1}, {"p2", m.camera.p2},
                 {"k3", m.camera.k3}, {"width", m.camera.width}, {"height", m.camera.height}};
  j["frame_rate_hz"] = m.frame_rate_hz;
  j["seed"] = m.seed;
  j["frame_count"] = m.frame_count;
  j["noise_sigma"] = m.noise_sigma;
  j["blur_sigma"] = m.blur_sigma;
  j["markers"] = ojson::array();
  for (const auto& mk : m.markers) {
    j["markers"].push_back({{"id", mk.id},
                            {"diameter", mk.diameter},
                            {"position", {mk.position.x(), mk.position.y(), mk.position.z()}}});
  }
  j["single_id"] = m.single_id;
  j["bundle_ids"] = m.bundle_ids;
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

Manifest read_manifest(const fs::path& path) {
  auto in = open_in(path);
  Manifest m;
  try {
    const ojson j = ojson::parse(in);
    m.preset = j.value("preset", std::string());
    const auto& c = j.at("camera");
    m.camera.fx = c.at("fx").get<double>();
    m.camera.fy = c.at("fy").get<double>();
    m.camera.cx = c.at("cx").get<double>();
    m.camera.cy = c.at("cy").get<double>();
    m.camera.k1 = c.value("k1", 0.0);
    m.camera.k2 = c.value("k2", 0.0);
    m.camera.p1 = c.value("p1", 0.0);
    m.camera.p2 = c.value("p2", 0.0);
    m.camera.k3 = c.value("k3", 0.0);
    m.camera.width = c.at("width").get<int>();
    m.camera.height = c.at("height").get<int>();
    m.frame_rate_hz = j.at("frame_rate_hz").get<double>();
    m.seed = j.value("seed", std::uint64_t{0});
    m.frame_count = j.at("frame_count").get<int>();
    m.noise_sigma = j.value("noise_sigma", 0.0);
    m.blur_sigma = j.value("blur_sigma", 0.0);
    for (const auto& mk : j.value("markers", ojson::array())) {
      const auto& p = mk.at("position");
      m.markers.push_back({mk.at("id").get<std::uint32_t>(), mk.at("diameter").get<double>(),
                           Vec3(p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>())});
    }
    m.single_id = j.value("single_id", std::uint32_t{0});
    m.bundle_ids = j.value("bundle_ids", std::set<std::uint32_t>{});
  } catch (const nlohmann::json::exception& e) {
    throw Error("invalid manifest " + path.string() + ": " + e.what());
  }
  m.camera.validate();
  if (m.frame_count < 1 || !(m.frame_rate_hz > 0.0)) throw Error("manifest has no frames: " + path.string());
  return m;
}

void write_sequence(const RenderedSequence& seq, const Manifest& manifest, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create directory " + dir.string() + ": " + ec.message());
  for (std::size_t i = 0; i < seq.frames.size(); ++i) write_png(seq.frames[i], frame_path(dir, static_cast<int>(i)));
  write_manifest(manifest, dir / "manifest.json");
  write_ground_truth(seq.truth, dir / "ground_truth.jsonl");
}

std::vector<GrayImage> read_frames(const fs::path& dir, const Manifest& manifest) {
  for (int i = 0; i < manifest.frame_count; ++i) {
    if (!fs::exists(frame_path(dir, i))) throw Error("missing frame: " + frame_path(dir, i).string());
  }
  std::vector<GrayImage> frames;
  frames.reserve(static_cast<std::size_t>(manifest.frame_count));
  for (int i = 0; i < manifest.frame_count; ++i) frames.push_back(read_png(frame_path(dir, i)));
  return frames;
}

void write_ground_truth(const std::vector<GroundTruthRecord>& truth, const fs::path& path) {
  auto out = open_out(path);
  for (const auto& rec : truth) {
    for (const auto& m : rec.markers) {
      const Quaternion& q = m.pose.orientation;
      ojson j;
      j["frame"] = rec.frame;
      j["t"] = rec.timestamp;
      j["id"] = m.id;
      j["e"] = m.position_target.x();
      j["n"] = m.position_target.y();
      j["u"] = m.position_target.z();
      j["qw"] = q.w();
      j["qx"] = q.x();
      j["qy"] = q.y();
      j["qz"] = q.z();
      j["un"] = m.normalized_pixel.x();
      j["vn"] = m.normalized_pixel.y();
      j["x"] = m.pose.position.x();
      j["y"] = m.pose.position.y();
      j["z"] = m.pose.position.z();
      out << j.dump() << '\n';
    }
  }
}

PoseTrace ground_truth_trace(const std::vector<GroundTruthRecord>& truth, std::uint32_t id) {
  PoseTrace trace;
  trace.system = "ground-truth";
  for (const auto& rec : truth) {
    for (const auto& m : rec.markers) {
      if (m.id != id) continue;
      TraceRecord r;
      r.frame = rec.frame;
      r.t = rec.timestamp;
      r.id = id;
      r.target = m.position_target;
      r.q = m.pose.orientation;
      r.pixel = m.normalized_pixel;
      trace.records.push_back(r);
    }
  }
  return trace;
}

void write_trace(const PoseTrace& trace, const fs::path& path) {
  auto out = open_out(path);
  for (const auto& r : trace.records) {
    ojson j;
    j["frame"] = r.frame;
    j["t"] = r.t;
    j["id"] = r.id;
    j["e"] = r.target.x();
    j["n"] = r.target.y();
    j["u"] = r.target.z();
    j["qw"] = r.q.w();
    j["qx"] = r.q.x();
    j["qy"] = r.q.y();
    j["qz"] = r.q.z();
    j["un"] = r.pixel.x();
    j["vn"] = r.pixel.y();
    j["solution"] = std::string(1, r.solution);
    j["var_a"] = r.var_a;
    j["var_b"] = r.var_b;
    out << j.dump() << '\n';
  }
}

PoseTrace read_trace(const fs::path& path, const std::string& system, const std::string& case_name) {
  auto in = open_in(path);
  PoseTrace trace{system, case_name, {}};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const ojson j = ojson::parse(line);
      TraceRecord r;
      r.frame = j.at("frame").get<int>();
      r.t = j.at("t").get<double>();
      r.id = j.at("id").get<std::uint32_t>();
      r.target = Vec3(j.at("e").get<double>(), j.at("n").get<double>(), j.at("u").get<double>());
      r.q = Quaternion(j.at("qw").get<double>(), j.at("qx").get<double>(), j.at("qy").get<double>(),
                       j.at("qz").get<double>());
      r.pixel = Vec2(j.at("un").get<double>(), j.at("vn").get<double>());
      const std::string s = j.value("solution", std::string("A"));
      r.solution = s.empty() ? 'A' : s[0];
      r.var_a = number_or_inf(j.at("var_a"));
      r.var_b = number_or_inf(j.at("var_b"));
      trace.records.push_back(r);
    } catch (const nlohmann::json::exception& e) {
      throw Error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return trace;
}

}  // namespace fidmark
