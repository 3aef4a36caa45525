#include "fidmark/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "fidmark/error.hpp"

namespace fidmark {

namespace fs = std::filesystem;

namespace {

constexpr double kWidth = 800.0, kHeight = 300.0;
constexpr double kLeft = 60.0, kRight = 20.0, kTop = 30.0, kBottom = 40.0;

std::string coord(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 2);
  return std::string(buf, res.ptr);
}

std::string checked_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") != std::string::npos) throw Error("CSV field contains a separator: " + s);
  return s;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, ',')) fields.push_back(cur);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& s, const fs::path& path) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw Error("bad number '" + s + "' in " + path.string());
  return v;
}

std::size_t parse_size(const std::string& s, const fs::path& path) {
  std::size_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw Error("bad count '" + s + "' in " + path.string());
  return v;
}

std::vector<std::vector<std::string>> read_rows(const fs::path& path, const std::string& header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open for reading: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != header) throw Error("unexpected CSV header in " + path.string());
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(split(line));
  }
  return rows;
}

struct Axes {
  double t0, t1, y0, y1;
  double x(double t) const { return kLeft + (t - t0) / (t1 - t0) * (kWidth - kLeft - kRight); }
  double y(double v) const { return kHeight - kBottom - (v - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

Axes make_axes(double t0, double t1, double y0, double y1) {
  if (!(t1 > t0)) t1 = t0 + 1.0;
  if (!(y1 > y0)) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  const double pad = 0.05 * (y1 - y0);
  return {t0, t1, y0 - pad, y1 + pad};
}

void frame(std::ostringstream& os, const Axes& ax, const std::string& title, const std::string& ylabel) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << coord(kWidth / 2) << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">"
     << xml_escape(title) << "</text>\n";
  os << "<rect class=\"axes\" x=\"" << coord(kLeft) << "\" y=\"" << coord(kTop) << "\" width=\""
     << coord(kWidth - kLeft - kRight) << "\" height=\"" << coord(kHeight - kTop - kBottom)
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text x=\"" << coord(kWidth / 2) << "\" y=\"" << coord(kHeight - 8) << "\" text-anchor=\"middle\" font-size=\"12\">"
     << "time (s)</text>\n";
  os << "<text x=\"14\" y=\"" << coord(kHeight / 2) << "\" font-size=\"12\" transform=\"rotate(-90 14 "
     << coord(kHeight / 2) << ")\" text-anchor=\"middle\">" << xml_escape(ylabel) << "</text>\n";
  os << "<text x=\"" << coord(kLeft - 4) << "\" y=\"" << coord(ax.y(ax.y1)) << "\" text-anchor=\"end\" font-size=\"10\">"
     << coord(ax.y1) << "</text>\n";
  os << "<text x=\"" << coord(kLeft - 4) << "\" y=\"" << coord(ax.y(ax.y0)) << "\" text-anchor=\"end\" font-size=\"10\">"
     << coord(ax.y0) << "</text>\n";
  os << "<text x=\"" << coord(kLeft) << "\" y=\"" << coord(kHeight - kBottom + 14) << "\" font-size=\"10\">"
     << coord(ax.t0) << "</text>\n";
  os << "<text x=\"" << coord(kWidth - kRight) << "\" y=\"" << coord(kHeight - kBottom + 14)
     << "\" text-anchor=\"end\" font-size=\"10\">" << coord(ax.t1) << "</text>\n";
}

void flag_lines(std::ostringstream& os, const Axes& ax, const PoseTrace& trace, const std::vector<std::size_t>& flagged) {
  for (std::size_t i : flagged) {
    if (i + 1 >= trace.records.size()) continue;
    const double t = 0.5 * (trace.records[i].t + trace.records[i + 1].t);
    os << "<line class=\"flag\" data-pair=\"" << i << "\" x1=\"" << coord(ax.x(t)) << "\" x2=\"" << coord(ax.x(t))
       << "\" y1=\"" << coord(kTop) << "\" y2=\"" << coord(kHeight - kBottom) << "\" stroke=\"red\" stroke-dasharray=\"4 3\"/>\n";
  }
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_case_csv(const std::vector<CaseResult>& cases, const fs::path& path) {
  std::ostringstream os;
  os << "system,case,n,d,r_d\n";
  for (const auto& c : cases) {
    os << checked_field(c.system) << ',' << checked_field(c.case_name) << ',' << c.n << ',' << c.d << ','
       << format_number(c.r_d) << '\n';
  }
  write_text(path, os.str());
}

void write_rate_csv(const std::vector<RateResult>& rates, const fs::path& path) {
  std::ostringstream os;
  os << "system,case,len_s,n,F\n";
  for (const auto& r : rates) {
    os << checked_field(r.system) << ',' << checked_field(r.case_name) << ',' << format_number(r.len_s) << ','
       << r.n << ',' << format_number(r.F) << '\n';
  }
  write_text(path, os.str());
}

void write_summary_csv(const std::vector<SystemSummary>& rows, const fs::path& path) {
  std::ostringstream os;
  os << "system,cases,mean_r_d,std_r_d,rate_cases,mean_F,std_F\n";
  for (const auto& s : rows) {
    os << checked_field(s.system) << ',' << s.cases << ',';
    if (s.cases) os << format_number(s.mean_rd);
    os << ',';
    if (s.std_rd) os << format_number(*s.std_rd);
    os << ',' << s.rate_cases << ',';
    if (s.rate_cases) os << format_number(s.mean_F);
    os << ',';
    if (s.std_F) os << format_number(*s.std_F);
    os << '\n';
  }
  write_text(path, os.str());
}

std::vector<CaseResult> read_case_csv(const fs::path& path) {
  std::vector<CaseResult> out;
  for (const auto& f : read_rows(path, "system,case,n,d,r_d")) {
    if (f.size() != 5) throw Error("malformed row in " + path.string());
    CaseResult c;
    c.system = f[0];
    c.case_name = f[1];
    c.n = parse_size(f[2], path);
    c.d = parse_size(f[3], path);
    c.r_d = parse_double(f[4], path);
    out.push_back(c);
  }
  return out;
}

std::vector<RateResult> read_rate_csv(const fs::path& path) {
  std::vector<RateResult> out;
  for (const auto& f : read_rows(path, "system,case,len_s,n,F")) {
    if (f.size() != 5) throw Error("malformed row in " + path.string());
    RateResult r;
    r.system = f[0];
    r.case_name = f[1];
    r.len_s = parse_double(f[2], path);
    r.n = parse_size(f[3], path);
    r.F = parse_double(f[4], path);
    out.push_back(r);
  }
  return out;
}

std::string svg_targets(const PoseTrace& trace, const std::vector<std::size_t>& flagged) {
  const auto& r = trace.records;
  double t0 = 0, t1 = 1, lo = 0, hi = 0;
  if (!r.empty()) {
    t0 = r.front().t;
    t1 = r.back().t;
    lo = hi = r.front().target.x();
    for (const auto& rec : r) {
      lo = std::min({lo, rec.target.x(), rec.target.y(), rec.target.z()});
      hi = std::max({hi, rec.target.x(), rec.target.y(), rec.target.z()});
    }
  }
  const Axes ax = make_axes(t0, t1, lo, hi);
  std::ostringstream os;
  frame(os, ax, trace.system + " / " + trace.case_name + ": position target", "position target (m)");
  const char* colors[3] = {"#1f77b4", "#2ca02c", "#9467bd"};
  const char* names[3] = {"e", "n", "u"};
  for (int axis = 0; axis < 3; ++axis) {
    os << "<polyline class=\"target-" << names[axis] << "\" fill=\"none\" stroke=\"" << colors[axis] << "\" points=\"";
    for (std::size_t i = 0; i < r.size(); ++i) {
      os << (i ? " " : "") << coord(ax.x(r[i].t)) << ',' << coord(ax.y(r[i].target(axis)));
    }
    os << "\"/>\n";
    os << "<text x=\"" << coord(kWidth - kRight - 60 + 20 * axis) << "\" y=\"" << coord(kTop + 14) << "\" fill=\""
       << colors[axis] << "\" font-size=\"12\">" << names[axis] << "</text>\n";
  }
  flag_lines(os, ax, trace, flagged);
  os << "</svg>\n";
  return os.str();
}

std::string svg_angular_speed(const PoseTrace& trace, const Thresholds& th, const std::vector<std::size_t>& flagged) {
  const auto& r = trace.records;
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i + 1 < r.size(); ++i) {
    const double dt = r[i + 1].t - r[i].t;
    if (dt > 0.0) pts.emplace_back(r[i + 1].t, angular_speed(r[i].q, r[i + 1].q, dt, th.convention));
  }
  double hi = th.theta_a;
  for (const auto& p : pts) hi = std::max(hi, p.second);
  const Axes ax = make_axes(r.empty() ? 0.0 : r.front().t, r.empty() ? 1.0 : r.back().t, 0.0, hi);
  std::ostringstream os;
  frame(os, ax, trace.system + " / " + trace.case_name + ": angular speed", "angular speed (rad/s)");
  os << "<polyline class=\"speed\" fill=\"none\" stroke=\"#1f77b4\" points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    os << (i ? " " : "") << coord(ax.x(pts[i].first)) << ',' << coord(ax.y(pts[i].second));
  }
  os << "\"/>\n";
  os << "<line class=\"threshold\" x1=\"" << coord(kLeft) << "\" x2=\"" << coord(kWidth - kRight) << "\" y1=\""
     << coord(ax.y(th.theta_a)) << "\" y2=\"" << coord(ax.y(th.theta_a)) << "\" stroke=\"orange\"/>\n";
  flag_lines(os, ax, trace, flagged);
  os << "</svg>\n";
  return os.str();
}

std::string svg_distributions(const std::vector<CaseResult>& cases, const std::vector<RateResult>& rates) {
  std::vector<std::string> systems;
  auto note = [&](const std::string& s) {
    if (std::find(systems.begin(), systems.end(), s) == systems.end()) systems.push_back(s);
  };
  for (const auto& c : cases) note(c.system);
  for (const auto& r : rates) note(r.system);

  const double panel_h = 260.0;
  const double total_h = 2.0 * panel_h + 20.0;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << total_h << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  auto panel = [&](int index, const std::string& label, const std::map<std::string, std::vector<double>>& values) {
    const double top = 10.0 + index * panel_h;
    const double plot_top = top + 30.0, plot_bottom = top + panel_h - 40.0;
    double hi = 0.0;
    for (const auto& [s, v] : values) {
      for (double x : v) hi = std::max(hi, x);
    }
    if (!(hi > 0.0)) hi = 1.0;
    auto y = [&](double v) { return plot_bottom - v / hi * (plot_bottom - plot_top); };
    os << "<text x=\"" << coord(kWidth / 2) << "\" y=\"" << coord(top + 18) << "\" text-anchor=\"middle\" font-size=\"14\">"
       << xml_escape(label) << "</text>\n";
    os << "<rect x=\"" << coord(kLeft) << "\" y=\"" << coord(plot_top) << "\" width=\"" << coord(kWidth - kLeft - kRight)
       << "\" height=\"" << coord(plot_bottom - plot_top) << "\" fill=\"none\" stroke=\"black\"/>\n";
    os << "<text x=\"" << coord(kLeft - 4) << "\" y=\"" << coord(plot_top + 4) << "\" text-anchor=\"end\" font-size=\"10\">"
       << format_number(hi) << "</text>\n";
    const double slot = (kWidth - kLeft - kRight) / std::max<std::size_t>(1, systems.size());
    for (std::size_t k = 0; k < systems.size(); ++k) {
      const double cx = kLeft + (k + 0.5) * slot;
      const auto it = values.find(systems[k]);
      os << "<text x=\"" << coord(cx) << "\" y=\"" << coord(plot_bottom + 16) << "\" text-anchor=\"middle\" font-size=\"12\">"
         << xml_escape(systems[k]) << "</text>\n";
      if (it == values.end() || it->second.empty()) continue;
      const auto [mean, sd] = mean_and_std(it->second);
      for (std::size_t j = 0; j < it->second.size(); ++j) {
        const double jitter = (static_cast<double>(j % 9) - 4.0) * 0.04 * slot;
        os << "<circle class=\"case\" cx=\"" << coord(cx + jitter) << "\" cy=\"" << coord(y(it->second[j]))
           << "\" r=\"3\" fill=\"#1f77b4\" fill-opacity=\"0.6\"/>\n";
      }
      os << "<line class=\"mean\" x1=\"" << coord(cx - 0.3 * slot) << "\" x2=\"" << coord(cx + 0.3 * slot) << "\" y1=\""
         << coord(y(mean)) << "\" y2=\"" << coord(y(mean)) << "\" stroke=\"black\"/>\n";
      os << "<text x=\"" << coord(cx) << "\" y=\"" << coord(plot_bottom + 30) << "\" text-anchor=\"middle\" font-size=\"10\">"
         << "n=" << it->second.size() << ", mean=" << format_number(mean);
      if (sd) os << ", sd=" << format_number(*sd);
      os << "</text>\n";
    }
  };
  std::map<std::string, std::vector<double>> rd, f;
  for (const auto& c : cases) rd[c.system].push_back(c.r_d);
  for (const auto& r : rates) f[r.system].push_back(r.F);
  panel(0, "discontinuity rate r_d", rd);
  panel(1, "detection rate F (Hz)", f);
  os << "</svg>\n";
  return os.str();
}

ReportFiles emit_report(const std::vector<PoseTrace>& traces, const std::vector<RateResult>& rates,
                        const Thresholds& th, const fs::path& dir) {
  th.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create directory " + dir.string() + ": " + ec.message());
  ReportFiles files;
  auto put = [&](const fs::path& p, const std::string& text) {
    write_text(p, text);
    files.written.push_back(p);
  };

  std::vector<CaseResult> cases;
  for (const auto& trace : traces) {
    if (trace.records.empty()) continue;
    const CaseResult c = evaluate_trace(trace, th);
    cases.push_back(c);
    const std::string stem = checked_field(trace.system) + "__" + checked_field(trace.case_name);
    put(dir / (stem + "_targets.svg"), svg_targets(trace, c.flagged));
    put(dir / (stem + "_speed.svg"), svg_angular_speed(trace, th, c.flagged));
  }
  write_case_csv(cases, dir / "cases.csv");
  files.written.push_back(dir / "cases.csv");
  if (!rates.empty()) {
    write_rate_csv(rates, dir / "rates.csv");
    files.written.push_back(dir / "rates.csv");
  }
  write_summary_csv(summarize(cases, rates), dir / "summary.csv");
  files.written.push_back(dir / "summary.csv");
  put(dir / "distributions.svg", svg_distributions(cases, rates));

  std::ostringstream notes;
  notes << "theta_a = " << format_number(th.theta_a) << " rad/s\n";
  notes << "theta_l = " << format_number(th.theta_l) << "\n";
  notes << "geodesic = " << (th.convention == GeodesicConvention::kFullAngle ? "2*acos(|dot|)" : "acos(|dot|)") << "\n";
  notes << "time step = difference of record timestamps\n";
  notes << "synthetic presets use representative distances and deflections\n";
  put(dir / "notes.txt", notes.str());
  return files;
}

}  // namespace fidmark
