#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fidmark/eval.hpp"

namespace fidmark {

/// Shortest decimal that round-trips to the same double.
std::string format_number(double v);

void write_case_csv(const std::vector<CaseResult>& cases, const std::filesystem::path& path);
void write_rate_csv(const std::vector<RateResult>& rates, const std::filesystem::path& path);
void write_summary_csv(const std::vector<SystemSummary>& rows, const std::filesystem::path& path);
std::vector<CaseResult> read_case_csv(const std::filesystem::path& path);
std::vector<RateResult> read_rate_csv(const std::filesystem::path& path);

/// East/north/up targets against time, one vertical line per flagged pair.
std::string svg_targets(const PoseTrace& trace, const std::vector<std::size_t>& flagged);
/// Angular speed against time with a horizontal rule at theta_a.
std::string svg_angular_speed(const PoseTrace& trace, const Thresholds& th, const std::vector<std::size_t>& flagged);
/// Per-system strip plots of r_d and F.
std::string svg_distributions(const std::vector<CaseResult>& cases, const std::vector<RateResult>& rates);

struct ReportFiles {
  std::vector<std::filesystem::path> written;
};

/// Evaluates every trace and writes cases.csv, summary.csv, rates.csv (when
/// rates are given), notes.txt and the SVG plots into `dir`.
ReportFiles emit_report(const std::vector<PoseTrace>& traces, const std::vector<RateResult>& rates,
                        const Thresholds& th, const std::filesystem::path& dir);

}  // namespace fidmark
