#pragma once

#include "piac/sim.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace piac::cli {

/// 12 significant digits; non-finite values print as "nan".
std::string fmt(double v);

/// Writes to a sibling temporary file and renames it over `path`, so a
/// failed run never leaves a partial file behind.
void write_atomic(const std::filesystem::path& path, const std::string& content);

std::string trace_csv_header(bool with_path);
/// Long format: one row per (sample, node).
void append_trace_csv(std::string& out, const Trace& trace, int path = -1);

struct Series {
  std::string label;
  std::vector<double> x, y;
};

/// Minimal SVG line chart.
std::string svg_chart(const std::vector<Series>& series, const std::string& title,
                      const std::string& xlabel, const std::string& ylabel);

}  // namespace piac::cli
