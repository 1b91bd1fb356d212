#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "fedzip/analysis.hpp"
#include "fedzip/flsim.hpp"
#include "fedzip/netsim.hpp"
#include "fedzip/pipeline.hpp"

namespace fedzip {

enum class ReportFormat { csv, jsonl };

ReportFormat report_format_from_name(std::string_view name);

using Cell = std::variant<std::int64_t, double, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

Table to_table(const fl::ExperimentReport& report);
Table to_table(const PipelineBench& bench);
Table to_table(const SelectionGrid& grid);
Table to_table(const ErrorDistribution& dist);

// CSV: header line then one line per row. JSON lines: one object per row.
std::string render(const Table& table, ReportFormat format);
void write_report(const Table& table, ReportFormat format, const std::string& path);

// Histogram CSV (bin_left, bin_right, count) followed by one JSON trailer line
// with the Laplace fit.
std::string render_error_distribution(const ErrorDistribution& dist);

}  // namespace fedzip
