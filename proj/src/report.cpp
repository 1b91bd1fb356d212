#include "fedzip/report.hpp"

#include <json.hpp>

#include <fmt/core.h>

namespace fedzip {

namespace {

std::string csv_cell(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::string>) {
          if (v.find_first_of(",\"\n") == std::string::npos) return v;
          std::string out = "\"";
          for (char ch : v) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
          return out + "\"";
        } else {
          return fmt::format("{}", v);
        }
      },
      c);
}

nlohmann::ordered_json json_cell(const Cell& c) {
  return std::visit([](const auto& v) { return nlohmann::ordered_json(v); }, c);
}

std::int64_t i64(std::uint64_t v) { return static_cast<std::int64_t>(v); }

}  // namespace

ReportFormat report_format_from_name(std::string_view name) {
  if (name == "csv") return ReportFormat::csv;
  if (name == "jsonl" || name == "json-lines") return ReportFormat::jsonl;
  fail(Errc::InvalidArgument, fmt::format("unknown report format '{}'", name));
}

Table to_table(const fl::ExperimentReport& report) {
  Table t;
  t.columns = {"round", "client", "codec", "epsilon", "accuracy", "t_c", "t_d", "original_bytes",
               "compressed_bytes", "ratio", "transfer_s", "comm_s", "max_abs_error"};
  for (const auto& r : report.rounds) {
    for (const auto& c : r.clients) {
      t.rows.push_back({i64(r.round), i64(c.client), report.codec_label, report.epsilon, r.accuracy,
                        c.compress_seconds, c.decompress_seconds, i64(c.original_bytes), i64(c.compressed_bytes),
                        static_cast<double>(c.original_bytes) / static_cast<double>(c.compressed_bytes),
                        c.transfer_seconds, c.comm_seconds, c.max_abs_error});
    }
  }
  return t;
}

Table to_table(const PipelineBench& bench) {
  Table t;
  t.columns = {"entry", "route", "original_bytes", "compressed_bytes", "ratio", "eps_abs", "t_c", "t_d"};
  for (const auto& e : bench.entries) {
    t.rows.push_back({e.name, std::string(e.route == Route::lossy ? "lossy" : "lossless"), i64(e.original_bytes),
                      i64(e.compressed_bytes),
                      static_cast<double>(e.original_bytes) / static_cast<double>(e.compressed_bytes), e.eps_abs,
                      std::string(), std::string()});
  }
  t.rows.push_back({std::string("*total"), std::string("-"), i64(bench.original_bytes), i64(bench.compressed_bytes),
                    bench.ratio, 0.0, bench.compress_seconds, bench.decompress_seconds});
  return t;
}

Table to_table(const SelectionGrid& grid) {
  Table t;
  t.columns = {"codec", "epsilon", "final_accuracy", "mean_ratio", "t_c", "t_d", "eps_abs", "max_abs_error"};
  for (std::size_t c = 0; c < grid.candidates.size(); ++c) {
    for (std::size_t e = 0; e < grid.epsilons.size(); ++e) {
      const auto& r = grid.records[c][e];
      Cell acc = std::string("");
      if (c < grid.accuracy.size() && grid.accuracy[c][e]) acc = *grid.accuracy[c][e];
      t.rows.push_back({codec_name(grid.candidates[c].codec), grid.epsilons[e], acc, r.ratio, r.compress_seconds,
                        r.decompress_seconds, r.eps_abs, r.max_abs_error});
    }
  }
  return t;
}

Table to_table(const ErrorDistribution& dist) {
  Table t;
  t.columns = {"bin_left", "bin_right", "count"};
  for (std::size_t i = 0; i < dist.counts.size(); ++i)
    t.rows.push_back({dist.bin_edges[i], dist.bin_edges[i + 1], i64(dist.counts[i])});
  return t;
}

std::string render(const Table& table, ReportFormat format) {
  std::string out;
  if (format == ReportFormat::csv) {
    for (std::size_t i = 0; i < table.columns.size(); ++i) out += (i ? "," : "") + csv_cell(table.columns[i]);
    out += '\n';
    for (const auto& row : table.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + csv_cell(row[i]);
      out += '\n';
    }
    return out;
  }
  for (const auto& row : table.rows) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < row.size() && i < table.columns.size(); ++i) obj[table.columns[i]] = json_cell(row[i]);
    out += obj.dump() + '\n';
  }
  return out;
}

void write_report(const Table& table, ReportFormat format, const std::string& path) {
  auto text = render(table, format);
  write_file(path, ByteSpan(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string render_error_distribution(const ErrorDistribution& dist) {
  auto out = render(to_table(dist), ReportFormat::csv);
  nlohmann::ordered_json trailer;
  trailer["mu"] = dist.laplace_mu;
  trailer["b"] = dist.laplace_b;
  trailer["goodness"] = dist.goodness;
  trailer["eps_abs"] = dist.eps_abs;
  trailer["samples"] = dist.samples.size();
  trailer["max_abs_error"] = dist.max_abs_error;
  return out + trailer.dump() + '\n';
}

}  // namespace fedzip
