#include "fedzip/cli.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <json.hpp>

#include "fedzip/analysis.hpp"
#include "fedzip/flsim.hpp"
#include "fedzip/netsim.hpp"
#include "fedzip/pipeline.hpp"
#include "fedzip/report.hpp"
#include "fedzip/tensor_store.hpp"

namespace fedzip {

namespace {

struct CodecOptions {
  std::string codec = "pq";
  double rel_eb = 1e-2;
  double abs_eb = -1.0;
  std::uint32_t block_size = 256;
  std::uint32_t radius = 32768;

  CodecSpec spec() const {
    CodecSpec s;
    s.codec = codec_from_name(codec);
    if (abs_eb >= 0.0)
      s.bound = {BoundMode::absolute, abs_eb};
    else
      s.bound = {BoundMode::relative, rel_eb};
    s.block_size = block_size;
    s.quant_radius = radius;
    validate(s);
    return s;
  }
};

struct RoutingOptions {
  std::uint64_t threshold = 1024;
  std::string marker = "weight";
  std::vector<std::string> force_lossless;
  std::string lossless = "deflate";
  int level = 6;

  RoutingRule rule() const { return {marker, threshold, force_lossless}; }
  LosslessSpec lossless_spec() const {
    LosslessSpec s;
    if (lossless == "store")
      s.codec = LosslessCodec::store;
    else if (lossless == "deflate")
      s.codec = LosslessCodec::deflate;
    else
      fail(Errc::InvalidArgument, fmt::format("unknown lossless codec '{}'", lossless));
    s.level = level;
    return s;
  }
};

struct FlOptions {
  CodecOptions codec{};
  RoutingOptions routing{};
  bool no_codec = false;
  std::size_t clients = 4;
  std::size_t rounds = 20;
  std::size_t epochs = 1;
  double lr = 0.2;
  std::size_t batch = 32;
  std::size_t hidden = 64;
  double bandwidth = 10e6;
  std::uint64_t seed = 7;
  std::string clock = "virtual";
  double noise_sigma = 1.0;
  double center_scale = 0.75;
  std::size_t samples = 256;

  fl::FLConfig config() const {
    fl::FLConfig cfg;
    cfg.clients = clients;
    cfg.rounds = rounds;
    cfg.local_epochs = epochs;
    cfg.lr = lr;
    cfg.batch_size = batch;
    cfg.hidden = hidden;
    cfg.network.bandwidth_bps = bandwidth;
    cfg.with_seed(seed);
    cfg.task.noise_sigma = noise_sigma;
    cfg.task.center_scale = center_scale;
    cfg.task.samples_per_client = samples;
    cfg.rule = routing.rule();
    cfg.lossless = routing.lossless_spec();
    if (clock == "virtual")
      cfg.clock = fl::ClockMode::virtual_time;
    else if (clock == "real")
      cfg.clock = fl::ClockMode::real_time;
    else
      fail(Errc::InvalidArgument, fmt::format("unknown clock mode '{}'", clock));
    if (codec.codec != "none") cfg.codec = codec.spec();
    return cfg;
  }
};

void add_codec_options(CLI::App* app, CodecOptions& o, bool allow_none = false) {
  app->add_option("--codec", o.codec, allow_none ? "pq, cbt, none, or a registered codec name"
                                                 : "pq, cbt, or a registered codec name")
      ->capture_default_str();
  auto* rel = app->add_option("--rel-eb", o.rel_eb, "relative error bound (fraction of value range)")
                  ->capture_default_str();
  auto* abs = app->add_option("--abs-eb", o.abs_eb, "absolute error bound (overrides --rel-eb)");
  rel->excludes(abs);
  app->add_option("--block-size", o.block_size, "block size of the cbt codec")->capture_default_str();
  app->add_option("--radius", o.radius, "quantization radius of the pq codec")->capture_default_str();
}

void add_routing_options(CLI::App* app, RoutingOptions& o) {
  app->add_option("--threshold", o.threshold, "minimum element count (exclusive) for lossy routing")
      ->capture_default_str();
  app->add_option("--marker", o.marker, "name substring that marks lossy candidates")->capture_default_str();
  app->add_option("--force-lossless", o.force_lossless, "glob patterns always routed lossless");
  app->add_option("--lossless", o.lossless, "store or deflate")->capture_default_str();
  app->add_option("--level", o.level, "deflate level 1-9")->capture_default_str();
}

void add_fl_options(CLI::App* app, FlOptions& o) {
  add_codec_options(app, o.codec, true);
  add_routing_options(app, o.routing);
  app->add_option("--clients", o.clients)->capture_default_str();
  app->add_option("--rounds", o.rounds)->capture_default_str();
  app->add_option("--epochs", o.epochs, "local epochs per round")->capture_default_str();
  app->add_option("--lr", o.lr)->capture_default_str();
  app->add_option("--batch", o.batch)->capture_default_str();
  app->add_option("--hidden", o.hidden)->capture_default_str();
  app->add_option("--bw", o.bandwidth, "bandwidth in bits per second")->capture_default_str();
  app->add_option("--seed", o.seed)->capture_default_str();
  app->add_option("--clock", o.clock, "virtual or real")->capture_default_str();
  app->add_option("--noise-sigma", o.noise_sigma)->capture_default_str();
  app->add_option("--center-scale", o.center_scale, "std-dev of class-center coordinates")->capture_default_str();
  app->add_option("--samples", o.samples, "training samples per client")->capture_default_str();
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      fail(Errc::InvalidArgument, fmt::format("'{}' is not a number", item));
    }
  }
  if (out.empty()) fail(Errc::InvalidArgument, "empty number list");
  return out;
}

std::vector<std::string> split(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  write_file(path, ByteSpan(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"fedzip: error-bounded compression of federated-learning model updates", "fedzip"};
  app.require_subcommand(1);

  // compress
  std::string in_path, out_path;
  CodecOptions codec_opts;
  RoutingOptions routing_opts;
  auto* compress_cmd = app.add_subcommand("compress", "compress an FSZT checkpoint into an FSZU update");
  compress_cmd->add_option("input", in_path, "input .fszt")->required();
  compress_cmd->add_option("output", out_path, "output .fszu")->required();
  add_codec_options(compress_cmd, codec_opts);
  add_routing_options(compress_cmd, routing_opts);

  auto* decompress_cmd = app.add_subcommand("decompress", "restore an FSZT checkpoint from an FSZU update");
  decompress_cmd->add_option("input", in_path, "input .fszu")->required();
  decompress_cmd->add_option("output", out_path, "output .fszt")->required();

  // bench
  int reps = 5;
  std::string report_path, format_name = "csv";
  auto* bench_cmd = app.add_subcommand("bench", "time the compression pipeline on a checkpoint");
  bench_cmd->add_option("input", in_path, "input .fszt")->required();
  add_codec_options(bench_cmd, codec_opts);
  add_routing_options(bench_cmd, routing_opts);
  bench_cmd->add_option("--reps", reps)->capture_default_str();
  bench_cmd->add_option("--out", report_path, "report file (stdout when omitted)");
  bench_cmd->add_option("--format", format_name, "csv or jsonl")->capture_default_str();

  // bench-net
  double size_mb = 100.0, ratio = 10.0, tc = 1.0, td = 1.0;
  std::string bw_range = "1e6:1e10";
  int points = 41;
  auto* net_cmd = app.add_subcommand("bench-net", "communication time vs bandwidth, raw vs compressed");
  net_cmd->add_option("--size-mb", size_mb, "uncompressed update size in MB (1e6 bytes)")->capture_default_str();
  net_cmd->add_option("--ratio", ratio, "compression ratio S/S'")->capture_default_str();
  net_cmd->add_option("--tc", tc, "compression seconds")->capture_default_str();
  net_cmd->add_option("--td", td, "decompression seconds")->capture_default_str();
  net_cmd->add_option("--bw-range", bw_range, "lo:hi bandwidth in bits per second")->capture_default_str();
  net_cmd->add_option("--points", points, "log-spaced sample count")->capture_default_str();
  net_cmd->add_option("--out", report_path, "CSV file (stdout when omitted)");

  // fl-run
  FlOptions fl_opts;
  std::string save_model;
  auto* fl_cmd = app.add_subcommand("fl-run", "simulate FedAvg with compressed client updates");
  add_fl_options(fl_cmd, fl_opts);
  fl_cmd->add_option("--out", report_path, "per-round report (stdout when omitted)");
  fl_cmd->add_option("--format", format_name, "csv or jsonl")->capture_default_str();
  fl_cmd->add_option("--save-model", save_model, "write the final global model as .fszt");

  // sweep
  std::string eps_list = "1e-1,1e-2,1e-3,1e-4";
  double slack = -1.0;
  auto* sweep_cmd = app.add_subcommand("sweep", "run fl-run over a list of relative error bounds");
  add_fl_options(sweep_cmd, fl_opts);
  sweep_cmd->add_option("--eps", eps_list, "comma-separated relative error bounds")->capture_default_str();
  sweep_cmd->add_option("--slack", slack, "accuracy slack; when set, also select an epsilon");
  sweep_cmd->add_option("--out", report_path, "CSV file (stdout when omitted)");
  sweep_cmd->add_option("--format", format_name, "csv or jsonl")->capture_default_str();

  // analyze-error
  std::string recon_path, entry;
  std::size_t bins = 101;
  auto* analyze_cmd = app.add_subcommand("analyze-error", "histogram and Laplace fit of decompression error");
  analyze_cmd->add_option("original", in_path, "original .fszt")->required();
  analyze_cmd->add_option("reconstructed", recon_path, "reconstructed .fszt")->required();
  analyze_cmd->add_option("--bins", bins)->capture_default_str();
  analyze_cmd->add_option("--out", report_path, "CSV file (stdout when omitted)");
  analyze_cmd->add_option("--entry", entry, "analyze one entry instead of pooling all lossy entries");
  add_codec_options(analyze_cmd, codec_opts);
  add_routing_options(analyze_cmd, routing_opts);

  // select
  std::string codec_list = "pq,cbt";
  double select_bw = 10e6;
  auto* select_cmd = app.add_subcommand("select", "pick a (codec, epsilon) for a checkpoint and bandwidth");
  select_cmd->add_option("input", in_path, "input .fszt")->required();
  select_cmd->add_option("--codecs", codec_list, "comma-separated codec names")->capture_default_str();
  select_cmd->add_option("--eps", eps_list, "comma-separated relative error bounds")->capture_default_str();
  select_cmd->add_option("--bw", select_bw, "bandwidth in bits per second")->capture_default_str();
  select_cmd->add_option("--reps", reps)->capture_default_str();
  select_cmd->add_option("--out", report_path, "grid CSV (stdout when omitted)");
  add_routing_options(select_cmd, routing_opts);

  if (args.empty()) {
    err << app.help();
    return kExitUsage;
  }
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::ostringstream sink;
    auto code = app.exit(e, sink, sink);
    if (code == 0) {
      out << sink.str();
      return kExitOk;
    }
    err << nlohmann::json{{"error", "UsageError"}, {"message", e.what()}}.dump() << '\n';
    return kExitUsage;
  }

  try {
    if (compress_cmd->parsed()) {
      auto state = load_checkpoint(in_path);
      auto update = compress_update(state, codec_opts.spec(), routing_opts.rule(), routing_opts.lossless_spec());
      write_file(out_path, serialize_update(update));
      out << nlohmann::ordered_json{{"entries", update.entries.size()},
                                    {"original_bytes", update.original_bytes},
                                    {"compressed_bytes", update.compressed_bytes},
                                    {"ratio", update.ratio()}}
                 .dump()
          << '\n';
    } else if (decompress_cmd->parsed()) {
      save_checkpoint(decompress_update(read_file(in_path)), out_path);
    } else if (bench_cmd->parsed()) {
      auto state = load_checkpoint(in_path);
      auto bench = measure_pipeline(state, codec_opts.spec(), routing_opts.rule(), reps, routing_opts.lossless_spec());
      emit(render(to_table(bench), report_format_from_name(format_name)), report_path, out);
    } else if (net_cmd->parsed()) {
      auto colon = bw_range.find(':');
      if (colon == std::string::npos) fail(Errc::InvalidArgument, "--bw-range must look like lo:hi");
      double lo = parse_list(bw_range.substr(0, colon)).front();
      double hi = parse_list(bw_range.substr(colon + 1)).front();
      if (!(lo > 0.0) || !(hi >= lo)) fail(Errc::InvalidArgument, "--bw-range needs 0 < lo <= hi");
      if (points < 2) fail(Errc::InvalidArgument, "--points must be >= 2");
      if (!(ratio > 0.0)) fail(Errc::InvalidArgument, "--ratio must be positive");
      CostInputs c{tc, td, size_mb * 1e6, size_mb * 1e6 / ratio};
      validate(c);
      Table t;
      t.columns = {"bandwidth", "time_uncompressed", "time_compressed", "worthwhile"};
      for (int i = 0; i < points; ++i) {
        double bw = lo * std::pow(hi / lo, static_cast<double>(i) / (points - 1));
        t.rows.push_back({bw, raw_path_seconds(c, bw), compressed_path_seconds(c, bw),
                          static_cast<std::int64_t>(worthwhile(c, bw))});
      }
      emit(render(t, ReportFormat::csv), report_path, out);
    } else if (fl_cmd->parsed()) {
      StateDict final_state;
      auto report = fl::run_experiment(fl_opts.config(), {}, save_model.empty() ? nullptr : &final_state);
      emit(render(to_table(report), report_format_from_name(format_name)), report_path, out);
      if (!save_model.empty()) save_checkpoint(final_state, save_model);
    } else if (sweep_cmd->parsed()) {
      auto cfg = fl_opts.config();
      if (!cfg.codec) fail(Errc::InvalidArgument, "sweep needs a codec");
      auto eps = parse_list(eps_list);
      auto grid = fl::sweep_epsilon(cfg, eps);
      emit(render(to_table(grid), report_format_from_name(format_name)), report_path, out);
      if (slack >= 0.0) {
        auto sel = select_epsilon(grid, cfg.network, slack, cfg.clients);
        err << nlohmann::ordered_json{{"selected_epsilon", sel.epsilon},
                                      {"baseline_accuracy", *grid.baseline_accuracy},
                                      {"total_cost_seconds", sel.total_cost_seconds}}
                   .dump()
            << '\n';
      }
    } else if (analyze_cmd->parsed()) {
      auto original = load_checkpoint(in_path);
      auto recon = load_checkpoint(recon_path);
      auto spec = codec_opts.spec();
      std::vector<double> samples;
      double eps_max = 0.0;
      std::vector<std::string> names;
      if (!entry.empty())
        names.push_back(entry);
      else
        names = partition(original, routing_opts.rule()).lossy;
      for (const auto& name : names) {
        auto a = original.at(name).f32();
        auto b = recon.at(name).f32();
        if (a.size() != b.size()) fail(Errc::LengthMismatch, fmt::format("entry '{}' changed length", name));
        eps_max = std::max(eps_max, resolve_abs_bound(spec.bound, a));
        for (std::size_t i = 0; i < a.size(); ++i)
          samples.push_back(static_cast<double>(a[i]) - static_cast<double>(b[i]));
      }
      if (samples.empty()) fail(Errc::EmptyInput, "no lossy-routed entries to analyze");
      auto dist = distribution_from_samples(std::move(samples), bins, eps_max);
      emit(render_error_distribution(dist), report_path, out);
    } else if (select_cmd->parsed()) {
      auto state = load_checkpoint(in_path);
      SelectionGrid grid;
      grid.epsilons = parse_list(eps_list);
      grid.original_bytes = static_cast<double>(state.payload_bytes());
      for (const auto& t : state) grid.element_count += static_cast<double>(t.size());
      for (const auto& name : split(codec_list)) {
        CodecSpec spec;
        spec.codec = codec_from_name(name);
        grid.candidates.push_back(spec);
        auto& row = grid.records.emplace_back();
        for (double eps : grid.epsilons) {
          spec.bound.epsilon = eps;
          auto bench = measure_pipeline(state, spec, routing_opts.rule(), reps, routing_opts.lossless_spec());
          CodecBenchRecord rec;
          rec.codec = spec.codec;
          rec.epsilon = eps;
          rec.compress_seconds = bench.compress_seconds;
          rec.decompress_seconds = bench.decompress_seconds;
          rec.original_bytes = bench.original_bytes;
          rec.compressed_bytes = bench.compressed_bytes;
          rec.ratio = bench.ratio;
          for (const auto& e : bench.entries) rec.eps_abs = std::max(rec.eps_abs, e.eps_abs);
          row.push_back(rec);
        }
      }
      NetworkModel net;
      net.bandwidth_bps = select_bw;
      emit(render(to_table(grid), ReportFormat::csv), report_path, out);
      auto front = pareto_front(grid, net);
      auto sel = select_codec(grid, net);
      nlohmann::ordered_json summary;
      summary["codec"] = codec_name(sel.spec.codec);
      summary["epsilon"] = sel.spec.bound.epsilon;
      summary["ratio"] = sel.ratio;
      summary["overhead_seconds"] = sel.overhead_seconds;
      summary["end_to_end_seconds"] = sel.end_to_end_seconds;
      summary["pareto_front"] = nlohmann::ordered_json::array();
      for (auto c : front)
        summary["pareto_front"].push_back(
            {{"codec", codec_name(grid.candidates[c.candidate].codec)}, {"epsilon", grid.epsilons[c.epsilon]}});
      err << summary.dump() << '\n';
    }
  } catch (const Error& e) {
    err << nlohmann::json{{"error", std::string(errc_name(e.code()))}, {"message", e.what()}}.dump() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << nlohmann::json{{"error", "Internal"}, {"message", e.what()}}.dump() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace fedzip
