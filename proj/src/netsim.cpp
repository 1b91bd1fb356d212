#include "fedzip/netsim.hpp"

#include <chrono>
#include <cmath>
#include <thread>

#include <fmt/core.h>

namespace fedzip {

double NetworkModel::bandwidth_for(std::size_t client) const {
  auto it = client_bandwidth_bps.find(client);
  return it == client_bandwidth_bps.end() ? bandwidth_bps : it->second;
}

void validate(const NetworkModel& model) {
  auto ok = [](double b) { return std::isfinite(b) && b > 0.0; };
  if (!ok(model.bandwidth_bps)) fail(Errc::InvalidArgument, "bandwidth must be positive");
  for (const auto& [client, b] : model.client_bandwidth_bps)
    if (!ok(b)) fail(Errc::InvalidArgument, fmt::format("bandwidth of client {} must be positive", client));
}

void validate(const CostInputs& c) {
  if (!(c.compress_seconds >= 0.0) || !(c.decompress_seconds >= 0.0))
    fail(Errc::InvalidArgument, "compression times must be non-negative");
  if (!(c.original_bytes > 0.0) || !(c.compressed_bytes > 0.0))
    fail(Errc::InvalidArgument, "sizes must be positive");
}

double transfer_time(double bytes, double bandwidth_bps) {
  if (bytes < 0.0) fail(Errc::InvalidArgument, "byte count must be non-negative");
  if (!(bandwidth_bps > 0.0)) fail(Errc::InvalidArgument, "bandwidth must be positive");
  return bytes * 8.0 / bandwidth_bps;
}

double transfer_time(double bytes, const NetworkModel& model) { return transfer_time(bytes, model.bandwidth_bps); }

double compressed_path_seconds(const CostInputs& c, double bandwidth_bps) {
  return c.compress_seconds + c.decompress_seconds + transfer_time(c.compressed_bytes, bandwidth_bps);
}

double raw_path_seconds(const CostInputs& c, double bandwidth_bps) {
  return transfer_time(c.original_bytes, bandwidth_bps);
}

bool worthwhile(const CostInputs& c, double bandwidth_bps) {
  validate(c);
  return compressed_path_seconds(c, bandwidth_bps) < raw_path_seconds(c, bandwidth_bps);
}

bool worthwhile(const CostInputs& c, const NetworkModel& model) {
  validate(model);
  return worthwhile(c, model.bandwidth_bps);
}

double breakeven_bandwidth(const CostInputs& c) {
  validate(c);
  if (c.compressed_bytes >= c.original_bytes)
    fail(Errc::NoBreakeven, "compressed size is not smaller than the original; compression never pays");
  double overhead = c.compress_seconds + c.decompress_seconds;
  if (!(overhead > 0.0)) fail(Errc::InvalidArgument, "break-even needs a positive compression overhead");
  return 8.0 * (c.original_bytes - c.compressed_bytes) / overhead;
}

double RealClock::now() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

void RealClock::sleep_for(double seconds) {
  if (seconds > 0.0) std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
}

double VirtualClock::now() {
  std::lock_guard lock(mu_);
  return now_;
}

void VirtualClock::sleep_for(double seconds) {
  if (seconds <= 0.0) return;
  std::lock_guard lock(mu_);
  now_ += seconds;
}

double emulate_send(double bytes, const NetworkModel& model, Clock& clock, std::size_t client) {
  validate(model);
  double wait = transfer_time(bytes, model.bandwidth_for(client));
  if (clock.is_virtual()) {
    clock.sleep_for(wait);
    return wait;
  }
  auto start = clock.now();
  clock.sleep_for(wait);
  return clock.now() - start;
}

void validate(const SelectionGrid& grid) {
  if (grid.records.size() != grid.candidates.size())
    fail(Errc::InvalidArgument, "selection grid needs one record row per candidate");
  for (const auto& row : grid.records)
    if (row.size() != grid.epsilons.size()) fail(Errc::InvalidArgument, "selection grid is not rectangular");
  if (!grid.accuracy.empty()) {
    if (grid.accuracy.size() != grid.candidates.size())
      fail(Errc::InvalidArgument, "accuracy grid shape differs from record grid");
    for (const auto& row : grid.accuracy) {
      if (row.size() != grid.epsilons.size()) fail(Errc::InvalidArgument, "accuracy grid is not rectangular");
      for (const auto& a : row)
        if (a && (*a < 0.0 || *a > 1.0)) fail(Errc::InvalidArgument, "accuracy outside [0, 1]");
    }
  }
  if (grid.baseline_accuracy && (*grid.baseline_accuracy < 0.0 || *grid.baseline_accuracy > 1.0))
    fail(Errc::InvalidArgument, "baseline accuracy outside [0, 1]");
}

namespace {

double overhead(const CodecBenchRecord& r) { return r.compress_seconds + r.decompress_seconds; }

double end_to_end(const SelectionGrid& grid, const CodecBenchRecord& r, double bandwidth) {
  return overhead(r) + transfer_time(grid.original_bytes / r.ratio, bandwidth);
}

}  // namespace

bool cell_feasible(const SelectionGrid& grid, GridCell cell, const NetworkModel& model) {
  const auto& r = grid.records[cell.candidate][cell.epsilon];
  double t = overhead(r);
  double budget = transfer_time(grid.original_bytes, model.bandwidth_bps);
  return t > 0.0 && t < budget && r.ratio >= 1.0 && r.ratio <= grid.element_count;
}

std::vector<GridCell> pareto_front(const SelectionGrid& grid, const NetworkModel& model) {
  validate(grid);
  validate(model);
  std::vector<GridCell> feasible;
  for (std::size_t c = 0; c < grid.candidates.size(); ++c)
    for (std::size_t e = 0; e < grid.epsilons.size(); ++e)
      if (cell_feasible(grid, {c, e}, model)) feasible.push_back({c, e});

  std::vector<GridCell> front;
  for (auto a : feasible) {
    const auto& ra = grid.records[a.candidate][a.epsilon];
    bool dominated = false;
    for (auto b : feasible) {
      const auto& rb = grid.records[b.candidate][b.epsilon];
      if (rb.ratio >= ra.ratio && overhead(rb) <= overhead(ra) &&
          (rb.ratio > ra.ratio || overhead(rb) < overhead(ra))) {
        dominated = true;
        break;
      }
    }
    if (!dominated) front.push_back(a);
  }
  return front;
}

CodecSelection select_codec(const SelectionGrid& grid, const NetworkModel& model, SelectionPolicy policy) {
  validate(grid);
  validate(model);
  // The minimizer of a scalarization monotone in both objectives is always on
  // the Pareto front, so scanning every feasible cell picks a front point.
  std::vector<GridCell> feasible;
  for (std::size_t c = 0; c < grid.candidates.size(); ++c)
    for (std::size_t e = 0; e < grid.epsilons.size(); ++e)
      if (cell_feasible(grid, {c, e}, model)) feasible.push_back({c, e});
  if (feasible.empty()) fail(Errc::NoFeasibleCandidate, "no (codec, epsilon) cell satisfies the feasibility bounds");

  auto score = [&](GridCell c) {
    const auto& r = grid.records[c.candidate][c.epsilon];
    switch (policy) {
      case SelectionPolicy::max_ratio: return -r.ratio;
      case SelectionPolicy::min_overhead: return overhead(r);
      case SelectionPolicy::min_end_to_end_time: break;
    }
    return end_to_end(grid, r, model.bandwidth_bps);
  };
  // Lower score, then higher ratio, lower overhead, codec name, grid position.
  auto better = [&](GridCell a, GridCell b) {
    double sa = score(a), sb = score(b);
    if (sa != sb) return sa < sb;
    double ra = grid.records[a.candidate][a.epsilon].ratio, rb = grid.records[b.candidate][b.epsilon].ratio;
    if (ra != rb) return ra > rb;
    double oa = overhead(grid.records[a.candidate][a.epsilon]), ob = overhead(grid.records[b.candidate][b.epsilon]);
    if (oa != ob) return oa < ob;
    auto na = codec_name(grid.candidates[a.candidate].codec), nb = codec_name(grid.candidates[b.candidate].codec);
    if (na != nb) return na < nb;
    return std::pair(a.candidate, a.epsilon) < std::pair(b.candidate, b.epsilon);
  };
  auto best = feasible.front();
  for (auto c : feasible)
    if (better(c, best)) best = c;

  const auto& r = grid.records[best.candidate][best.epsilon];
  CodecSelection sel;
  sel.spec = grid.candidates[best.candidate];
  sel.spec.bound.epsilon = grid.epsilons[best.epsilon];
  sel.cell = best;
  sel.ratio = r.ratio;
  sel.overhead_seconds = overhead(r);
  sel.end_to_end_seconds = end_to_end(grid, r, model.bandwidth_bps);
  return sel;
}

double client_cost_sum(const SelectionGrid& grid, std::size_t candidate, std::size_t eps_index,
                       const NetworkModel& model, std::size_t clients) {
  const auto& r = grid.records.at(candidate).at(eps_index);
  double total = 0.0;
  for (std::size_t i = 0; i < clients; ++i) total += end_to_end(grid, r, model.bandwidth_for(i));
  return total;
}

EpsilonSelection select_epsilon(const SelectionGrid& grid, const NetworkModel& model, double accuracy_slack,
                                std::size_t clients, std::size_t candidate) {
  validate(grid);
  validate(model);
  if (!(accuracy_slack >= 0.0)) fail(Errc::InvalidArgument, "accuracy slack must be non-negative");
  if (clients < 1) fail(Errc::InvalidArgument, "need at least one client");
  if (candidate >= grid.candidates.size()) fail(Errc::InvalidArgument, "candidate index out of range");
  if (!grid.baseline_accuracy || grid.accuracy.empty())
    fail(Errc::InvalidArgument, "epsilon selection needs measured and baseline accuracy");

  std::optional<EpsilonSelection> best;
  for (std::size_t e = 0; e < grid.epsilons.size(); ++e) {
    const auto& acc = grid.accuracy[candidate][e];
    if (!acc || std::abs(*grid.baseline_accuracy - *acc) > accuracy_slack) continue;
    const auto& r = grid.records[candidate][e];
    bool within_budget = true;
    for (std::size_t i = 0; i < clients && within_budget; ++i) {
      double p = end_to_end(grid, r, model.bandwidth_for(i));
      within_budget = p >= 0.0 && p <= transfer_time(grid.original_bytes, model.bandwidth_for(i));
    }
    if (!within_budget) continue;
    double cost = client_cost_sum(grid, candidate, e, model, clients);
    if (!best || cost < best->total_cost_seconds ||
        (cost == best->total_cost_seconds && grid.epsilons[e] > best->epsilon))
      best = EpsilonSelection{grid.epsilons[e], e, cost};
  }
  if (!best) fail(Errc::NoFeasibleEpsilon, "no epsilon meets the accuracy slack and per-client cost bounds");
  return *best;
}

}  // namespace fedzip
