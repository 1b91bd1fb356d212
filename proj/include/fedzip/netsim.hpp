#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <vector>

#include "fedzip/ebcodec.hpp"

namespace fedzip {

struct NetworkModel {
  double bandwidth_bps = 10e6;
  std::map<std::size_t, double> client_bandwidth_bps;  // per-client overrides

  double bandwidth_for(std::size_t client) const;
};

void validate(const NetworkModel& model);

// Compression/transfer cost of one update: compress and decompress seconds,
// original size S and compressed size S' in bytes.
struct CostInputs {
  double compress_seconds = 0.0;
  double decompress_seconds = 0.0;
  double original_bytes = 0.0;
  double compressed_bytes = 0.0;
};

void validate(const CostInputs& c);

double transfer_time(double bytes, double bandwidth_bps);
double transfer_time(double bytes, const NetworkModel& model);

// End-to-end seconds with and without compression at bandwidth B.
double compressed_path_seconds(const CostInputs& c, double bandwidth_bps);
double raw_path_seconds(const CostInputs& c, double bandwidth_bps);

// t_C + t_D + 8 S'/B < 8 S / B
bool worthwhile(const CostInputs& c, const NetworkModel& model);
bool worthwhile(const CostInputs& c, double bandwidth_bps);

// B* = 8 (S - S') / (t_C + t_D): compression pays strictly below B*.
double breakeven_bandwidth(const CostInputs& c);

class Clock {
 public:
  virtual ~Clock() = default;
  virtual double now() = 0;
  virtual void sleep_for(double seconds) = 0;
  virtual bool is_virtual() const = 0;
};

class RealClock final : public Clock {
 public:
  double now() override;
  void sleep_for(double seconds) override;
  bool is_virtual() const override { return false; }
};

// Logical time. sleep_for advances the shared timeline under a lock, so
// concurrent senders are serialized onto one event sequence.
class VirtualClock final : public Clock {
 public:
  double now() override;
  void sleep_for(double seconds) override;
  bool is_virtual() const override { return true; }

 private:
  std::mutex mu_;
  double now_ = 0.0;
};

// Blocks (or advances the virtual clock) for the transfer time of `bytes`.
// Returns the elapsed seconds; exact on a virtual clock.
double emulate_send(double bytes, const NetworkModel& model, Clock& clock, std::size_t client = 0);

struct SelectionGrid {
  std::vector<CodecSpec> candidates;
  std::vector<double> epsilons;
  // records[c][e] for candidate c at epsilons[e]
  std::vector<std::vector<CodecBenchRecord>> records;
  // accuracy[c][e] = I(eps) in [0, 1], when measured
  std::vector<std::vector<std::optional<double>>> accuracy;
  std::optional<double> baseline_accuracy;  // I'
  double original_bytes = 0.0;              // S in bytes (Eq. 1 terms)
  double element_count = 0.0;               // S in elements (ratio feasibility)
};

void validate(const SelectionGrid& grid);

struct GridCell {
  std::size_t candidate = 0;
  std::size_t epsilon = 0;
};

enum class SelectionPolicy {
  min_end_to_end_time,  // t_C + t_D + 8 S'/B
  max_ratio,
  min_overhead,         // t_C + t_D
};

struct CodecSelection {
  CodecSpec spec;  // candidate with bound.epsilon set to the chosen epsilon
  GridCell cell;
  double ratio = 0.0;
  double overhead_seconds = 0.0;
  double end_to_end_seconds = 0.0;
};

bool cell_feasible(const SelectionGrid& grid, GridCell cell, const NetworkModel& model);
// Feasible cells not dominated in (max ratio, min t_C + t_D), in grid order.
std::vector<GridCell> pareto_front(const SelectionGrid& grid, const NetworkModel& model);
CodecSelection select_codec(const SelectionGrid& grid, const NetworkModel& model,
                            SelectionPolicy policy = SelectionPolicy::min_end_to_end_time);

struct EpsilonSelection {
  double epsilon = 0.0;
  std::size_t index = 0;
  double total_cost_seconds = 0.0;  // sum over clients of P_i(eps)
};

// P_i(eps) = t_C + t_D + 8 S'(eps) / B_i, summed over `clients` clients.
double client_cost_sum(const SelectionGrid& grid, std::size_t candidate, std::size_t eps_index,
                       const NetworkModel& model, std::size_t clients);
EpsilonSelection select_epsilon(const SelectionGrid& grid, const NetworkModel& model, double accuracy_slack,
                                std::size_t clients = 1, std::size_t candidate = 0);

}  // namespace fedzip
