#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tweezer/geometry.hpp"
#include "tweezer/planner.hpp"
#include "tweezer/stochastic.hpp"

namespace tweezer {

struct TimingModel {
  double t_mot = 1.8;
  double t_molasses = 0.040;
  double t_reservoir_transfer = 0.020;
  double t_image = 0.130;
  double t_analysis_fill = 0.065;
  double t_buffer_refill = 0.035;
  // Per-move ramp/translation times live in TransportModel.
  /// Window over which array atoms are exposed to loss during imaging;
  /// defaults to t_image when unset.
  std::optional<double> image_loss_window;

  double preparation_time() const { return t_mot + t_molasses + t_reservoir_transfer; }
  double cycle_time() const { return t_image + t_analysis_fill + t_buffer_refill; }
  double image_loss_time() const { return image_loss_window.value_or(t_image); }
};

enum class TransportFailure {
  Lose,  // atom is gone
  Stay,  // atom remains in its source trap
};

TransportFailure parse_transport_failure(const std::string& text);
std::string to_string(TransportFailure f);

/// Everything one realization needs besides the RNG.
struct EngineModels {
  ArrayLayout layout = paper_layout();
  LossModel loss;
  TransportModel transport;
  ExtractionModel extraction;
  TimingModel timing;
  PlannerOptions planner;
  double reservoir_mean = 80.0;
  double refill_rate = 0.0;
  TransportFailure transport_failure = TransportFailure::Lose;

  /// Throws std::invalid_argument naming the offending config key.
  void validate() const;
};

/// Per-cause atom bookkeeping for one realization.
struct AtomLedger {
  std::int64_t initial_reservoir = 0;
  std::int64_t refill_added = 0;
  std::int64_t extracted = 0;          // atoms pulled out of the reservoir by extractions
  std::int64_t delivered = 0;          // single atoms placed in buffer traps
  std::int64_t lost_extraction = 0;    // extracted atoms that did not end up trapped
  std::int64_t lost_reservoir_decay = 0;
  std::int64_t lost_array_decay = 0;
  std::int64_t lost_transport = 0;

  std::int64_t total_lost() const {
    return lost_extraction + lost_reservoir_decay + lost_array_decay + lost_transport;
  }
};

struct SystemState {
  Occupancy truth;
  Occupancy belief;
  ReservoirState reservoir;
  double clock = 0.0;
  int cycle_index = 0;
  AtomLedger ledger;

  std::int64_t trapped() const { return static_cast<std::int64_t>(truth.count()); }
  /// reservoir + trapped + lost - refill; constant over a realization.
  std::int64_t conserved_total() const {
    return reservoir.n_atoms + trapped() + ledger.total_lost() - ledger.refill_added;
  }
};

struct Observation {
  Occupancy occupancy;
  std::int64_t n_reservoir = 0;
  double clock = 0.0;
  bool target_complete = false;
  int n_buffer = 0;
  int n_target = 0;
};

struct CycleRecord {
  int cycle_index = 0;
  bool target_complete = false;  // from the imaging at the start of the cycle
  int n_buffer_filled = 0;       // buffer atoms seen at that imaging
  int n_target_filled = 0;
  int n_buffer_loaded = 0;       // buffer atoms present after this cycle's refill
  std::int64_t n_reservoir = 0;  // at imaging
  double clock_at_image = 0.0;
  double cycle_duration = 0.0;
  int moves_planned = 0;
  int refills_attempted = 0;
  int atoms_delivered = 0;
  std::int64_t extracted = 0;
  std::int64_t reservoir_decay_lost = 0;
};

/// One row of the append-only event log.
struct EventRow {
  int replica = 0;
  int cycle = 0;
  std::string step;  // init | image | fill | refill | move | extract
  int seq = -1;      // position within a plan, -1 for step rows
  double clock = 0.0;
  std::int64_t reservoir = 0;
  std::string truth_mask;
  std::string belief_mask;
  std::string src;  // site id or "R"
  std::string dst;
  double dist_um = 0.0;
  double duration_us = 0.0;
  std::string outcome;
};

class EventLog {
 public:
  explicit EventLog(int replica = 0, bool enabled = true) : replica_(replica), enabled_(enabled) {}

  bool enabled() const { return enabled_; }
  void step(const SystemState& s, const std::string& name);
  void move(const SystemState& s, const std::string& name, int seq, const Move& m,
            const std::string& outcome);
  const std::vector<EventRow>& rows() const { return rows_; }
  std::vector<EventRow>& rows() { return rows_; }

 private:
  int replica_;
  bool enabled_;
  std::vector<EventRow> rows_;
};

SystemState init_sequence(const EngineModels& models, RngStream& rng, EventLog* log = nullptr);

Observation step_image(SystemState& state, const EngineModels& models, RngStream& rng,
                       EventLog* log = nullptr);

/// Throws std::logic_error when the plan disagrees with the current belief.
void step_fill_targets(SystemState& state, const MovePlan& plan, const EngineModels& models,
                       RngStream& rng, EventLog* log = nullptr);

/// Returns the number of single atoms delivered into buffer traps.
int step_refill_buffers(SystemState& state, const std::vector<int>& refill_list,
                        const EngineModels& models, RngStream& rng, EventLog* log = nullptr);

CycleRecord run_cycle(SystemState& state, const EngineModels& models, RngStream& rng,
                      EventLog* log = nullptr);

struct Realization {
  std::vector<CycleRecord> records;
  AtomLedger ledger;
  double start_clock = 0.0;
};

Realization run_realization(const EngineModels& models, std::uint64_t master_seed, int replica,
                            int n_cycles, EventLog* log = nullptr);

}  // namespace tweezer
