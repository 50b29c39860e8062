#pragma once

#include <string>
#include <vector>

#include "tweezer/config.hpp"
#include "tweezer/engine.hpp"

namespace tweezer {

inline constexpr const char* kVersion = "0.1.0";

struct RateEstimate {
  double rate = 0.0;
  double half_width = 0.0;  // 1 sigma
};

struct CycleStats {
  int cycle = 0;
  RateEstimate success;
  double buffer_fill_mean = 0.0;
  double buffer_fill_ci = 0.0;
  double reservoir_norm = 0.0;
  double reservoir_std = 0.0;
};

struct ExperimentStats {
  int replicas = 0;
  std::vector<CycleStats> cycles;
  double mean_delivered = 0.0;      // single atoms placed into buffers per realization
  double mean_extracted = 0.0;
  double mean_start_clock = 0.0;
  double mean_cycle_duration = 0.0;
};

struct ExperimentResult {
  ExperimentStats stats;
  std::vector<Realization> realizations;  // indexed by replica
  std::vector<EventRow> events;           // replica-major order
};

/// 1-sigma binomial half-width for k successes out of n.
double binomial_half_width(std::size_t successes, std::size_t trials, CiMethod method);

/// Per-cycle success series. Throws std::invalid_argument if replicas have
/// different numbers of cycles.
std::vector<RateEstimate> cumulative_success_rate(const std::vector<std::vector<CycleRecord>>& records,
                                                  SuccessDefinition definition,
                                                  CiMethod method = CiMethod::Normal);

ExperimentStats compute_stats(const std::vector<Realization>& realizations, SuccessDefinition definition,
                              CiMethod method, int n_buffer_sites);

/// Runs config.replicas realizations (replica i seeded from (config.seed, i)),
/// spread over worker threads. Results do not depend on the thread count.
ExperimentResult run_experiment(const ExperimentConfig& config, bool collect_events = true);

struct CalibrationResult {
  double mean_ensemble_at_full = 0.0;
  double achieved_delivered = 0.0;
  bool converged = false;
  int evaluations = 0;
  double delivered_at_low = 0.0;   // bracket extremes, filled when no root was found
  double delivered_at_high = 0.0;
};

/// Bisection on mean_ensemble_at_full over [low, high] until the ensemble mean
/// of delivered single atoms per realization is within tolerance of the target.
CalibrationResult calibrate_depletion(const ExperimentConfig& config, double target_delivered = 10.0,
                                      double tolerance = 0.5, double low = 1.0, double high = 40.0,
                                      int max_iterations = 40);

/// Writes fig4.csv, events.csv and run_meta.ini into out_dir (created if needed).
void write_outputs(const ExperimentResult& result, const ExperimentConfig& config, const std::string& out_dir);

std::string fig4_csv(const ExperimentStats& stats);
std::string events_csv(const std::vector<EventRow>& events);

}  // namespace tweezer
