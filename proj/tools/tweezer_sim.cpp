// Command-line front end: `simulate` runs an ensemble and writes the CSV
// outputs, `calibrate` fits the reservoir depletion parameter.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "tweezer/config.hpp"
#include "tweezer/experiment.hpp"

using namespace tweezer;

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<int> replicas;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<int> cycles;
};

ExperimentConfig resolve_config(const CommonOptions& o) {
  ExperimentConfig c;
  if (!o.config_path.empty()) c = load_config(o.config_path);
  if (o.replicas) c.replicas = *o.replicas;
  if (o.seed) c.seed = *o.seed;
  if (o.threads) c.threads = *o.threads;
  if (o.cycles) c.cycles = *o.cycles;
  c.resolve();
  c.validate();
  return c;
}

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "INI experiment config")->check(CLI::ExistingFile);
  cmd->add_option("--replicas", o.replicas, "number of realizations");
  cmd->add_option("--cycles", o.cycles, "rearrangement cycles per realization");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--threads", o.threads, "worker threads (0: all cores)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reservoir / buffer / target loading simulator for single-atom tweezer arrays"};
  app.require_subcommand(1);

  CommonOptions sim_opts;
  std::string out_dir;
  std::string success_def;
  std::string transport_failure;
  bool no_events = false;
  auto* sim = app.add_subcommand("simulate", "run an ensemble and write fig4.csv, events.csv, run_meta.ini");
  add_common(sim, sim_opts);
  sim->add_option("--out", out_dir, "output directory")->required();
  sim->add_option("--success-def", success_def, "first|maintained")->check(CLI::IsMember({"first", "maintained"}));
  sim->add_option("--transport-failure", transport_failure, "lose|stay")->check(CLI::IsMember({"lose", "stay"}));
  sim->add_flag("--no-events", no_events, "skip the per-step event log");

  CommonOptions cal_opts;
  double target = 10.0;
  double tolerance = 0.5;
  std::string write_path;
  auto* cal = app.add_subcommand("calibrate", "fit stochastic.mean_ensemble_at_full to a delivered-atom budget");
  add_common(cal, cal_opts);
  cal->add_option("--target-delivered", target, "mean single atoms delivered per realization")->required();
  cal->add_option("--tolerance", tolerance, "accepted deviation from the target");
  cal->add_option("--write-config", write_path, "write the calibrated config to this path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) {
      ExperimentConfig c = resolve_config(sim_opts);
      if (!success_def.empty()) c.success = parse_success_definition(success_def);
      if (!transport_failure.empty()) c.models.transport_failure = parse_transport_failure(transport_failure);
      const auto t0 = std::chrono::steady_clock::now();
      const ExperimentResult r = run_experiment(c, !no_events);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      write_outputs(r, c, out_dir);
      std::printf("%d replicas x %d cycles in %.2f s -> %s\n", c.replicas, c.cycles, secs, out_dir.c_str());
      std::printf("cycle  success   buffer_fill  reservoir_norm\n");
      for (const auto& cs : r.stats.cycles) {
        std::printf("%5d  %.4f    %.4f       %.4f\n", cs.cycle, cs.success.rate, cs.buffer_fill_mean,
                    cs.reservoir_norm);
      }
      std::printf("mean delivered single atoms per realization: %.3f\n", r.stats.mean_delivered);
      return 0;
    }

    ExperimentConfig c = resolve_config(cal_opts);
    const CalibrationResult r = calibrate_depletion(c, target, tolerance);
    if (!r.converged) {
      std::fprintf(stderr,
                   "calibrate: no root in [1, 40] for target %.3f; delivered %.3f at 1 and %.3f at 40\n", target,
                   r.delivered_at_low, r.delivered_at_high);
      return 2;
    }
    std::printf("mean_ensemble_at_full = %s\n", format_double(r.mean_ensemble_at_full).c_str());
    std::printf("achieved delivered = %.4f after %d evaluations\n", r.achieved_delivered, r.evaluations);
    if (!write_path.empty()) {
      c.models.extraction.mean_ensemble_at_full = r.mean_ensemble_at_full;
      c.resolve();
      std::ofstream out(write_path);
      if (!out) throw std::runtime_error("cannot open '" + write_path + "' for writing");
      out << write_config(c);
      if (!out) throw std::runtime_error("failed writing '" + write_path + "'");
    }
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
