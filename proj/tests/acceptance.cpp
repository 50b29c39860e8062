// Acceptance suite: one line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "tweezer/config.hpp"
#include "tweezer/experiment.hpp"
#include "tweezer/planner.hpp"

using namespace tweezer;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& criterion) {
  Outcome o;
  try {
    o = criterion();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("[%s] %d. %s: %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str());
  std::fflush(stdout);
}

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig default_config() {
  ExperimentConfig c;
  c.resolve();
  return c;
}

// Calibrated once, shared by criteria 2 and 3.
CalibrationResult calibration;
ExperimentConfig calibrated;

}  // namespace

int main() {
  report(1, "buffer fill plateau (cycle 1 = 0.596 +/- 0.015, < 10 s)", [] {
    const auto t0 = Clock::now();
    const auto r = run_experiment(default_config(), false);
    const double secs = seconds_since(t0);
    const double fill = r.stats.cycles.at(0).buffer_fill_mean;
    return Outcome{std::abs(fill - 0.596) <= 0.015 && secs < 10.0,
                   fmt("fill %.4f (1 sigma %.4f), %d replicas in %.2f s", fill, r.stats.cycles[0].buffer_fill_ci,
                       r.stats.replicas, secs)};
  });

  report(2, "calibrated atom budget (10 +/- 0.5 delivered from reservoir mean 80)", [] {
    const ExperimentConfig base = default_config();
    calibration = calibrate_depletion(base, 10.0, 0.5);
    calibrated = base;
    calibrated.models.extraction.mean_ensemble_at_full = calibration.mean_ensemble_at_full;
    calibrated.resolve();
    const double delivered = run_experiment(calibrated, false).stats.mean_delivered;
    return Outcome{calibration.converged && std::abs(delivered - 10.0) <= 0.5 && base.models.reservoir_mean == 80.0,
                   fmt("mean_ensemble_at_full = %.4f, delivered %.3f after %d evaluations",
                       calibration.mean_ensemble_at_full, delivered, calibration.evaluations)};
  });

  report(3, "cumulative success (cycle 8 = 0.868 +/- 0.05, cycle 15 = 0.915 +/- 0.05)", [] {
    if (!calibration.converged) return Outcome{false, "calibration did not converge"};
    const auto r = run_experiment(calibrated, false);
    const auto& s8 = r.stats.cycles.at(7).success;
    const auto& s15 = r.stats.cycles.at(14).success;
    const bool ok = std::abs(s8.rate - 0.868) <= 0.05 && std::abs(s15.rate - 0.915) <= 0.05;
    return Outcome{ok, fmt("cycle 8 %.4f +/- %.4f, cycle 15 %.4f +/- %.4f", s8.rate, s8.half_width, s15.rate,
                           s15.half_width)};
  });

  report(4, "timing (cycle 230 ms +/- 1 ms, sequence start 1.86 s)", [] {
    auto c = default_config();
    c.replicas = 200;
    const auto r = run_experiment(c, false);
    double worst = 0.0;
    for (const auto& real : r.realizations) {
      for (const auto& rec : real.records) worst = std::max(worst, std::abs(rec.cycle_duration - 0.230));
    }
    const bool ok = worst <= 1e-3 && std::abs(r.stats.mean_start_clock - 1.86) <= 1e-9;
    return Outcome{ok, fmt("mean cycle %.6f s (max deviation %.2e s), start clock %.6f s", r.stats.mean_cycle_duration,
                           worst, r.stats.mean_start_clock)};
  });

  report(5, "planner oracle (1000 instances, heuristic >= optimal, equal for 1 vacancy, < 5 s)", [] {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(5150);
    std::uniform_real_distribution<double> coord(0.0, 120.0);
    std::uniform_int_distribution<int> n_vac(1, 6), n_src(1, 7);
    int violations = 0, single = 0, single_mismatch = 0, library_mismatch = 0;
    for (int i = 0; i < 1000; ++i) {
      std::vector<Position> vac(n_vac(rng)), src(n_src(rng));
      for (auto& p : vac) p = {coord(rng), coord(rng)};
      for (auto& p : src) p = {coord(rng), coord(rng)};
      const double best = oracle::brute_force_min_matching(vac, src);
      const double greedy = greedy_assignment(vac, src).total_distance;
      if (greedy < best - 1e-9) ++violations;
      if (vac.size() == 1) {
        ++single;
        if (std::abs(greedy - best) > 1e-9) ++single_mismatch;
      }
      if (std::abs(optimal_assignment(vac, src).total_distance - best) > 1e-9) ++library_mismatch;
    }
    const double secs = seconds_since(t0);
    const bool ok = violations == 0 && single_mismatch == 0 && library_mismatch == 0 && secs < 5.0;
    return Outcome{ok, fmt("%d lower-bound violations, %d/%d single-vacancy instances unequal, "
                           "%d optimal_assignment mismatches, %.2f s",
                           violations, single_mismatch, single, library_mismatch, secs)};
  });

  report(6, "survival statistics (1e5 draws within 3 sigma at 5 grid points)", [] {
    const std::vector<std::pair<double, double>> grid{{0.230, 10.0}, {0.130, 10.0}, {1.0, 5.0}, {5.0, 5.0}, {10.0, 10.0}};
    RngStream rng(606, 0);
    bool ok = true;
    std::string detail;
    for (const auto& [dt, tau] : grid) {
      constexpr int n = 100000;
      int alive = 0;
      for (int i = 0; i < n; ++i) alive += sample_survival(rng, dt, tau);
      const double p = std::exp(-dt / tau);
      const double sigma = std::sqrt(p * (1 - p) / n);
      const double z = (static_cast<double>(alive) / n - p) / sigma;
      ok = ok && std::abs(z) <= 3.0;
      detail += fmt("(%.3g s, %.3g s) z=%+.2f ", dt, tau, z);
    }
    return Outcome{ok, detail};
  });

  report(7, "invariant soak (200 randomized replicas)", [] {
    std::mt19937_64 pick(707);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int conservation = 0, belief = 0, clock = 0;
    for (int r = 0; r < 200; ++r) {
      EngineModels m;
      m.transport.p_success = u(pick);
      m.loss = {0.5 + 20.0 * u(pick), 0.5 + 10.0 * u(pick)};
      m.extraction.mean_ensemble_at_full = 1.0 + 20.0 * u(pick);
      m.extraction.p_blockade = u(pick);
      m.reservoir_mean = 100.0 * u(pick);
      m.refill_rate = u(pick) < 0.3 ? 50.0 * u(pick) : 0.0;
      m.transport_failure = u(pick) < 0.5 ? TransportFailure::Lose : TransportFailure::Stay;
      RngStream rng(7, r);
      SystemState s = init_sequence(m, rng);
      const std::int64_t total = s.conserved_total();
      double last = s.clock;
      auto check = [&] {
        if (s.conserved_total() != total || s.reservoir.n_atoms < 0) ++conservation;
        if (!(s.clock > last)) ++clock;
        last = s.clock;
      };
      for (int c = 0; c < 15; ++c) {
        ++s.cycle_index;
        step_image(s, m, rng);
        if (!(s.belief == s.truth)) ++belief;
        check();
        // double occupancy raises std::logic_error inside the steps
        step_fill_targets(s, plan_target_fill(s.belief, m.layout), m, rng);
        check();
        step_refill_buffers(s, plan_buffer_refill(s.belief, m.layout), m, rng);
        check();
      }
    }

    auto c = default_config();
    c.replicas = 200;
    c.seed = 77;
    const auto r1 = run_experiment(c);
    int monotone = 0;
    for (std::size_t i = 1; i < r1.stats.cycles.size(); ++i) {
      if (r1.stats.cycles[i].success.rate < r1.stats.cycles[i - 1].success.rate) ++monotone;
    }
    const auto base = std::filesystem::temp_directory_path() / "tweezer_acceptance";
    std::filesystem::remove_all(base);
    write_outputs(r1, c, (base / "a").string());
    c.threads = 3;
    write_outputs(run_experiment(c), c, (base / "b").string());
    const bool same = slurp(base / "a" / "fig4.csv") == slurp(base / "b" / "fig4.csv") &&
                      slurp(base / "a" / "events.csv") == slurp(base / "b" / "events.csv");
    std::filesystem::remove_all(base);

    const bool ok = conservation == 0 && belief == 0 && clock == 0 && monotone == 0 && same;
    return Outcome{ok, fmt("conservation %d, belief %d, clock %d, monotonicity %d violations", conservation,
                           belief, clock, monotone) +
                           (same ? ", CSV byte-identical" : ", CSV differs")};
  });

  report(8, "ideal limit (target complete at cycle 3 imaging in 100% of replicas)", [] {
    ExperimentConfig c;
    c.replicas = 500;
    c.cycles = 5;
    c.models.loss = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    c.models.transport.p_success = 1.0;
    c.models.extraction.mean_ensemble_at_full = 40.0;
    c.models.reservoir_mean = 1e9;
    c.p_blockade = 1.0;
    c.resolve();
    const auto r = run_experiment(c, false);
    const auto& cy = r.stats.cycles;
    const bool ok = cy[0].success.rate == 0.0 && cy[1].success.rate == 0.0 && cy[2].success.rate == 1.0;
    return Outcome{ok, fmt("success at cycles 1..3: %.3f %.3f %.3f", cy[0].success.rate, cy[1].success.rate,
                           cy[2].success.rate)};
  });

  std::printf("%s: %d criterion(s) failed\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
  return failures == 0 ? 0 : 1;
}
