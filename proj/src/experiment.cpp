#include "tweezer/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace tweezer {

double binomial_half_width(std::size_t successes, std::size_t trials, CiMethod method) {
  if (trials == 0) return 0.0;
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  if (method == CiMethod::Normal) return std::sqrt(p * (1.0 - p) / n);
  // Wilson score interval, z = 1
  const double denom = 1.0 + 1.0 / n;
  return std::sqrt(p * (1.0 - p) / n + 1.0 / (4.0 * n * n)) / denom;
}

std::vector<RateEstimate> cumulative_success_rate(const std::vector<std::vector<CycleRecord>>& records,
                                                  SuccessDefinition definition, CiMethod method) {
  if (records.empty()) return {};
  const std::size_t n_cycles = records.front().size();
  for (const auto& r : records) {
    if (r.size() != n_cycles) throw std::invalid_argument("cumulative_success_rate: replicas have unequal cycle counts");
  }
  std::vector<std::size_t> successes(n_cycles, 0);
  for (const auto& r : records) {
    bool achieved = false;
    for (std::size_t c = 0; c < n_cycles; ++c) {
      achieved = definition == SuccessDefinition::FirstAchievement ? (achieved || r[c].target_complete)
                                                                   : r[c].target_complete;
      if (achieved) ++successes[c];
    }
  }
  std::vector<RateEstimate> out(n_cycles);
  for (std::size_t c = 0; c < n_cycles; ++c) {
    out[c].rate = static_cast<double>(successes[c]) / static_cast<double>(records.size());
    out[c].half_width = binomial_half_width(successes[c], records.size(), method);
  }
  return out;
}

ExperimentStats compute_stats(const std::vector<Realization>& realizations, SuccessDefinition definition,
                              CiMethod method, int n_buffer_sites) {
  ExperimentStats st;
  st.replicas = static_cast<int>(realizations.size());
  if (realizations.empty()) return st;

  std::vector<std::vector<CycleRecord>> records;
  records.reserve(realizations.size());
  for (const auto& r : realizations) records.push_back(r.records);
  const auto success = cumulative_success_rate(records, definition, method);

  const std::size_t n_cycles = success.size();
  const double n = static_cast<double>(realizations.size());
  std::vector<double> fill_sum(n_cycles, 0.0), fill_sq(n_cycles, 0.0), res_sum(n_cycles, 0.0),
      res_sq(n_cycles, 0.0);
  double duration_sum = 0.0;
  for (const auto& r : realizations) {
    for (std::size_t c = 0; c < n_cycles; ++c) {
      const double f = static_cast<double>(r.records[c].n_buffer_loaded) / n_buffer_sites;
      const double q = static_cast<double>(r.records[c].n_reservoir);
      fill_sum[c] += f;
      fill_sq[c] += f * f;
      res_sum[c] += q;
      res_sq[c] += q * q;
      duration_sum += r.records[c].cycle_duration;
    }
    st.mean_delivered += static_cast<double>(r.ledger.delivered);
    st.mean_extracted += static_cast<double>(r.ledger.extracted);
    st.mean_start_clock += r.start_clock;
  }
  st.mean_delivered /= n;
  st.mean_extracted /= n;
  st.mean_start_clock /= n;
  st.mean_cycle_duration = duration_sum / (n * static_cast<double>(n_cycles));

  auto sample_sd = [n](double sum, double sq) {
    if (n < 2.0) return 0.0;
    const double var = (sq - sum * sum / n) / (n - 1.0);
    return var > 0.0 ? std::sqrt(var) : 0.0;
  };
  const double res_ref = res_sum[0] / n;
  for (std::size_t c = 0; c < n_cycles; ++c) {
    CycleStats cs;
    cs.cycle = static_cast<int>(c) + 1;
    cs.success = success[c];
    cs.buffer_fill_mean = fill_sum[c] / n;
    cs.buffer_fill_ci = sample_sd(fill_sum[c], fill_sq[c]) / std::sqrt(n);
    if (res_ref > 0.0) {
      cs.reservoir_norm = res_sum[c] / n / res_ref;
      cs.reservoir_std = sample_sd(res_sum[c], res_sq[c]) / res_ref;
    }
    st.cycles.push_back(cs);
  }
  return st;
}

ExperimentResult run_experiment(const ExperimentConfig& config, bool collect_events) {
  config.validate();
  const int n = config.replicas;
  std::vector<Realization> realizations(static_cast<std::size_t>(n));
  std::vector<std::vector<EventRow>> logs(collect_events ? static_cast<std::size_t>(n) : 0);

  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        EventLog log(i, collect_events);
        realizations[i] = run_realization(config.models, config.seed, i, config.cycles, &log);
        if (collect_events) logs[i] = std::move(log.rows());
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };

  int threads = config.threads > 0 ? config.threads : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, n);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  ExperimentResult out;
  out.stats = compute_stats(realizations, config.success, config.ci,
                            static_cast<int>(config.models.layout.count(SiteRole::Buffer)));
  out.realizations = std::move(realizations);
  for (auto& l : logs) {
    out.events.insert(out.events.end(), std::make_move_iterator(l.begin()), std::make_move_iterator(l.end()));
  }
  return out;
}

CalibrationResult calibrate_depletion(const ExperimentConfig& config, double target_delivered, double tolerance,
                                      double low, double high, int max_iterations) {
  CalibrationResult res;
  auto evaluate = [&](double mean_full) {
    ExperimentConfig c = config;
    c.models.extraction.mean_ensemble_at_full = mean_full;
    c.resolve();
    ++res.evaluations;
    return run_experiment(c, false).stats.mean_delivered;
  };

  // Delivered atoms fall as larger ensembles drain the reservoir faster.
  double lo = low, hi = high;
  for (int it = 0; it < max_iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double got = evaluate(mid);
    res.mean_ensemble_at_full = mid;
    res.achieved_delivered = got;
    if (std::abs(got - target_delivered) <= tolerance) {
      res.converged = true;
      return res;
    }
    if (got > target_delivered) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-6 * (high - low)) break;
  }
  res.delivered_at_low = evaluate(low);
  res.delivered_at_high = evaluate(high);
  return res;
}

namespace {

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << content;
  out.flush();
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

}  // namespace

std::string fig4_csv(const ExperimentStats& stats) {
  std::ostringstream out;
  out << "cycle,success_rate,success_ci,buffer_fill_mean,buffer_fill_ci,reservoir_norm,reservoir_std\n";
  for (const auto& c : stats.cycles) {
    out << c.cycle << ',' << fixed(c.success.rate) << ',' << fixed(c.success.half_width) << ','
        << fixed(c.buffer_fill_mean) << ',' << fixed(c.buffer_fill_ci) << ',' << fixed(c.reservoir_norm) << ','
        << fixed(c.reservoir_std) << '\n';
  }
  return out.str();
}

std::string events_csv(const std::vector<EventRow>& events) {
  std::ostringstream out;
  out << "replica,cycle,step,seq,clock_s,reservoir,truth_mask,belief_mask,src,dst,dist_um,duration_us,outcome\n";
  for (const auto& e : events) {
    out << e.replica << ',' << e.cycle << ',' << e.step << ',';
    if (e.seq >= 0) out << e.seq;
    out << ',' << fixed(e.clock) << ',' << e.reservoir << ',' << e.truth_mask << ',' << e.belief_mask << ','
        << e.src << ',' << e.dst << ',';
    if (e.seq >= 0) out << fixed(e.dist_um, 3) << ',' << fixed(e.duration_us, 1);
    else out << ',';
    out << ',' << e.outcome << '\n';
  }
  return out.str();
}

void write_outputs(const ExperimentResult& result, const ExperimentConfig& config, const std::string& out_dir) {
  namespace fs = std::filesystem;
  const fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + out_dir + "': " + ec.message());

  write_file(dir / "fig4.csv", fig4_csv(result.stats));
  write_file(dir / "events.csv", events_csv(result.events));

  std::ostringstream meta;
  meta << "; resolved configuration of this run; usable as --config input\n"
       << "; version " << kVersion << "\n"
       << "; reservoir two-body losses are folded into lifetime_reservoir_s\n";
  for (const auto& [k, v] : config.models.layout.metadata()) meta << "; layout." << k << " = " << v << "\n";
  meta << "; p_blockade (resolved) = " << format_double(config.models.extraction.p_blockade) << "\n\n";
  meta << write_config(config);
  write_file(dir / "run_meta.ini", meta.str());
}

}  // namespace tweezer
