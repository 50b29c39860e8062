#include "tweezer/engine.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace tweezer {

TransportFailure parse_transport_failure(const std::string& text) {
  if (text == "lose") return TransportFailure::Lose;
  if (text == "stay") return TransportFailure::Stay;
  throw std::invalid_argument("unknown transport failure mode '" + text + "' (expected lose|stay)");
}

std::string to_string(TransportFailure f) { return f == TransportFailure::Lose ? "lose" : "stay"; }

namespace {

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw std::invalid_argument("invalid config key '" + key + "': " + what);
}

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

std::string format_id(const std::optional<int>& id) { return id ? std::to_string(*id) : "R"; }

}  // namespace

void EngineModels::validate() const {
  require(loss.lifetime_array > 0.0, "stochastic.lifetime_array_s", "must be > 0");
  require(loss.lifetime_reservoir > 0.0, "stochastic.lifetime_reservoir_s", "must be > 0");
  require(is_probability(transport.p_success), "stochastic.p_transport", "must be in [0, 1]");
  require(transport.t_ramp >= 0.0, "timing.t_ramp", "must be >= 0");
  require(transport.t_move >= 0.0, "timing.t_move", "must be >= 0");
  require(is_probability(extraction.p_blockade), "stochastic.p_blockade", "must be in [0, 1]");
  require(extraction.mean_ensemble_at_full > 0.0 && std::isfinite(extraction.mean_ensemble_at_full),
          "stochastic.mean_ensemble_at_full", "must be finite and > 0");
  require(extraction.n_reference > 0.0, "stochastic.n_reference", "must be > 0");
  require(reservoir_mean >= 0.0 && std::isfinite(reservoir_mean), "stochastic.reservoir_mean",
          "must be finite and >= 0");
  require(refill_rate >= 0.0 && std::isfinite(refill_rate), "stochastic.refill_rate", "must be finite and >= 0");
  require(timing.t_mot >= 0.0, "timing.t_mot", "must be >= 0");
  require(timing.t_molasses >= 0.0, "timing.t_molasses", "must be >= 0");
  require(timing.t_reservoir_transfer >= 0.0, "timing.t_reservoir_transfer", "must be >= 0");
  require(timing.t_image >= 0.0, "timing.t_image", "must be >= 0");
  require(timing.t_analysis_fill >= 0.0, "timing.t_analysis_fill", "must be >= 0");
  require(timing.t_buffer_refill >= 0.0, "timing.t_buffer_refill", "must be >= 0");
  require(timing.image_loss_time() >= 0.0, "timing.image_loss_window", "must be >= 0");
  require(planner.speed_um_per_s > 0.0, "planner.speed_um_per_s", "must be > 0");
  require(layout.count(SiteRole::Target) > 0, "layout", "needs at least one target site");
}

void EventLog::step(const SystemState& s, const std::string& name) {
  if (!enabled_) return;
  EventRow r;
  r.replica = replica_;
  r.cycle = s.cycle_index;
  r.step = name;
  r.clock = s.clock;
  r.reservoir = s.reservoir.n_atoms;
  r.truth_mask = s.truth.to_mask();
  r.belief_mask = s.belief.to_mask();
  rows_.push_back(std::move(r));
}

void EventLog::move(const SystemState& s, const std::string& name, int seq, const Move& m,
                    const std::string& outcome) {
  if (!enabled_) return;
  EventRow r;
  r.replica = replica_;
  r.cycle = s.cycle_index;
  r.step = name;
  r.seq = seq;
  r.clock = s.clock;
  r.reservoir = s.reservoir.n_atoms;
  r.src = format_id(m.src);
  r.dst = std::to_string(m.dst);
  r.dist_um = m.dist_um;
  r.duration_us = m.duration_s * 1e6;
  r.outcome = outcome;
  rows_.push_back(std::move(r));
}

namespace {

// Loss of trapped atoms over dt, then reservoir decay over the same interval.
void decay_all(SystemState& state, double array_dt, double reservoir_dt, const EngineModels& models,
               RngStream& rng) {
  if (array_dt > 0.0) {
    const double p = survival_probability(array_dt, models.loss.lifetime_array);
    for (std::size_t i = 0; i < state.truth.size(); ++i) {
      if (state.truth.occupied(i) && !rng.bernoulli(p)) {
        state.truth.set(i, false);
        ++state.ledger.lost_array_decay;
      }
    }
  }
  const DecayResult d = reservoir_decay(rng, state.reservoir, reservoir_dt, models.loss);
  state.ledger.lost_reservoir_decay += d.lost;
  state.ledger.refill_added += d.added;
}

}  // namespace

SystemState init_sequence(const EngineModels& models, RngStream& rng, EventLog* log) {
  models.validate();
  SystemState s;
  s.truth = Occupancy(models.layout.size());
  s.belief = Occupancy(models.layout.size());
  s.reservoir.n_atoms = rng.poisson(models.reservoir_mean);
  s.reservoir.refill_rate = models.refill_rate;
  s.ledger.initial_reservoir = s.reservoir.n_atoms;
  s.clock = models.timing.preparation_time();
  s.cycle_index = 0;
  if (log) log->step(s, "init");
  return s;
}

Observation step_image(SystemState& state, const EngineModels& models, RngStream& rng, EventLog* log) {
  const double dt = models.timing.t_image;
  decay_all(state, models.timing.image_loss_time(), dt, models, rng);
  state.clock += dt;
  state.belief = state.truth;

  Observation obs;
  obs.occupancy = state.truth;
  obs.n_reservoir = state.reservoir.n_atoms;
  obs.clock = state.clock;
  obs.n_buffer = static_cast<int>(state.truth.count(models.layout, SiteRole::Buffer));
  obs.n_target = static_cast<int>(state.truth.count(models.layout, SiteRole::Target));
  obs.target_complete = obs.n_target == static_cast<int>(models.layout.count(SiteRole::Target));
  if (log) log->step(state, "image");
  return obs;
}

void step_fill_targets(SystemState& state, const MovePlan& plan, const EngineModels& models,
                       RngStream& rng, EventLog* log) {
  const auto& layout = models.layout;
  std::set<int> seen_src, seen_dst;
  std::vector<std::pair<std::size_t, std::size_t>> idx;
  for (const auto& m : plan.moves) {
    if (m.from_reservoir()) throw std::logic_error("fill plan: move sourced from the reservoir");
    const std::size_t si = layout.index_of(*m.src);
    const std::size_t di = layout.index_of(m.dst);
    if (!seen_src.insert(*m.src).second || !seen_dst.insert(m.dst).second)
      throw std::logic_error("fill plan: site used twice");
    if (!state.belief.occupied(si))
      throw std::logic_error("fill plan: source " + std::to_string(*m.src) + " is believed empty");
    if (state.belief.occupied(di))
      throw std::logic_error("fill plan: destination " + std::to_string(m.dst) + " is believed occupied");
    idx.emplace_back(si, di);
  }

  for (std::size_t k = 0; k < plan.moves.size(); ++k) {
    const auto [si, di] = idx[k];
    std::string outcome;
    if (!state.truth.occupied(si)) {
      outcome = "null";
    } else if (sample_transport(rng, models.transport)) {
      if (state.truth.occupied(di))
        throw std::logic_error("fill: transport into an occupied trap " + std::to_string(plan.moves[k].dst));
      state.truth.set(si, false);
      state.truth.set(di, true);
      outcome = "delivered";
    } else if (models.transport_failure == TransportFailure::Lose) {
      state.truth.set(si, false);
      ++state.ledger.lost_transport;
      outcome = "lost";
    } else {
      outcome = "stayed";
    }
    state.belief.set(si, false);
    state.belief.set(di, true);
    if (log) log->move(state, "move", static_cast<int>(k), plan.moves[k], outcome);
  }

  const double dt = models.timing.t_analysis_fill;
  decay_all(state, dt, dt, models, rng);
  state.clock += dt;
  if (log) log->step(state, "fill");
}

int step_refill_buffers(SystemState& state, const std::vector<int>& refill_list,
                        const EngineModels& models, RngStream& rng, EventLog* log) {
  const auto& layout = models.layout;
  int delivered = 0;
  std::set<int> seen;
  for (std::size_t k = 0; k < refill_list.size(); ++k) {
    const int id = refill_list[k];
    const std::size_t i = layout.index_of(id);
    if (layout.site(i).role != SiteRole::Buffer)
      throw std::logic_error("refill: site " + std::to_string(id) + " is not a buffer trap");
    if (state.belief.occupied(i))
      throw std::logic_error("refill: site " + std::to_string(id) + " is believed occupied");
    if (!seen.insert(id).second) throw std::logic_error("refill: site listed twice");

    const ExtractionResult r = sample_extraction(rng, state.reservoir, models.extraction);
    state.ledger.extracted += r.atoms_removed;
    std::string outcome;
    if (r.single_atom_delivered && !state.truth.occupied(i)) {
      state.truth.set(i, true);
      state.ledger.lost_extraction += r.atoms_removed - 1;
      ++state.ledger.delivered;
      ++delivered;
      outcome = "delivered";
    } else {
      // An atom already sitting in the trap (stale belief) blocks the new one.
      state.ledger.lost_extraction += r.atoms_removed;
      outcome = r.atoms_removed == 0 ? "empty" : (r.single_atom_delivered ? "occupied" : "blockade");
    }
    if (log) {
      const Move m{std::nullopt, id, distance(layout.reservoir_pos(), layout.site(i).pos),
                   move_duration(distance(layout.reservoir_pos(), layout.site(i).pos), models.transport,
                                 models.planner)};
      log->move(state, "extract", static_cast<int>(k), m, outcome + ":" + std::to_string(r.atoms_removed));
    }
  }

  const double dt = models.timing.t_buffer_refill;
  decay_all(state, dt, dt, models, rng);
  state.clock += dt;
  if (log) log->step(state, "refill");
  return delivered;
}

CycleRecord run_cycle(SystemState& state, const EngineModels& models, RngStream& rng, EventLog* log) {
  const double start = state.clock;
  const std::int64_t extracted0 = state.ledger.extracted;
  const std::int64_t decay0 = state.ledger.lost_reservoir_decay;
  ++state.cycle_index;

  const Observation obs = step_image(state, models, rng, log);
  const MovePlan plan = plan_target_fill(state.belief, models.layout, models.transport, models.planner);
  step_fill_targets(state, plan, models, rng, log);
  const std::vector<int> refill = plan_buffer_refill(state.belief, models.layout);
  const int delivered = step_refill_buffers(state, refill, models, rng, log);

  CycleRecord rec;
  rec.cycle_index = state.cycle_index;
  rec.target_complete = obs.target_complete;
  rec.n_buffer_filled = obs.n_buffer;
  rec.n_target_filled = obs.n_target;
  rec.n_buffer_loaded = static_cast<int>(state.truth.count(models.layout, SiteRole::Buffer));
  rec.n_reservoir = obs.n_reservoir;
  rec.clock_at_image = obs.clock;
  rec.cycle_duration = state.clock - start;
  rec.moves_planned = static_cast<int>(plan.size());
  rec.refills_attempted = static_cast<int>(refill.size());
  rec.atoms_delivered = delivered;
  rec.extracted = state.ledger.extracted - extracted0;
  rec.reservoir_decay_lost = state.ledger.lost_reservoir_decay - decay0;
  return rec;
}

Realization run_realization(const EngineModels& models, std::uint64_t master_seed, int replica,
                            int n_cycles, EventLog* log) {
  if (n_cycles < 1) throw std::invalid_argument("run_realization: n_cycles must be >= 1");
  RngStream rng(master_seed, static_cast<std::uint64_t>(replica));
  SystemState state = init_sequence(models, rng, log);
  Realization out;
  out.start_clock = state.clock;
  out.records.reserve(static_cast<std::size_t>(n_cycles));
  for (int c = 0; c < n_cycles; ++c) out.records.push_back(run_cycle(state, models, rng, log));
  out.ledger = state.ledger;
  return out;
}

}  // namespace tweezer
