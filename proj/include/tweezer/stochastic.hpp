#pragma once

#include <cstdint>
#include <random>

namespace tweezer {

/// Deterministic pseudo-random stream for one replica.
///
/// The engine state is seeded from (master_seed, replica) through a splitmix64
/// mix, so replica i draws the same sequence no matter how many other replicas
/// exist or in which order they run.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t replica);

  static std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t replica);

  double uniform();
  bool bernoulli(double p);
  std::int64_t poisson(double mean);
  std::int64_t binomial(std::int64_t n, double p);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

struct LossModel {
  double lifetime_array = 10.0;     // s
  double lifetime_reservoir = 5.0;  // s
};

struct TransportModel {
  double p_success = 0.753;
  double t_ramp = 130e-6;  // s, one intensity ramp
  double t_move = 310e-6;  // s

  double move_duration() const { return 2.0 * t_ramp + t_move; }
};

/// Collisional-blockade extraction from the reservoir.
///
/// The extracted ensemble size is Poisson with mean
/// mean_ensemble_at_full * min(1, n / n_reference); a nonempty ensemble yields
/// one atom with probability p_blockade.
struct ExtractionModel {
  double p_blockade = 0.596;
  double mean_ensemble_at_full = 8.0;
  double n_reference = 80.0;

  /// p_blockade that makes the plateau delivery probability equal `plateau`,
  /// clamped to 1.
  static double blockade_for_plateau(double plateau, double mean_ensemble_at_full);

  /// Delivery probability at a reservoir population of n atoms (ignoring the
  /// k <= n truncation, which only matters for n close to 0).
  double delivery_probability(double n_atoms) const;
};

struct ReservoirState {
  std::int64_t n_atoms = 0;
  double refill_rate = 0.0;  // atoms / s
};

struct ExtractionResult {
  std::int64_t atoms_removed = 0;
  bool single_atom_delivered = false;

  friend bool operator==(const ExtractionResult&, const ExtractionResult&) = default;
};

struct DecayResult {
  std::int64_t lost = 0;
  std::int64_t added = 0;
};

/// exp(-dt / lifetime). Throws std::invalid_argument for dt < 0 or lifetime <= 0.
double survival_probability(double dt, double lifetime);

bool sample_survival(RngStream& rng, double dt, double lifetime);

bool sample_transport(RngStream& rng, const TransportModel& model);

/// Extracts one ensemble from `reservoir`, decrementing its atom count.
ExtractionResult sample_extraction(RngStream& rng, ReservoirState& reservoir,
                                   const ExtractionModel& model);

/// Binomial thinning of the reservoir over dt, then stochastic rounding of
/// refill_rate * dt added atoms.
DecayResult reservoir_decay(RngStream& rng, ReservoirState& reservoir, double dt,
                            const LossModel& loss);

}  // namespace tweezer
