#include "tweezer/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tweezer {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t RngStream::derive_seed(std::uint64_t master_seed, std::uint64_t replica) {
  return splitmix64(splitmix64(master_seed) ^ splitmix64(replica + 0x632BE59BD9B4E019ull));
}

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t replica)
    : engine_(derive_seed(master_seed, replica)) {}

double RngStream::uniform() {
  // 53 random bits -> [0, 1)
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

bool RngStream::bernoulli(double p) {
  if (p >= 1.0) return true;
  if (p <= 0.0) return false;
  return uniform() < p;
}

std::int64_t RngStream::poisson(double mean) {
  if (!(mean > 0.0)) return 0;
  std::poisson_distribution<std::int64_t> dist(mean);
  return dist(engine_);
}

std::int64_t RngStream::binomial(std::int64_t n, double p) {
  if (n <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  std::binomial_distribution<std::int64_t> dist(n, p);
  return dist(engine_);
}

double ExtractionModel::blockade_for_plateau(double plateau, double mean_ensemble_at_full) {
  const double nonempty = -std::expm1(-mean_ensemble_at_full);
  if (!(nonempty > 0.0)) return 1.0;
  return std::min(1.0, plateau / nonempty);
}

double ExtractionModel::delivery_probability(double n_atoms) const {
  const double lambda = mean_ensemble_at_full * std::min(1.0, std::max(0.0, n_atoms) / n_reference);
  return p_blockade * -std::expm1(-lambda);
}

double survival_probability(double dt, double lifetime) {
  if (!(dt >= 0.0)) throw std::invalid_argument("survival_probability: dt must be >= 0");
  if (!(lifetime > 0.0)) throw std::invalid_argument("survival_probability: lifetime must be > 0");
  return std::exp(-dt / lifetime);
}

bool sample_survival(RngStream& rng, double dt, double lifetime) {
  return rng.bernoulli(survival_probability(dt, lifetime));
}

bool sample_transport(RngStream& rng, const TransportModel& model) {
  return rng.bernoulli(model.p_success);
}

ExtractionResult sample_extraction(RngStream& rng, ReservoirState& reservoir,
                                   const ExtractionModel& model) {
  if (reservoir.n_atoms <= 0) return {};
  const double fill = std::min(1.0, static_cast<double>(reservoir.n_atoms) / model.n_reference);
  const double lambda = model.mean_ensemble_at_full * fill;
  const std::int64_t k = std::min(rng.poisson(lambda), reservoir.n_atoms);
  reservoir.n_atoms -= k;
  ExtractionResult out;
  out.atoms_removed = k;
  out.single_atom_delivered = k >= 1 && rng.bernoulli(model.p_blockade);
  return out;
}

DecayResult reservoir_decay(RngStream& rng, ReservoirState& reservoir, double dt,
                            const LossModel& loss) {
  if (!(dt >= 0.0)) throw std::invalid_argument("reservoir_decay: dt must be >= 0");
  DecayResult out;
  if (reservoir.n_atoms > 0 && dt > 0.0) {
    const double p_survive = survival_probability(dt, loss.lifetime_reservoir);
    const std::int64_t kept = rng.binomial(reservoir.n_atoms, p_survive);
    out.lost = reservoir.n_atoms - kept;
    reservoir.n_atoms = kept;
  }
  if (reservoir.refill_rate > 0.0 && dt > 0.0) {
    const double expected = reservoir.refill_rate * dt;
    const double whole = std::floor(expected);
    out.added = static_cast<std::int64_t>(whole) + (rng.bernoulli(expected - whole) ? 1 : 0);
    reservoir.n_atoms += out.added;
  }
  return out;
}

}  // namespace tweezer
