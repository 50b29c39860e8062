#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tweezer/geometry.hpp"
#include "tweezer/stochastic.hpp"

namespace tweezer {

/// Per-site occupancy, indexed like ArrayLayout::sites().
class Occupancy {
 public:
  Occupancy() = default;
  explicit Occupancy(std::size_t n_sites) : occupied_(n_sites, 0) {}

  std::size_t size() const { return occupied_.size(); }
  bool occupied(std::size_t index) const { return occupied_.at(index) != 0; }
  void set(std::size_t index, bool value) { occupied_.at(index) = value ? 1 : 0; }
  std::size_t count() const;
  std::size_t count(const ArrayLayout& layout, SiteRole role) const;
  bool covers(const ArrayLayout& layout) const { return size() == layout.size(); }

  /// One character per site in layout order, '1' occupied.
  std::string to_mask() const;
  static Occupancy from_mask(const std::string& mask);

  friend bool operator==(const Occupancy&, const Occupancy&) = default;

 private:
  std::vector<std::uint8_t> occupied_;
};

struct Move {
  std::optional<int> src;  // nullopt: the reservoir
  int dst = 0;
  double dist_um = 0.0;
  double duration_s = 0.0;

  bool from_reservoir() const { return !src.has_value(); }
};

struct MovePlan {
  std::vector<Move> moves;
  double total_distance = 0.0;

  bool empty() const { return moves.empty(); }
  std::size_t size() const { return moves.size(); }
};

enum class FillStrategy {
  GlobalGreedy,  // repeatedly take the globally shortest (vacancy, source) pair
  PerVacancy,    // vacancies in id order, each takes its nearest free source
};

enum class MoveDuration {
  Constant,  // 2 ramps + fixed translation
  Distance,  // 2 ramps + dist / speed
};

FillStrategy parse_fill_strategy(const std::string& text);
std::string to_string(FillStrategy s);
MoveDuration parse_move_duration(const std::string& text);
std::string to_string(MoveDuration d);

struct PlannerOptions {
  FillStrategy strategy = FillStrategy::GlobalGreedy;
  MoveDuration duration = MoveDuration::Constant;
  double speed_um_per_s = 2.0e5;  // MoveDuration::Distance only; ~62 µm per 310 µs
};

/// Matching between two point sets; pairs are (vacancy index, source index) in
/// the order chosen.
struct Assignment {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  double total_distance = 0.0;
};

/// Greedy shortest-move matching. Ties are broken by smaller vacancy key, then
/// smaller source key; keys default to the input indices.
Assignment greedy_assignment(const std::vector<Position>& vacancies,
                             const std::vector<Position>& sources,
                             FillStrategy strategy = FillStrategy::GlobalGreedy,
                             const std::vector<int>& vacancy_keys = {},
                             const std::vector<int>& source_keys = {});

/// Minimum total-distance matching of size min(|vacancies|, |sources|).
/// Exhaustive search up to 8x8, Hungarian algorithm above.
Assignment optimal_assignment(const std::vector<Position>& vacancies,
                              const std::vector<Position>& sources);

Assignment exhaustive_assignment(const std::vector<Position>& vacancies,
                                 const std::vector<Position>& sources);
Assignment hungarian_assignment(const std::vector<Position>& vacancies,
                                const std::vector<Position>& sources);

double move_duration(double dist_um, const TransportModel& transport, const PlannerOptions& opts);

/// Buffer -> target moves filling believed-empty target sites from
/// believed-occupied buffer sites. Throws std::invalid_argument if the belief
/// does not cover the layout.
MovePlan plan_target_fill(const Occupancy& belief, const ArrayLayout& layout,
                          const TransportModel& transport = {}, const PlannerOptions& opts = {});

/// Believed-empty buffer site ids, nearest to the reservoir first (ties by id).
std::vector<int> plan_buffer_refill(const Occupancy& belief, const ArrayLayout& layout);

}  // namespace tweezer
