#include "tweezer/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace tweezer {

std::size_t Occupancy::count() const {
  return static_cast<std::size_t>(std::count(occupied_.begin(), occupied_.end(), 1));
}

std::size_t Occupancy::count(const ArrayLayout& layout, SiteRole role) const {
  std::size_t n = 0;
  for (std::size_t i : layout.indices_with_role(role)) n += occupied(i) ? 1 : 0;
  return n;
}

std::string Occupancy::to_mask() const {
  std::string s(occupied_.size(), '0');
  for (std::size_t i = 0; i < occupied_.size(); ++i) {
    if (occupied_[i]) s[i] = '1';
  }
  return s;
}

Occupancy Occupancy::from_mask(const std::string& mask) {
  Occupancy occ(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] != '0' && mask[i] != '1') throw std::invalid_argument("occupancy mask: bad character");
    occ.set(i, mask[i] == '1');
  }
  return occ;
}

FillStrategy parse_fill_strategy(const std::string& text) {
  if (text == "global") return FillStrategy::GlobalGreedy;
  if (text == "per-vacancy") return FillStrategy::PerVacancy;
  throw std::invalid_argument("unknown planner strategy '" + text + "' (expected global|per-vacancy)");
}

std::string to_string(FillStrategy s) {
  return s == FillStrategy::GlobalGreedy ? "global" : "per-vacancy";
}

MoveDuration parse_move_duration(const std::string& text) {
  if (text == "constant") return MoveDuration::Constant;
  if (text == "distance") return MoveDuration::Distance;
  throw std::invalid_argument("unknown move duration mode '" + text + "' (expected constant|distance)");
}

std::string to_string(MoveDuration d) {
  return d == MoveDuration::Constant ? "constant" : "distance";
}

namespace {

// Distances within this relative band count as ties; mirror-image sites of a
// lattice differ in the last bits otherwise.
constexpr double kTieTolerance = 1e-9;

bool same_distance(double a, double b) {
  return std::abs(a - b) <= kTieTolerance * std::max({1.0, std::abs(a), std::abs(b)});
}

// a strictly shorter than b, outside the tie band
bool shorter(double a, double b) { return a < b && !same_distance(a, b); }

std::vector<int> keys_or_indices(const std::vector<int>& keys, std::size_t n) {
  if (keys.empty()) {
    std::vector<int> out(n);
    std::iota(out.begin(), out.end(), 0);
    return out;
  }
  if (keys.size() != n) throw std::invalid_argument("assignment: key list size mismatch");
  return keys;
}

}  // namespace

Assignment greedy_assignment(const std::vector<Position>& vacancies,
                             const std::vector<Position>& sources, FillStrategy strategy,
                             const std::vector<int>& vacancy_keys,
                             const std::vector<int>& source_keys) {
  const auto vkey = keys_or_indices(vacancy_keys, vacancies.size());
  const auto skey = keys_or_indices(source_keys, sources.size());

  std::vector<bool> vac_used(vacancies.size(), false);
  std::vector<bool> src_used(sources.size(), false);
  const std::size_t n_moves = std::min(vacancies.size(), sources.size());

  Assignment out;
  out.pairs.reserve(n_moves);

  if (strategy == FillStrategy::PerVacancy) {
    std::vector<std::size_t> order(vacancies.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vkey[a] < vkey[b]; });
    for (std::size_t v : order) {
      if (out.pairs.size() == n_moves) break;
      std::size_t best = sources.size();
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t s = 0; s < sources.size(); ++s) {
        if (src_used[s]) continue;
        const double d = distance(vacancies[v], sources[s]);
        if (best == sources.size() || shorter(d, best_d) || (same_distance(d, best_d) && skey[s] < skey[best])) {
          best = s;
          best_d = d;
        }
      }
      src_used[best] = true;
      out.pairs.emplace_back(v, best);
      out.total_distance += best_d;
    }
    return out;
  }

  while (out.pairs.size() < n_moves) {
    std::size_t best_v = 0, best_s = 0;
    double best_d = std::numeric_limits<double>::infinity();
    bool found = false;
    for (std::size_t v = 0; v < vacancies.size(); ++v) {
      if (vac_used[v]) continue;
      for (std::size_t s = 0; s < sources.size(); ++s) {
        if (src_used[s]) continue;
        const double d = distance(vacancies[v], sources[s]);
        const bool better =
            !found || shorter(d, best_d) ||
            (same_distance(d, best_d) &&
             (vkey[v] < vkey[best_v] || (vkey[v] == vkey[best_v] && skey[s] < skey[best_s])));
        if (better) {
          found = true;
          best_v = v;
          best_s = s;
          best_d = d;
        }
      }
    }
    vac_used[best_v] = true;
    src_used[best_s] = true;
    out.pairs.emplace_back(best_v, best_s);
    out.total_distance += best_d;
  }
  return out;
}

Assignment exhaustive_assignment(const std::vector<Position>& vacancies,
                                 const std::vector<Position>& sources) {
  // Enumerate injections from the smaller side into the larger one.
  const bool rows_are_vacancies = vacancies.size() <= sources.size();
  const auto& rows = rows_are_vacancies ? vacancies : sources;
  const auto& cols = rows_are_vacancies ? sources : vacancies;

  std::vector<std::size_t> current(rows.size()), best(rows.size());
  std::vector<bool> taken(cols.size(), false);
  double best_total = std::numeric_limits<double>::infinity();

  auto recurse = [&](auto&& self, std::size_t r, double acc) -> void {
    if (acc >= best_total) return;
    if (r == rows.size()) {
      best_total = acc;
      best = current;
      return;
    }
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (taken[c]) continue;
      taken[c] = true;
      current[r] = c;
      self(self, r + 1, acc + distance(rows[r], cols[c]));
      taken[c] = false;
    }
  };
  recurse(recurse, 0, 0.0);

  Assignment out;
  if (rows.empty()) return out;
  out.total_distance = best_total;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.pairs.emplace_back(rows_are_vacancies ? std::make_pair(r, best[r]) : std::make_pair(best[r], r));
  }
  return out;
}

Assignment hungarian_assignment(const std::vector<Position>& vacancies,
                                const std::vector<Position>& sources) {
  const bool rows_are_vacancies = vacancies.size() <= sources.size();
  const auto& rows = rows_are_vacancies ? vacancies : sources;
  const auto& cols = rows_are_vacancies ? sources : vacancies;
  const std::size_t n = rows.size();
  const std::size_t m = cols.size();
  Assignment out;
  if (n == 0) return out;

  // Shortest augmenting path with potentials, 1-based with a virtual column 0.
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> match(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = match[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = distance(rows[i0 - 1], cols[j - 1]) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<std::size_t> row_to_col(n, 0);
  for (std::size_t j = 1; j <= m; ++j) {
    if (match[j] != 0) row_to_col[match[j] - 1] = j - 1;
  }
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t c = row_to_col[r];
    out.total_distance += distance(rows[r], cols[c]);
    out.pairs.emplace_back(rows_are_vacancies ? std::make_pair(r, c) : std::make_pair(c, r));
  }
  return out;
}

Assignment optimal_assignment(const std::vector<Position>& vacancies,
                              const std::vector<Position>& sources) {
  if (vacancies.size() <= 8 && sources.size() <= 8) return exhaustive_assignment(vacancies, sources);
  return hungarian_assignment(vacancies, sources);
}

double move_duration(double dist_um, const TransportModel& transport, const PlannerOptions& opts) {
  if (opts.duration == MoveDuration::Distance) {
    return 2.0 * transport.t_ramp + dist_um / opts.speed_um_per_s;
  }
  return transport.move_duration();
}

MovePlan plan_target_fill(const Occupancy& belief, const ArrayLayout& layout,
                          const TransportModel& transport, const PlannerOptions& opts) {
  if (!belief.covers(layout)) throw std::invalid_argument("plan_target_fill: belief does not cover layout");

  std::vector<Position> vac_pos, src_pos;
  std::vector<int> vac_ids, src_ids;
  for (const auto& site : layout.sites()) {
    const bool occ = belief.occupied(layout.index_of(site.id));
    if (site.role == SiteRole::Target && !occ) {
      vac_pos.push_back(site.pos);
      vac_ids.push_back(site.id);
    } else if (site.role == SiteRole::Buffer && occ) {
      src_pos.push_back(site.pos);
      src_ids.push_back(site.id);
    }
  }

  const Assignment a = greedy_assignment(vac_pos, src_pos, opts.strategy, vac_ids, src_ids);
  MovePlan plan;
  for (const auto& [v, s] : a.pairs) {
    const double d = distance(src_pos[s], vac_pos[v]);
    plan.moves.push_back({src_ids[s], vac_ids[v], d, move_duration(d, transport, opts)});
    plan.total_distance += d;
  }
  return plan;
}

std::vector<int> plan_buffer_refill(const Occupancy& belief, const ArrayLayout& layout) {
  if (!belief.covers(layout)) throw std::invalid_argument("plan_buffer_refill: belief does not cover layout");
  std::vector<std::pair<double, int>> empty;
  for (std::size_t i : layout.indices_with_role(SiteRole::Buffer)) {
    if (!belief.occupied(i)) {
      const auto& s = layout.site(i);
      empty.emplace_back(distance(layout.reservoir_pos(), s.pos), s.id);
    }
  }
  std::sort(empty.begin(), empty.end(), [](const auto& a, const auto& b) {
    if (!same_distance(a.first, b.first)) return a.first < b.first;
    return a.second < b.second;
  });
  std::vector<int> out;
  out.reserve(empty.size());
  for (const auto& e : empty) out.push_back(e.second);
  return out;
}

}  // namespace tweezer
