#include <doctest.h>

#include <stdexcept>

#include <cstdlib>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "oracle.hpp"
#include "tweezer/planner.hpp"

using namespace tweezer;

namespace {

Occupancy belief_from_bits(const ArrayLayout& layout, unsigned bits) {
  Occupancy occ(layout.size());
  for (std::size_t i = 0; i < layout.size(); ++i) occ.set(i, (bits >> i) & 1u);
  return occ;
}

std::vector<Position> random_points(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 100.0);
  std::vector<Position> out(n);
  for (auto& p : out) p = {u(rng), u(rng)};
  return out;
}

std::string describe(const MovePlan& plan) {
  std::ostringstream out;
  for (const auto& m : plan.moves) out << *m.src << '>' << m.dst << ' ';
  return out.str();
}

}  // namespace

TEST_CASE("fully occupied target gives an empty plan") {
  const auto layout = paper_layout();
  Occupancy b(layout.size());
  for (std::size_t i = 0; i < layout.size(); ++i) b.set(i, true);
  const auto plan = plan_target_fill(b, layout);
  CHECK(plan.empty());
  CHECK(plan.total_distance == 0.0);
}

TEST_CASE("four buffer atoms fill four of six vacancies") {
  const auto layout = paper_layout();
  Occupancy b(layout.size());
  for (int id : {0, 2, 4, 6}) b.set(layout.index_of(id), true);
  const auto plan = plan_target_fill(b, layout);
  REQUIRE(plan.size() == 4);

  std::set<int> srcs, dsts;
  double sum = 0.0;
  for (const auto& m : plan.moves) {
    CHECK(srcs.insert(*m.src).second);
    CHECK(dsts.insert(m.dst).second);
    CHECK(b.occupied(layout.index_of(*m.src)));
    CHECK_FALSE(b.occupied(layout.index_of(m.dst)));
    CHECK(layout.site(layout.index_of(m.dst)).role == SiteRole::Target);
    CHECK(m.duration_s == doctest::Approx(570e-6));
    sum += m.dist_um;
  }
  CHECK(plan.total_distance == doctest::Approx(sum));
}

TEST_CASE("single vacancy takes the nearest buffer") {
  const auto layout = paper_layout();
  for (std::size_t v : layout.indices_with_role(SiteRole::Target)) {
    Occupancy b(layout.size());
    for (std::size_t i = 0; i < layout.size(); ++i) b.set(i, i != v);
    const auto plan = plan_target_fill(b, layout);
    REQUIRE(plan.size() == 1);

    // brute-force minimum over the seven buffer distances, smallest id on ties
    double best = 1e300;
    int best_id = -1;
    for (std::size_t s : layout.indices_with_role(SiteRole::Buffer)) {
      const double d = distance(layout.site(s).pos, layout.site(v).pos);
      if (d < best - 1e-12) {
        best = d;
        best_id = layout.site(s).id;
      }
    }
    CHECK(*plan.moves[0].src == best_id);
    CHECK(plan.moves[0].dist_um == doctest::Approx(best));
  }
  // vacancy opposite the buffer block: buffer vertex at (15.8, 0) is 31.6 µm away
  Occupancy b(layout.size());
  for (std::size_t i = 0; i < layout.size(); ++i) b.set(i, layout.site(i).id != 10);
  const auto plan = plan_target_fill(b, layout);
  CHECK(*plan.moves[0].src == 1);
  CHECK(plan.moves[0].dist_um == doctest::Approx(31.6));
}

TEST_CASE("plan invariants over every belief state of the preset") {
  const auto layout = paper_layout();
  for (unsigned bits = 0; bits < (1u << 13); ++bits) {
    const Occupancy b = belief_from_bits(layout, bits);
    const auto plan = plan_target_fill(b, layout);
    const std::size_t vac = layout.count(SiteRole::Target) - b.count(layout, SiteRole::Target);
    const std::size_t src = b.count(layout, SiteRole::Buffer);
    REQUIRE(plan.size() == std::min(vac, src));
    std::set<int> srcs, dsts;
    for (const auto& m : plan.moves) {
      REQUIRE(srcs.insert(*m.src).second);
      REQUIRE(dsts.insert(m.dst).second);
      REQUIRE(b.occupied(layout.index_of(*m.src)));
      REQUIRE_FALSE(b.occupied(layout.index_of(m.dst)));
    }
    // determinism
    REQUIRE(describe(plan) == describe(plan_target_fill(b, layout)));
  }
}

TEST_CASE("golden plans for sampled belief states") {
  const auto layout = paper_layout();
  std::ostringstream now;
  // 500 states on a fixed stride through the 2^13 space
  for (unsigned k = 0; k < 500; ++k) {
    const unsigned bits = (k * 4099u + 17u) % (1u << 13);
    now << bits << ": " << describe(plan_target_fill(belief_from_bits(layout, bits), layout)) << '\n';
  }
  const std::string path = std::string(TWEEZER_TEST_DATA) + "/planner_golden.txt";
  if (std::getenv("TWEEZER_UPDATE_GOLDEN")) {
    std::ofstream(path) << now.str();
  }
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream golden;
  golden << in.rdbuf();
  CHECK(golden.str() == now.str());
}

TEST_CASE("buffer refill list") {
  const auto layout = paper_layout();
  Occupancy full(layout.size());
  for (std::size_t i = 0; i < layout.size(); ++i) full.set(i, true);
  CHECK(plan_buffer_refill(full, layout).empty());

  const Occupancy empty(layout.size());
  const auto all = plan_buffer_refill(empty, layout);
  // distance order from the reservoir, ties by id
  CHECK(all == std::vector<int>{4, 3, 5, 0, 2, 6, 1});
  CHECK(distance(layout.reservoir_pos(), layout.site(layout.index_of(all.front())).pos) ==
        doctest::Approx(41.0));

  Occupancy some = full;
  for (int id : {1, 3, 6}) some.set(layout.index_of(id), false);
  const auto three = plan_buffer_refill(some, layout);
  CHECK(std::set<int>(three.begin(), three.end()) == std::set<int>{1, 3, 6});
}

TEST_CASE("planner rejects a belief that does not cover the layout") {
  const auto layout = paper_layout();
  CHECK_THROWS_AS(plan_target_fill(Occupancy(3), layout), std::invalid_argument);
  CHECK_THROWS_AS(plan_buffer_refill(Occupancy(3), layout), std::invalid_argument);
}

TEST_CASE("optimal assignment small cases") {
  const auto one = optimal_assignment({{0, 0}}, {{3, 4}});
  REQUIRE(one.pairs.size() == 1);
  CHECK(one.total_distance == doctest::Approx(5.0));

  const auto two = optimal_assignment({{0, 0}, {10, 0}}, {{1, 0}, {11, 0}});
  REQUIRE(two.pairs.size() == 2);
  CHECK(two.total_distance == doctest::Approx(2.0));
  for (const auto& [v, s] : two.pairs) CHECK(v == s);

  CHECK(optimal_assignment({}, {{1, 1}}).pairs.empty());
}

TEST_CASE("greedy is never better than optimal, and both agree with brute force") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const auto vac = random_points(rng, 1 + trial % 6);
    const auto src = random_points(rng, 1 + (trial / 6) % 7);
    const double brute = oracle::brute_force_min_matching(vac, src);
    const auto opt = optimal_assignment(vac, src);
    const auto hun = hungarian_assignment(vac, src);
    const auto greedy = greedy_assignment(vac, src);
    CHECK(opt.total_distance == doctest::Approx(brute).epsilon(1e-9));
    CHECK(hun.total_distance == doctest::Approx(brute).epsilon(1e-9));
    CHECK(greedy.total_distance >= brute - 1e-9);
    CHECK(greedy.pairs.size() == std::min(vac.size(), src.size()));
    if (vac.size() == 1) CHECK(greedy.total_distance == doctest::Approx(brute).epsilon(1e-12));
  }
}

TEST_CASE("hungarian agrees with exhaustive search on larger rectangles") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 40; ++trial) {
    const auto vac = random_points(rng, 8);
    const auto src = random_points(rng, 5 + trial % 4);
    CHECK(hungarian_assignment(vac, src).total_distance ==
          doctest::Approx(exhaustive_assignment(vac, src).total_distance).epsilon(1e-9));
  }
  // above 8 the library switches to the polynomial path
  const auto big_v = random_points(rng, 20), big_s = random_points(rng, 25);
  const auto big = optimal_assignment(big_v, big_s);
  CHECK(big.pairs.size() == 20);
  CHECK(big.total_distance <= greedy_assignment(big_v, big_s).total_distance + 1e-9);
}

TEST_CASE("per-vacancy strategy fills in vacancy id order") {
  // vacancy 0 grabs the source that vacancy 1 would have wanted
  const std::vector<Position> vac{{0, 0}, {10, 0}};
  const std::vector<Position> src{{9, 0}, {30, 0}};
  const auto global = greedy_assignment(vac, src, FillStrategy::GlobalGreedy);
  const auto per = greedy_assignment(vac, src, FillStrategy::PerVacancy);
  CHECK(global.pairs.front() == std::make_pair<std::size_t, std::size_t>(1, 0));
  CHECK(per.pairs.front() == std::make_pair<std::size_t, std::size_t>(0, 0));
  CHECK(global.total_distance == doctest::Approx(1.0 + 30.0));
  CHECK(per.total_distance == doctest::Approx(9.0 + 20.0));
}

TEST_CASE("distance-proportional move duration") {
  TransportModel t;
  PlannerOptions o;
  CHECK(move_duration(100.0, t, o) == doctest::Approx(570e-6));
  o.duration = MoveDuration::Distance;
  o.speed_um_per_s = 1e5;
  CHECK(move_duration(100.0, t, o) == doctest::Approx(260e-6 + 1e-3));
}

TEST_CASE("occupancy mask round trip") {
  const auto o = Occupancy::from_mask("1010011");
  CHECK(o.count() == 4);
  CHECK(o.to_mask() == "1010011");
  CHECK_THROWS_AS(Occupancy::from_mask("10x"), std::invalid_argument);
}
