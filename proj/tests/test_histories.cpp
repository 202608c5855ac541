#include <algorithm>

#include "doctest.h"
#include "qmt/error.hpp"
#include "qmt/scenarios.hpp"
#include "support.hpp"

using namespace qmt;
using qmt::testing::full_space;
using qmt::testing::random_event;

namespace {

SpacePtr four_histories() { return make_space({"x"}, {4}, {{0}, {1}, {2}, {3}}); }

SpacePtr double_slit_space() {
  return make_space({"slit", "screen"}, {2, 2}, {{0, 0}, {0, 1}, {1, 0}, {1, 1}}, {"Lb", "Ld", "Rb", "Rd"});
}

std::vector<std::size_t> idx(const Event& e) { return e.indices(); }

}  // namespace

TEST_CASE("boolean operations on a four-history space") {
  auto hs = four_histories();
  Event e = hs->event({0, 1}), f = hs->event({1, 2});
  CHECK(idx(symmetric_difference(e, f)) == std::vector<std::size_t>{0, 2});
  CHECK(complement(hs->full_event()).empty());
  CHECK(idx(unite(e, f)) == std::vector<std::size_t>{0, 1, 2});
  CHECK(idx(intersect(e, f)) == std::vector<std::size_t>{1});

  Event g = hs->event({2, 3});
  CHECK(intersect(e, g).empty());
  CHECK(symmetric_difference(e, g) == unite(e, g));
}

TEST_CASE("material implication") {
  auto hs = four_histories();
  Event e = hs->event({0, 1}), f = hs->event({1, 2});
  CHECK(material_implication(hs->full_event(), f) == f);
  CHECK(material_implication(hs->empty_event(), f) == hs->full_event());
  CHECK(idx(material_implication(e, f)) == std::vector<std::size_t>{1, 2, 3});
}

TEST_CASE("events from different spaces are rejected") {
  auto a = four_histories(), b = four_histories();
  CHECK_THROWS_AS(unite(a->full_event(), b->full_event()), StructuralError);
  CHECK_THROWS_AS(material_implication(a->full_event(), b->empty_event()), StructuralError);
}

TEST_CASE("history space validation") {
  CHECK_THROWS_AS(make_space({"x"}, {2}, std::vector<std::vector<Value>>{}), InputError);
  CHECK_THROWS_AS(make_space({"x"}, {2}, {{0}, {0}}), InputError);
  CHECK_THROWS_AS(make_space({"x"}, {2}, {{0, 1}}), InputError);
  CHECK_THROWS_AS(make_space({"x"}, {2}, {{2}}), InputError);
  CHECK_THROWS_AS(make_space({"x", "x"}, {2, 2}, {{0, 0}}), InputError);
  auto empty_points = make_space({}, {}, std::vector<std::vector<Value>>{std::vector<Value>{}});
  CHECK(empty_points->size() == 1);
}

TEST_CASE("region algebra of the double slit") {
  auto hs = double_slit_space();
  RegionAlgebra slit = region_algebra(*hs, hs->region({"slit"}));
  REQUIRE(slit.atoms.size() == 2);
  CHECK(idx(slit.atoms[0]) == std::vector<std::size_t>{0, 1});
  CHECK(idx(slit.atoms[1]) == std::vector<std::size_t>{2, 3});

  RegionAlgebra none = region_algebra(*hs, Region::none(2));
  REQUIRE(none.atoms.size() == 1);
  CHECK(none.atoms[0] == hs->full_event());

  RegionAlgebra all = region_algebra(*hs, Region::all(2));
  CHECK(all.atoms.size() == 4);
  CHECK(is_partition(all.atoms));
}

TEST_CASE("cylinder events") {
  auto hs = double_slit_space();
  CHECK(idx(cylinder_event(*hs, hs->region({"slit"}), {0})) == std::vector<std::size_t>{0, 1});
  CHECK(cylinder_event(*hs, Region::none(2), {}) == hs->full_event());
  auto partial = make_space({"x", "y"}, {2, 2}, {{0, 0}, {1, 1}});
  CHECK(cylinder_event(*partial, Region::all(2), {0, 1}).empty());
  CHECK_THROWS_AS(cylinder_event(*hs, hs->region({"slit"}), {0, 1}), InputError);
}

TEST_CASE("partitions") {
  auto hs = four_histories();
  Event e = hs->event({0, 3});
  std::vector<Event> pair = {e, complement(e)};
  CHECK(is_partition(pair));
  std::vector<Event> twice = {e, e};
  CHECK_FALSE(is_partition(twice));
}

TEST_CASE("PR event") {
  // Points SA, SB (settings), A, B (outcomes u=0, d=1); all 16 joint histories.
  auto hs = full_space(4, 2);
  auto both = [&](std::size_t p1, Value v1, std::size_t p2, Value v2) {
    return intersect(hs->point_event(p1, v1), hs->point_event(p2, v2));
  };
  PrEventLabels l{both(0, 0, 1, 0), both(0, 0, 1, 1), both(0, 1, 1, 0), both(0, 1, 1, 1),
                  both(2, 0, 3, 0), both(2, 0, 3, 1), both(2, 1, 3, 0), both(2, 1, 3, 1)};
  Event pr = build_pr_event(l);
  auto find = [&](Value sa, Value sb, Value a, Value b) {
    for (std::size_t h = 0; h < hs->size(); ++h)
      if (hs->value(h, 0) == sa && hs->value(h, 1) == sb && hs->value(h, 2) == a && hs->value(h, 3) == b) return h;
    return hs->size();
  };
  CHECK_FALSE(pr.contains(find(1, 1, 0, 0)));
  CHECK(pr.contains(find(0, 0, 0, 0)));
  CHECK(pr.count() == 8);

  // Restricted to PR-consistent histories only, the event is everything.
  std::vector<std::vector<Value>> consistent;
  for (std::size_t h = 0; h < hs->size(); ++h)
    if (pr.contains(h)) consistent.push_back({hs->value(h, 0), hs->value(h, 1), hs->value(h, 2), hs->value(h, 3)});
  auto small = make_space({"SA", "SB", "A", "B"}, {2, 2, 2, 2}, consistent);
  auto sboth = [&](std::size_t p1, Value v1, std::size_t p2, Value v2) {
    return intersect(small->point_event(p1, v1), small->point_event(p2, v2));
  };
  PrEventLabels sl{sboth(0, 0, 1, 0), sboth(0, 0, 1, 1), sboth(0, 1, 1, 0), sboth(0, 1, 1, 1),
                   sboth(2, 0, 3, 0), sboth(2, 0, 3, 1), sboth(2, 1, 3, 0), sboth(2, 1, 3, 1)};
  CHECK(build_pr_event(sl) == small->full_event());
}

TEST_CASE("GHZ event membership") {
  GhzModel g = gen_ghz();
  const HistorySpace& hs = g.theory.hs();
  auto find = [&](std::vector<Value> v) {
    for (std::size_t h = 0; h < hs.size(); ++h) {
      auto row = hs.history(h);
      if (std::equal(row.begin(), row.end(), v.begin())) return h;
    }
    return hs.size();
  };
  // settings x=0, y=1; outcomes u=0, d=1
  CHECK(g.e_ghz.contains(find({0, 0, 0, 0, 0, 0})));
  CHECK_FALSE(g.e_ghz.contains(find({0, 1, 1, 0, 0, 0})));
  CHECK(g.e_ghz.contains(find({0, 0, 1, 0, 0, 0})));
}

TEST_CASE("Boolean ring laws on random events") {
  auto hs = full_space(3, 3);
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    Event a = random_event(*hs, rng), b = random_event(*hs, rng), c = random_event(*hs, rng);
    CHECK(complement(unite(a, b)) == intersect(complement(a), complement(b)));
    CHECK(complement(intersect(a, b)) == unite(complement(a), complement(b)));
    CHECK(intersect(a, unite(b, c)) == unite(intersect(a, b), intersect(a, c)));
    CHECK(intersect(a, symmetric_difference(b, c)) ==
          symmetric_difference(intersect(a, b), intersect(a, c)));
    CHECK(symmetric_difference(a, a).empty());
    CHECK(intersect(a, a) == a);
    CHECK(symmetric_difference(a, b) == difference(unite(a, b), intersect(a, b)));
  }
}

TEST_CASE("region algebras refine and cylinders contain their histories") {
  auto hs = full_space(4, 2);
  std::mt19937_64 rng(11);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 50; ++trial) {
    Bits big(4), small(4);
    for (std::size_t p = 0; p < 4; ++p) {
      big[p] = coin(rng);
      small[p] = big[p] && coin(rng);
    }
    Region rb(big), rs(small);
    RegionAlgebra fine = region_algebra(*hs, rb), coarse = region_algebra(*hs, rs);
    CHECK(is_partition(fine.atoms));
    for (const Event& atom : fine.atoms) {
      int containing = 0;
      for (const Event& c : coarse.atoms)
        if (intersect(atom, c) == atom) ++containing;
      CHECK(containing == 1);
    }
    for (std::size_t h = 0; h < hs->size(); ++h)
      CHECK(cylinder_event(*hs, rb, restrict_history(*hs, h, rb)).contains(h));
  }
}
