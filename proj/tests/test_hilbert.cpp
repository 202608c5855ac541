#include "doctest.h"
#include "qmt/error.hpp"
#include "qmt/scenarios.hpp"
#include "support.hpp"

using namespace qmt;
using qmt::testing::full_space;
using qmt::testing::random_event;
using qmt::testing::random_psd;

namespace {

Event labelled(const Theory& t, std::initializer_list<const char*> labels) {
  std::vector<std::size_t> idx;
  for (const char* l : labels)
    for (std::size_t h = 0; h < t.hs().size(); ++h)
      if (t.hs().label(h) == l) idx.push_back(h);
  return t.hs().event(idx);
}

LinearCombination combo(std::initializer_list<std::pair<Event, cd>> terms) { return LinearCombination{terms}; }

}  // namespace

TEST_CASE("event space ranks") {
  Theory slit = gen_double_slit();
  EventHilbertSpace full = build_event_space(slit.dcf);
  CHECK(full.rank == 2);
  CHECK(full.universal_norm2 == doctest::Approx(1.0).epsilon(1e-12));

  EventHilbertSpace none = build_event_space(slit.dcf, Region::none(2));
  CHECK(none.rank == 1);
  CHECK(none.atoms.size() == 1);

  SettingScenario sc = gen_eprb(default_eprb_config());
  for (const auto& st : sc.theories) {
    CHECK(build_event_space(st.theory.dcf, st.theory.region({"Z"})).rank == 4);
    CHECK(build_event_space(st.theory.dcf).rank <= 4);
  }
}

TEST_CASE("combination norms") {
  Theory t = gen_double_slit();
  const auto& d = t.dcf;
  Event ld = labelled(t, {"Ld"}), rd = labelled(t, {"Rd"}), lb = labelled(t, {"Lb"});
  CHECK(combo_norm2(d, combo({{ld, 1.0}})) == doctest::Approx(d.measure(ld)));
  CHECK(combo_norm2(d, combo({{ld, 1.0}, {lb, 1.0}})) == doctest::Approx(d.measure(unite(ld, lb))));
  CHECK(combo_norm2(d, combo({{ld, 1.0}, {rd, 1.0}})) < 1e-15);
}

TEST_CASE("null combinations") {
  Theory t = gen_double_slit();
  const auto& d = t.dcf;
  Event ld = labelled(t, {"Ld"}), rd = labelled(t, {"Rd"});
  CHECK(is_null(d, combo({{ld, 1.0}, {rd, 1.0}})));
  CHECK_FALSE(is_null(d, combo({{t.hs().full_event(), 1.0}})));
  CHECK(is_null(d, combo({{ld, 1.0}, {ld, -1.0}})));
}

TEST_CASE("indefinite combination norm is an error") {
  Mat m = Mat::Zero(2, 2);
  m(0, 0) = 1.1;
  m(1, 1) = -0.1;
  auto space = make_space({"x"}, {2}, {{0}, {1}});
  auto d = DecoherenceFunctional::dense(space, m);
  CHECK_THROWS_AS(combo_norm2(d, combo({{space->event({1}), 1.0}})), StrongPositivityError);
}

TEST_CASE("subspace dimensions") {
  Theory t = gen_double_slit();
  CHECK(subspace_dim(t.dcf, Region::none(2)) == 1);
  CHECK(subspace_dim(t.dcf, Region::all(2)) == 2);
  CHECK(subspace_dim(t.dcf, t.region({"screen"})) == 1);
  CHECK(subspace_dim(t.dcf, t.region({"slit"})) == 2);
}

TEST_CASE("span membership") {
  Theory t = gen_double_slit();
  const auto& d = t.dcf;
  RegionAlgebra slit = region_algebra(t.hs(), t.region({"slit"}));
  SpanResult atoms = in_subspace(d, combo({{slit.atoms[0], cd(2.0, 1.0)}, {slit.atoms[1], -0.5}}), t.region({"slit"}));
  CHECK(atoms.member);
  CHECK(atoms.residual < 1e-12);
  for (const Region& r : {Region::none(2), t.region({"slit"}), t.region({"screen"}), Region::all(2)})
    CHECK(in_subspace(d, combo({{t.hs().full_event(), 1.0}}), r).member);
  // |Ld> is orthogonal to |bright>, and |dark> is null.
  SpanResult ld = in_subspace(d, combo({{labelled(t, {"Ld"}), 1.0}}), t.region({"screen"}));
  CHECK_FALSE(ld.member);
  CHECK(ld.residual == doctest::Approx(0.5).epsilon(1e-12));

  SettingScenario sc = gen_eprb(default_eprb_config());
  const ScenarioTheory& ab = sc.theories[0];
  for (const Event& beam : ab.beams[0])
    CHECK(in_subspace(ab.theory.dcf, combo({{beam, 1.0}}), ab.theory.region({"Z"})).member);
}

TEST_CASE("partitions sum to the universal vector") {
  std::mt19937_64 rng(13);
  auto space = full_space(3, 2);
  for (int trial = 0; trial < 30; ++trial) {
    auto d = DecoherenceFunctional::dense(space, random_psd(8, 3, rng));
    Event e = random_event(*space, rng), f = difference(random_event(*space, rng), e);
    Event rest = complement(unite(e, f));
    CHECK(combo_norm2(d, combo({{e, 1.0}, {f, 1.0}, {rest, 1.0}, {space->full_event(), -1.0}})) < 1e-12);
  }
}

TEST_CASE("region subspaces are monotone") {
  std::mt19937_64 rng(17);
  auto space = full_space(4, 2);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 40; ++trial) {
    auto d = DecoherenceFunctional::dense(space, random_psd(16, 1 + trial % 6, rng));
    Bits big(4), small(4);
    for (std::size_t p = 0; p < 4; ++p) {
      big[p] = coin(rng);
      small[p] = big[p] && coin(rng);
    }
    Region rb(big), rs(small);
    CHECK(subspace_dim(d, rs) <= subspace_dim(d, rb));
    RegionAlgebra alg = region_algebra(*space, rs);
    std::normal_distribution<double> g;
    LinearCombination c;
    for (const Event& a : alg.atoms) c.terms.emplace_back(a, cd(g(rng), g(rng)));
    CHECK(in_subspace(d, c, rb).member);
  }
}

TEST_CASE("Gram matrices are positive on every region") {
  std::mt19937_64 rng(19);
  auto space = full_space(3, 3);
  auto d = DecoherenceFunctional::dense(space, random_psd(27, 4, rng));
  for (unsigned mask = 0; mask < 8; ++mask) {
    Bits b(3);
    for (std::size_t p = 0; p < 3; ++p) b[p] = (mask >> p) & 1u;
    EventHilbertSpace s = build_event_space(d, Region(b));
    CHECK(s.eigenvalues(0) >= -1e-12);
    CHECK(s.rank <= 4);
  }
}
