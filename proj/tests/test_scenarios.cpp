#include <numbers>

#include "doctest.h"
#include "qmt/error.hpp"
#include "qmt/scenarios.hpp"
#include "support.hpp"

using namespace qmt;

namespace {

double beam_pair(const ScenarioTheory& st, std::size_t i, std::size_t j) {
  return st.theory.dcf.measure(intersect(st.beams[0][i], st.beams[1][j]));
}

std::size_t find_history(const HistorySpace& hs, const std::vector<Value>& v) {
  for (std::size_t h = 0; h < hs.size(); ++h) {
    auto row = hs.history(h);
    if (std::equal(row.begin(), row.end(), v.begin())) return h;
  }
  return hs.size();
}

}  // namespace

TEST_CASE("double slit generator") {
  Theory t = gen_double_slit();
  CHECK(t.hs().labels() == std::vector<std::string>{"Lb", "Ld", "Rb", "Rd"});
  CHECK(t.order->leq(t.order->point_index("slit"), t.order->point_index("screen")));
  Event dark = t.hs().point_event(t.hs().point_index("screen"), 1);
  CHECK(std::abs(t.dcf.measure(dark)) < 1e-15);
  CHECK(t.dcf.measure(complement(dark)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(t.dcf.measure(intersect(dark, t.hs().point_event(0, 0))) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(validate_axioms(t.dcf).ok());

  Theory rev = gen_double_slit(true);
  CHECK(rev.order->leq(rev.order->point_index("screen"), rev.order->point_index("slit")));
  CHECK((rev.dcf.matrix() - t.dcf.matrix()).norm() == 0.0);
}

TEST_CASE("EPRB default basis overlaps the singlet") {
  EprbConfig cfg = default_eprb_config();
  CHECK((cfg.basis.adjoint() * cfg.basis - Mat::Identity(4, 4)).norm() < 1e-14);
  Vec overlaps = cfg.basis.adjoint() * cfg.state;
  for (Eigen::Index k = 0; k < 4; ++k) CHECK(std::abs(overlaps(k)) >= 0.1);
}

TEST_CASE("EPRB matched analyzers anticorrelate") {
  EprbConfig cfg = default_eprb_config();
  cfg.angles = {0.7, 1.3, 0.7, 2.0};
  SettingScenario sc = gen_eprb(cfg);
  const ScenarioTheory& ab = sc.theories[sc.index_of({0, 0})];
  CHECK(beam_pair(ab, 0, 0) < 1e-12);
  CHECK(beam_pair(ab, 1, 1) < 1e-12);
  CHECK(beam_pair(ab, 0, 1) + beam_pair(ab, 1, 0) == doctest::Approx(1.0).epsilon(1e-12));

  cfg.flip_b_labels = true;
  SettingScenario flipped = gen_eprb(cfg);
  const ScenarioTheory& fab = flipped.theories[flipped.index_of({0, 0})];
  CHECK(beam_pair(fab, 0, 0) + beam_pair(fab, 1, 1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("EPRB singlet statistics follow the angle difference") {
  SettingScenario sc = gen_eprb(default_eprb_config());
  const auto angles = default_eprb_config().angles;
  for (const auto& st : sc.theories) {
    double diff = angles[st.setting[0]] - angles[2 + st.setting[1]];
    // singlet: P(u,u) = sin^2(diff/2)/2
    CHECK(beam_pair(st, 0, 0) == doctest::Approx(std::pow(std::sin(diff / 2), 2) / 2).epsilon(1e-12));
  }
}

TEST_CASE("EPRB scenario passes its structural checks") {
  SettingScenario sc = gen_eprb(default_eprb_config());
  CHECK(validate_scenario(sc).ok());
  for (const auto& st : sc.theories) {
    const Theory& t = st.theory;
    Region z = sc.z_region(t), a = sc.wing_region(t, 0), b = sc.wing_region(t, 1);
    CHECK(validate_axioms(t.dcf).ok());
    CHECK(check_poz_exhaustive(t).pass);
    CHECK(check_lon_exhaustive(t).pass);
    CHECK(check_spacelike_commutation(t, z, a, b, st.beams[0][1], st.beams[1][0]).pass);
    CHECK(check_partition_identity(t, b, st.beams[1], z) < 1e-9);
    CHECK(build_event_space(t.dcf).rank <= 4);
  }
}

TEST_CASE("EPRB configuration validation") {
  CHECK_THROWS_AS(gen_eprb(EprbConfig{default_eprb_config().angles, computational_basis_eprb_config().basis,
                                      default_eprb_config().state, false, false}),
                  PreconditionError);
  CHECK_NOTHROW(gen_eprb(computational_basis_eprb_config()));

  EprbConfig unnormalized = default_eprb_config();
  unnormalized.state *= 2.0;
  CHECK_THROWS(gen_eprb(unnormalized));

  EprbConfig skew = default_eprb_config();
  skew.basis(0, 0) += 0.1;
  CHECK_THROWS(gen_eprb(skew));
}

TEST_CASE("PR box generator") {
  PrBox pr = gen_pr_box();
  CHECK(chsh_value(pr.table) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(check_no_signalling(pr.table) == 0.0);
  for (const auto& t : pr.theories) {
    CHECK(is_classical(t.dcf));
    CHECK(validate_axioms(t.dcf).ok());
  }
  CHECK(pr.joint.hs().size() == 16);
  CHECK(pr.joint.dcf.measure(pr.e_pr) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(validate_axioms(pr.joint.dcf).ok());
}

TEST_CASE("GHZ generator") {
  GhzModel g = gen_ghz();
  const HistorySpace& hs = g.theory.hs();
  CHECK(hs.size() == 64);
  CHECK(validate_axioms(g.theory.dcf).ok());
  CHECK(g.theory.dcf.measure(g.e_ghz) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(g.theory.dcf.measure(complement(g.e_ghz))) < 1e-12);
  // settings xxx, outcomes uuu: (1/8) * |<+++|GHZ>|^2 = 1/32
  std::size_t h = find_history(hs, {0, 0, 0, 0, 0, 0});
  REQUIRE(h < hs.size());
  CHECK(g.theory.dcf.measure(hs.event({h})) == doctest::Approx(1.0 / 32).epsilon(1e-12));
}

TEST_CASE("random factorizable and single-k models") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SettingScenario sc = gen_random_factorizable(seed);
    CHECK(validate_scenario(sc).ok());
    for (const auto& st : sc.theories) {
      CHECK(is_classical(st.theory.dcf));
      CHECK(validate_axioms(st.theory.dcf).ok());
    }
  }
  SettingScenario a = gen_random_factorizable(5), b = gen_random_factorizable(5);
  CHECK((a.theories[2].theory.dcf.matrix() - b.theories[2].theory.dcf.matrix()).norm() == 0.0);

  SettingScenario pr = gen_classical_pr_single_k();
  CHECK(chsh_value(correlation_table(beam_dcfs(pr))) == doctest::Approx(4.0));
}

TEST_CASE("two-wing scenario input validation") {
  std::vector<Mat> three(3, Mat::Identity(16, 16) / 16.0);
  CHECK_THROWS(two_wing_scenario(4, three));
  std::vector<Mat> wrong(4, Mat::Identity(8, 8) / 8.0);
  CHECK_THROWS(two_wing_scenario(4, wrong));
}
