#include <chrono>
#include <numbers>

#include "doctest.h"
#include "qmt/error.hpp"
#include "qmt/sk_model.hpp"
#include "support.hpp"

using namespace qmt;

namespace {

std::vector<Value> digits(std::size_t c, int q, int L) {
  std::vector<Value> out;
  for (int s = 0; s < L; ++s) {
    out.push_back(static_cast<Value>(c % static_cast<std::size_t>(q)));
    c /= static_cast<std::size_t>(q);
  }
  return out;
}

// Same cylinder as an event of the enumerated theory.
Event as_event(const SkCircuitModel& m, const Theory& t, const SkCylinder& cyl) {
  std::vector<std::string> names;
  std::vector<std::pair<std::string, Value>> fixed;
  for (const auto& [c, v] : cyl) fixed.emplace_back(SkCircuitModel::cell_name(m.cell_site(c), m.cell_time(c)), v);
  std::sort(fixed.begin(), fixed.end(), [&](const auto& x, const auto& y) {
    return t.order->point_index(x.first) < t.order->point_index(y.first);
  });
  std::vector<Value> vals;
  for (const auto& [n, v] : fixed) {
    names.push_back(n);
    vals.push_back(v);
  }
  return cylinder_event(t.hs(), t.region(names), vals);
}

SkCylinder random_cylinder(const SkCircuitModel& m, int t_f, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> count(1, 3), site(0, m.sites() - 1), time(0, t_f), val(0, m.dim() - 1);
  SkCylinder cyl;
  int n = count(rng);
  for (int i = 0; i < n; ++i) {
    std::size_t c = m.cell(site(rng), time(rng));
    bool seen = false;
    for (const auto& e : cyl) seen = seen || e.first == c;
    if (!seen) cyl.emplace_back(c, static_cast<Value>(val(rng)));
  }
  return cyl;
}

}  // namespace

TEST_CASE("identity gates propagate a point mass") {
  const int L = 3, T = 2;
  const std::size_t c0 = 5;
  SkCircuitModel m(sk_identity_config(L, T, c0));
  auto v = digits(c0, 2, L);
  SkCylinder all;
  for (int t = 0; t <= T; ++t)
    for (int s = 0; s < L; ++s) all.emplace_back(m.cell(s, t), v[static_cast<std::size_t>(s)]);
  CHECK(std::abs(m.cylinder_dcf(all, all, T) - cd(1.0)) < 1e-12);
  SkCylinder wrong = {{m.cell(0, T), 1 - v[0]}};
  CHECK(std::abs(m.cylinder_dcf(wrong, wrong, T)) < 1e-12);
}

TEST_CASE("Hadamard step gives equal final weights") {
  SkCircuitModel m(sk_hadamard_config());
  for (Value v : {0, 1}) {
    SkCylinder fin = {{m.cell(0, 1), v}};
    CHECK(m.cylinder_dcf(fin, fin, 1).real() == doctest::Approx(0.5).epsilon(1e-12));
  }
  Theory t = m.theory();
  CHECK(t.hs().size() == 4);
  CHECK(validate_axioms(t.dcf).ok());
}

TEST_CASE("axioms hold on sampled SK models") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    SkCircuitModel m(sk_small_config(seed));
    CHECK(m.validate().ok());
    AxiomReport rep = validate_axioms(m.theory().dcf, seed);
    CHECK(rep.sampled);
    CHECK(rep.ok());
  }
}

TEST_CASE("cylinder vectors agree with the enumerated theory") {
  SkCircuitModel m(sk_small_config(7));
  Theory t = m.theory();
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    SkCylinder e = random_cylinder(m, 2, rng), f = random_cylinder(m, 2, rng);
    cd direct = t.dcf.evaluate(as_event(m, t, e), as_event(m, t, f));
    CHECK(std::abs(m.cylinder_dcf(e, f, 2) - direct) < 1e-12);
  }
}

TEST_CASE("truncation independence") {
  SkCircuitModel m(sk_small_config(2));
  TruncationReport unitary = check_truncation_independence(m, 1, 2);
  CHECK(unitary.pass);
  CHECK(unitary.max_residual < 1e-9);
  CHECK(unitary.events > 100);

  SkConfig cfg = sk_small_config(2);
  cfg.gates[1].u *= 1.2;
  SkCircuitModel bent(cfg);
  CHECK_FALSE(bent.validate().ok());
  TruncationReport broken = check_truncation_independence(bent, 1, 2);
  CHECK_FALSE(broken.pass);
  CHECK(broken.max_residual > 1e-3);

  std::vector<SkCylinder> early = {{{m.cell(0, 0), 0}}, {{m.cell(1, 0), 1}}, {{m.cell(0, 0), 1}, {m.cell(1, 0), 1}}};
  CHECK(check_truncation_independence(m, 0, 2, early).max_residual < 1e-14);
  std::vector<SkCylinder> late = {{{bent.cell(0, 2), 0}}};
  CHECK_THROWS_AS(check_truncation_independence(bent, 1, 2, late), PreconditionError);
}

TEST_CASE("factorizability demo on a decoupled layout") {
  SkConfig cfg;
  cfg.L = 2;
  cfg.T = 2;
  cfg.psi = random_state(4, 11);
  for (int t = 1; t <= 2; ++t)
    for (int s = 0; s < 2; ++s) cfg.gates.push_back({t, {s}, random_unitary(2, static_cast<std::uint64_t>(10 * t + s))});
  cfg.regions = {'Z', 'Z', 'A', 'B', 'A', 'B'};
  SkFactorizabilityReport rep = sk_factorizability_demo(SkCircuitModel(cfg));
  CHECK(rep.t0 == 0);
  CHECK(rep.geometry.ok());
  CHECK(rep.factorizability.pass);
  CHECK(rep.factorizability.max_residual < 1e-12);

  cfg.gates.push_back({2, {0, 1}, random_unitary(4, 3)});
  cfg.gates.erase(cfg.gates.begin() + 2, cfg.gates.begin() + 4);
  CHECK_THROWS_WITH_AS(sk_factorizability_demo(SkCircuitModel(cfg)), doctest::Contains("t=2 on sites (0,1)"),
                       PreconditionError);
}

TEST_CASE("coupled L4T3 layout is refused") {
  SkCircuitModel m(sk_factorizability_config(0, true));
  CHECK_THROWS_WITH_AS(sk_factorizability_demo(m), doctest::Contains("couples A and B"), PreconditionError);
}

TEST_CASE("PoZ over all down-set shadows of the L4T3 model") {
  SkCircuitModel m(sk_factorizability_config(0));
  Theory t = m.theory();
  auto downs = enumerate_down_sets(*t.order, kDownSetLimit);
  REQUIRE(downs);
  CHECK(downs->size() == 171);
  auto start = std::chrono::steady_clock::now();
  PozReport rep = check_poz_exhaustive(t);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  MESSAGE("L4T3 PoZ: " << rep.results.size() << " regions in " << secs << " s");
  CHECK(rep.mode == "up-sets");
  CHECK(rep.pass);
}

TEST_CASE("event Hilbert rank is bounded by the slice dimension") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    SkCircuitModel m(sk_small_config(seed));
    CHECK(build_event_space(m.theory().dcf).rank <= m.slice_dim());
  }
}

TEST_CASE("mixed initial states") {
  SkConfig cfg = sk_hadamard_config();
  cfg.rho = Mat::Identity(2, 2) * 0.5;
  SkCircuitModel m(cfg);
  CHECK(m.mixed());
  CHECK(m.purification_rank() == 2);
  Theory t = m.theory();
  CHECK(t.order->points().front() == "purif");
  CHECK(validate_axioms(t.dcf).ok());
  for (Value v : {0, 1}) {
    SkCylinder fin = {{m.cell(0, 1), v}};
    CHECK(m.cylinder_dcf(fin, fin, 1).real() == doctest::Approx(0.5).epsilon(1e-12));
  }

  // A pure rho reproduces the pure-state model.
  SkConfig pure = sk_small_config(3);
  SkConfig as_rho = pure;
  as_rho.rho = Mat(pure.psi * pure.psi.adjoint());
  SkCircuitModel a(pure), b(as_rho);
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    SkCylinder e = random_cylinder(a, 2, rng), f = random_cylinder(a, 2, rng);
    CHECK(std::abs(a.cylinder_dcf(e, f, 2) - b.cylinder_dcf(e, f, 2)) < 1e-12);
  }
  CHECK(check_truncation_independence(b, 1, 2).pass);
}

TEST_CASE("configuration errors") {
  SkConfig cfg = sk_small_config(0);
  cfg.gates.push_back({1, {0}, Mat::Identity(2, 2)});
  CHECK_THROWS_AS(SkCircuitModel{cfg}, InputError);

  SkConfig short_psi = sk_small_config(0);
  short_psi.psi = Vec::Ones(2);
  CHECK_THROWS_AS(SkCircuitModel{short_psi}, InputError);

  SkConfig bad_rho = sk_hadamard_config();
  bad_rho.rho = Mat::Identity(2, 2);
  (*bad_rho.rho)(1, 1) = -0.5;
  CHECK_THROWS_AS(SkCircuitModel{bad_rho}, InputError);

  SkConfig wide;
  wide.L = 13;
  wide.q = 2;
  CHECK_THROWS_AS(SkCircuitModel{wide}, BudgetExceeded);
}

TEST_CASE("gate layers follow the site encoding") {
  SkConfig cfg;
  cfg.L = 2;
  cfg.T = 1;
  cfg.psi = Vec::Zero(4);
  cfg.psi(0) = 1.0;
  Mat x = Mat::Zero(2, 2);
  x(0, 1) = 1.0;
  x(1, 0) = 1.0;
  cfg.gates.push_back({1, {1}, x});
  SkCircuitModel m(cfg);
  // flipping site 1 maps configuration 0 to 0 + 1*q^1 = 2
  CHECK(std::abs(m.layer(1)(2, 0) - cd(1.0)) < 1e-15);
  SkCylinder fin = {{m.cell(1, 1), 1}, {m.cell(0, 1), 0}};
  CHECK(m.cylinder_dcf(fin, fin, 1).real() == doctest::Approx(1.0));
}
