// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

#include <chrono>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "qmt/scenarios.hpp"
#include "qmt/sk_model.hpp"

using namespace qmt;

namespace {

struct Check {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void axioms_ok(Check& c, const DecoherenceFunctional& d, const std::string& name) {
  AxiomReport r = validate_axioms(d);
  c.require(r.hermitian && r.hermiticity_residual < 1e-9, name + " hermiticity");
  c.require(r.normalized && r.normalization_residual < 1e-9, name + " normalization");
  c.require(r.strongly_positive, name + " strong positivity");
}

Check axiom_suite() {
  Check c;
  auto t0 = std::chrono::steady_clock::now();
  std::size_t count = 0;
  axioms_ok(c, gen_double_slit(false).dcf, "double slit");
  axioms_ok(c, gen_double_slit(true).dcf, "reversed double slit");
  count += 2;
  for (const auto& st : gen_eprb(default_eprb_config()).theories) {
    axioms_ok(c, st.theory.dcf, "EPRB");
    ++count;
  }
  PrBox pr = gen_pr_box();
  for (const auto& t : pr.theories) {
    axioms_ok(c, t.dcf, "PR");
    ++count;
  }
  axioms_ok(c, pr.joint.dcf, "PR joint");
  axioms_ok(c, gen_ghz().theory.dcf, "GHZ");
  count += 2;
  for (const SkConfig& cfg : {sk_hadamard_config(), sk_small_config(0), sk_small_config(1),
                              sk_identity_config(3, 2, 5), sk_factorizability_config(0)}) {
    axioms_ok(c, SkCircuitModel(cfg).theory().dcf, "SK");
    ++count;
  }
  double secs = seconds_since(t0);
  c.require(secs < 10.0, "runtime < 10 s");
  c.detail << count << " models, " << secs << " s";
  return c;
}

Check double_slit_asymmetry() {
  Check c;
  PozReport fwd = check_poz_exhaustive(gen_double_slit(false));
  c.require(fwd.pass, "forward PoZ");
  Theory rev = gen_double_slit(true);
  PozReport back = check_poz_exhaustive(rev);
  PozRegionResult at_slit = poz_region(rev, rev.region({"slit"}));
  c.require(!back.pass, "reversed PoZ fails");
  c.require(std::abs(at_slit.violation - 0.25) <= 1e-12, "violation 0.25 at {slit}");
  c.detail << "forward max " << fwd.max_violation << ", reversed " << at_slit.violation << " at {slit}";
  return c;
}

Check eprb_operators() {
  Check c;
  SettingScenario sc = gen_eprb(default_eprb_config());
  double uni = 0, part = 0, comm = 0, cross = 0;
  for (const auto& st : sc.theories) {
    const Theory& t = st.theory;
    Region z = sc.z_region(t);
    for (std::size_t w = 0; w < 2; ++w) {
      Region r = sc.wing_region(t, w);
      for (const Event& e : st.beams[w]) uni = std::max(uni, universal_residual(t, event_operator(t, r, e, z)));
      part = std::max(part, check_partition_identity(t, r, st.beams[w], z));
    }
    for (const Event& ea : st.beams[0])
      for (const Event& eb : st.beams[1])
        comm = std::max(comm, check_spacelike_commutation(t, z, sc.wing_region(t, 0), sc.wing_region(t, 1), ea, eb)
                                  .commutator_norm);
  }
  // Same wing setting, other wing's setting varied: ab vs ab' (A) and ab vs a'b (B).
  for (std::size_t w = 0; w < 2; ++w)
    for (std::size_t s = 0; s < 2; ++s) {
      std::vector<std::size_t> base(2, 0), other(2, 0);
      base[w] = other[w] = s;
      other[1 - w] = 1;
      const ScenarioTheory& t1 = sc.theories[sc.index_of(base)];
      const ScenarioTheory& t2 = sc.theories[sc.index_of(other)];
      OperatorOptions opt;
      opt.frame = make_frame(t1.theory, sc.z_region(t1.theory));
      for (std::size_t o = 0; o < 2; ++o) {
        Mat m1 = event_operator(t1.theory, sc.wing_region(t1.theory, w), t1.beams[w][o], sc.z_region(t1.theory), opt)
                     .matrix;
        Mat m2 = event_operator(t2.theory, sc.wing_region(t2.theory, w), t2.beams[w][o], sc.z_region(t2.theory), opt)
                     .matrix;
        cross = std::max(cross, (m1 - m2).norm());
      }
    }
  c.require(uni < 1e-9, "E|Omega> = |E>");
  c.require(part < 1e-9, "partition identity");
  c.require(comm < 1e-9, "spacelike commutators");
  c.require(cross < 1e-9, "cross-theory operators");
  c.detail << "universal " << uni << ", partition " << part << ", commutator " << comm << ", cross " << cross;
  return c;
}

Check classical_patching() {
  Check c;
  auto t0 = std::chrono::steady_clock::now();
  double worst_marg = 0, worst_total = 0, worst_chsh = 0, min_p = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SettingScenario sc = gen_random_factorizable(seed);
    JointMeasure jm = classical_patch(sc);
    double total = 0;
    for (double p : jm.p) {
      min_p = std::min(min_p, p);
      total += p;
    }
    worst_total = std::max(worst_total, std::abs(total - 1.0));
    worst_marg = std::max(worst_marg, classical_patch_marginal_residual(jm, sc));
    worst_chsh = std::max(worst_chsh, chsh_value(table_from_measure(jm)));
  }
  double secs = seconds_since(t0);
  c.require(min_p >= 0.0, "nonnegative");
  c.require(worst_total < 1e-12, "sums to 1");
  c.require(worst_marg < 1e-12, "marginals");
  c.require(worst_chsh <= 2.0 + 1e-9, "CHSH <= 2");
  c.require(secs < 5.0, "runtime < 5 s");
  c.detail << "marginal " << worst_marg << ", max CHSH " << worst_chsh << ", " << secs << " s";
  return c;
}

Check quantum_patching() {
  Check c;
  SettingScenario sc = gen_eprb(default_eprb_config());
  JointDcf jd = quantum_patch(sc);
  Spectrum sp = hermitian_eig(jd.matrix);
  double herm = max_abs(jd.matrix - jd.matrix.adjoint());
  double lmin = sp.values(0), lmax = sp.values(sp.values.size() - 1);
  double marg = quantum_patch_marginal_residual(jd, sc);
  QuantumPatchOptions swapped;
  swapped.ordering = {{0, 1}, {0, 0}, {1, 1}, {1, 0}};
  JointDcf other = quantum_patch(sc, swapped);
  double marg2 = quantum_patch_marginal_residual(other, sc);
  double diff = max_abs(jd.matrix - other.matrix);
  c.require(herm < 1e-9, "Hermitian");
  c.require(lmin >= -1e-9 * lmax, "PSD");
  c.require(marg < 1e-9, "setting marginals");
  c.require(marg2 < 1e-9, "marginals under reordering");
  c.require(diff > 1e-9, "full arrays differ under reordering");
  c.detail << "min eig " << lmin << ", marginal " << marg << ", reordered marginal " << marg2 << ", array diff "
           << diff;
  return c;
}

Check tsirelson() {
  Check c;
  double q = chsh_value(correlation_table(beam_dcfs(gen_eprb(default_eprb_config()))));
  double pr = chsh_value(gen_pr_box().table);
  c.require(std::abs(q - 2.0 * std::numbers::sqrt2) < 1e-6, "EPRB 2 sqrt 2");
  c.require(pr == 4.0, "PR 4");
  char buf[64];
  std::snprintf(buf, sizeof buf, "EPRB %.12f, PR %.1f", q, pr);
  c.detail << buf;
  return c;
}

Check converse_round_trip() {
  Check c;
  JointDcf jd = quantum_patch(gen_eprb(default_eprb_config()));
  SettingScenario conv = converse_model(jd);
  SettingDcfs back = beam_dcfs(conv), want = setting_dcfs_from_joint(jd);
  double marg = 0, fact = 0;
  for (std::size_t s = 0; s < want.dcfs.size(); ++s) marg = std::max(marg, max_abs(back.dcfs[s] - want.dcfs[s]));
  for (const auto& st : conv.theories) {
    const Theory& t = st.theory;
    fact = std::max(fact, check_quantum_factorizability(t, conv.z_region(t), conv.wing_region(t, 0),
                                                        conv.wing_region(t, 1))
                              .max_residual);
  }
  c.require(marg < 1e-12, "marginals");
  c.require(fact < 1e-12, "factorizability");
  c.detail << "marginal " << marg << ", factorizability " << fact;
  return c;
}

Check feasibility_contrast() {
  Check c;
  FeasibilityOptions opt;
  opt.seed = 0;
  SettingDcfs eprb = beam_dcfs(gen_eprb(default_eprb_config()));
  FeasibilityReport q1 = joint_feasibility(eprb, opt), q2 = joint_feasibility(eprb, opt);
  FeasibilityReport pr = joint_feasibility(gen_pr_box().dcfs, opt);
  c.require(q1.gap < 1e-6 && q1.iterations <= 20000 && q1.verdict == "feasible", "EPRB feasible");
  c.require(pr.gap > 1e-3 && pr.verdict == "undecided-infeasible", "PR undecided-infeasible");
  c.require(q1.gap == q2.gap && q1.iterations == q2.iterations, "deterministic");
  c.detail << "EPRB gap " << q1.gap << " after " << q1.iterations << " it, PR gap " << pr.gap << " after "
           << pr.iterations << " it";
  return c;
}

Check sk_appendix() {
  Check c;
  SkCircuitModel m(sk_factorizability_config(0));
  auto t0 = std::chrono::steady_clock::now();
  SkFactorizabilityReport rep = sk_factorizability_demo(m);
  double secs = seconds_since(t0);
  c.require(rep.geometry.ok(), "geometry");
  c.require(!rep.factorizability.sampled, "all atom combinations");
  c.require(rep.factorizability.max_residual < 1e-9, "factorizability");
  c.require(secs < 60.0, "runtime < 60 s");
  TruncationReport a = check_truncation_independence(m, 1, 3), b = check_truncation_independence(m, 2, 3);
  double trunc = std::max(a.max_residual, b.max_residual);
  c.require(trunc < 1e-9, "truncation independence");
  SkConfig broken = sk_factorizability_config(0);
  broken.gates[2].u *= 1.1;
  SkCircuitModel bent(broken);
  TruncationReport bad = check_truncation_independence(bent, 1, 3);
  c.require(!bent.validate().ok(), "non-unitary gate rejected by validate");
  c.require(!bad.pass, "non-unitary gate detected by truncation");
  c.detail << "factorizability " << rep.factorizability.max_residual << " over " << rep.factorizability.pairs_checked
           << " Z pairs in " << secs << " s, truncation " << trunc << ", broken gate " << bad.max_residual;
  return c;
}

Check ghz() {
  Check c;
  GhzModel g = gen_ghz();
  double in = g.theory.dcf.measure(g.e_ghz), out = g.theory.dcf.measure(complement(g.e_ghz));
  c.require(std::abs(in - 1.0) < 1e-12, "mu(E_GHZ) = 1");
  c.require(std::abs(out) < 1e-12, "complement null");
  c.detail << "mu " << in << ", complement " << out;
  return c;
}

Check hilbert_bounds() {
  Check c;
  std::size_t eprb_rank = 0;
  for (const auto& st : gen_eprb(default_eprb_config()).theories)
    eprb_rank = std::max(eprb_rank, build_event_space(st.theory.dcf).rank);
  c.require(eprb_rank <= 4, "EPRB rank <= 4");

  std::ostringstream sk;
  for (const SkConfig& cfg : {sk_hadamard_config(), sk_small_config(0), sk_small_config(1), sk_factorizability_config(0)}) {
    SkCircuitModel m(cfg);
    Theory t = m.theory();
    // Span of all event vectors is the span of the history vectors.
    const Mat& hv = t.dcf.history_vectors();
    std::size_t rank = range_basis(hv, t.dcf.tol().rel).cols();
    c.require(rank <= m.slice_dim(), "SK rank <= q^L");
    sk << rank << "/" << m.slice_dim() << " ";
  }

  std::mt19937_64 rng(0);
  std::bernoulli_distribution coin(0.5);
  std::normal_distribution<double> gauss;
  std::size_t pairs = 0, bad = 0;
  std::vector<Theory> models;
  for (std::uint64_t seed = 0; seed < 4; ++seed) models.push_back(SkCircuitModel(sk_small_config(seed)).theory());
  for (; pairs < 100; ++pairs) {
    const Theory& t = models[pairs % models.size()];
    const std::size_t n = t.order->size();
    Bits big(n), small(n);
    for (std::size_t p = 0; p < n; ++p) {
      big[p] = coin(rng);
      small[p] = big[p] && coin(rng);
    }
    Region rb(big), rs(small);
    LinearCombination comb;
    for (const Event& a : region_algebra(t.hs(), rs).atoms) comb.terms.emplace_back(a, cd(gauss(rng), gauss(rng)));
    if (subspace_dim(t.dcf, rs) > subspace_dim(t.dcf, rb) || !in_subspace(t.dcf, comb, rb).member) ++bad;
  }
  c.require(bad == 0, "monotonicity");
  c.detail << "EPRB rank " << eprb_rank << ", SK ranks " << sk.str() << ", monotone " << (pairs - bad) << "/" << pairs;
  return c;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Check()>>> criteria = {
      {"axiom suite", axiom_suite},
      {"double-slit PoZ asymmetry", double_slit_asymmetry},
      {"EPRB event-operator corollaries", eprb_operators},
      {"classical patching", classical_patching},
      {"quantum patching", quantum_patching},
      {"Tsirelson number", tsirelson},
      {"converse construction round trip", converse_round_trip},
      {"joint feasibility contrast", feasibility_contrast},
      {"SK factorizability at desk scale", sk_appendix},
      {"GHZ", ghz},
      {"Hilbert-space bounds", hilbert_bounds},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check c;
    try {
      c = criteria[i].second();
    } catch (const std::exception& e) {
      c.pass = false;
      c.detail << "exception: " << e.what();
    }
    if (!c.pass) ++failed;
    std::printf("%s %2zu %s: %s\n", c.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), c.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
  return failed == 0 ? 0 : 1;
}
