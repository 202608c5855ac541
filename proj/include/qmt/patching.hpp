#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qmt/causality.hpp"

namespace qmt {

struct Wing {
  std::string name;
  std::vector<std::string> points;    // the wing region (A, B, ...)
  std::vector<std::string> settings;  // e.g. {"a", "a'"}
  std::size_t outcomes = 2;           // outcome 0 is "u", 1 is "d"
};

struct ScenarioTheory {
  std::vector<std::size_t> setting;          // one entry per wing
  Theory theory;
  std::vector<std::vector<Event>> beams;     // [wing][outcome]
};

// One theory per global setting, in mixed-radix order with wing 0 most
// significant: for two wings (a,a') x (b,b') the order is ab, ab', a'b, a'b'.
struct SettingScenario {
  std::vector<std::string> z_points;
  std::vector<Wing> wings;
  std::vector<ScenarioTheory> theories;

  std::size_t num_settings() const;
  std::size_t index_of(const std::vector<std::size_t>& setting) const;
  std::vector<std::size_t> setting_of(std::size_t index) const;
  std::string setting_name(std::size_t index) const;
  // Theory where wing w uses setting s and every other wing uses setting 0.
  const ScenarioTheory& theory_for(std::size_t wing, std::size_t setting) const;
  Region z_region(const Theory& t) const { return t.region(z_points); }
  Region wing_region(const Theory& t, std::size_t w) const { return t.region(wings[w].points); }
};

struct ScenarioClause {
  std::string name;
  bool pass = false;
  double residual = 0;
};

struct ScenarioReport {
  std::vector<ScenarioClause> clauses;
  bool ok() const;
};

// Geometry, partition, and agreement clauses.
ScenarioReport validate_scenario(const SettingScenario& sc);

// Beam-only decoherence functionals per global setting over outcome tuples
// (wing 0 most significant).
struct SettingDcfs {
  std::vector<std::size_t> settings;  // per wing
  std::vector<std::size_t> outcomes;  // per wing
  std::vector<Mat> dcfs;
  std::size_t num_settings() const;
};

struct CorrelationTable {
  std::vector<std::size_t> settings;
  std::vector<std::size_t> outcomes;
  std::vector<RVec> probs;  // per global setting over outcome tuples
};

SettingDcfs beam_dcfs(const SettingScenario& sc);
CorrelationTable correlation_table(const SettingDcfs& d);

// Slot layout shared by joint measures and joint DCFs: one slot per
// (wing, setting), wing-major, then an optional trailing "k" slot over the
// Z history-events.
struct JointLayout {
  std::vector<Wing> wings;
  std::size_t k_dim = 0;  // 0: no k slot

  std::size_t num_slots() const;
  std::size_t slot(std::size_t wing, std::size_t setting) const;
  std::vector<std::string> slot_names() const;
  std::vector<std::size_t> dims() const;
  std::size_t size() const;  // product of dims
};

struct JointMeasure {
  JointLayout layout;
  std::vector<double> p;
};

struct JointDcf {
  JointLayout layout;
  Mat matrix;
};

// Generic marginal over a subset of slots (kept in the given order).
struct MarginalMeasure {
  std::vector<std::size_t> dims;
  std::vector<double> p;
};
MarginalMeasure marginalize_measure(const JointMeasure& jm, const std::vector<std::size_t>& kept);
// Sums over dropped slots on both sides independently.
Mat marginalize_dcf(const Mat& m, const std::vector<std::size_t>& dims, const std::vector<std::size_t>& kept);

// Setting slots of the global setting (wing order) followed by k if present.
std::vector<std::size_t> setting_slots(const JointLayout& layout, const std::vector<std::size_t>& setting);

struct ClassicalFactorizability {
  double max_residual = 0;
  bool pass = false;
};
ClassicalFactorizability check_factorizability_classical(const SettingScenario& sc);

JointMeasure classical_patch(const SettingScenario& sc, const Tolerance& tol = {});
// D^{sigma Z} entries against the patch marginals, max over settings.
double classical_patch_marginal_residual(const JointMeasure& jm, const SettingScenario& sc);
CorrelationTable table_from_measure(const JointMeasure& jm);

struct QuantumPatchOptions {
  // Operator order as (wing, setting) pairs; empty means wing-major canonical.
  std::vector<std::pair<std::size_t, std::size_t>> ordering;
  bool verify_preconditions = true;
};

struct QuantumPatchDiagnostics {
  double max_commutator = 0;
  double max_codomain_residual = 0;
  double max_poz_violation = 0;
  double max_lon_residual = 0;
};

JointDcf quantum_patch(const SettingScenario& sc, const QuantumPatchOptions& opt = {},
                       QuantumPatchDiagnostics* diag = nullptr);
double quantum_patch_marginal_residual(const JointDcf& jd, const SettingScenario& sc);
// Sum over k and k-bar.
JointDcf beams_only(const JointDcf& jd);
SettingDcfs setting_dcfs_from_joint(const JointDcf& jd);
CorrelationTable table_from_dcf(const JointDcf& jd);

// Delta-function construction: Z carries one label per joint beam tuple.
SettingScenario converse_model(const JointDcf& djoint, const Tolerance& tol = {});

// |<ab> + <ab'> + <a'b> - <a'b'>| with +1 for u and -1 for d.
double chsh_value(const CorrelationTable& ct);
// Minus sign on each of the four terms in turn (ab, ab', a'b, a'b').
std::array<double, 4> chsh_variants(const CorrelationTable& ct);

double check_no_signalling(const SettingDcfs& d);
double check_no_signalling(const CorrelationTable& ct);

struct FeasibilityOptions {
  std::size_t budget = 20000;
  std::uint64_t seed = 0;
  // Scale of the seeded Hermitian starting point. Large random starts put the
  // iterates near the PSD boundary, where convergence becomes sublinear.
  double start_scale = 1e-3;
  double gap_threshold = 1e-6;
  double infeasible_gap = 1e-3;
};

struct FeasibilityReport {
  std::string verdict;  // "feasible", "undecided", "undecided-infeasible"
  double gap = 0;
  std::size_t iterations = 0;
  double min_eigenvalue = 0;
  double marginal_residual = 0;
  Mat witness;
};

FeasibilityReport joint_feasibility(const SettingDcfs& d, const FeasibilityOptions& opt = {});

}  // namespace qmt
