#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qmt/causality.hpp"

namespace qmt {

struct SkGate {
  int t = 1;                // acts between slices t-1 and t
  std::vector<int> sites;   // distinct; local index sum_j v[sites[j]] * q^j
  Mat u;                    // q^k x q^k
};

// Cells are (site, time) with time slices 0..T; cell index t*L + s and name
// "s{site}t{time}". Configurations of a slice are indexed sum_s v_s q^s.
struct SkConfig {
  int L = 1, T = 1, q = 2;
  Vec psi;                   // q^L amplitudes; ignored when rho is set
  std::optional<Mat> rho;    // mixed initial state
  std::vector<SkGate> gates;
  int t_f = -1;              // default truncation; -1 means T
  std::vector<char> regions; // per cell: 'Z', 'A', 'B' or '-'; empty if unassigned
};

// Cells fixed to values; every other cell is free.
using SkCylinder = std::vector<std::pair<std::size_t, Value>>;

struct SkValidation {
  double unitarity_residual = 0;  // max ||U^dagger U - 1||_max over gates
  double norm_residual = 0;       // |tr rho - 1| or | ||psi||^2 - 1 |
  bool ok(const Tolerance& tol = {}) const { return unitarity_residual <= tol.abs && norm_residual <= tol.abs; }
};

class SkCircuitModel {
 public:
  explicit SkCircuitModel(SkConfig cfg, Tolerance tol = {});

  const SkConfig& config() const { return cfg_; }
  int sites() const { return cfg_.L; }
  int steps() const { return cfg_.T; }
  int dim() const { return cfg_.q; }
  std::size_t slice_dim() const { return slice_dim_; }
  std::size_t purification_rank() const { return init_.size(); }
  bool mixed() const { return cfg_.rho.has_value(); }
  int default_truncation() const { return cfg_.t_f < 0 ? cfg_.T : cfg_.t_f; }

  std::size_t cell(int site, int t) const { return static_cast<std::size_t>(t * cfg_.L + site); }
  int cell_time(std::size_t c) const { return static_cast<int>(c) / cfg_.L; }
  int cell_site(std::size_t c) const { return static_cast<int>(c) % cfg_.L; }
  static std::string cell_name(int site, int t);

  SkValidation validate() const;

  // Amplitude <out|layer_t|in> for the product of gates at step t.
  const Mat& layer(int t) const { return layers_[static_cast<std::size_t>(t - 1)]; }

  // Points: optional "purif" label, then cells with time <= t_f.
  std::shared_ptr<const CausalOrder> order(int t_f) const;
  // Full theory truncated at t_f. Throws BudgetExceeded beyond 65536 histories.
  Theory theory(int t_f) const;
  Theory theory() const { return theory(default_truncation()); }

  // |E> for a cylinder event through transfer matrices, never enumerating histories.
  Vec cylinder_vector(const SkCylinder& cyl, int t_f) const;
  cd cylinder_dcf(const SkCylinder& e, const SkCylinder& f, int t_f) const;

  // Cells with the given region label.
  std::vector<std::string> region_cells(char label, int t_f) const;

 private:
  SkConfig cfg_;
  Tolerance tol_;
  std::size_t slice_dim_ = 1;
  std::vector<Mat> layers_;
  std::vector<Vec> init_;  // one amplitude vector per purification label
};

struct TruncationReport {
  double max_residual = 0;
  std::size_t events = 0;
  bool pass = false;
};

// Default sampling: every atom of each single-cell algebra at t <= min(t_f1,
// t_f2) plus `random_events` seeded cylinders; all pairs among them.
TruncationReport check_truncation_independence(const SkCircuitModel& m, int t_f1, int t_f2, std::uint64_t seed = 0,
                                               std::size_t random_events = 100);
// Throws PreconditionError if an event fixes a cell later than either truncation.
TruncationReport check_truncation_independence(const SkCircuitModel& m, int t_f1, int t_f2,
                                               const std::vector<SkCylinder>& events);

struct SkFactorizabilityReport {
  int t0 = 0;
  FactorizabilityReport factorizability;
  GeometryReport geometry;
};

// Uses the model's region map at its default truncation. Throws
// PreconditionError naming the gate if a gate after t0 couples A and B.
SkFactorizabilityReport sk_factorizability_demo(const SkCircuitModel& m,
                                                std::size_t entry_budget = kFactorizabilityEntryBudget);

Mat random_unitary(std::size_t n, std::uint64_t seed);
Vec random_state(std::size_t n, std::uint64_t seed);

// L=1, T=1, q=2, Hadamard gate, psi=|0>.
SkConfig sk_hadamard_config();
// Identity gates on neighbouring pairs, psi a point mass on configuration c0.
SkConfig sk_identity_config(int L, int T, std::size_t c0);
// L=2, T=2 with random two-site gates at both steps.
SkConfig sk_small_config(std::uint64_t seed);
// L=4, T=3, t0=1: gate (1,2) at t=1, then (0,1) and (2,3) at t=2,3. Z is
// slices 0-1, A is sites 0-1 and B sites 2-3 at t>=2. `couple` adds a (1,2)
// gate at t=3 instead of the (2,3) one.
SkConfig sk_factorizability_config(std::uint64_t seed, bool couple = false);

}  // namespace qmt
