#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qmt/causal_order.hpp"
#include "qmt/decoherence.hpp"
#include "qmt/hilbert.hpp"

namespace qmt {

// A decoherence functional together with the causal order its histories live on.
struct Theory {
  std::shared_ptr<const CausalOrder> order;
  DecoherenceFunctional dcf;

  const HistorySpace& hs() const { return dcf.hs(); }
  Region region(const std::vector<std::string>& names) const { return order->region(names); }
};

// Checks that the history space points equal the order points.
Theory make_theory(std::shared_ptr<const CausalOrder> order, DecoherenceFunctional dcf);

struct PozRegionResult {
  Region region;
  Region shadow;
  std::size_t kernel_dim = 0;
  double violation = 0;  // squared norm, maximized over unit kernel vectors and atoms of A_R
  bool pass = true;
};

struct PozReport {
  std::string mode;  // "listed", "exhaustive", "up-sets"
  std::vector<PozRegionResult> results;
  std::size_t vacuous = 0;  // regions skipped because their shadow is empty
  double max_violation = 0;
  bool pass = true;
};

PozRegionResult poz_region(const Theory& t, const Region& r);
PozReport check_poz(const Theory& t, const std::vector<Region>& regions);
// All regions when |M| <= 12; otherwise `extra` plus complements of every
// down-set (a region and its causal future share a shadow, so up-sets
// suffice). Throws BudgetExceeded when there are more than 4096 down-sets.
PozReport check_poz_exhaustive(const Theory& t, const std::vector<Region>& extra = {});

// Orthonormal frame of H_Q: b_k = sum_p coeffs(p,k) |F_p> over Q-atoms F_p.
struct Frame {
  Region domain;
  std::vector<std::vector<Value>> representatives;
  Mat coeffs;  // |atoms| x m
  std::size_t dim() const { return static_cast<std::size_t>(coeffs.cols()); }
};

Frame make_frame(const Theory& t, const Region& q);

// Q-atoms of t aligned with the frame's representatives.
std::vector<Event> frame_atoms(const Theory& t, const Frame& f);

// Frame coordinates of |X> and the norm of its component outside H_Q.
struct Coordinates {
  Vec coords;
  double outside = 0;
};
Coordinates coordinates(const Theory& t, const Frame& f, const Event& x);

struct EventOperator {
  Event event;
  Region region;
  Region domain_region;
  Frame frame;
  Mat matrix;                   // m x m in the frame basis
  double codomain_residual = 0; // norm of the image component outside H_Q
  double inconsistency = 0;     // squared norm of images of null vectors
  double poz_violation = 0;     // PoZ at the event's region
  bool forced = false;
};

struct OperatorOptions {
  bool force = false;
  std::optional<Frame> frame;  // share a frame across theories that agree on Q
  bool check_poz = true;
};

EventOperator event_operator(const Theory& t, const Region& r, const Event& e, const Region& q,
                             const OperatorOptions& opt = {});

// || E^|Omega> - |E> ||
double universal_residual(const Theory& t, const EventOperator& op);

struct LonResult {
  Region past;
  Region domain;
  std::size_t dim_past = 0, dim_domain = 0;
  double residual = 0;
  bool pass = true;
};

struct LonReport {
  std::string mode;
  std::vector<LonResult> results;
  double max_residual = 0;
  bool pass = true;
};

LonResult lon_past_set(const Theory& t, const Region& z);
LonReport check_lon(const Theory& t, const std::vector<Region>& past_sets);
LonReport check_lon_exhaustive(const Theory& t);

struct CommutationReport {
  double commutator_norm = 0;
  double direct_residual = 0;  // E_B^ E_A^ |F_k> against |E_B E_A F_k> over Z-atoms
  bool pass = false;
};

CommutationReport check_spacelike_commutation(const Theory& t, const Region& z, const Region& a, const Region& b,
                                              const Event& ea, const Event& eb);

double check_partition_identity(const Theory& t, const Region& r, const std::vector<Event>& partition,
                                const Region& q);

struct FactorizabilityReport {
  double max_residual = 0;
  std::size_t pairs_checked = 0;
  std::size_t pairs_skipped_zero = 0;  // both sides identically zero
  std::size_t entries_checked = 0;
  bool sampled = false;
  bool pass = false;
};

inline constexpr std::size_t kFactorizabilityEntryBudget = std::size_t{1} << 33;

FactorizabilityReport check_quantum_factorizability(const Theory& t, const Region& z, const Region& a,
                                                    const Region& b,
                                                    std::size_t entry_budget = kFactorizabilityEntryBudget,
                                                    std::uint64_t seed = 0);

double operator_norm(const Mat& m);

}  // namespace qmt
