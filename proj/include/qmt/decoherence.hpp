#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "qmt/histories.hpp"
#include "qmt/linalg.hpp"

namespace qmt {

// D(E,F) = sum_{g in E, h in F} M[g,h], conjugate-linear in E.
//
// Dense mode stores M. Vector mode stores one ambient vector per history
// (columns of V) with M = V^dagger V; this is how Schwinger-Keldysh models
// are held without materializing |Omega|^2 entries.
class DecoherenceFunctional {
 public:
  static constexpr std::size_t kDenseCap = 1024;

  static DecoherenceFunctional dense(SpacePtr space, Mat m, Tolerance tol = {});
  static DecoherenceFunctional from_vectors(SpacePtr space, Mat v, Tolerance tol = {});

  const SpacePtr& space() const { return space_; }
  const HistorySpace& hs() const { return *space_; }
  const Tolerance& tol() const { return tol_; }
  bool is_dense() const { return dense_ != nullptr; }
  const Mat& matrix() const;
  // Matrix over all histories, materialized from vectors if needed (cap applies).
  Mat dense_matrix() const;

  cd evaluate(const Event& e, const Event& f) const;
  double measure(const Event& e) const;

  // Entry (i,j) = D(lhs_i, rhs_j).
  Mat cross_gram(const std::vector<Event>& lhs, const std::vector<Event>& rhs) const;
  Mat gram(const std::vector<Event>& events) const { return cross_gram(events, events); }

  // Ambient vectors v_E (columns) with <v_E|v_F> = D(E,F). Dense mode goes
  // through the factor M = L^dagger L built from the clipped spectrum.
  Mat event_vectors(const std::vector<Event>& events) const;
  Vec event_vector(const Event& e) const;
  const Mat& history_vectors() const;
  std::size_t ambient_dim() const { return history_vectors().rows(); }
  // Most negative eigenvalue clipped while building the factor (0 if none).
  double clipped_min_eigenvalue() const;

  // Hermiticity threshold rel * max(1, ||M||_inf) (or the vector-mode analog).
  double scale_threshold() const;

 private:
  struct FactorCache {
    std::once_flag once;
    Mat l;
    double clipped_min = 0.0;
  };
  void require(const Event& e) const;
  const FactorCache& factor() const;

  SpacePtr space_;
  Tolerance tol_;
  std::shared_ptr<const Mat> dense_;
  std::shared_ptr<const Mat> vectors_;
  std::shared_ptr<FactorCache> factor_;
};

struct AxiomReport {
  bool sampled = false;
  double hermiticity_residual = 0, hermiticity_threshold = 0;
  double normalization_residual = 0, normalization_threshold = 0;
  double min_eigenvalue = 0, max_eigenvalue = 0, psd_threshold = 0;
  double sum_rule_residual = 0;
  std::size_t sum_rule_samples = 0;
  bool hermitian = false, normalized = false, strongly_positive = false, sum_rule = false;
  bool ok() const { return hermitian && normalized && strongly_positive && sum_rule; }
};

// Dense mode checks the full matrix. Vector mode samples: atoms of every
// single-point region algebra plus `pairs` seeded random event pairs.
AxiomReport validate_axioms(const DecoherenceFunctional& d, std::uint64_t seed = 0, std::size_t pairs = 100);

// |mu(E+F+G) - mu(E+F) - mu(F+G) - mu(G+E) + mu(E) + mu(F) + mu(G)|
double check_sum_rule(const DecoherenceFunctional& d, const Event& e, const Event& f, const Event& g);

// Atom-level check: off-diagonals vanish and the diagonal is real, nonnegative.
bool is_classical(const DecoherenceFunctional& d);

// Decoherence functional over Omega_R (histories = region representatives).
DecoherenceFunctional restrict(const DecoherenceFunctional& d, const Region& r);

struct AgreementReport {
  bool same_histories = false;
  double matrix_residual = 0;
  bool agree = false;
};

// Region given by point names, resolved separately in each theory's space.
AgreementReport check_agreement(const DecoherenceFunctional& d1, const DecoherenceFunctional& d2,
                                const std::vector<std::string>& region_points);

}  // namespace qmt
