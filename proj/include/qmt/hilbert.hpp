#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "qmt/decoherence.hpp"

namespace qmt {

struct EventHilbertSpace {
  std::optional<Region> region;  // nullopt: atoms are all histories
  std::vector<Event> atoms;
  Mat gram;
  RVec eigenvalues;      // ascending
  std::size_t rank = 0;
  Mat factor;            // rank x |atoms|, gram ~ factor^dagger factor
  Vec universal;         // coefficients of |Omega> over atoms (all ones)
  double universal_norm2 = 0;
  double clipped_min_eigenvalue = 0;
};

EventHilbertSpace build_event_space(const DecoherenceFunctional& d, const std::optional<Region>& r = std::nullopt);

struct LinearCombination {
  std::vector<std::pair<Event, cd>> terms;
};

Vec combo_vector(const DecoherenceFunctional& d, const LinearCombination& c);
// Throws StrongPositivityError if the norm is negative beyond tolerance.
double combo_norm2(const DecoherenceFunctional& d, const LinearCombination& c);
bool is_null(const DecoherenceFunctional& d, const LinearCombination& c);
std::size_t subspace_dim(const DecoherenceFunctional& d, const Region& r);

struct SpanResult {
  bool member = false;
  double residual = 0;  // norm of the component orthogonal to the span
};
SpanResult in_subspace(const DecoherenceFunctional& d, const LinearCombination& c, const Region& r);

// Orthonormal basis (ambient coordinates) of the span of the region's atom vectors.
Mat region_basis(const DecoherenceFunctional& d, const Region& r);

}  // namespace qmt
