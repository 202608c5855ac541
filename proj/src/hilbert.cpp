#include "qmt/hilbert.hpp"

#include <cmath>

#include "qmt/error.hpp"

namespace qmt {

EventHilbertSpace build_event_space(const DecoherenceFunctional& d, const std::optional<Region>& r) {
  EventHilbertSpace s;
  s.region = r;
  const HistorySpace& hs = d.hs();
  if (r) {
    s.atoms = region_algebra(hs, *r).atoms;
  } else {
    for (std::size_t h = 0; h < hs.size(); ++h) s.atoms.push_back(hs.event({h}));
  }
  if (s.atoms.size() > DecoherenceFunctional::kDenseCap)
    throw BudgetExceeded("event Hilbert space over more than 1024 atoms");
  s.gram = d.gram(s.atoms);
  Spectrum sp = hermitian_eig(s.gram);
  s.eigenvalues = sp.values;
  const Eigen::Index n = s.gram.rows();
  double lmax = n ? std::max(sp.values(n - 1), 0.0) : 0.0;
  s.clipped_min_eigenvalue = n ? std::min(sp.values(0), 0.0) : 0.0;
  if (n && sp.values(0) < -d.tol().rel * lmax)
    throw StrongPositivityError("region Gram matrix is not positive semi-definite");
  s.rank = numerical_rank(sp.values, d.tol().rel);
  s.factor = Mat(static_cast<Eigen::Index>(s.rank), n);
  for (std::size_t k = 0; k < s.rank; ++k) {
    Eigen::Index col = n - static_cast<Eigen::Index>(s.rank) + static_cast<Eigen::Index>(k);
    s.factor.row(static_cast<Eigen::Index>(k)) = std::sqrt(sp.values(col)) * sp.vectors.col(col).adjoint();
  }
  s.universal = Vec::Ones(n);
  s.universal_norm2 = (s.universal.adjoint() * s.gram * s.universal)(0, 0).real();
  return s;
}

Vec combo_vector(const DecoherenceFunctional& d, const LinearCombination& c) {
  Vec v = Vec::Zero(static_cast<Eigen::Index>(d.ambient_dim()));
  for (const auto& [e, coeff] : c.terms) v += coeff * d.event_vector(e);
  return v;
}

double combo_norm2(const DecoherenceFunctional& d, const LinearCombination& c) {
  std::vector<Event> events;
  Vec coeffs(static_cast<Eigen::Index>(c.terms.size()));
  for (std::size_t i = 0; i < c.terms.size(); ++i) {
    events.push_back(c.terms[i].first);
    coeffs(static_cast<Eigen::Index>(i)) = c.terms[i].second;
  }
  if (events.empty()) return 0.0;
  cd v = coeffs.dot(d.gram(events) * coeffs);
  if (v.real() < -d.scale_threshold())
    throw StrongPositivityError("negative squared norm " + std::to_string(v.real()));
  return std::max(v.real(), 0.0);
}

bool is_null(const DecoherenceFunctional& d, const LinearCombination& c) {
  return combo_norm2(d, c) <= d.tol().abs;
}

Mat region_basis(const DecoherenceFunctional& d, const Region& r) {
  RegionAlgebra alg = region_algebra(d.hs(), r);
  return range_basis(d.event_vectors(alg.atoms), d.tol().rel);
}

std::size_t subspace_dim(const DecoherenceFunctional& d, const Region& r) {
  return static_cast<std::size_t>(region_basis(d, r).cols());
}

SpanResult in_subspace(const DecoherenceFunctional& d, const LinearCombination& c, const Region& r) {
  Mat basis = region_basis(d, r);
  Vec v = combo_vector(d, c);
  Vec perp = v - basis * (basis.adjoint() * v);
  SpanResult s;
  s.residual = perp.norm();
  s.member = s.residual <= d.tol().abs;
  return s;
}

}  // namespace qmt
