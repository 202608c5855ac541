#include "qmt/decoherence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "qmt/error.hpp"

namespace qmt {
namespace {

Event random_event(const HistorySpace& hs, std::mt19937_64& rng) {
  Bits b(hs.size());
  std::bernoulli_distribution coin(0.5);
  for (std::size_t h = 0; h < hs.size(); ++h)
    if (coin(rng)) b.set(h);
  return Event(hs.id(), std::move(b));
}

}  // namespace

DecoherenceFunctional DecoherenceFunctional::dense(SpacePtr space, Mat m, Tolerance tol) {
  if (!space) throw InputError("decoherence functional needs a history space");
  const auto n = static_cast<Eigen::Index>(space->size());
  if (space->size() > kDenseCap) throw BudgetExceeded("dense decoherence matrix exceeds 1024 histories");
  if (m.rows() != n || m.cols() != n) throw InputError("decoherence matrix size differs from |Omega|");
  DecoherenceFunctional d;
  d.space_ = std::move(space);
  d.tol_ = tol;
  d.dense_ = std::make_shared<const Mat>(std::move(m));
  d.factor_ = std::make_shared<FactorCache>();
  return d;
}

DecoherenceFunctional DecoherenceFunctional::from_vectors(SpacePtr space, Mat v, Tolerance tol) {
  if (!space) throw InputError("decoherence functional needs a history space");
  if (v.cols() != static_cast<Eigen::Index>(space->size()))
    throw InputError("history vector count differs from |Omega|");
  DecoherenceFunctional d;
  d.space_ = std::move(space);
  d.tol_ = tol;
  d.vectors_ = std::make_shared<const Mat>(std::move(v));
  d.factor_ = std::make_shared<FactorCache>();
  return d;
}

const Mat& DecoherenceFunctional::matrix() const {
  if (!dense_) throw PreconditionError("operation requires a dense decoherence functional");
  return *dense_;
}

Mat DecoherenceFunctional::dense_matrix() const {
  if (dense_) return *dense_;
  if (space_->size() > kDenseCap) throw BudgetExceeded("dense decoherence matrix exceeds 1024 histories");
  return vectors_->adjoint() * (*vectors_);
}

void DecoherenceFunctional::require(const Event& e) const { space_->require_same(e); }

cd DecoherenceFunctional::evaluate(const Event& e, const Event& f) const {
  require(e);
  require(f);
  if (dense_) {
    const Mat& m = *dense_;
    cd acc = 0;
    const auto fi = f.indices();
    for (std::size_t g : e.indices())
      for (std::size_t h : fi) acc += m(g, h);
    return acc;
  }
  return event_vector(e).dot(event_vector(f));
}

double DecoherenceFunctional::scale_threshold() const {
  if (dense_) return tol_.rel * std::max(1.0, inf_norm(*dense_));
  return tol_.rel;
}

double DecoherenceFunctional::measure(const Event& e) const {
  cd v = evaluate(e, e);
  if (std::abs(v.imag()) > scale_threshold())
    throw HermiticityError("measure has imaginary part " + std::to_string(v.imag()));
  return v.real();
}

Mat DecoherenceFunctional::cross_gram(const std::vector<Event>& lhs, const std::vector<Event>& rhs) const {
  for (const auto& e : lhs) require(e);
  for (const auto& e : rhs) require(e);
  if (!dense_) return event_vectors(lhs).adjoint() * event_vectors(rhs);
  const Mat& m = *dense_;
  const Eigen::Index n = m.rows();
  // Column sums of M over each rhs event, then row sums over each lhs event.
  Mat my = Mat::Zero(n, static_cast<Eigen::Index>(rhs.size()));
  for (std::size_t j = 0; j < rhs.size(); ++j)
    for (std::size_t h : rhs[j].indices()) my.col(j) += m.col(h);
  Mat out = Mat::Zero(static_cast<Eigen::Index>(lhs.size()), static_cast<Eigen::Index>(rhs.size()));
  for (std::size_t i = 0; i < lhs.size(); ++i)
    for (std::size_t g : lhs[i].indices()) out.row(i) += my.row(g);
  return out;
}

const DecoherenceFunctional::FactorCache& DecoherenceFunctional::factor() const {
  std::call_once(factor_->once, [this] {
    const Mat& m = *dense_;
    Spectrum s = hermitian_eig(m);
    const Eigen::Index n = m.rows();
    double lmax = n ? std::max(s.values(n - 1), 0.0) : 0.0;
    double lmin = n ? s.values(0) : 0.0;
    factor_->clipped_min = std::min(lmin, 0.0);
    if (lmin < -tol_.rel * lmax)
      throw StrongPositivityError("decoherence matrix is not positive semi-definite (min eigenvalue " +
                                  std::to_string(lmin) + ")");
    // Eigenvalues at the solver's noise level would enter the factor as
    // their square roots (1e-16 -> 1e-8), so they are dropped.
    const double cutoff = 8.0 * static_cast<double>(n) * std::numeric_limits<double>::epsilon() * lmax;
    Eigen::Index first = 0;
    while (first < n && s.values(first) <= cutoff) ++first;
    const Eigen::Index r = n - first;
    Mat l(r, n);
    for (Eigen::Index k = 0; k < r; ++k)
      l.row(k) = std::sqrt(s.values(first + k)) * s.vectors.col(first + k).adjoint();
    factor_->l = std::move(l);
  });
  return *factor_;
}

const Mat& DecoherenceFunctional::history_vectors() const {
  if (vectors_) return *vectors_;
  return factor().l;
}

double DecoherenceFunctional::clipped_min_eigenvalue() const {
  if (vectors_) return 0.0;
  return factor().clipped_min;
}

Mat DecoherenceFunctional::event_vectors(const std::vector<Event>& events) const {
  const Mat& v = history_vectors();
  Mat out = Mat::Zero(v.rows(), static_cast<Eigen::Index>(events.size()));
  for (std::size_t j = 0; j < events.size(); ++j) {
    require(events[j]);
    const Bits& b = events[j].bits();
    for (auto h = b.find_first(); h != Bits::npos; h = b.find_next(h)) out.col(j) += v.col(h);
  }
  return out;
}

Vec DecoherenceFunctional::event_vector(const Event& e) const { return event_vectors({e}).col(0); }

AxiomReport validate_axioms(const DecoherenceFunctional& d, std::uint64_t seed, std::size_t pairs) {
  AxiomReport r;
  const HistorySpace& hs = d.hs();
  const double rel = d.tol().rel;
  std::mt19937_64 rng(seed);
  if (d.is_dense()) {
    const Mat& m = d.matrix();
    double scale = std::max(1.0, inf_norm(m));
    r.hermiticity_residual = max_abs(m - m.adjoint());
    r.hermiticity_threshold = rel * scale;
    r.normalization_residual = std::abs(m.sum() - cd(1.0));
    r.normalization_threshold = rel * scale;
    Spectrum s = hermitian_eig(m);
    r.min_eigenvalue = s.values(0);
    r.max_eigenvalue = s.values(s.values.size() - 1);
  } else {
    r.sampled = true;
    // Gram matrices over atoms of each single-point region algebra.
    double omega = d.measure(hs.full_event());
    r.min_eigenvalue = omega;
    r.max_eigenvalue = omega;
    for (std::size_t p = 0; p < hs.num_points(); ++p) {
      RegionAlgebra alg = region_algebra(hs, Region::of(hs.num_points(), {p}));
      Spectrum s = hermitian_eig(d.gram(alg.atoms));
      r.min_eigenvalue = std::min(r.min_eigenvalue, s.values(0));
      r.max_eigenvalue = std::max(r.max_eigenvalue, s.values(s.values.size() - 1));
    }
    double herm = 0;
    for (std::size_t i = 0; i < pairs; ++i) {
      Event e = random_event(hs, rng), f = random_event(hs, rng);
      herm = std::max(herm, std::abs(d.evaluate(e, f) - std::conj(d.evaluate(f, e))));
    }
    r.hermiticity_residual = herm;
    r.hermiticity_threshold = rel;
    r.normalization_residual = std::abs(d.evaluate(hs.full_event(), hs.full_event()) - cd(1.0));
    r.normalization_threshold = rel;
  }
  r.psd_threshold = rel * std::max(r.max_eigenvalue, 0.0);
  // Sum rule on random disjoint triples.
  std::uniform_int_distribution<int> slot(0, 3);
  const std::size_t samples = d.is_dense() ? 20 : pairs;
  double sr = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    Bits b[3] = {Bits(hs.size()), Bits(hs.size()), Bits(hs.size())};
    for (std::size_t h = 0; h < hs.size(); ++h) {
      int s = slot(rng);
      if (s < 3) b[s].set(h);
    }
    sr = std::max(sr, check_sum_rule(d, Event(hs.id(), b[0]), Event(hs.id(), b[1]), Event(hs.id(), b[2])));
  }
  r.sum_rule_residual = sr;
  r.sum_rule_samples = samples;
  r.hermitian = r.hermiticity_residual <= r.hermiticity_threshold;
  r.normalized = r.normalization_residual <= r.normalization_threshold;
  r.strongly_positive = r.min_eigenvalue >= -r.psd_threshold;
  r.sum_rule = r.sum_rule_residual <= r.hermiticity_threshold;
  return r;
}

double check_sum_rule(const DecoherenceFunctional& d, const Event& e, const Event& f, const Event& g) {
  if (intersect(e, f).count() || intersect(f, g).count() || intersect(g, e).count())
    throw PreconditionError("sum rule needs pairwise disjoint events");
  auto mu = [&](const Event& x) { return d.evaluate(x, x).real(); };
  Event ef = unite(e, f), fg = unite(f, g), ge = unite(g, e);
  double v = mu(unite(ef, g)) - mu(ef) - mu(fg) - mu(ge) + mu(e) + mu(f) + mu(g);
  return std::abs(v);
}

bool is_classical(const DecoherenceFunctional& d) {
  Mat m = d.dense_matrix();
  double thr = d.tol().rel * std::max(1.0, inf_norm(m));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (i == j) {
        if (std::abs(m(i, i).imag()) > thr || m(i, i).real() < -thr) return false;
      } else if (std::abs(m(i, j)) > thr) {
        return false;
      }
    }
  return true;
}

DecoherenceFunctional restrict(const DecoherenceFunctional& d, const Region& r) {
  const HistorySpace& hs = d.hs();
  RegionAlgebra alg = region_algebra(hs, r);
  std::vector<std::string> pts;
  std::vector<int> alph;
  for (std::size_t p : r.indices()) {
    pts.push_back(hs.points()[p]);
    alph.push_back(hs.alphabets()[p]);
  }
  auto sub = std::make_shared<const HistorySpace>(pts, alph, alg.representatives);
  if (d.is_dense()) return DecoherenceFunctional::dense(sub, d.gram(alg.atoms), d.tol());
  return DecoherenceFunctional::from_vectors(sub, d.event_vectors(alg.atoms), d.tol());
}

AgreementReport check_agreement(const DecoherenceFunctional& d1, const DecoherenceFunctional& d2,
                                const std::vector<std::string>& region_points) {
  AgreementReport rep;
  RegionAlgebra a1 = region_algebra(d1.hs(), d1.hs().region(region_points));
  RegionAlgebra a2 = region_algebra(d2.hs(), d2.hs().region(region_points));
  // Point order inside the region follows each space; compare by name.
  auto names1 = d1.hs().region_names(a1.region), names2 = d2.hs().region_names(a2.region);
  if (names1 != names2) {
    std::vector<std::size_t> perm(names1.size());
    for (std::size_t i = 0; i < names1.size(); ++i)
      perm[i] = static_cast<std::size_t>(std::find(names2.begin(), names2.end(), names1[i]) - names2.begin());
    for (auto& rep2 : a2.representatives) {
      std::vector<Value> re(rep2.size());
      for (std::size_t i = 0; i < perm.size(); ++i) re[i] = rep2[perm[i]];
      rep2 = re;
    }
    std::vector<std::size_t> order(a2.atoms.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return a2.representatives[x] < a2.representatives[y]; });
    RegionAlgebra sorted = a2;
    for (std::size_t i = 0; i < order.size(); ++i) {
      sorted.atoms[i] = a2.atoms[order[i]];
      sorted.representatives[i] = a2.representatives[order[i]];
    }
    a2 = std::move(sorted);
  }
  rep.same_histories = a1.representatives == a2.representatives;
  if (!rep.same_histories) return rep;
  Mat m1 = d1.gram(a1.atoms), m2 = d2.gram(a2.atoms);
  rep.matrix_residual = max_abs(m1 - m2);
  double thr = std::max(d1.tol().rel, d2.tol().rel) * std::max({1.0, inf_norm(m1), inf_norm(m2)});
  rep.agree = rep.matrix_residual <= thr;
  return rep;
}

}  // namespace qmt
