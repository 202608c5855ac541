#include "qmt/causality.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "qmt/error.hpp"

namespace qmt {
namespace {

// Moore-Penrose inverse of a PSD matrix with the rank threshold.
Mat psd_pinv(const Mat& c, double rel) {
  const Eigen::Index n = c.rows();
  if (n == 0) return c;
  Spectrum s = hermitian_eig(c);
  double thr = std::max(rel * std::max(s.values(n - 1), 0.0), 1e-15);
  Mat out = Mat::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k)
    if (s.values(k) > thr) out += (1.0 / s.values(k)) * s.vectors.col(k) * s.vectors.col(k).adjoint();
  return out;
}

std::vector<Event> intersect_all(const Event& e, const std::vector<Event>& atoms) {
  std::vector<Event> out;
  out.reserve(atoms.size());
  for (const Event& a : atoms) out.push_back(intersect(e, a));
  return out;
}

}  // namespace

double operator_norm(const Mat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues()(0);
}

Theory make_theory(std::shared_ptr<const CausalOrder> order, DecoherenceFunctional dcf) {
  if (!order) throw InputError("theory needs a causal order");
  if (order->points() != dcf.hs().points())
    throw StructuralError("history space points differ from causal order points");
  return Theory{std::move(order), std::move(dcf)};
}

PozRegionResult poz_region(const Theory& t, const Region& r) {
  const HistorySpace& hs = t.hs();
  if (r.universe() != t.order->size()) throw InputError("region outside the causal order");
  PozRegionResult res;
  res.region = r;
  res.shadow = shadow(*t.order, r);
  if (res.shadow.empty()) return res;
  const double rel = t.dcf.tol().rel;
  RegionAlgebra ra = region_algebra(hs, r);
  RegionAlgebra sa = region_algebra(hs, res.shadow);
  const std::size_t ns = sa.atoms.size(), nr = ra.atoms.size();
  const Mat& hv = t.dcf.history_vectors();
  const Eigen::Index d = hv.rows();

  if (static_cast<Eigen::Index>(ns) <= d) {
    // Coefficient-space form: kernel of the shadow Gram, then images.
    Mat gram = t.dcf.gram(sa.atoms);
    Mat k = kernel_basis(gram, rel);
    res.kernel_dim = static_cast<std::size_t>(k.cols());
    if (k.cols() == 0) return res;
    for (const Event& e : ra.atoms) {
      Mat g = t.dcf.gram(intersect_all(e, sa.atoms));
      res.violation = std::max(res.violation, max_eigenvalue(k.adjoint() * g * k));
    }
  } else {
    // Ambient form: violation_E = lambda_max(W W^+ - (W V^+)(V V^+)^+(V W^+)),
    // i.e. the images of the kernel of V, accumulated per (E-atom, shadow-atom).
    Mat v = Mat::Zero(d, static_cast<Eigen::Index>(ns));
    std::map<std::pair<std::size_t, std::size_t>, Vec> w;
    for (std::size_t h = 0; h < hs.size(); ++h) {
      auto col = hv.col(static_cast<Eigen::Index>(h));
      if (col.squaredNorm() == 0.0) continue;
      std::size_t p = sa.atom_of[h];
      v.col(static_cast<Eigen::Index>(p)) += col;
      auto [it, fresh] = w.try_emplace({ra.atom_of[h], p}, col);
      if (!fresh) it->second += col;
    }
    Mat c = v * v.adjoint();
    Mat cp = psd_pinv(c, rel);
    res.kernel_dim = ns - numerical_rank(hermitian_eig(c).values, rel);
    if (res.kernel_dim == 0) return res;
    auto it = w.begin();
    for (std::size_t e = 0; e < nr; ++e) {
      Mat a = Mat::Zero(d, d), b = Mat::Zero(d, d);
      for (; it != w.end() && it->first.first == e; ++it) {
        const Vec& x = it->second;
        a.noalias() += x * x.adjoint();
        b.noalias() += x * v.col(static_cast<Eigen::Index>(it->first.second)).adjoint();
      }
      Mat resid = a - b * cp * b.adjoint();
      res.violation = std::max(res.violation, max_eigenvalue(resid));
    }
  }
  res.violation = std::max(res.violation, 0.0);
  res.pass = res.violation <= t.dcf.tol().abs;
  return res;
}

PozReport check_poz(const Theory& t, const std::vector<Region>& regions) {
  PozReport rep;
  rep.mode = "listed";
  for (const Region& r : regions) {
    PozRegionResult res = poz_region(t, r);
    if (res.shadow.empty()) {
      ++rep.vacuous;
      continue;
    }
    rep.max_violation = std::max(rep.max_violation, res.violation);
    rep.pass = rep.pass && res.pass;
    rep.results.push_back(std::move(res));
  }
  return rep;
}

PozReport check_poz_exhaustive(const Theory& t, const std::vector<Region>& extra) {
  const std::size_t n = t.order->size();
  std::vector<Region> regions;
  std::string mode;
  if (n <= kExhaustivePointLimit) {
    mode = "exhaustive";
    for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
      Bits b(n, mask);
      regions.emplace_back(b);
    }
  } else {
    mode = "up-sets";
    regions = extra;
    auto downs = enumerate_down_sets(*t.order, kDownSetLimit);
    if (!downs) throw BudgetExceeded("more than 4096 down-sets; supply an explicit region list");
    for (const Region& z : *downs)
      if (!z.empty() && z.count() < n) regions.push_back(~z);
  }
  PozReport rep = check_poz(t, regions);
  rep.mode = mode;
  return rep;
}

Frame make_frame(const Theory& t, const Region& q) {
  RegionAlgebra alg = region_algebra(t.hs(), q);
  Mat g = t.dcf.gram(alg.atoms);
  Spectrum s = hermitian_eig(g);
  const Eigen::Index n = g.rows();
  double thr = std::max(t.dcf.tol().rel * std::max(s.values(n - 1), 0.0), 1e-15);
  Eigen::Index first = 0;
  while (first < n && s.values(first) <= thr) ++first;
  Frame f;
  f.domain = q;
  f.representatives = alg.representatives;
  f.coeffs = s.vectors.rightCols(n - first);
  for (Eigen::Index k = 0; k < n - first; ++k) f.coeffs.col(k) /= std::sqrt(s.values(first + k));
  return f;
}

std::vector<Event> frame_atoms(const Theory& t, const Frame& f) {
  RegionAlgebra alg = region_algebra(t.hs(), f.domain);
  if (alg.representatives != f.representatives)
    throw StructuralError("frame representatives do not match this theory's domain atoms");
  return alg.atoms;
}

Coordinates coordinates(const Theory& t, const Frame& f, const Event& x) {
  std::vector<Event> atoms = frame_atoms(t, f);
  Mat basis = t.dcf.event_vectors(atoms) * f.coeffs;
  Vec vx = t.dcf.event_vector(x);
  Coordinates c;
  c.coords = basis.adjoint() * vx;
  c.outside = (vx - basis * c.coords).norm();
  return c;
}

EventOperator event_operator(const Theory& t, const Region& r, const Event& e, const Region& q,
                             const OperatorOptions& opt) {
  const HistorySpace& hs = t.hs();
  hs.require_same(e);
  if (!in_region_algebra(hs, e, r)) throw PreconditionError("event is not in the algebra of its region");
  Region sh = shadow(*t.order, r);
  const double tol = t.dcf.tol().abs;
  EventOperator op;
  op.event = e;
  op.region = r;
  op.domain_region = q;
  op.forced = opt.force;
  if (!q.subset_of(sh)) {
    if (!is_past_set(*t.order, q) || !r.subset_of(future_domain(*t.order, q)))
      throw PreconditionError("domain region must lie in the shadow, or be a past set whose D+ contains R");
    LonResult lon = lon_past_set(t, q);
    if (!lon.pass && !opt.force)
      throw InconsistentDefinition("Lack of Novelty fails at the domain region (residual " +
                                   std::to_string(lon.residual) + ")");
  }
  if (opt.check_poz) {
    op.poz_violation = poz_region(t, r).violation;
    if (op.poz_violation > tol && !opt.force)
      throw InconsistentDefinition("PoZ fails for the event's region (violation " +
                                   std::to_string(op.poz_violation) + ")");
  }
  op.frame = opt.frame ? *opt.frame : make_frame(t, q);
  std::vector<Event> atoms = frame_atoms(t, op.frame);
  std::vector<Event> images = intersect_all(e, atoms);
  const Mat& c = op.frame.coeffs;
  Mat img = t.dcf.gram(images);
  // Residuals are taken in ambient coordinates; subtracting squared norms
  // would lose half the digits.
  Mat basis = t.dcf.event_vectors(atoms) * c;
  Mat mapped = t.dcf.event_vectors(images) * c;
  op.matrix = basis.adjoint() * mapped;
  op.codomain_residual = (mapped - basis * op.matrix).norm();
  Mat k = kernel_basis(t.dcf.gram(atoms), t.dcf.tol().rel);
  if (k.cols() > 0) op.inconsistency = std::max(0.0, max_eigenvalue(k.adjoint() * img * k));
  if (op.inconsistency > tol && !opt.force)
    throw InconsistentDefinition("null combinations over the domain have non-null images (" +
                                 std::to_string(op.inconsistency) + ")");
  if (op.codomain_residual > tol && !opt.force)
    throw CodomainError("operator image leaves the domain subspace (residual " +
                        std::to_string(op.codomain_residual) + ")");
  return op;
}

double universal_residual(const Theory& t, const EventOperator& op) {
  Coordinates omega = coordinates(t, op.frame, t.hs().full_event());
  Coordinates ev = coordinates(t, op.frame, op.event);
  Vec diff = op.matrix * omega.coords - ev.coords;
  return std::sqrt(diff.squaredNorm() + ev.outside * ev.outside);
}

LonResult lon_past_set(const Theory& t, const Region& z) {
  if (!is_past_set(*t.order, z)) throw PreconditionError("LoN is quantified over past sets");
  LonResult res;
  res.past = z;
  res.domain = future_domain(*t.order, z);
  Mat basis = region_basis(t.dcf, z);
  res.dim_past = static_cast<std::size_t>(basis.cols());
  RegionAlgebra alg = region_algebra(t.hs(), res.domain);
  Mat v = t.dcf.event_vectors(alg.atoms);
  res.dim_domain = static_cast<std::size_t>(range_basis(v, t.dcf.tol().rel).cols());
  Mat perp = v - basis * (basis.adjoint() * v);
  for (Eigen::Index j = 0; j < perp.cols(); ++j) res.residual = std::max(res.residual, perp.col(j).norm());
  res.pass = res.residual <= t.dcf.tol().abs;
  return res;
}

LonReport check_lon(const Theory& t, const std::vector<Region>& past_sets) {
  LonReport rep;
  rep.mode = "listed";
  for (const Region& z : past_sets) {
    LonResult r = lon_past_set(t, z);
    rep.max_residual = std::max(rep.max_residual, r.residual);
    rep.pass = rep.pass && r.pass;
    rep.results.push_back(std::move(r));
  }
  return rep;
}

LonReport check_lon_exhaustive(const Theory& t) {
  auto downs = enumerate_down_sets(*t.order, kDownSetLimit);
  if (!downs) throw BudgetExceeded("more than 4096 down-sets; supply an explicit past-set list");
  LonReport rep = check_lon(t, *downs);
  rep.mode = "exhaustive down-sets";
  return rep;
}

CommutationReport check_spacelike_commutation(const Theory& t, const Region& z, const Region& a, const Region& b,
                                              const Event& ea, const Event& eb) {
  if (!validate_scenario_geometry(*t.order, z, a, b).ok())
    throw PreconditionError("scenario geometry is invalid");
  OperatorOptions opt;
  opt.frame = make_frame(t, z);
  EventOperator oa = event_operator(t, a, ea, z, opt);
  EventOperator ob = event_operator(t, b, eb, z, opt);
  CommutationReport rep;
  rep.commutator_norm = operator_norm(oa.matrix * ob.matrix - ob.matrix * oa.matrix);
  for (const Event& fk : frame_atoms(t, *opt.frame)) {
    Coordinates start = coordinates(t, *opt.frame, fk);
    Coordinates target = coordinates(t, *opt.frame, intersect(eb, intersect(ea, fk)));
    Vec diff = ob.matrix * (oa.matrix * start.coords) - target.coords;
    rep.direct_residual =
        std::max(rep.direct_residual, std::sqrt(diff.squaredNorm() + target.outside * target.outside));
  }
  const double tol = t.dcf.tol().abs;
  rep.pass = rep.commutator_norm <= tol && rep.direct_residual <= tol;
  return rep;
}

double check_partition_identity(const Theory& t, const Region& r, const std::vector<Event>& partition,
                                const Region& q) {
  if (!is_partition(partition)) throw PreconditionError("events do not partition Omega");
  OperatorOptions opt;
  opt.frame = make_frame(t, q);
  const auto m = static_cast<Eigen::Index>(opt.frame->dim());
  Mat sum = Mat::Zero(m, m);
  for (const Event& e : partition) sum += event_operator(t, r, e, q, opt).matrix;
  return operator_norm(sum - Mat::Identity(m, m));
}

FactorizabilityReport check_quantum_factorizability(const Theory& t, const Region& z, const Region& a,
                                                    const Region& b, std::size_t entry_budget,
                                                    std::uint64_t seed) {
  if (!validate_scenario_geometry(*t.order, z, a, b).ok())
    throw PreconditionError("scenario geometry is invalid");
  const HistorySpace& hs = t.hs();
  RegionAlgebra za = region_algebra(hs, z), aa = region_algebra(hs, a), ba = region_algebra(hs, b);
  const std::size_t nz = za.atoms.size(), na = aa.atoms.size(), nb = ba.atoms.size();
  const Mat& hv = t.dcf.history_vectors();
  const Eigen::Index d = hv.rows();
  const auto nab = static_cast<Eigen::Index>(na * nb);
  if (static_cast<double>(nz) * d * nab > 1.5e8) throw BudgetExceeded("factorizability families exceed memory budget");

  // x_{gamma}(:, a*nb + b) = |E_a E_b E_gamma>
  std::vector<Mat> x(nz, Mat::Zero(d, nab));
  for (std::size_t h = 0; h < hs.size(); ++h)
    x[za.atom_of[h]].col(static_cast<Eigen::Index>(aa.atom_of[h] * nb + ba.atom_of[h])) +=
        hv.col(static_cast<Eigen::Index>(h));
  std::vector<Mat> ya(nz, Mat::Zero(d, static_cast<Eigen::Index>(na)));
  std::vector<Mat> yb(nz, Mat::Zero(d, static_cast<Eigen::Index>(nb)));
  std::vector<Vec> g(nz, Vec::Zero(d));
  std::vector<std::size_t> live;
  for (std::size_t k = 0; k < nz; ++k) {
    for (std::size_t i = 0; i < na; ++i)
      for (std::size_t j = 0; j < nb; ++j) {
        auto col = x[k].col(static_cast<Eigen::Index>(i * nb + j));
        ya[k].col(static_cast<Eigen::Index>(i)) += col;
        yb[k].col(static_cast<Eigen::Index>(j)) += col;
        g[k] += col;
      }
    if ((x[k].array() != cd(0.0)).any()) live.push_back(k);
  }

  FactorizabilityReport rep;
  // The residual matrix for (q, p) is the adjoint of the one for (p, q), so
  // unordered pairs cover every ordered pair.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < live.size(); ++i)
    for (std::size_t j = i; j < live.size(); ++j) pairs.emplace_back(live[i], live[j]);
  rep.pairs_skipped_zero = nz * nz - live.size() * live.size();
  const std::size_t per_pair = static_cast<std::size_t>(nab * nab);
  if (per_pair > 0 && pairs.size() * per_pair > entry_budget) {
    rep.sampled = true;
    std::mt19937_64 rng(seed);
    std::shuffle(pairs.begin(), pairs.end(), rng);
    pairs.resize(std::max<std::size_t>(1, entry_budget / per_pair));
  }
  Mat lhs(nab, nab), rhs(nab, nab);
  const auto ena = static_cast<Eigen::Index>(na), enb = static_cast<Eigen::Index>(nb);
  for (auto [p, q] : pairs) {
    cd dz = g[p].dot(g[q]);
    lhs.noalias() = x[p].adjoint() * x[q];
    lhs *= dz;
    Mat da = ya[p].adjoint() * ya[q];
    Mat db = yb[p].adjoint() * yb[q];
    for (Eigen::Index i = 0; i < ena; ++i)
      for (Eigen::Index ib = 0; ib < ena; ++ib) rhs.block(i * enb, ib * enb, enb, enb) = da(i, ib) * db;
    rep.max_residual = std::max(rep.max_residual, (lhs - rhs).cwiseAbs().maxCoeff());
    rep.pairs_checked += p == q ? 1 : 2;
    rep.entries_checked += (p == q ? 1 : 2) * per_pair;
  }
  rep.pass = rep.max_residual <= t.dcf.tol().abs;
  return rep;
}

}  // namespace qmt
