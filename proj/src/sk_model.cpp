#include "qmt/sk_model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "qmt/error.hpp"

namespace qmt {
namespace {

std::size_t ipow(std::size_t b, std::size_t e) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < e; ++i) r *= b;
  return r;
}

std::size_t digit(std::size_t config, int site, int q) {
  return (config / ipow(static_cast<std::size_t>(q), static_cast<std::size_t>(site))) % static_cast<std::size_t>(q);
}

Mat build_layer(const SkConfig& cfg, int t) {
  const std::size_t q = static_cast<std::size_t>(cfg.q);
  const std::size_t dim = ipow(q, static_cast<std::size_t>(cfg.L));
  std::vector<const SkGate*> gates;
  std::vector<bool> touched(static_cast<std::size_t>(cfg.L), false);
  for (const auto& g : cfg.gates)
    if (g.t == t) {
      gates.push_back(&g);
      for (int s : g.sites) touched[static_cast<std::size_t>(s)] = true;
    }
  Mat layer = Mat::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t cin = 0; cin < dim; ++cin)
    for (std::size_t cout = 0; cout < dim; ++cout) {
      bool same = true;
      for (int s = 0; s < cfg.L && same; ++s)
        if (!touched[static_cast<std::size_t>(s)] && digit(cin, s, cfg.q) != digit(cout, s, cfg.q)) same = false;
      if (!same) continue;
      cd amp = 1.0;
      for (const SkGate* g : gates) {
        std::size_t li = 0, lo = 0, w = 1;
        for (int s : g->sites) {
          li += digit(cin, s, cfg.q) * w;
          lo += digit(cout, s, cfg.q) * w;
          w *= q;
        }
        amp *= g->u(static_cast<Eigen::Index>(lo), static_cast<Eigen::Index>(li));
      }
      layer(static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(cin)) = amp;
    }
  return layer;
}

}  // namespace

std::string SkCircuitModel::cell_name(int site, int t) {
  return "s" + std::to_string(site) + "t" + std::to_string(t);
}

SkCircuitModel::SkCircuitModel(SkConfig cfg, Tolerance tol) : cfg_(std::move(cfg)), tol_(tol) {
  if (cfg_.L < 1 || cfg_.T < 0 || cfg_.q < 2) throw InputError("SK model needs L >= 1, T >= 0, q >= 2");
  slice_dim_ = ipow(static_cast<std::size_t>(cfg_.q), static_cast<std::size_t>(cfg_.L));
  if (slice_dim_ > 4096) throw BudgetExceeded("SK slice dimension q^L exceeds 4096");
  if (cfg_.t_f < -1 || cfg_.t_f > cfg_.T) throw InputError("truncation time t_f must lie in [0, T]");
  const auto d = static_cast<Eigen::Index>(slice_dim_);

  if (cfg_.rho) {
    const Mat& rho = *cfg_.rho;
    if (rho.rows() != d || rho.cols() != d) throw InputError("rho must be q^L x q^L");
    if (max_abs(rho - rho.adjoint()) > tol_.abs * std::max(1.0, inf_norm(rho)))
      throw InputError("rho is not Hermitian");
    Spectrum sp = hermitian_eig(rho);
    for (Eigen::Index k = sp.values.size() - 1; k >= 0; --k) {
      if (sp.values(k) < -tol_.abs) throw InputError("rho is not positive semidefinite");
      if (sp.values(k) > tol_.zero_rule) init_.push_back(std::sqrt(sp.values(k)) * sp.vectors.col(k));
    }
    if (init_.empty()) throw InputError("rho has no positive eigenvalue");
  } else {
    if (cfg_.psi.size() != d) throw InputError("psi must have q^L entries");
    init_.push_back(cfg_.psi);
  }

  std::vector<std::set<int>> used(static_cast<std::size_t>(cfg_.T + 1));
  for (const auto& g : cfg_.gates) {
    if (g.t < 1 || g.t > cfg_.T) throw InputError("gate time must lie in [1, T]");
    if (g.sites.empty()) throw InputError("gate without sites");
    for (int s : g.sites) {
      if (s < 0 || s >= cfg_.L) throw InputError("gate site out of range");
      if (!used[static_cast<std::size_t>(g.t)].insert(s).second)
        throw InputError("gates at t=" + std::to_string(g.t) + " overlap on site " + std::to_string(s));
    }
    auto k = static_cast<Eigen::Index>(ipow(static_cast<std::size_t>(cfg_.q), g.sites.size()));
    if (g.u.rows() != k || g.u.cols() != k) throw InputError("gate matrix must be q^k x q^k");
  }
  if (!cfg_.regions.empty()) {
    if (cfg_.regions.size() != static_cast<std::size_t>(cfg_.L * (cfg_.T + 1)))
      throw InputError("region map must cover every cell");
    for (char c : cfg_.regions)
      if (c != 'Z' && c != 'A' && c != 'B' && c != '-') throw InputError("region labels are Z, A, B or -");
  }
  for (int t = 1; t <= cfg_.T; ++t) layers_.push_back(build_layer(cfg_, t));
}

SkValidation SkCircuitModel::validate() const {
  SkValidation v;
  for (const auto& g : cfg_.gates)
    v.unitarity_residual =
        std::max(v.unitarity_residual, max_abs(g.u.adjoint() * g.u - Mat::Identity(g.u.rows(), g.u.cols())));
  double norm2 = 0;
  for (const auto& a : init_) norm2 += a.squaredNorm();
  v.norm_residual = std::abs(norm2 - 1.0);
  return v;
}

std::shared_ptr<const CausalOrder> SkCircuitModel::order(int t_f) const {
  if (t_f < 0 || t_f > cfg_.T) throw PreconditionError("truncation time out of range");
  std::vector<std::string> names;
  const bool purif = mixed();
  const std::size_t off = purif ? 1 : 0;
  if (purif) names.push_back("purif");
  for (int t = 0; t <= t_f; ++t)
    for (int s = 0; s < cfg_.L; ++s) names.push_back(cell_name(s, t));
  std::vector<std::pair<std::size_t, std::size_t>> covers;
  auto idx = [&](int s, int t) { return off + cell(s, t); };
  if (purif)
    for (int s = 0; s < cfg_.L; ++s) covers.emplace_back(0, idx(s, 0));
  for (int t = 1; t <= t_f; ++t) {
    for (int s = 0; s < cfg_.L; ++s) covers.emplace_back(idx(s, t - 1), idx(s, t));
    for (const auto& g : cfg_.gates)
      if (g.t == t)
        for (int si : g.sites)
          for (int so : g.sites)
            if (si != so) covers.emplace_back(idx(si, t - 1), idx(so, t));
  }
  return std::make_shared<const CausalOrder>(std::move(names), covers);
}

Theory SkCircuitModel::theory(int t_f) const {
  auto ord = order(t_f);
  const bool purif = mixed();
  const std::size_t r = init_.size();
  const std::size_t ncells = static_cast<std::size_t>(cfg_.L * (t_f + 1));
  const std::size_t q = static_cast<std::size_t>(cfg_.q);
  const double total = static_cast<double>(r) * std::pow(static_cast<double>(q), static_cast<double>(ncells));
  if (total > static_cast<double>(HistorySpace::kMaxHistories))
    throw BudgetExceeded("SK history space exceeds " + std::to_string(HistorySpace::kMaxHistories) + " histories");
  const std::size_t n = static_cast<std::size_t>(total);
  const std::size_t npts = ncells + (purif ? 1 : 0);
  std::vector<Value> flat(n * npts);
  const auto d = static_cast<Eigen::Index>(slice_dim_);
  Mat v = Mat::Zero(static_cast<Eigen::Index>(r) * d, static_cast<Eigen::Index>(n));
  std::vector<std::size_t> conf(static_cast<std::size_t>(t_f + 1));
  for (std::size_t h = 0; h < n; ++h) {
    std::size_t rest = h;
    Value* row = flat.data() + h * npts;
    for (std::size_t p = npts; p-- > 0;) {
      std::size_t base = (purif && p == 0) ? r : q;
      row[p] = static_cast<Value>(rest % base);
      rest /= base;
    }
    const std::size_t off = purif ? 1 : 0;
    const std::size_t label = purif ? static_cast<std::size_t>(row[0]) : 0;
    for (int t = 0; t <= t_f; ++t) {
      std::size_t c = 0, w = 1;
      for (int s = 0; s < cfg_.L; ++s) {
        c += static_cast<std::size_t>(row[off + cell(s, t)]) * w;
        w *= q;
      }
      conf[static_cast<std::size_t>(t)] = c;
    }
    cd amp = init_[label](static_cast<Eigen::Index>(conf[0]));
    for (int t = 1; t <= t_f && amp != cd(0.0); ++t)
      amp *= layers_[static_cast<std::size_t>(t - 1)](static_cast<Eigen::Index>(conf[static_cast<std::size_t>(t)]),
                                                     static_cast<Eigen::Index>(conf[static_cast<std::size_t>(t - 1)]));
    v(static_cast<Eigen::Index>(label) * d + static_cast<Eigen::Index>(conf[static_cast<std::size_t>(t_f)]),
      static_cast<Eigen::Index>(h)) = amp;
  }
  std::vector<int> alphabets;
  if (purif) alphabets.push_back(static_cast<int>(r));
  alphabets.insert(alphabets.end(), ncells, cfg_.q);
  auto space = std::make_shared<const HistorySpace>(ord->points(), alphabets, std::move(flat));
  return make_theory(ord, DecoherenceFunctional::from_vectors(space, std::move(v), tol_));
}

Vec SkCircuitModel::cylinder_vector(const SkCylinder& cyl, int t_f) const {
  if (t_f < 0 || t_f > cfg_.T) throw PreconditionError("truncation time out of range");
  const auto d = static_cast<Eigen::Index>(slice_dim_);
  // mask[t](c) = 1 iff configuration c agrees with every fixed cell at time t.
  std::vector<RVec> mask(static_cast<std::size_t>(t_f + 1), RVec::Ones(d));
  for (auto [c, val] : cyl) {
    if (c >= static_cast<std::size_t>(cfg_.L * (cfg_.T + 1))) throw InputError("cylinder cell out of range");
    int t = cell_time(c), s = cell_site(c);
    if (t > t_f) throw PreconditionError("cylinder fixes cell " + cell_name(s, t) + " beyond the truncation");
    if (val < 0 || val >= cfg_.q) throw InputError("cylinder value out of range");
    for (Eigen::Index k = 0; k < d; ++k)
      if (digit(static_cast<std::size_t>(k), s, cfg_.q) != static_cast<std::size_t>(val))
        mask[static_cast<std::size_t>(t)](k) = 0.0;
  }
  Vec out(static_cast<Eigen::Index>(init_.size()) * d);
  for (std::size_t l = 0; l < init_.size(); ++l) {
    Vec st = init_[l].cwiseProduct(mask[0].cast<cd>());
    for (int t = 1; t <= t_f; ++t)
      st = (layers_[static_cast<std::size_t>(t - 1)] * st).cwiseProduct(mask[static_cast<std::size_t>(t)].cast<cd>());
    out.segment(static_cast<Eigen::Index>(l) * d, d) = st;
  }
  return out;
}

cd SkCircuitModel::cylinder_dcf(const SkCylinder& e, const SkCylinder& f, int t_f) const {
  return cylinder_vector(e, t_f).dot(cylinder_vector(f, t_f));
}

std::vector<std::string> SkCircuitModel::region_cells(char label, int t_f) const {
  if (cfg_.regions.empty()) throw PreconditionError("SK model has no region map");
  std::vector<std::string> out;
  for (int t = 0; t <= t_f; ++t)
    for (int s = 0; s < cfg_.L; ++s)
      if (cfg_.regions[cell(s, t)] == label) out.push_back(cell_name(s, t));
  return out;
}

TruncationReport check_truncation_independence(const SkCircuitModel& m, int t_f1, int t_f2,
                                               const std::vector<SkCylinder>& events) {
  const int tmin = std::min(t_f1, t_f2);
  for (const auto& e : events)
    for (auto [c, v] : e)
      if (m.cell_time(c) > tmin)
        throw PreconditionError("event fixes cell " + SkCircuitModel::cell_name(m.cell_site(c), m.cell_time(c)) +
                                " later than truncation t_f=" + std::to_string(tmin));
  const Eigen::Index n = static_cast<Eigen::Index>(events.size());
  const Eigen::Index rows = static_cast<Eigen::Index>(m.purification_rank() * m.slice_dim());
  Mat v1(rows, n), v2(rows, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    v1.col(i) = m.cylinder_vector(events[static_cast<std::size_t>(i)], t_f1);
    v2.col(i) = m.cylinder_vector(events[static_cast<std::size_t>(i)], t_f2);
  }
  TruncationReport rep;
  rep.events = events.size();
  if (n > 0) rep.max_residual = (v1.adjoint() * v1 - v2.adjoint() * v2).cwiseAbs().maxCoeff();
  rep.pass = rep.max_residual <= Tolerance{}.abs;
  return rep;
}

TruncationReport check_truncation_independence(const SkCircuitModel& m, int t_f1, int t_f2, std::uint64_t seed,
                                               std::size_t random_events) {
  const int tmin = std::min(t_f1, t_f2);
  if (tmin < 0 || std::max(t_f1, t_f2) > m.steps()) throw PreconditionError("truncation time out of range");
  std::vector<SkCylinder> events;
  const std::size_t ncells = static_cast<std::size_t>(m.sites() * (tmin + 1));
  for (std::size_t c = 0; c < ncells; ++c)
    for (Value v = 0; v < m.dim(); ++v) events.push_back({{c, v}});
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_cell(0, ncells - 1);
  std::uniform_int_distribution<int> pick_value(0, m.dim() - 1), pick_size(1, 3);
  for (std::size_t i = 0; i < random_events; ++i) {
    SkCylinder cyl;
    int k = pick_size(rng);
    std::set<std::size_t> seen;
    for (int j = 0; j < k; ++j) {
      std::size_t c = pick_cell(rng);
      if (seen.insert(c).second) cyl.emplace_back(c, static_cast<Value>(pick_value(rng)));
    }
    events.push_back(std::move(cyl));
  }
  return check_truncation_independence(m, t_f1, t_f2, events);
}

SkFactorizabilityReport sk_factorizability_demo(const SkCircuitModel& m, std::size_t entry_budget) {
  const SkConfig& cfg = m.config();
  if (cfg.regions.empty()) throw PreconditionError("SK model has no region map");
  SkFactorizabilityReport rep;
  rep.t0 = -1;
  for (std::size_t c = 0; c < cfg.regions.size(); ++c)
    if (cfg.regions[c] == 'Z') rep.t0 = std::max(rep.t0, m.cell_time(c));
  for (const auto& g : cfg.gates) {
    if (g.t <= rep.t0) continue;
    bool has_a = false, has_b = false;
    for (int s : g.sites)
      for (int t : {g.t - 1, g.t}) {
        char lab = cfg.regions[m.cell(s, t)];
        has_a = has_a || lab == 'A';
        has_b = has_b || lab == 'B';
      }
    if (has_a && has_b) {
      std::string sites;
      for (int s : g.sites) sites += (sites.empty() ? "" : ",") + std::to_string(s);
      throw PreconditionError("gate at t=" + std::to_string(g.t) + " on sites (" + sites + ") couples A and B");
    }
  }
  const int t_f = m.default_truncation();
  Theory th = m.theory(t_f);
  Region z = th.region(m.region_cells('Z', t_f));
  Region a = th.region(m.region_cells('A', t_f));
  Region b = th.region(m.region_cells('B', t_f));
  rep.geometry = validate_scenario_geometry(*th.order, z, a, b);
  rep.factorizability = check_quantum_factorizability(th, z, a, b, entry_budget);
  return rep;
}

Mat random_unitary(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  const auto en = static_cast<Eigen::Index>(n);
  Mat g(en, en);
  for (Eigen::Index i = 0; i < en; ++i)
    for (Eigen::Index j = 0; j < en; ++j) g(i, j) = cd(gauss(rng), gauss(rng));
  Eigen::HouseholderQR<Mat> qr(g);
  Mat qm = qr.householderQ() * Mat::Identity(en, en);
  Mat rm = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index k = 0; k < en; ++k) {
    cd dk = rm(k, k);
    if (std::abs(dk) > 0) qm.col(k) *= dk / std::abs(dk);
  }
  return qm;
}

Vec random_state(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Vec v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = cd(gauss(rng), gauss(rng));
  return v / v.norm();
}

SkConfig sk_hadamard_config() {
  SkConfig cfg;
  cfg.L = 1;
  cfg.T = 1;
  cfg.q = 2;
  cfg.psi = Vec::Zero(2);
  cfg.psi(0) = 1.0;
  Mat h(2, 2);
  h << 1, 1, 1, -1;
  cfg.gates.push_back({1, {0}, h / std::sqrt(2.0)});
  return cfg;
}

SkConfig sk_identity_config(int L, int T, std::size_t c0) {
  SkConfig cfg;
  cfg.L = L;
  cfg.T = T;
  cfg.q = 2;
  cfg.psi = Vec::Zero(static_cast<Eigen::Index>(ipow(2, static_cast<std::size_t>(L))));
  cfg.psi(static_cast<Eigen::Index>(c0)) = 1.0;
  for (int t = 1; t <= T; ++t)
    for (int s = (t % 2 == 0 ? 1 : 0); s + 1 < L; s += 2) cfg.gates.push_back({t, {s, s + 1}, Mat::Identity(4, 4)});
  return cfg;
}

SkConfig sk_small_config(std::uint64_t seed) {
  SkConfig cfg;
  cfg.L = 2;
  cfg.T = 2;
  cfg.q = 2;
  cfg.psi = random_state(4, seed);
  cfg.gates.push_back({1, {0, 1}, random_unitary(4, seed + 1)});
  cfg.gates.push_back({2, {0, 1}, random_unitary(4, seed + 2)});
  return cfg;
}

SkConfig sk_factorizability_config(std::uint64_t seed, bool couple) {
  SkConfig cfg;
  cfg.L = 4;
  cfg.T = 3;
  cfg.q = 2;
  cfg.psi = random_state(16, seed);
  cfg.gates.push_back({1, {1, 2}, random_unitary(4, seed + 1)});
  cfg.gates.push_back({2, {0, 1}, random_unitary(4, seed + 2)});
  cfg.gates.push_back({2, {2, 3}, random_unitary(4, seed + 3)});
  cfg.gates.push_back({3, {0, 1}, random_unitary(4, seed + 4)});
  if (couple)
    cfg.gates.back() = {3, {1, 2}, random_unitary(4, seed + 4)};
  else
    cfg.gates.push_back({3, {2, 3}, random_unitary(4, seed + 5)});
  cfg.regions.assign(16, '-');
  for (int t = 0; t <= 3; ++t)
    for (int s = 0; s < 4; ++s) cfg.regions[static_cast<std::size_t>(t * 4 + s)] = t <= 1 ? 'Z' : (s < 2 ? 'A' : 'B');
  return cfg;
}

}  // namespace qmt
