#include "qmt/scenarios.hpp"

#include <cmath>
#include <random>

#include "qmt/error.hpp"

namespace qmt {
namespace {

Mat spin_projector(double theta, int outcome) {
  Mat p(2, 2);
  p << 1.0 + std::cos(theta), std::sin(theta), std::sin(theta), 1.0 - std::cos(theta);
  p *= 0.5;
  if (outcome == 1) p = Mat::Identity(2, 2) - p;
  return p;
}

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

std::vector<Wing> two_wings() {
  return {Wing{"A", {"A"}, {"a", "a'"}, 2}, Wing{"B", {"B"}, {"b", "b'"}, 2}};
}

}  // namespace

Theory gen_double_slit(bool reversed) {
  auto space = make_space({"slit", "screen"}, {2, 2}, {{0, 0}, {0, 1}, {1, 0}, {1, 1}}, {"Lb", "Ld", "Rb", "Rd"});
  const double a[4] = {0.5, 0.5, 0.5, -0.5};
  Mat m = Mat::Zero(4, 4);
  for (std::size_t g = 0; g < 4; ++g)
    for (std::size_t h = 0; h < 4; ++h)
      if (space->value(g, 1) == space->value(h, 1)) m(g, h) = a[g] * a[h];
  std::vector<std::pair<std::string, std::string>> covers = {{"slit", "screen"}};
  if (reversed) covers = {{"screen", "slit"}};
  auto order = std::make_shared<const CausalOrder>(std::vector<std::string>{"slit", "screen"}, covers);
  return make_theory(order, DecoherenceFunctional::dense(space, m));
}

EprbConfig default_eprb_config() {
  EprbConfig cfg;
  const double pi = std::acos(-1.0);
  cfg.angles = {0.0, pi / 2, pi / 4, -pi / 4};
  Eigen::Matrix4d r;
  r << 1, 2, 3, 4, 2, -1, 4, -3, 3, -4, -1, 2, 4, 3, -2, -1;
  cfg.basis = (r.transpose() / std::sqrt(30.0)).cast<cd>();
  cfg.state = Vec::Zero(4);
  cfg.state(1) = 1.0 / std::sqrt(2.0);
  cfg.state(2) = -1.0 / std::sqrt(2.0);
  return cfg;
}

EprbConfig computational_basis_eprb_config() {
  EprbConfig cfg = default_eprb_config();
  cfg.basis = Mat::Identity(4, 4);
  cfg.allow_degenerate_basis = true;
  return cfg;
}

SettingScenario two_wing_scenario(std::size_t k_dim, const std::vector<Mat>& matrices, const Tolerance& tol) {
  if (matrices.size() != 4) throw InputError("two-wing scenario needs four matrices");
  SettingScenario sc;
  sc.z_points = {"Z"};
  sc.wings = two_wings();
  auto order = std::make_shared<const CausalOrder>(
      std::vector<std::string>{"Z", "A", "B"},
      std::vector<std::pair<std::string, std::string>>{{"Z", "A"}, {"Z", "B"}});
  for (std::size_t si = 0; si < 4; ++si) {
    std::size_t sa = si / 2, sb = si % 2;
    std::vector<std::vector<Value>> hist;
    for (std::size_t k = 0; k < k_dim; ++k)
      for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
          hist.push_back({static_cast<Value>(k), static_cast<Value>(2 * sa + i), static_cast<Value>(2 * sb + j)});
    auto space = make_space({"Z", "A", "B"}, {static_cast<int>(k_dim), 4, 4}, hist);
    ScenarioTheory st;
    st.setting = {sa, sb};
    st.theory = make_theory(order, DecoherenceFunctional::dense(space, matrices[si], tol));
    st.beams = {{space->point_event(1, static_cast<Value>(2 * sa)), space->point_event(1, static_cast<Value>(2 * sa + 1))},
                {space->point_event(2, static_cast<Value>(2 * sb)), space->point_event(2, static_cast<Value>(2 * sb + 1))}};
    sc.theories.push_back(std::move(st));
  }
  return sc;
}

SettingScenario gen_eprb(const EprbConfig& cfg) {
  if (cfg.basis.rows() != 4 || cfg.basis.cols() != 4 || cfg.state.size() != 4)
    throw InputError("EPRB config needs a 4x4 basis and a 4-vector state");
  if (max_abs(cfg.basis.adjoint() * cfg.basis - Mat::Identity(4, 4)) > 1e-9)
    throw InputError("EPRB intermediate basis is not orthonormal");
  if (std::abs(cfg.state.norm() - 1.0) > 1e-9) throw InputError("EPRB state is not normalized");
  Vec overlaps = cfg.basis.adjoint() * cfg.state;
  if (!cfg.allow_degenerate_basis)
    for (Eigen::Index k = 0; k < 4; ++k)
      if (std::abs(overlaps(k)) < 1e-6)
        throw PreconditionError("intermediate basis vector " + std::to_string(k) +
                                " is orthogonal to the state; Lack of Novelty would fail");
  std::vector<Mat> matrices;
  for (std::size_t si = 0; si < 4; ++si) {
    double ta = cfg.angles[si / 2], tb = cfg.angles[2 + si % 2];
    Mat v(4, 16);
    for (int k = 0; k < 4; ++k)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          int jb = cfg.flip_b_labels ? 1 - j : j;
          Mat p = kron(spin_projector(ta, i), spin_projector(tb, jb));
          v.col((k * 2 + i) * 2 + j) = p * cfg.basis.col(k) * overlaps(k);
        }
    matrices.push_back(v.adjoint() * v);
  }
  return two_wing_scenario(4, matrices);
}

PrBox gen_pr_box() {
  PrBox pr;
  pr.dcfs.settings = {2, 2};
  pr.dcfs.outcomes = {2, 2};
  auto order = std::make_shared<const CausalOrder>(std::vector<std::string>{"A", "B"},
                                                   std::vector<std::pair<std::string, std::string>>{});
  for (std::size_t si = 0; si < 4; ++si) {
    RVec p(4);
    if (si == 3)
      p << 0, 0.5, 0.5, 0;
    else
      p << 0.5, 0, 0, 0.5;
    Mat m = p.cast<cd>().asDiagonal();
    pr.dcfs.dcfs.push_back(m);
    auto space = make_space({"A", "B"}, {2, 2}, {{0, 0}, {0, 1}, {1, 0}, {1, 1}}, {"uu", "ud", "du", "dd"});
    pr.theories.push_back(make_theory(order, DecoherenceFunctional::dense(space, m)));
  }
  pr.table = correlation_table(pr.dcfs);

  std::vector<std::vector<Value>> hist;
  std::vector<double> mu;
  for (Value sa = 0; sa < 2; ++sa)
    for (Value sb = 0; sb < 2; ++sb)
      for (Value i = 0; i < 2; ++i)
        for (Value j = 0; j < 2; ++j) {
          hist.push_back({sa, sb, i, j});
          bool anti = sa == 1 && sb == 1;
          mu.push_back(((i != j) == anti) ? 0.25 * 0.5 : 0.0);
        }
  auto space = make_space({"SA", "SB", "A", "B"}, {2, 2, 2, 2}, hist);
  RVec diag = Eigen::Map<RVec>(mu.data(), 16);
  Mat m = diag.cast<cd>().asDiagonal();
  auto jorder = std::make_shared<const CausalOrder>(
      std::vector<std::string>{"SA", "SB", "A", "B"},
      std::vector<std::pair<std::string, std::string>>{{"SA", "A"}, {"SB", "B"}});
  pr.joint = make_theory(jorder, DecoherenceFunctional::dense(space, m));
  const HistorySpace& hs = *space;
  auto both = [&](std::size_t p1, Value v1, std::size_t p2, Value v2) {
    return intersect(hs.point_event(p1, v1), hs.point_event(p2, v2));
  };
  pr.labels = {both(0, 0, 1, 0), both(0, 0, 1, 1), both(0, 1, 1, 0), both(0, 1, 1, 1),
               both(2, 0, 3, 0), both(2, 0, 3, 1), both(2, 1, 3, 0), both(2, 1, 3, 1)};
  pr.e_pr = build_pr_event(pr.labels);
  return pr;
}

GhzModel gen_ghz() {
  const double s2 = 1.0 / std::sqrt(2.0);
  const cd i1(0, 1);
  // eig[setting][outcome]: x basis then y basis, u is the +1 eigenvector.
  Vec eig[2][2];
  for (auto& row : eig)
    for (auto& v : row) v = Vec(2);
  eig[0][0] << s2, s2;
  eig[0][1] << s2, -s2;
  eig[1][0] << s2, s2 * i1;
  eig[1][1] << s2, -s2 * i1;
  Vec ghz = Vec::Zero(8);
  ghz(0) = s2;
  ghz(7) = s2;

  std::vector<std::vector<Value>> hist;
  Mat v = Mat::Zero(64, 64);
  std::size_t col = 0;
  for (Value sa = 0; sa < 2; ++sa)
    for (Value sb = 0; sb < 2; ++sb)
      for (Value sc = 0; sc < 2; ++sc)
        for (Value oa = 0; oa < 2; ++oa)
          for (Value ob = 0; ob < 2; ++ob)
            for (Value oc = 0; oc < 2; ++oc) {
              hist.push_back({sa, sb, sc, oa, ob, oc});
              Vec prod = kron(kron(eig[sa][oa], eig[sb][ob]), eig[sc][oc]);
              cd amp = prod.dot(ghz);
              std::size_t setting = static_cast<std::size_t>(sa * 4 + sb * 2 + sc);
              v.block(static_cast<Eigen::Index>(setting * 8), static_cast<Eigen::Index>(col), 8, 1) =
                  prod * amp / std::sqrt(8.0);
              ++col;
            }
  auto space = make_space({"SA", "SB", "SC", "A", "B", "C"}, {2, 2, 2, 2, 2, 2}, hist);
  auto order = std::make_shared<const CausalOrder>(
      std::vector<std::string>{"SA", "SB", "SC", "A", "B", "C"},
      std::vector<std::pair<std::string, std::string>>{{"SA", "A"}, {"SB", "B"}, {"SC", "C"}});
  GhzModel g;
  g.theory = make_theory(order, DecoherenceFunctional::dense(space, v.adjoint() * v));
  const HistorySpace& hs = *space;
  auto triple = [&](std::size_t base, Value x, Value y, Value z) {
    return intersect(intersect(hs.point_event(base, x), hs.point_event(base + 1, y)), hs.point_event(base + 2, z));
  };
  g.labels.xyy = triple(0, 0, 1, 1);
  g.labels.yxy = triple(0, 1, 0, 1);
  g.labels.yyx = triple(0, 1, 1, 0);
  g.labels.xxx = triple(0, 0, 0, 0);
  g.labels.uud = triple(3, 0, 0, 1);
  g.labels.udu = triple(3, 0, 1, 0);
  g.labels.duu = triple(3, 1, 0, 0);
  g.labels.ddd = triple(3, 1, 1, 1);
  g.labels.ddu = triple(3, 1, 1, 0);
  g.labels.dud = triple(3, 1, 0, 1);
  g.labels.udd = triple(3, 0, 1, 1);
  g.labels.uuu = triple(3, 0, 0, 0);
  g.e_ghz = build_ghz_event(g.labels);
  return g;
}

SettingScenario gen_random_factorizable(std::uint64_t seed, std::size_t k_dim) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> mu_k(k_dim);
  double total = 0;
  for (auto& m : mu_k) {
    m = unit(rng) < 0.2 ? 0.0 : unit(rng) + 0.05;
    total += m;
  }
  if (total == 0) {
    mu_k[0] = 1.0;
    total = 1.0;
  }
  for (auto& m : mu_k) m /= total;
  // resp[slot][k] = probability of outcome u; slots a, a', b, b'.
  std::vector<std::vector<double>> resp(4, std::vector<double>(k_dim));
  for (auto& slot : resp)
    for (auto& r : slot) r = unit(rng);
  std::vector<Mat> matrices;
  for (std::size_t si = 0; si < 4; ++si) {
    const auto& ra = resp[si / 2];
    const auto& rb = resp[2 + si % 2];
    RVec diag(static_cast<Eigen::Index>(k_dim * 4));
    for (std::size_t k = 0; k < k_dim; ++k)
      for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) {
          double pa = i == 0 ? ra[k] : 1.0 - ra[k];
          double pb = j == 0 ? rb[k] : 1.0 - rb[k];
          diag(static_cast<Eigen::Index>((k * 2 + i) * 2 + j)) = mu_k[k] * pa * pb;
        }
    matrices.push_back(diag.cast<cd>().asDiagonal());
  }
  return two_wing_scenario(k_dim, matrices);
}

SettingScenario gen_classical_pr_single_k() {
  std::vector<Mat> matrices;
  for (std::size_t si = 0; si < 4; ++si) {
    RVec p(4);
    if (si == 3)
      p << 0, 0.5, 0.5, 0;
    else
      p << 0.5, 0, 0, 0.5;
    matrices.push_back(p.cast<cd>().asDiagonal());
  }
  return two_wing_scenario(1, matrices);
}

}  // namespace qmt
