#include "qmt/patching.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "qmt/error.hpp"

namespace qmt {
namespace {

std::size_t product(const std::vector<std::size_t>& dims) {
  std::size_t n = 1;
  for (std::size_t d : dims) n *= d;
  return n;
}

// Slot 0 most significant.
std::vector<std::size_t> decode(std::size_t idx, const std::vector<std::size_t>& dims) {
  std::vector<std::size_t> out(dims.size());
  for (std::size_t i = dims.size(); i-- > 0;) {
    out[i] = idx % dims[i];
    idx /= dims[i];
  }
  return out;
}

std::size_t encode(const std::vector<std::size_t>& digits, const std::vector<std::size_t>& dims) {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < dims.size(); ++i) idx = idx * dims[i] + digits[i];
  return idx;
}

std::vector<std::size_t> wing_outcomes(const std::vector<Wing>& wings) {
  std::vector<std::size_t> out;
  for (const auto& w : wings) out.push_back(w.outcomes);
  return out;
}

std::vector<std::size_t> wing_settings(const std::vector<Wing>& wings) {
  std::vector<std::size_t> out;
  for (const auto& w : wings) out.push_back(w.settings.size());
  return out;
}

// Joint beam events E_{o_1} n ... n E_{o_N}, outcome tuples in wing-major order.
std::vector<Event> outcome_events(const SettingScenario& sc, const ScenarioTheory& st) {
  auto dims = wing_outcomes(sc.wings);
  std::vector<Event> out;
  for (std::size_t i = 0; i < product(dims); ++i) {
    auto o = decode(i, dims);
    Event e = st.theory.hs().full_event();
    for (std::size_t w = 0; w < o.size(); ++w) e = intersect(e, st.beams[w][o[w]]);
    out.push_back(e);
  }
  return out;
}

std::vector<Event> z_atoms(const SettingScenario& sc, const Theory& t) {
  return region_algebra(t.hs(), sc.z_region(t)).atoms;
}

// Outcome-tuple x Z-atom events, k fastest.
std::vector<Event> outcome_k_events(const SettingScenario& sc, const ScenarioTheory& st) {
  std::vector<Event> zs = z_atoms(sc, st.theory);
  std::vector<Event> out;
  for (const Event& o : outcome_events(sc, st))
    for (const Event& k : zs) out.push_back(intersect(o, k));
  return out;
}

}  // namespace

std::size_t SettingScenario::num_settings() const { return product(wing_settings(wings)); }

std::size_t SettingScenario::index_of(const std::vector<std::size_t>& setting) const {
  return encode(setting, wing_settings(wings));
}

std::vector<std::size_t> SettingScenario::setting_of(std::size_t index) const {
  return decode(index, wing_settings(wings));
}

std::string SettingScenario::setting_name(std::size_t index) const {
  auto s = setting_of(index);
  std::string name;
  for (std::size_t w = 0; w < wings.size(); ++w) name += wings[w].settings[s[w]];
  return name;
}

const ScenarioTheory& SettingScenario::theory_for(std::size_t wing, std::size_t setting) const {
  std::vector<std::size_t> s(wings.size(), 0);
  s[wing] = setting;
  return theories.at(index_of(s));
}

bool ScenarioReport::ok() const {
  return std::all_of(clauses.begin(), clauses.end(), [](const ScenarioClause& c) { return c.pass; });
}

ScenarioReport validate_scenario(const SettingScenario& sc) {
  ScenarioReport rep;
  if (sc.theories.size() != sc.num_settings()) {
    rep.clauses.push_back({"one theory per global setting", false, 0});
    return rep;
  }
  for (std::size_t i = 0; i < sc.theories.size(); ++i) {
    const ScenarioTheory& st = sc.theories[i];
    const std::string tag = "[" + sc.setting_name(i) + "] ";
    rep.clauses.push_back({tag + "setting index", st.setting == sc.setting_of(i), 0});
    const Theory& t = st.theory;
    Region z = sc.z_region(t);
    for (std::size_t w = 0; w < sc.wings.size(); ++w)
      for (std::size_t v = w + 1; v < sc.wings.size(); ++v) {
        bool geo = validate_scenario_geometry(*t.order, z, sc.wing_region(t, w), sc.wing_region(t, v)).ok();
        rep.clauses.push_back({tag + "geometry " + sc.wings[w].name + "/" + sc.wings[v].name, geo, 0});
      }
    for (std::size_t w = 0; w < sc.wings.size(); ++w) {
      bool part = st.beams.size() == sc.wings.size() && st.beams[w].size() == sc.wings[w].outcomes &&
                  is_partition(st.beams[w]);
      if (part)
        for (const Event& e : st.beams[w]) part = part && in_region_algebra(t.hs(), e, sc.wing_region(t, w));
      rep.clauses.push_back({tag + "beam partition " + sc.wings[w].name, part, 0});
    }
  }
  const Theory& t0 = sc.theories[0].theory;
  for (std::size_t i = 1; i < sc.theories.size(); ++i) {
    AgreementReport a = check_agreement(t0.dcf, sc.theories[i].theory.dcf, sc.z_points);
    rep.clauses.push_back({"agree on Z: " + sc.setting_name(0) + "/" + sc.setting_name(i), a.agree,
                           a.matrix_residual});
  }
  for (std::size_t i = 0; i < sc.theories.size(); ++i)
    for (std::size_t j = i + 1; j < sc.theories.size(); ++j)
      for (std::size_t w = 0; w < sc.wings.size(); ++w) {
        if (sc.theories[i].setting[w] != sc.theories[j].setting[w]) continue;
        std::vector<std::string> pts = sc.z_points;
        pts.insert(pts.end(), sc.wings[w].points.begin(), sc.wings[w].points.end());
        AgreementReport a = check_agreement(sc.theories[i].theory.dcf, sc.theories[j].theory.dcf, pts);
        rep.clauses.push_back({"agree on Z+" + sc.wings[w].name + ": " + sc.setting_name(i) + "/" +
                                   sc.setting_name(j),
                               a.agree, a.matrix_residual});
      }
  return rep;
}

std::size_t SettingDcfs::num_settings() const { return product(settings); }

SettingDcfs beam_dcfs(const SettingScenario& sc) {
  SettingDcfs d;
  d.settings = wing_settings(sc.wings);
  d.outcomes = wing_outcomes(sc.wings);
  for (const auto& st : sc.theories) d.dcfs.push_back(st.theory.dcf.gram(outcome_events(sc, st)));
  return d;
}

CorrelationTable correlation_table(const SettingDcfs& d) {
  CorrelationTable ct;
  ct.settings = d.settings;
  ct.outcomes = d.outcomes;
  for (const Mat& m : d.dcfs) ct.probs.push_back(m.diagonal().real());
  return ct;
}

std::size_t JointLayout::num_slots() const {
  std::size_t n = 0;
  for (const auto& w : wings) n += w.settings.size();
  return n + (k_dim ? 1 : 0);
}

std::size_t JointLayout::slot(std::size_t wing, std::size_t setting) const {
  std::size_t s = 0;
  for (std::size_t w = 0; w < wing; ++w) s += wings[w].settings.size();
  return s + setting;
}

std::vector<std::string> JointLayout::slot_names() const {
  std::vector<std::string> out;
  for (const auto& w : wings)
    for (const auto& s : w.settings) out.push_back(s);
  if (k_dim) out.push_back("k");
  return out;
}

std::vector<std::size_t> JointLayout::dims() const {
  std::vector<std::size_t> out;
  for (const auto& w : wings)
    for (std::size_t s = 0; s < w.settings.size(); ++s) out.push_back(w.outcomes);
  if (k_dim) out.push_back(k_dim);
  return out;
}

std::size_t JointLayout::size() const { return product(dims()); }

MarginalMeasure marginalize_measure(const JointMeasure& jm, const std::vector<std::size_t>& kept) {
  auto dims = jm.layout.dims();
  MarginalMeasure out;
  for (std::size_t s : kept) {
    if (s >= dims.size()) throw InputError("slot index out of range");
    out.dims.push_back(dims[s]);
  }
  out.p.assign(product(out.dims), 0.0);
  std::vector<std::size_t> sub(kept.size());
  for (std::size_t i = 0; i < jm.p.size(); ++i) {
    auto digits = decode(i, dims);
    for (std::size_t j = 0; j < kept.size(); ++j) sub[j] = digits[kept[j]];
    out.p[encode(sub, out.dims)] += jm.p[i];
  }
  return out;
}

Mat marginalize_dcf(const Mat& m, const std::vector<std::size_t>& dims, const std::vector<std::size_t>& kept) {
  std::vector<std::size_t> kd;
  for (std::size_t s : kept) kd.push_back(dims.at(s));
  const std::size_t n = product(dims), nk = product(kd);
  std::vector<Eigen::Index> map(n);
  std::vector<std::size_t> sub(kept.size());
  for (std::size_t i = 0; i < n; ++i) {
    auto digits = decode(i, dims);
    for (std::size_t j = 0; j < kept.size(); ++j) sub[j] = digits[kept[j]];
    map[i] = static_cast<Eigen::Index>(encode(sub, kd));
  }
  // Row pass then column pass.
  Mat rows = Mat::Zero(static_cast<Eigen::Index>(nk), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) rows.row(map[i]) += m.row(static_cast<Eigen::Index>(i));
  Mat out = Mat::Zero(static_cast<Eigen::Index>(nk), static_cast<Eigen::Index>(nk));
  for (std::size_t j = 0; j < n; ++j) out.col(map[j]) += rows.col(static_cast<Eigen::Index>(j));
  return out;
}

std::vector<std::size_t> setting_slots(const JointLayout& layout, const std::vector<std::size_t>& setting) {
  std::vector<std::size_t> out;
  for (std::size_t w = 0; w < layout.wings.size(); ++w) out.push_back(layout.slot(w, setting[w]));
  if (layout.k_dim) out.push_back(layout.num_slots() - 1);
  return out;
}

ClassicalFactorizability check_factorizability_classical(const SettingScenario& sc) {
  ClassicalFactorizability rep;
  for (const auto& st : sc.theories) {
    const Theory& t = st.theory;
    if (!is_classical(t.dcf)) throw PreconditionError("theory " + sc.setting_name(sc.index_of(st.setting)) +
                                                      " is not classical");
    RVec diag = t.dcf.dense_matrix().diagonal().real();
    RegionAlgebra za = region_algebra(t.hs(), sc.z_region(t));
    for (std::size_t w = 0; w < sc.wings.size(); ++w)
      for (std::size_t v = w + 1; v < sc.wings.size(); ++v) {
        RegionAlgebra aa = region_algebra(t.hs(), sc.wing_region(t, w));
        RegionAlgebra ba = region_algebra(t.hs(), sc.wing_region(t, v));
        const std::size_t na = aa.atoms.size(), nb = ba.atoms.size();
        std::vector<double> joint(za.atoms.size() * na * nb, 0.0);
        for (std::size_t h = 0; h < t.hs().size(); ++h)
          joint[(za.atom_of[h] * na + aa.atom_of[h]) * nb + ba.atom_of[h]] += diag(static_cast<Eigen::Index>(h));
        for (std::size_t k = 0; k < za.atoms.size(); ++k) {
          std::vector<double> pa(na, 0.0), pb(nb, 0.0);
          double pk = 0;
          for (std::size_t i = 0; i < na; ++i)
            for (std::size_t j = 0; j < nb; ++j) {
              double x = joint[(k * na + i) * nb + j];
              pa[i] += x;
              pb[j] += x;
              pk += x;
            }
          for (std::size_t i = 0; i < na; ++i)
            for (std::size_t j = 0; j < nb; ++j)
              rep.max_residual =
                  std::max(rep.max_residual, std::abs(joint[(k * na + i) * nb + j] * pk - pa[i] * pb[j]));
        }
      }
  }
  rep.pass = rep.max_residual <= (sc.theories.empty() ? 1e-9 : sc.theories[0].theory.dcf.tol().abs);
  return rep;
}

JointMeasure classical_patch(const SettingScenario& sc, const Tolerance& tol) {
  ScenarioReport clauses = validate_scenario(sc);
  if (!clauses.ok()) throw PreconditionError("scenario clauses fail; classical patching refused");
  ClassicalFactorizability fact = check_factorizability_classical(sc);
  if (!fact.pass)
    throw PreconditionError("factorizability residual " + std::to_string(fact.max_residual) +
                            " exceeds tolerance; classical patching refused");
  const Theory& t0 = sc.theories[0].theory;
  std::vector<Event> zs = z_atoms(sc, t0);
  const std::size_t nk = zs.size();
  std::vector<double> mu_k(nk);
  for (std::size_t k = 0; k < nk; ++k) mu_k[k] = t0.dcf.measure(zs[k]);

  JointMeasure jm;
  jm.layout.wings = sc.wings;
  jm.layout.k_dim = nk;
  const std::size_t slots = jm.layout.num_slots() - 1;
  // mu^{w,s}(i,k) per slot.
  std::vector<std::vector<std::vector<double>>> local(slots);
  for (std::size_t w = 0; w < sc.wings.size(); ++w)
    for (std::size_t s = 0; s < sc.wings[w].settings.size(); ++s) {
      const ScenarioTheory& st = sc.theory_for(w, s);
      std::vector<Event> zk = z_atoms(sc, st.theory);
      auto& tab = local[jm.layout.slot(w, s)];
      tab.assign(sc.wings[w].outcomes, std::vector<double>(nk));
      for (std::size_t i = 0; i < sc.wings[w].outcomes; ++i)
        for (std::size_t k = 0; k < nk; ++k) tab[i][k] = st.theory.dcf.measure(intersect(st.beams[w][i], zk[k]));
    }
  auto dims = jm.layout.dims();
  jm.p.assign(product(dims), 0.0);
  for (std::size_t idx = 0; idx < jm.p.size(); ++idx) {
    auto digits = decode(idx, dims);
    std::size_t k = digits.back();
    if (mu_k[k] <= tol.zero_rule) continue;
    double v = 1.0;
    for (std::size_t s = 0; s < slots; ++s) v *= local[s][digits[s]][k];
    jm.p[idx] = v / std::pow(mu_k[k], static_cast<double>(slots - 1));
  }
  return jm;
}

double classical_patch_marginal_residual(const JointMeasure& jm, const SettingScenario& sc) {
  double worst = 0;
  for (std::size_t i = 0; i < sc.theories.size(); ++i) {
    const ScenarioTheory& st = sc.theories[i];
    MarginalMeasure m = marginalize_measure(jm, setting_slots(jm.layout, st.setting));
    std::vector<Event> ev = outcome_k_events(sc, st);
    for (std::size_t j = 0; j < ev.size(); ++j) worst = std::max(worst, std::abs(m.p[j] - st.theory.dcf.measure(ev[j])));
  }
  return worst;
}

CorrelationTable table_from_measure(const JointMeasure& jm) {
  CorrelationTable ct;
  ct.settings = wing_settings(jm.layout.wings);
  ct.outcomes = wing_outcomes(jm.layout.wings);
  for (std::size_t i = 0; i < product(ct.settings); ++i) {
    auto s = decode(i, ct.settings);
    std::vector<std::size_t> slots;
    for (std::size_t w = 0; w < s.size(); ++w) slots.push_back(jm.layout.slot(w, s[w]));
    MarginalMeasure m = marginalize_measure(jm, slots);
    ct.probs.push_back(Eigen::Map<const RVec>(m.p.data(), static_cast<Eigen::Index>(m.p.size())));
  }
  return ct;
}

JointDcf quantum_patch(const SettingScenario& sc, const QuantumPatchOptions& opt, QuantumPatchDiagnostics* diag) {
  QuantumPatchDiagnostics local_diag;
  QuantumPatchDiagnostics& dg = diag ? *diag : local_diag;
  const double tol = sc.theories.at(0).theory.dcf.tol().abs;
  if (opt.verify_preconditions) {
    if (!validate_scenario(sc).ok()) throw PreconditionError("scenario clauses fail; quantum patching refused");
    for (const auto& st : sc.theories) {
      const Theory& t = st.theory;
      PozReport poz = t.order->size() <= kExhaustivePointLimit ? check_poz_exhaustive(t) : [&] {
        std::vector<Region> rs;
        for (std::size_t w = 0; w < sc.wings.size(); ++w) rs.push_back(sc.wing_region(t, w));
        return check_poz(t, rs);
      }();
      dg.max_poz_violation = std::max(dg.max_poz_violation, poz.max_violation);
      LonResult lon = lon_past_set(t, sc.z_region(t));
      dg.max_lon_residual = std::max(dg.max_lon_residual, lon.residual);
      if (!poz.pass) throw PreconditionError("PoZ fails in theory " + sc.setting_name(sc.index_of(st.setting)));
      if (!lon.pass) throw PreconditionError("LoN fails in theory " + sc.setting_name(sc.index_of(st.setting)));
    }
  }
  const Theory& t0 = sc.theories[0].theory;
  Frame frame = make_frame(t0, sc.z_region(t0));
  const auto m = static_cast<Eigen::Index>(frame.dim());

  JointLayout layout;
  layout.wings = sc.wings;
  std::vector<Event> zs = frame_atoms(t0, frame);
  layout.k_dim = zs.size();
  const std::size_t slots = layout.num_slots() - 1;

  // ops[slot][outcome]
  std::vector<std::vector<Mat>> ops(slots);
  std::vector<std::size_t> slot_wing(slots);
  OperatorOptions oo;
  oo.frame = frame;
  oo.check_poz = false;  // verified above
  for (std::size_t w = 0; w < sc.wings.size(); ++w)
    for (std::size_t s = 0; s < sc.wings[w].settings.size(); ++s) {
      const ScenarioTheory& st = sc.theory_for(w, s);
      const Theory& t = st.theory;
      std::size_t sl = layout.slot(w, s);
      slot_wing[sl] = w;
      for (std::size_t o = 0; o < sc.wings[w].outcomes; ++o) {
        EventOperator op = event_operator(t, sc.wing_region(t, w), st.beams[w][o], sc.z_region(t), oo);
        dg.max_codomain_residual = std::max(dg.max_codomain_residual, op.codomain_residual);
        ops[sl].push_back(op.matrix);
      }
    }
  for (std::size_t p = 0; p < slots; ++p)
    for (std::size_t q = p + 1; q < slots; ++q) {
      if (slot_wing[p] == slot_wing[q]) continue;
      for (const Mat& x : ops[p])
        for (const Mat& y : ops[q]) dg.max_commutator = std::max(dg.max_commutator, operator_norm(x * y - y * x));
    }
  if (opt.verify_preconditions && dg.max_commutator > tol)
    throw PreconditionError("spacelike event operators do not commute (" + std::to_string(dg.max_commutator) + ")");

  std::vector<std::size_t> order;
  if (opt.ordering.empty()) {
    order.resize(slots);
    std::iota(order.begin(), order.end(), 0);
  } else {
    for (auto [w, s] : opt.ordering) order.push_back(layout.slot(w, s));
    std::vector<std::size_t> check = order;
    std::sort(check.begin(), check.end());
    check.erase(std::unique(check.begin(), check.end()), check.end());
    if (check.size() != slots || order.size() != slots) throw InputError("ordering must list every slot once");
  }

  Mat zk(m, static_cast<Eigen::Index>(zs.size()));
  for (std::size_t k = 0; k < zs.size(); ++k) zk.col(static_cast<Eigen::Index>(k)) = coordinates(t0, frame, zs[k]).coords;

  auto dims = layout.dims();
  const std::size_t n = product(dims);
  Mat vecs(m, static_cast<Eigen::Index>(n));
  for (std::size_t idx = 0; idx < n; ++idx) {
    auto digits = decode(idx, dims);
    Vec v = zk.col(static_cast<Eigen::Index>(digits.back()));
    // The leftmost operator in the product acts last.
    for (std::size_t j = order.size(); j-- > 0;) v = ops[order[j]][digits[order[j]]] * v;
    vecs.col(static_cast<Eigen::Index>(idx)) = v;
  }
  JointDcf jd;
  jd.layout = layout;
  jd.matrix = vecs.adjoint() * vecs;
  return jd;
}

double quantum_patch_marginal_residual(const JointDcf& jd, const SettingScenario& sc) {
  double worst = 0;
  for (const auto& st : sc.theories) {
    Mat marg = marginalize_dcf(jd.matrix, jd.layout.dims(), setting_slots(jd.layout, st.setting));
    Mat direct = st.theory.dcf.gram(outcome_k_events(sc, st));
    worst = std::max(worst, max_abs(marg - direct));
  }
  return worst;
}

JointDcf beams_only(const JointDcf& jd) {
  if (!jd.layout.k_dim) return jd;
  JointDcf out;
  out.layout = jd.layout;
  out.layout.k_dim = 0;
  std::vector<std::size_t> kept(out.layout.num_slots());
  std::iota(kept.begin(), kept.end(), 0);
  out.matrix = marginalize_dcf(jd.matrix, jd.layout.dims(), kept);
  return out;
}

SettingDcfs setting_dcfs_from_joint(const JointDcf& jd) {
  JointDcf b = beams_only(jd);
  SettingDcfs d;
  d.settings = wing_settings(b.layout.wings);
  d.outcomes = wing_outcomes(b.layout.wings);
  for (std::size_t i = 0; i < d.num_settings(); ++i)
    d.dcfs.push_back(marginalize_dcf(b.matrix, b.layout.dims(), setting_slots(b.layout, decode(i, d.settings))));
  return d;
}

CorrelationTable table_from_dcf(const JointDcf& jd) { return correlation_table(setting_dcfs_from_joint(jd)); }

SettingScenario converse_model(const JointDcf& djoint, const Tolerance& tol) {
  JointDcf jb = beams_only(djoint);
  const Mat& dj = jb.matrix;
  const auto n = static_cast<std::size_t>(dj.rows());
  if (n != jb.layout.size()) throw InputError("joint DCF size does not match its slot layout");
  double scale = std::max(1.0, inf_norm(dj));
  if (max_abs(dj - dj.adjoint()) > tol.rel * scale) throw HermiticityError("joint DCF is not Hermitian");
  if (std::abs(dj.sum() - cd(1.0)) > tol.rel * scale) throw PreconditionError("joint DCF is not normalized");
  Spectrum sp = hermitian_eig(dj);
  if (sp.values(0) < -tol.rel * std::max(sp.values(sp.values.size() - 1), 0.0))
    throw StrongPositivityError("joint DCF is not positive semi-definite; converse construction refused");

  SettingScenario sc;
  sc.wings = jb.layout.wings;
  sc.z_points = {"Z"};
  std::vector<std::string> points = {"Z"};
  std::vector<int> alphabets = {static_cast<int>(n)};
  std::vector<std::pair<std::size_t, std::size_t>> covers;
  for (std::size_t w = 0; w < sc.wings.size(); ++w) {
    if (sc.wings[w].points.size() != 1) sc.wings[w].points = {sc.wings[w].name};
    points.push_back(sc.wings[w].points[0]);
    alphabets.push_back(static_cast<int>(sc.wings[w].settings.size() * sc.wings[w].outcomes));
    covers.emplace_back(0, w + 1);
  }
  auto order = std::make_shared<const CausalOrder>(points, covers);
  auto dims = jb.layout.dims();
  for (std::size_t si = 0; si < sc.num_settings(); ++si) {
    auto setting = sc.setting_of(si);
    std::vector<std::vector<Value>> hist;
    for (std::size_t lam = 0; lam < n; ++lam) {
      auto digits = decode(lam, dims);
      std::vector<Value> h = {static_cast<Value>(lam)};
      for (std::size_t w = 0; w < sc.wings.size(); ++w) {
        std::size_t o = digits[jb.layout.slot(w, setting[w])];
        h.push_back(static_cast<Value>(setting[w] * sc.wings[w].outcomes + o));
      }
      hist.push_back(h);
    }
    auto space = make_space(points, alphabets, hist);
    ScenarioTheory st;
    st.setting = setting;
    st.theory = make_theory(order, DecoherenceFunctional::dense(space, dj, tol));
    for (std::size_t w = 0; w < sc.wings.size(); ++w) {
      std::vector<Event> beams;
      for (std::size_t o = 0; o < sc.wings[w].outcomes; ++o)
        beams.push_back(space->point_event(w + 1, static_cast<Value>(setting[w] * sc.wings[w].outcomes + o)));
      st.beams.push_back(beams);
    }
    sc.theories.push_back(std::move(st));
  }
  return sc;
}

namespace {

void require_chsh_shape(const CorrelationTable& ct) {
  if (ct.settings != std::vector<std::size_t>{2, 2} || ct.outcomes != std::vector<std::size_t>{2, 2} ||
      ct.probs.size() != 4)
    throw InputError("CHSH needs two wings with two settings and two outcomes each");
  for (const RVec& p : ct.probs)
    if (p.size() != 4) throw InputError("malformed correlation table");
}

double correlator(const RVec& p) { return p(0) - p(1) - p(2) + p(3); }

}  // namespace

std::array<double, 4> chsh_variants(const CorrelationTable& ct) {
  require_chsh_shape(ct);
  std::array<double, 4> e{};
  for (std::size_t i = 0; i < 4; ++i) e[i] = correlator(ct.probs[i]);
  double total = e[0] + e[1] + e[2] + e[3];
  std::array<double, 4> out{};
  for (std::size_t i = 0; i < 4; ++i) out[i] = std::abs(total - 2 * e[i]);
  return out;
}

double chsh_value(const CorrelationTable& ct) { return chsh_variants(ct)[3]; }

double check_no_signalling(const SettingDcfs& d) {
  const std::size_t nw = d.settings.size();
  double worst = 0;
  for (std::size_t w = 0; w < nw; ++w) {
    // Reduced DCF of wing w for each global setting, compared across settings
    // that share wing w's setting.
    std::vector<Mat> reduced(d.num_settings());
    for (std::size_t i = 0; i < d.num_settings(); ++i) reduced[i] = marginalize_dcf(d.dcfs[i], d.outcomes, {w});
    for (std::size_t i = 0; i < d.num_settings(); ++i)
      for (std::size_t j = i + 1; j < d.num_settings(); ++j)
        if (decode(i, d.settings)[w] == decode(j, d.settings)[w])
          worst = std::max(worst, max_abs(reduced[i] - reduced[j]));
  }
  return worst;
}

double check_no_signalling(const CorrelationTable& ct) {
  SettingDcfs d;
  d.settings = ct.settings;
  d.outcomes = ct.outcomes;
  for (const RVec& p : ct.probs) d.dcfs.push_back(p.cast<cd>().asDiagonal());
  return check_no_signalling(d);
}

FeasibilityReport joint_feasibility(const SettingDcfs& d, const FeasibilityOptions& opt) {
  if (check_no_signalling(d) > 1e-9) throw PreconditionError("input DCFs are signalling; feasibility refused");
  // Unknown X over joint outcome tuples, one slot per (wing, setting).
  std::vector<std::size_t> dims;
  std::vector<std::size_t> first_slot;
  for (std::size_t w = 0; w < d.settings.size(); ++w) {
    first_slot.push_back(dims.size());
    for (std::size_t s = 0; s < d.settings[w]; ++s) dims.push_back(d.outcomes[w]);
  }
  const std::size_t n = product(dims);
  const std::size_t nn = n * n;
  std::vector<std::size_t> rows_per;
  std::size_t total_rows = 0;
  for (std::size_t i = 0; i < d.num_settings(); ++i) {
    std::size_t m = static_cast<std::size_t>(d.dcfs[i].rows());
    rows_per.push_back(m * m);
    total_rows += m * m;
  }
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(total_rows), static_cast<Eigen::Index>(nn));
  Vec b(static_cast<Eigen::Index>(total_rows));
  std::size_t row0 = 0;
  for (std::size_t si = 0; si < d.num_settings(); ++si) {
    auto setting = decode(si, d.settings);
    std::vector<std::size_t> kept;
    for (std::size_t w = 0; w < setting.size(); ++w) kept.push_back(first_slot[w] + setting[w]);
    std::vector<std::size_t> kd;
    for (std::size_t s : kept) kd.push_back(dims[s]);
    std::vector<std::size_t> map(n);
    std::vector<std::size_t> sub(kept.size());
    for (std::size_t x = 0; x < n; ++x) {
      auto digits = decode(x, dims);
      for (std::size_t j = 0; j < kept.size(); ++j) sub[j] = digits[kept[j]];
      map[x] = encode(sub, kd);
    }
    const std::size_t m = product(kd);
    for (std::size_t x = 0; x < n; ++x)
      for (std::size_t y = 0; y < n; ++y)
        a(static_cast<Eigen::Index>(row0 + map[x] * m + map[y]), static_cast<Eigen::Index>(x * n + y)) = 1.0;
    for (std::size_t p = 0; p < m; ++p)
      for (std::size_t q = 0; q < m; ++q)
        b(static_cast<Eigen::Index>(row0 + p * m + q)) =
            d.dcfs[si](static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q));
    row0 += rows_per[si];
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
  const Mat ac = a.cast<cd>();
  const Mat apinv = Eigen::MatrixXd(cod.pseudoInverse()).cast<cd>();

  const auto ni = static_cast<Eigen::Index>(n);
  auto project_affine = [&](const Mat& x) {
    // Row-major vectorization: entry (r, c) at r*n + c.
    Mat xt = x.transpose();
    Eigen::Map<const Vec> v(xt.data(), static_cast<Eigen::Index>(nn));
    Vec resid = ac * v - b;
    Vec corr = apinv * resid;
    Vec out = v - corr;
    Mat y = Eigen::Map<Mat>(out.data(), ni, ni).transpose();
    return Mat((y + y.adjoint()) * 0.5);
  };
  auto project_psd = [&](const Mat& x) {
    Spectrum s = hermitian_eig(x);
    RVec lam = s.values.cwiseMax(0.0);
    return Mat(s.vectors * lam.cast<cd>().asDiagonal() * s.vectors.adjoint());
  };

  auto marginal_residual = [&](const Mat& x) {
    Mat xt = x.transpose();
    Eigen::Map<const Vec> v(xt.data(), static_cast<Eigen::Index>(nn));
    return (ac * v - b).cwiseAbs().maxCoeff();
  };

  FeasibilityReport rep;
  // Product of the single-slot marginals is PSD; if it already reproduces
  // every setting DCF it is a witness.
  {
    Mat cand = Mat::Ones(1, 1);
    for (std::size_t w = 0; w < d.settings.size(); ++w)
      for (std::size_t s = 0; s < d.settings[w]; ++s) {
        std::vector<std::size_t> setting(d.settings.size(), 0);
        setting[w] = s;
        Mat one = marginalize_dcf(d.dcfs[encode(setting, d.settings)], d.outcomes, {w});
        Mat next(cand.rows() * one.rows(), cand.cols() * one.cols());
        for (Eigen::Index i = 0; i < cand.rows(); ++i)
          for (Eigen::Index j = 0; j < cand.cols(); ++j)
            next.block(i * one.rows(), j * one.cols(), one.rows(), one.cols()) = cand(i, j) * one;
        cand = std::move(next);
      }
    double r = marginal_residual(cand);
    if (r < opt.gap_threshold) {
      rep.verdict = "feasible";
      rep.gap = r;
      rep.witness = cand;
      rep.min_eigenvalue = hermitian_eig(cand).values(0);
      rep.marginal_residual = r;
      return rep;
    }
  }

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat x(ni, ni);
  for (Eigen::Index i = 0; i < ni; ++i)
    for (Eigen::Index j = 0; j < ni; ++j)
      x(i, j) = opt.start_scale * cd(gauss(rng), gauss(rng)) / static_cast<double>(n);
  x = (x + x.adjoint()) * 0.5;

  Mat p = Mat::Zero(ni, ni), q = Mat::Zero(ni, ni), y;
  rep.gap = std::numeric_limits<double>::infinity();
  for (std::size_t it = 1; it <= opt.budget; ++it) {
    y = project_affine(x + p);
    p = x + p - y;
    Mat xn = project_psd(y + q);
    q = y + q - xn;
    x = std::move(xn);
    rep.iterations = it;
    rep.gap = (y - x).norm();
    if (rep.gap < opt.gap_threshold) break;
  }
  rep.witness = x;
  rep.min_eigenvalue = hermitian_eig(y).values(0);
  rep.marginal_residual = marginal_residual(x);
  if (rep.gap < opt.gap_threshold)
    rep.verdict = "feasible";
  else if (rep.gap > opt.infeasible_gap)
    rep.verdict = "undecided-infeasible";
  else
    rep.verdict = "undecided";
  return rep;
}

}  // namespace qmt
