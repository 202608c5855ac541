#include "qmt/cli.hpp"

#include <algorithm>
#include <functional>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "qmt/error.hpp"
#include "qmt/io.hpp"
#include "qmt/scenarios.hpp"

namespace qmt::cli {
namespace {

using io::json;
namespace fs = std::filesystem;

enum class Kind { Theory, Scenario, Dcf, Table, SettingDcfs, JointDcf, JointMeasure, SkModel };

struct Input {
  Kind kind;
  fs::path path;
  json doc;  // empty for directories
};

Input load_input(const std::string& path) {
  fs::path p(path);
  if (fs::is_directory(p)) {
    if (fs::exists(p / "scenario.json")) return {Kind::Scenario, p, {}};
    if (fs::exists(p / "dcf.json") && fs::exists(p / "order.json")) return {Kind::Theory, p, {}};
    throw InputError(path + " holds neither scenario.json nor order.json + dcf.json");
  }
  json j = io::read_json(p);
  std::string kind = j.is_object() && j.contains("kind") ? j.at("kind").get<std::string>() : "";
  if (kind.empty() && j.is_object()) {
    if (j.contains("space")) kind = "dcf";
    else if (j.contains("probs")) kind = "table";
    else if (j.contains("dcfs")) kind = "settingdcfs";
    else if (j.contains("layout") && j.contains("matrix")) kind = "jointdcf";
    else if (j.contains("layout") && j.contains("p")) kind = "jointmeasure";
    else if (j.contains("gates")) kind = "skmodel";
  }
  static const std::map<std::string, Kind> kinds = {
      {"dcf", Kind::Dcf},         {"table", Kind::Table},   {"settingdcfs", Kind::SettingDcfs},
      {"jointdcf", Kind::JointDcf}, {"jointmeasure", Kind::JointMeasure}, {"skmodel", Kind::SkModel}};
  auto it = kinds.find(kind);
  if (it == kinds.end()) throw InputError(path + ": unrecognized document");
  return {it->second, p, std::move(j)};
}

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::Theory: return "theory";
    case Kind::Scenario: return "scenario";
    case Kind::Dcf: return "dcf";
    case Kind::Table: return "table";
    case Kind::SettingDcfs: return "settingdcfs";
    case Kind::JointDcf: return "jointdcf";
    case Kind::JointMeasure: return "jointmeasure";
    case Kind::SkModel: return "skmodel";
  }
  return "?";
}

[[noreturn]] void wrong_kind(const Input& in, const std::string& command) {
  throw InputError(command + " does not accept a " + kind_name(in.kind) + " input");
}

std::vector<std::string> split_names(const std::string& spec) {
  std::vector<std::string> names;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) names.push_back(item);
  return names;
}

struct Outcome {
  json result = json::object();
  bool pass = true;
  int fail_code = kViolation;
};

struct Globals {
  Tolerance tol;
  std::uint64_t seed = 0;
  std::string format = "json";
  std::string report;
};

json axiom_json(const AxiomReport& r) {
  return {{"sampled", r.sampled},
          {"hermiticity_residual", r.hermiticity_residual},
          {"hermiticity_threshold", r.hermiticity_threshold},
          {"normalization_residual", r.normalization_residual},
          {"normalization_threshold", r.normalization_threshold},
          {"min_eigenvalue", r.min_eigenvalue},
          {"max_eigenvalue", r.max_eigenvalue},
          {"psd_threshold", r.psd_threshold},
          {"sum_rule_residual", r.sum_rule_residual},
          {"sum_rule_samples", r.sum_rule_samples},
          {"hermitian", r.hermitian},
          {"normalized", r.normalized},
          {"strongly_positive", r.strongly_positive},
          {"sum_rule", r.sum_rule},
          {"pass", r.ok()}};
}

json poz_json(const Theory& t, const PozReport& r) {
  json regions = json::array();
  json worst;
  double wv = -1;
  for (const auto& res : r.results) {
    json e = {{"region", io::region_names(t, res.region)},
              {"shadow", io::region_names(t, res.shadow)},
              {"kernel_dim", res.kernel_dim},
              {"violation", res.violation},
              {"pass", res.pass}};
    if (res.violation > wv) {
      wv = res.violation;
      worst = e;
    }
    regions.push_back(std::move(e));
  }
  return {{"mode", r.mode},   {"regions_checked", r.results.size()}, {"vacuous", r.vacuous},
          {"max_violation", r.max_violation}, {"worst", worst}, {"regions", regions}, {"pass", r.pass}};
}

json lon_json(const Theory& t, const LonReport& r) {
  json sets = json::array();
  for (const auto& res : r.results)
    sets.push_back({{"past", io::region_names(t, res.past)},
                    {"domain", io::region_names(t, res.domain)},
                    {"dim_past", res.dim_past},
                    {"dim_domain", res.dim_domain},
                    {"residual", res.residual},
                    {"pass", res.pass}});
  return {{"mode", r.mode}, {"max_residual", r.max_residual}, {"past_sets", sets}, {"pass", r.pass}};
}

json factorizability_json(const FactorizabilityReport& r) {
  return {{"max_residual", r.max_residual},       {"pairs_checked", r.pairs_checked},
          {"pairs_skipped_zero", r.pairs_skipped_zero}, {"entries_checked", r.entries_checked},
          {"sampled", r.sampled},                 {"pass", r.pass}};
}

json feasibility_json(const FeasibilityReport& r) {
  return {{"verdict", r.verdict},
          {"gap", r.gap},
          {"iterations", r.iterations},
          {"min_eigenvalue", r.min_eigenvalue},
          {"marginal_residual", r.marginal_residual}};
}

json chsh_json(const CorrelationTable& ct) {
  auto v = chsh_variants(ct);
  return {{"chsh", chsh_value(ct)},
          {"variants", {{"minus_ab", v[0]}, {"minus_ab'", v[1]}, {"minus_a'b", v[2]}, {"minus_a'b'", v[3]}}},
          {"max_variant", *std::max_element(v.begin(), v.end())}};
}

Theory theory_of(const Input& in, const Globals& g, const std::string& command) {
  if (in.kind == Kind::Theory) return io::read_theory(in.path, g.tol);
  wrong_kind(in, command);
}

SettingDcfs setting_dcfs_of(const Input& in, const Globals& g, const std::string& command) {
  switch (in.kind) {
    case Kind::Scenario: return beam_dcfs(io::read_scenario(in.path, g.tol));
    case Kind::SettingDcfs: return io::setting_dcfs_from_json(in.doc);
    case Kind::JointDcf: return setting_dcfs_from_joint(io::joint_dcf_from_json(in.doc));
    default: wrong_kind(in, command);
  }
}

CorrelationTable table_of(const Input& in, const Globals& g, const std::string& command) {
  switch (in.kind) {
    case Kind::Table: return io::table_from_json(in.doc);
    case Kind::JointDcf: return table_from_dcf(io::joint_dcf_from_json(in.doc));
    case Kind::JointMeasure: return table_from_measure(io::joint_measure_from_json(in.doc));
    case Kind::Scenario:
    case Kind::SettingDcfs: return correlation_table(setting_dcfs_of(in, g, command));
    default: wrong_kind(in, command);
  }
}

// ---- commands ----

Outcome cmd_validate(const Input& in, const Globals& g, std::size_t pairs) {
  Outcome o;
  auto axioms = [&](const DecoherenceFunctional& d) {
    AxiomReport r = validate_axioms(d, g.seed, pairs);
    o.pass = o.pass && r.ok();
    return axiom_json(r);
  };
  switch (in.kind) {
    case Kind::Dcf: o.result["axioms"] = axioms(io::dcf_from_json(in.doc, g.tol)); break;
    case Kind::Theory: o.result["axioms"] = axioms(io::read_theory(in.path, g.tol).dcf); break;
    case Kind::Scenario: {
      SettingScenario sc = io::read_scenario(in.path, g.tol);
      ScenarioReport rep = validate_scenario(sc);
      json clauses = json::array();
      for (const auto& c : rep.clauses) clauses.push_back({{"name", c.name}, {"pass", c.pass}, {"residual", c.residual}});
      o.result["clauses"] = clauses;
      o.pass = rep.ok();
      json th = json::array();
      for (std::size_t i = 0; i < sc.theories.size(); ++i)
        th.push_back({{"setting", sc.setting_name(i)}, {"axioms", axioms(sc.theories[i].theory.dcf)}});
      o.result["theories"] = th;
      break;
    }
    case Kind::SkModel: {
      SkCircuitModel m(io::sk_config_from_json(in.doc), g.tol);
      SkValidation v = m.validate();
      o.result["unitarity_residual"] = v.unitarity_residual;
      o.result["norm_residual"] = v.norm_residual;
      o.pass = v.ok(g.tol);
      o.result["axioms"] = axioms(m.theory().dcf);
      break;
    }
    default: wrong_kind(in, "validate");
  }
  return o;
}

Outcome cmd_hilbert(const Input& in, const Globals& g, const std::string& region, const std::string& sub) {
  DecoherenceFunctional d = in.kind == Kind::Dcf ? io::dcf_from_json(in.doc, g.tol) : theory_of(in, g, "hilbert").dcf;
  const HistorySpace& hs = d.hs();
  std::optional<Region> r;
  if (!region.empty()) r = hs.region(split_names(region));
  EventHilbertSpace es = build_event_space(d, r);
  Outcome o;
  o.result = {{"region", r ? json(hs.region_names(*r)) : json("all histories")},
              {"atoms", es.atoms.size()},
              {"rank", es.rank},
              {"universal_norm2", es.universal_norm2},
              {"clipped_min_eigenvalue", es.clipped_min_eigenvalue},
              {"max_eigenvalue", es.eigenvalues.size() ? es.eigenvalues(es.eigenvalues.size() - 1) : 0.0}};
  o.pass = std::abs(es.universal_norm2 - 1.0) <= g.tol.abs;
  if (!sub.empty()) {
    Region rs = hs.region(split_names(sub));
    Region outer = r ? *r : Region::all(hs.num_points());
    if (!rs.subset_of(outer)) throw InputError("--sub must be a subregion of --region");
    std::size_t ds = subspace_dim(d, rs), dr = subspace_dim(d, outer);
    o.result["subregion"] = hs.region_names(rs);
    o.result["subregion_dim"] = ds;
    o.result["region_dim"] = dr;
    o.result["monotone"] = ds <= dr;
    o.pass = o.pass && ds <= dr;
  }
  return o;
}

Outcome cmd_poz(const Input& in, const Globals& g, const std::vector<std::string>& regions) {
  Theory t = theory_of(in, g, "poz");
  PozReport rep;
  if (regions.empty()) {
    rep = check_poz_exhaustive(t);
  } else {
    std::vector<Region> rs;
    for (const auto& r : regions) rs.push_back(io::parse_region(t, r));
    rep = check_poz(t, rs);
  }
  Outcome o;
  o.result = poz_json(t, rep);
  o.pass = rep.pass;
  return o;
}

Outcome cmd_lon(const Input& in, const Globals& g, const std::vector<std::string>& pasts) {
  Theory t = theory_of(in, g, "lon");
  LonReport rep;
  if (pasts.empty()) {
    rep = check_lon_exhaustive(t);
  } else {
    std::vector<Region> rs;
    for (const auto& r : pasts) rs.push_back(io::parse_region(t, r));
    rep = check_lon(t, rs);
  }
  Outcome o;
  o.result = lon_json(t, rep);
  o.pass = rep.pass;
  return o;
}

Outcome cmd_commute(const Input& in, const Globals& g) {
  if (in.kind != Kind::Scenario) wrong_kind(in, "commute");
  SettingScenario sc = io::read_scenario(in.path, g.tol);
  if (sc.wings.size() != 2) throw InputError("commute needs a two-wing scenario");
  double comm = 0, direct = 0, partition = 0, universal = 0, cross = 0;
  const Theory& t0 = sc.theories.at(0).theory;
  const Frame frame = make_frame(t0, sc.z_region(t0));
  // Operators per (wing, setting, outcome) from the first theory that uses them.
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, Mat> first;
  for (const auto& st : sc.theories) {
    const Theory& t = st.theory;
    Region z = sc.z_region(t);
    OperatorOptions opt;
    opt.frame = frame;
    for (std::size_t w = 0; w < 2; ++w) {
      Region rw = sc.wing_region(t, w);
      partition = std::max(partition, check_partition_identity(t, rw, st.beams[w], z));
      for (std::size_t k = 0; k < st.beams[w].size(); ++k) {
        EventOperator op = event_operator(t, rw, st.beams[w][k], z, opt);
        universal = std::max(universal, universal_residual(t, op));
        auto key = std::make_tuple(w, st.setting[w], k);
        auto it = first.find(key);
        if (it == first.end())
          first.emplace(key, op.matrix);
        else
          cross = std::max(cross, operator_norm(it->second - op.matrix));
      }
    }
    for (const auto& ea : st.beams[0])
      for (const auto& eb : st.beams[1]) {
        CommutationReport cr = check_spacelike_commutation(t, z, sc.wing_region(t, 0), sc.wing_region(t, 1), ea, eb);
        comm = std::max(comm, cr.commutator_norm);
        direct = std::max(direct, cr.direct_residual);
      }
  }
  Outcome o;
  o.result = {{"max_commutator_norm", comm},
              {"max_direct_residual", direct},
              {"max_partition_residual", partition},
              {"max_universal_residual", universal},
              {"max_cross_theory_residual", cross}};
  o.pass = std::max({comm, direct, partition, universal, cross}) <= g.tol.abs;
  return o;
}

Outcome cmd_factorizability(const Input& in, const Globals& g, const std::string& z, const std::string& a,
                            const std::string& b, std::size_t budget) {
  Outcome o;
  switch (in.kind) {
    case Kind::Theory: {
      if (z.empty() || a.empty() || b.empty()) throw InputError("factorizability on a theory needs --z, --a, --b");
      Theory t = io::read_theory(in.path, g.tol);
      auto rep = check_quantum_factorizability(t, io::parse_region(t, z), io::parse_region(t, a),
                                               io::parse_region(t, b), budget, g.seed);
      o.result = factorizability_json(rep);
      o.pass = rep.pass;
      if (rep.sampled) o.fail_code = kBudget;
      break;
    }
    case Kind::Scenario: {
      SettingScenario sc = io::read_scenario(in.path, g.tol);
      if (sc.wings.size() != 2) throw InputError("factorizability needs a two-wing scenario");
      json th = json::array();
      double worst = 0;
      bool sampled = false;
      for (std::size_t i = 0; i < sc.theories.size(); ++i) {
        const Theory& t = sc.theories[i].theory;
        auto rep = check_quantum_factorizability(t, sc.z_region(t), sc.wing_region(t, 0), sc.wing_region(t, 1),
                                                 budget, g.seed);
        worst = std::max(worst, rep.max_residual);
        sampled = sampled || rep.sampled;
        o.pass = o.pass && rep.pass;
        th.push_back({{"setting", sc.setting_name(i)}, {"report", factorizability_json(rep)}});
      }
      o.result = {{"max_residual", worst}, {"sampled", sampled}, {"theories", th}};
      break;
    }
    case Kind::SkModel: {
      SkCircuitModel m(io::sk_config_from_json(in.doc), g.tol);
      auto rep = sk_factorizability_demo(m, budget);
      o.result = factorizability_json(rep.factorizability);
      o.result["t0"] = rep.t0;
      o.pass = rep.factorizability.pass;
      break;
    }
    default: wrong_kind(in, "factorizability");
  }
  return o;
}

Outcome cmd_patch(const std::string& mode, const Input& in, const Globals& g, const std::string& out,
                  bool reverse_order) {
  if (in.kind != Kind::Scenario) wrong_kind(in, "patch");
  SettingScenario sc = io::read_scenario(in.path, g.tol);
  Outcome o;
  if (mode == "classical") {
    ClassicalFactorizability cf = check_factorizability_classical(sc);
    o.result["factorizability_residual"] = cf.max_residual;
    if (!cf.pass) {
      o.pass = false;
      o.result["error"] = "scenario is not classically factorizable";
      return o;
    }
    JointMeasure jm = classical_patch(sc, g.tol);
    double sum = 0, minp = 0;
    for (double p : jm.p) {
      sum += p;
      minp = std::min(minp, p);
    }
    o.result["sum"] = sum;
    o.result["min_entry"] = minp;
    o.result["marginal_residual"] = classical_patch_marginal_residual(jm, sc);
    o.result["beam_marginal"] = chsh_json(table_from_measure(jm));
    o.pass = o.result["marginal_residual"].get<double>() <= g.tol.abs;
    if (!out.empty()) io::write_json(out, io::to_json(jm));
  } else if (mode == "quantum") {
    QuantumPatchOptions opt;
    if (reverse_order) {
      for (std::size_t w = sc.wings.size(); w-- > 0;)
        for (std::size_t s = sc.wings[w].settings.size(); s-- > 0;) opt.ordering.emplace_back(w, s);
    }
    QuantumPatchDiagnostics dg;
    JointDcf jd = quantum_patch(sc, opt, &dg);
    Spectrum sp = hermitian_eig(jd.matrix);
    double lmax = sp.values.size() ? sp.values(sp.values.size() - 1) : 0.0;
    double herm = max_abs(jd.matrix - jd.matrix.adjoint());
    double marg = quantum_patch_marginal_residual(jd, sc);
    o.result = {{"dimension", jd.matrix.rows()},
                {"hermiticity_residual", herm},
                {"min_eigenvalue", sp.values.size() ? sp.values(0) : 0.0},
                {"max_eigenvalue", lmax},
                {"marginal_residual", marg},
                {"max_commutator", dg.max_commutator},
                {"max_codomain_residual", dg.max_codomain_residual},
                {"max_poz_violation", dg.max_poz_violation},
                {"max_lon_residual", dg.max_lon_residual},
                {"beam_marginal", chsh_json(table_from_dcf(jd))}};
    o.pass = herm <= g.tol.abs && marg <= g.tol.abs &&
             (sp.values.size() == 0 || sp.values(0) >= -g.tol.rel * std::max(lmax, 1.0));
    if (!out.empty()) io::write_json(out, io::to_json(jd));
  } else {
    throw InputError("patch mode must be classical or quantum");
  }
  return o;
}

Outcome cmd_chsh(const Input& in, const Globals& g) {
  Outcome o;
  o.result = chsh_json(table_of(in, g, "chsh"));
  return o;
}

Outcome cmd_nosignalling(const Input& in, const Globals& g) {
  Outcome o;
  double r = in.kind == Kind::Table ? check_no_signalling(io::table_from_json(in.doc))
                                    : check_no_signalling(setting_dcfs_of(in, g, "nosignalling"));
  o.result = {{"residual", r}};
  o.pass = r <= g.tol.abs;
  return o;
}

Outcome cmd_feasibility(const Input& in, const Globals& g, std::size_t budget, double gap) {
  FeasibilityOptions opt;
  opt.budget = budget;
  opt.seed = g.seed;
  opt.gap_threshold = gap;
  FeasibilityReport r = joint_feasibility(setting_dcfs_of(in, g, "feasibility"), opt);
  Outcome o;
  o.result = feasibility_json(r);
  o.pass = r.verdict == "feasible";
  o.fail_code = kBudget;
  return o;
}

EprbConfig eprb_config_from_json(const json& j) {
  EprbConfig cfg = default_eprb_config();
  if (j.contains("angles")) {
    auto a = j.at("angles").get<std::vector<double>>();
    if (a.size() != 4) throw InputError("angles needs four entries (a, a', b, b')");
    std::copy(a.begin(), a.end(), cfg.angles.begin());
  }
  if (j.contains("basis")) cfg.basis = io::matrix_from_json(j.at("basis")).transpose();  // rows are vectors
  if (j.contains("state")) cfg.state = io::vector_from_json(j.at("state"));
  if (j.contains("flip_b_labels")) cfg.flip_b_labels = j.at("flip_b_labels").get<bool>();
  if (j.contains("allow_degenerate_basis")) cfg.allow_degenerate_basis = j.at("allow_degenerate_basis").get<bool>();
  return cfg;
}

Outcome cmd_gen(const std::string& what, const Globals& g, const std::string& out, const std::string& config,
                bool reversed) {
  if (out.empty()) throw InputError("gen needs --out");
  fs::path dir(out);
  Outcome o;
  o.result["generated"] = what;
  if (what == "double-slit") {
    Theory t = gen_double_slit(reversed);
    io::write_theory(dir, t);
    o.result["reversed"] = reversed;
  } else if (what == "eprb") {
    EprbConfig cfg = config.empty() ? default_eprb_config() : eprb_config_from_json(io::read_json(config));
    SettingScenario sc = gen_eprb(cfg);
    io::write_scenario(dir, sc);
    SettingDcfs d = beam_dcfs(sc);
    io::write_json(dir / "settingdcfs.json", io::to_json(d));
    io::write_json(dir / "table.json", io::to_json(correlation_table(d)));
    o.result["chsh"] = chsh_value(correlation_table(d));
  } else if (what == "pr") {
    PrBox pr = gen_pr_box();
    io::write_json(dir / "settingdcfs.json", io::to_json(pr.dcfs));
    io::write_json(dir / "table.json", io::to_json(pr.table));
    io::write_theory(dir / "joint", pr.joint);
    io::write_json(dir / "joint" / "event.json", io::to_json(pr.e_pr));
    o.result["chsh"] = chsh_value(pr.table);
    o.result["mu_E_PR"] = pr.joint.dcf.measure(pr.e_pr);
  } else if (what == "ghz") {
    GhzModel ghz = gen_ghz();
    io::write_theory(dir, ghz.theory);
    io::write_json(dir / "event.json", io::to_json(ghz.e_ghz));
    o.result["mu_E_GHZ"] = ghz.theory.dcf.measure(ghz.e_ghz);
  } else if (what == "random-classical") {
    io::write_scenario(dir, gen_random_factorizable(g.seed));
  } else if (what == "sk") {
    io::write_json(dir / "skmodel.json", io::to_json(sk_factorizability_config(g.seed)));
  } else {
    throw InputError("unknown generator \"" + what + "\" (double-slit, eprb, pr, ghz, random-classical, sk)");
  }
  return o;
}

Outcome cmd_sk(const std::string& action, const Input& in, const Globals& g, int t1, int t2,
               const std::string& out, std::size_t budget) {
  if (in.kind != Kind::SkModel) wrong_kind(in, "sk");
  SkCircuitModel m(io::sk_config_from_json(in.doc), g.tol);
  Outcome o;
  if (action == "validate") {
    SkValidation v = m.validate();
    AxiomReport ax = validate_axioms(m.theory().dcf, g.seed);
    o.result = {{"unitarity_residual", v.unitarity_residual}, {"norm_residual", v.norm_residual},
                {"axioms", axiom_json(ax)}};
    o.pass = v.ok(g.tol) && ax.ok();
  } else if (action == "theory") {
    if (out.empty()) throw InputError("sk theory needs --out");
    io::write_theory(out, m.theory());
    o.result["written"] = out;
  } else if (action == "truncation") {
    if (t1 < 0) t1 = std::max(0, m.steps() - 1);
    if (t2 < 0) t2 = m.steps();
    TruncationReport r = check_truncation_independence(m, t1, t2, g.seed);
    o.result = {{"t_f1", t1}, {"t_f2", t2}, {"events", r.events}, {"max_residual", r.max_residual}};
    o.pass = r.max_residual <= g.tol.abs;
  } else if (action == "factorizability") {
    auto rep = sk_factorizability_demo(m, budget);
    o.result = factorizability_json(rep.factorizability);
    o.result["t0"] = rep.t0;
    o.pass = rep.factorizability.pass;
  } else if (action == "poz") {
    Theory t = m.theory();
    PozReport rep = check_poz_exhaustive(t);
    o.result = poz_json(t, rep);
    o.result.erase("regions");
    o.pass = rep.pass;
  } else if (action == "hilbert") {
    Theory t = m.theory();
    std::size_t rank = static_cast<std::size_t>(range_basis(t.dcf.history_vectors(), g.tol.rel).cols());
    std::size_t bound = m.purification_rank() * m.slice_dim();
    o.result = {{"rank", rank}, {"bound", bound}};
    o.pass = rank <= bound;
  } else {
    throw InputError("unknown sk action \"" + action +
                     "\" (validate, theory, truncation, factorizability, poz, hilbert)");
  }
  return o;
}

void flatten(const json& j, const std::string& prefix, std::ostream& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
  } else if (j.is_array() && !j.empty() && (j[0].is_object() || j[0].is_array())) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "[" + std::to_string(i) + "]", out);
  } else {
    out << prefix << " = " << j.dump() << '\n';
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Finite quantum measure theory toolkit", "qmt"};
  app.require_subcommand(0, 1);
  app.fallthrough();
  Globals g;
  bool schema = false;
  app.add_flag("--schema", schema, "Print JSON schemas of every document kind");
  app.add_option("--rel", g.tol.rel, "Relative tolerance")->check(CLI::PositiveNumber);
  app.add_option("--abs", g.tol.abs, "Absolute tolerance")->check(CLI::PositiveNumber);
  app.add_option("--zero-rule", g.tol.zero_rule, "Zero rule for classical patching")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "Seed for sampling and starting points");
  app.add_option("--format", g.format, "Report format")->check(CLI::IsMember({"json", "text"}));
  app.add_option("--report", g.report, "Write the report to this file instead of stdout");

  std::string input, out_path, config, region, sub, z, a, b, what, action;
  std::vector<std::string> regions;
  std::size_t pairs = 100, budget = kFactorizabilityEntryBudget, feas_budget = 20000;
  double gap = 1e-6;
  bool reversed = false, reverse_order = false;
  int t1 = -1, t2 = -1;

  auto* validate = app.add_subcommand("validate", "Axiom checks (Hermiticity, normalization, strong positivity)");
  validate->add_option("input", input, "dcf.json, theory dir, scenario dir or skmodel.json")->required();
  validate->add_option("--pairs", pairs, "Random event pairs in sampled mode")->check(CLI::PositiveNumber);

  auto* hilbert = app.add_subcommand("hilbert", "Event Hilbert space of a region");
  hilbert->add_option("input", input, "dcf.json or theory dir")->required();
  hilbert->add_option("--region", region, "Comma-separated points (default: all histories)");
  hilbert->add_option("--sub", sub, "Subregion for the monotonicity check");

  auto* poz = app.add_subcommand("poz", "Persistence of Zero");
  poz->add_option("input", input, "Theory dir")->required();
  poz->add_option("--region", regions, "Regions to check (default: exhaustive)");

  auto* lon = app.add_subcommand("lon", "Lack of Novelty");
  lon->add_option("input", input, "Theory dir")->required();
  lon->add_option("--past", regions, "Past sets to check (default: every down-set)");

  auto* commute = app.add_subcommand("commute", "Event-operator corollaries on a scenario");
  commute->add_option("input", input, "Scenario dir")->required();

  auto* fact = app.add_subcommand("factorizability", "Quantum factorizability identity");
  fact->add_option("input", input, "Theory dir, scenario dir or skmodel.json")->required();
  fact->add_option("--z", z, "Z region");
  fact->add_option("--a", a, "A region");
  fact->add_option("--b", b, "B region");
  fact->add_option("--budget", budget, "Entry budget before sampling")->check(CLI::PositiveNumber);

  auto* patch = app.add_subcommand("patch", "Classical or quantum patching");
  patch->add_option("mode", what, "classical or quantum")->required();
  patch->add_option("input", input, "Scenario dir")->required();
  patch->add_option("--out", out_path, "Write the joint measure / joint DCF here");
  patch->add_flag("--reverse-order", reverse_order, "Reverse the operator ordering (quantum)");

  auto* chsh = app.add_subcommand("chsh", "CHSH value");
  chsh->add_option("input", input, "Table, settingdcfs, jointdcf, jointmeasure or scenario dir")->required();

  auto* nosig = app.add_subcommand("nosignalling", "No-signalling residual");
  nosig->add_option("input", input, "Table, settingdcfs, jointdcf or scenario dir")->required();

  auto* feas = app.add_subcommand("feasibility", "Joint DCF feasibility search");
  feas->add_option("input", input, "settingdcfs, jointdcf or scenario dir")->required();
  feas->add_option("--budget", feas_budget, "Iteration budget")->check(CLI::PositiveNumber);
  feas->add_option("--gap", gap, "Gap threshold")->check(CLI::PositiveNumber);

  auto* gen = app.add_subcommand("gen", "Built-in generators");
  gen->add_option("what", what, "double-slit, eprb, pr, ghz, random-classical, sk")->required();
  gen->add_option("--out", out_path, "Output directory");
  gen->add_option("--config", config, "Generator config (eprb)");
  gen->add_flag("--reversed", reversed, "Reverse the causal order (double-slit)");

  // Actions are nested subcommands so that "sk validate" is not taken for
  // the top-level validate.
  auto* sk = app.add_subcommand("sk", "Schwinger-Keldysh circuit models");
  sk->require_subcommand(1);
  for (const char* act : {"validate", "theory", "truncation", "factorizability", "poz", "hilbert"}) {
    auto* c = sk->add_subcommand(act);
    c->add_option("input", input, "skmodel.json")->required();
    c->add_option("--t1", t1, "First truncation time");
    c->add_option("--t2", t2, "Second truncation time");
    c->add_option("--out", out_path, "Output directory (theory)");
    c->add_option("--budget", budget, "Entry budget before sampling")->check(CLI::PositiveNumber);
  }

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kPass : kInputError;
  }
  if (schema) {
    out << io::schemas().dump(2) << '\n';
    return kPass;
  }
  if (app.get_subcommands().empty()) {
    err << app.help();
    return kInputError;
  }
  CLI::App* cmd = app.get_subcommands().front();
  const std::string name = cmd->get_name();
  if (name == "sk") action = cmd->get_subcommands().front()->get_name();
  const std::string label = action.empty() ? name : name + " " + action;

  json report = {{"command", label}, {"version", kLibraryVersion}, {"tolerances", io::tolerance_json(g.tol)},
                 {"seed", g.seed}};
  int code = kPass;
  try {
    Outcome o;
    if (name == "gen") {
      o = cmd_gen(what, g, out_path, config, reversed);
    } else {
      Input in = load_input(input);
      if (name == "validate") o = cmd_validate(in, g, pairs);
      else if (name == "hilbert") o = cmd_hilbert(in, g, region, sub);
      else if (name == "poz") o = cmd_poz(in, g, regions);
      else if (name == "lon") o = cmd_lon(in, g, regions);
      else if (name == "commute") o = cmd_commute(in, g);
      else if (name == "factorizability") o = cmd_factorizability(in, g, z, a, b, budget);
      else if (name == "patch") o = cmd_patch(what, in, g, out_path, reverse_order);
      else if (name == "chsh") o = cmd_chsh(in, g);
      else if (name == "nosignalling") o = cmd_nosignalling(in, g);
      else if (name == "feasibility") o = cmd_feasibility(in, g, feas_budget, gap);
      else if (name == "sk") o = cmd_sk(action, in, g, t1, t2, out_path, budget);
    }
    report["result"] = o.result;
    report["pass"] = o.pass;
    code = o.pass ? kPass : o.fail_code;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const StructuralError& e) {
    err << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const BudgetExceeded& e) {
    report["pass"] = false;
    report["error"] = e.what();
    code = kBudget;
  } catch (const Error& e) {
    report["pass"] = false;
    report["error"] = e.what();
    code = kViolation;
  } catch (const json::exception& e) {
    err << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const fs::filesystem_error& e) {
    err << "input error: " << e.what() << '\n';
    return kInputError;
  }

  std::ostringstream text;
  if (g.format == "json") {
    text << report.dump(2) << '\n';
  } else {
    text << "qmt " << label << ": " << (report["pass"].get<bool>() ? "PASS" : "FAIL") << '\n';
    if (report.contains("error")) text << "error = " << report["error"].get<std::string>() << '\n';
    if (report.contains("result")) flatten(report["result"], "", text);
    text << "version = " << kLibraryVersion << '\n';
    flatten(report["tolerances"], "tolerance", text);
  }
  if (g.report.empty()) {
    out << text.str();
  } else {
    io::write_json(g.report, report);
  }
  return code;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace qmt::cli
