#include "qmt/io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "qmt/error.hpp"

namespace qmt::io {
namespace {

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw InputError(std::string("missing field \"") + key + "\"");
  return j.at(key);
}

template <class T>
T get(const json& j, const char* key) {
  try {
    return field(j, key).get<T>();
  } catch (const json::exception& e) {
    throw InputError(std::string("field \"") + key + "\": " + e.what());
  }
}

void expect_kind(const json& j, const char* kind) {
  if (j.is_object() && j.contains("kind") && j.at("kind") != kind)
    throw InputError(std::string("expected a \"") + kind + "\" document, got \"" + j.at("kind").dump() + "\"");
}

json wing_json(const Wing& w) {
  return {{"name", w.name}, {"points", w.points}, {"settings", w.settings}, {"outcomes", w.outcomes}};
}

Wing wing_from_json(const json& j) {
  Wing w;
  w.name = get<std::string>(j, "name");
  w.points = get<std::vector<std::string>>(j, "points");
  w.settings = get<std::vector<std::string>>(j, "settings");
  w.outcomes = get<std::size_t>(j, "outcomes");
  return w;
}

std::string theory_dir_name(std::size_t index) { return "theory_" + std::to_string(index); }

}  // namespace

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw InputError("cannot open " + p.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(p.string() + ": " + e.what());
  }
}

void write_json(const fs::path& p, const json& j) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw InputError("cannot write " + p.string());
  out << j.dump(2) << '\n';
}

json to_json(cd z) { return json::array({z.real(), z.imag()}); }

cd complex_from_json(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw InputError("complex numbers are [re, im] pairs");
  return {j[0].get<double>(), j[1].get<double>()};
}

json to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(to_json(m(i, k)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat matrix_from_json(const json& j) {
  if (!j.is_array()) throw InputError("matrix must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) throw InputError("ragged matrix");
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = complex_from_json(row[static_cast<std::size_t>(k)]);
  }
  return m;
}

json to_json(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(to_json(v(i)));
  return out;
}

Vec vector_from_json(const json& j) {
  if (!j.is_array()) throw InputError("vector must be an array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = complex_from_json(j[i]);
  return v;
}

json to_json(const HistorySpace& hs) {
  json hist = json::array();
  for (std::size_t h = 0; h < hs.size(); ++h) {
    auto row = hs.history(h);
    hist.push_back(std::vector<Value>(row.begin(), row.end()));
  }
  json j = {{"kind", "historyspace"}, {"points", hs.points()}, {"alphabets", hs.alphabets()}, {"histories", hist}};
  if (!hs.labels().empty()) j["labels"] = hs.labels();
  return j;
}

SpacePtr space_from_json(const json& j) {
  expect_kind(j, "historyspace");
  std::vector<std::string> labels;
  if (j.contains("labels")) labels = get<std::vector<std::string>>(j, "labels");
  return make_space(get<std::vector<std::string>>(j, "points"), get<std::vector<int>>(j, "alphabets"),
                    get<std::vector<std::vector<Value>>>(j, "histories"), std::move(labels));
}

json to_json(const CausalOrder& o) {
  json covers = json::array();
  for (auto [lo, hi] : o.covers()) covers.push_back({o.points()[lo], o.points()[hi]});
  return {{"kind", "order"}, {"points", o.points()}, {"covers", covers}};
}

std::shared_ptr<const CausalOrder> order_from_json(const json& j) {
  expect_kind(j, "order");
  std::vector<std::pair<std::string, std::string>> covers;
  for (const auto& c : field(j, "covers")) {
    if (!c.is_array() || c.size() != 2) throw InputError("covers are [lower, upper] pairs");
    covers.emplace_back(c[0].get<std::string>(), c[1].get<std::string>());
  }
  return std::make_shared<const CausalOrder>(get<std::vector<std::string>>(j, "points"), covers);
}

json to_json(const DecoherenceFunctional& d) {
  json j = {{"kind", "dcf"}, {"space", to_json(d.hs())}};
  if (d.is_dense())
    j["matrix"] = to_json(d.matrix());
  else
    j["vectors"] = to_json(d.history_vectors());
  return j;
}

DecoherenceFunctional dcf_from_json(const json& j, const Tolerance& tol) {
  expect_kind(j, "dcf");
  SpacePtr space = space_from_json(field(j, "space"));
  if (j.contains("matrix")) return DecoherenceFunctional::dense(space, matrix_from_json(j.at("matrix")), tol);
  if (j.contains("vectors")) return DecoherenceFunctional::from_vectors(space, matrix_from_json(j.at("vectors")), tol);
  throw InputError("dcf needs \"matrix\" or \"vectors\"");
}

json to_json(const Event& e) {
  std::vector<std::size_t> idx = e.indices();
  return {{"histories", idx}};
}

Event event_from_json(const HistorySpace& hs, const json& j) {
  if (j.contains("histories")) {
    auto idx = get<std::vector<std::size_t>>(j, "histories");
    for (std::size_t h : idx)
      if (h >= hs.size()) throw InputError("event history index out of range");
    return hs.event(idx);
  }
  if (j.contains("cylinder")) {
    Event e = hs.full_event();
    for (const auto& [point, values] : j.at("cylinder").items()) {
      std::size_t p = hs.point_index(point);
      Event any = hs.empty_event();
      for (const auto& v : values) any = unite(any, hs.point_event(p, v.get<Value>()));
      e = intersect(e, any);
    }
    return e;
  }
  throw InputError("event needs \"histories\" or \"cylinder\"");
}

Region parse_region(const Theory& t, const std::string& spec) {
  std::vector<std::string> names;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) names.push_back(item);
  return t.region(names);
}

json region_names(const Theory& t, const Region& r) { return t.order->region_names(r); }

void write_theory(const fs::path& dir, const Theory& t) {
  fs::create_directories(dir);
  write_json(dir / "space.json", to_json(t.hs()));
  write_json(dir / "order.json", to_json(*t.order));
  write_json(dir / "dcf.json", to_json(t.dcf));
}

Theory read_theory(const fs::path& dir, const Tolerance& tol) {
  if (!fs::is_directory(dir)) throw InputError(dir.string() + " is not a theory directory");
  return make_theory(order_from_json(read_json(dir / "order.json")), dcf_from_json(read_json(dir / "dcf.json"), tol));
}

void write_scenario(const fs::path& dir, const SettingScenario& sc) {
  fs::create_directories(dir);
  json theories = json::array();
  for (std::size_t i = 0; i < sc.theories.size(); ++i) {
    const auto& st = sc.theories[i];
    write_theory(dir / theory_dir_name(i), st.theory);
    json beams = json::array();
    for (const auto& wing : st.beams) {
      json w = json::array();
      for (const auto& e : wing) w.push_back(to_json(e));
      beams.push_back(std::move(w));
    }
    theories.push_back({{"setting", st.setting}, {"dir", theory_dir_name(i)}, {"beams", beams}});
  }
  json wings = json::array();
  for (const auto& w : sc.wings) wings.push_back(wing_json(w));
  write_json(dir / "scenario.json",
             {{"kind", "scenario"}, {"z_points", sc.z_points}, {"wings", wings}, {"theories", theories}});
}

SettingScenario read_scenario(const fs::path& dir, const Tolerance& tol) {
  json j = read_json(dir / "scenario.json");
  expect_kind(j, "scenario");
  SettingScenario sc;
  sc.z_points = get<std::vector<std::string>>(j, "z_points");
  for (const auto& w : field(j, "wings")) sc.wings.push_back(wing_from_json(w));
  for (const auto& tj : field(j, "theories")) {
    ScenarioTheory st;
    st.setting = get<std::vector<std::size_t>>(tj, "setting");
    st.theory = read_theory(dir / get<std::string>(tj, "dir"), tol);
    for (const auto& wing : field(tj, "beams")) {
      std::vector<Event> w;
      for (const auto& e : wing) w.push_back(event_from_json(st.theory.hs(), e));
      st.beams.push_back(std::move(w));
    }
    sc.theories.push_back(std::move(st));
  }
  if (sc.theories.size() != sc.num_settings()) throw InputError("scenario needs one theory per global setting");
  return sc;
}

json to_json(const CorrelationTable& ct) {
  json probs = json::array();
  for (const auto& p : ct.probs) probs.push_back(std::vector<double>(p.data(), p.data() + p.size()));
  return {{"kind", "table"}, {"settings", ct.settings}, {"outcomes", ct.outcomes}, {"probs", probs}};
}

CorrelationTable table_from_json(const json& j) {
  expect_kind(j, "table");
  CorrelationTable ct;
  ct.settings = get<std::vector<std::size_t>>(j, "settings");
  ct.outcomes = get<std::vector<std::size_t>>(j, "outcomes");
  for (const auto& p : field(j, "probs")) {
    auto v = p.get<std::vector<double>>();
    ct.probs.push_back(Eigen::Map<RVec>(v.data(), static_cast<Eigen::Index>(v.size())));
  }
  return ct;
}

json to_json(const SettingDcfs& d) {
  json dcfs = json::array();
  for (const auto& m : d.dcfs) dcfs.push_back(to_json(m));
  return {{"kind", "settingdcfs"}, {"settings", d.settings}, {"outcomes", d.outcomes}, {"dcfs", dcfs}};
}

SettingDcfs setting_dcfs_from_json(const json& j) {
  expect_kind(j, "settingdcfs");
  SettingDcfs d;
  d.settings = get<std::vector<std::size_t>>(j, "settings");
  d.outcomes = get<std::vector<std::size_t>>(j, "outcomes");
  for (const auto& m : field(j, "dcfs")) d.dcfs.push_back(matrix_from_json(m));
  if (d.dcfs.size() != d.num_settings()) throw InputError("settingdcfs needs one matrix per global setting");
  return d;
}

json to_json(const JointLayout& l) {
  json wings = json::array();
  for (const auto& w : l.wings) wings.push_back(wing_json(w));
  return {{"wings", wings}, {"k_dim", l.k_dim}, {"slots", l.slot_names()}};
}

JointLayout layout_from_json(const json& j) {
  JointLayout l;
  for (const auto& w : field(j, "wings")) l.wings.push_back(wing_from_json(w));
  l.k_dim = get<std::size_t>(j, "k_dim");
  return l;
}

json to_json(const JointDcf& d) {
  return {{"kind", "jointdcf"}, {"layout", to_json(d.layout)}, {"matrix", to_json(d.matrix)}};
}

JointDcf joint_dcf_from_json(const json& j) {
  expect_kind(j, "jointdcf");
  JointDcf d;
  d.layout = layout_from_json(field(j, "layout"));
  d.matrix = matrix_from_json(field(j, "matrix"));
  if (static_cast<std::size_t>(d.matrix.rows()) != d.layout.size() || d.matrix.cols() != d.matrix.rows())
    throw InputError("jointdcf matrix does not match its layout");
  return d;
}

json to_json(const JointMeasure& m) {
  return {{"kind", "jointmeasure"}, {"layout", to_json(m.layout)}, {"p", m.p}};
}

JointMeasure joint_measure_from_json(const json& j) {
  expect_kind(j, "jointmeasure");
  JointMeasure m;
  m.layout = layout_from_json(field(j, "layout"));
  m.p = get<std::vector<double>>(j, "p");
  if (m.p.size() != m.layout.size()) throw InputError("jointmeasure does not match its layout");
  return m;
}

json to_json(const SkConfig& cfg) {
  json gates = json::array();
  for (const auto& g : cfg.gates) gates.push_back({{"t", g.t}, {"sites", g.sites}, {"u", to_json(g.u)}});
  json j = {{"kind", "skmodel"}, {"L", cfg.L}, {"T", cfg.T}, {"q", cfg.q}, {"gates", gates},
            {"t_f", cfg.t_f < 0 ? cfg.T : cfg.t_f}};
  if (cfg.rho)
    j["rho"] = to_json(*cfg.rho);
  else
    j["psi"] = to_json(cfg.psi);
  if (!cfg.regions.empty()) {
    json regions = json::object();
    for (int t = 0; t <= cfg.T; ++t)
      for (int s = 0; s < cfg.L; ++s) {
        char c = cfg.regions[static_cast<std::size_t>(t * cfg.L + s)];
        if (c != '-') regions[SkCircuitModel::cell_name(s, t)] = std::string(1, c);
      }
    j["regions"] = regions;
  }
  return j;
}

SkConfig sk_config_from_json(const json& j) {
  expect_kind(j, "skmodel");
  SkConfig cfg;
  cfg.L = get<int>(j, "L");
  cfg.T = get<int>(j, "T");
  cfg.q = get<int>(j, "q");
  if (j.contains("rho"))
    cfg.rho = matrix_from_json(j.at("rho"));
  else
    cfg.psi = vector_from_json(field(j, "psi"));
  for (const auto& g : field(j, "gates"))
    cfg.gates.push_back({get<int>(g, "t"), get<std::vector<int>>(g, "sites"), matrix_from_json(field(g, "u"))});
  if (j.contains("t_f")) cfg.t_f = get<int>(j, "t_f");
  if (j.contains("regions")) {
    if (cfg.L < 1 || cfg.T < 0) throw InputError("SK model needs L >= 1 and T >= 0");
    cfg.regions.assign(static_cast<std::size_t>(cfg.L * (cfg.T + 1)), '-');
    for (const auto& [name, label] : j.at("regions").items()) {
      int s = -1, t = -1;
      if (std::sscanf(name.c_str(), "s%dt%d", &s, &t) != 2 || s < 0 || s >= cfg.L || t < 0 || t > cfg.T)
        throw InputError("unknown SK cell \"" + name + "\"");
      std::string l = label.get<std::string>();
      if (l.size() != 1) throw InputError("region labels are Z, A, B or -");
      cfg.regions[static_cast<std::size_t>(t * cfg.L + s)] = l[0];
    }
  }
  return cfg;
}

json tolerance_json(const Tolerance& tol) {
  return {{"rel", tol.rel}, {"abs", tol.abs}, {"zero_rule", tol.zero_rule}, {"feasibility_gap", tol.feasibility_gap}};
}

json schemas() {
  const json complex = {{"type", "array"}, {"items", {{"type", "number"}}}, {"minItems", 2}, {"maxItems", 2}};
  const json cmatrix = {{"type", "array"}, {"items", {{"type", "array"}, {"items", complex}}}};
  const json strings = {{"type", "array"}, {"items", {{"type", "string"}}}};
  const json ints = {{"type", "array"}, {"items", {{"type", "integer"}}}};
  const json wing = {{"type", "object"},
                     {"required", {"name", "points", "settings", "outcomes"}},
                     {"properties",
                      {{"name", {{"type", "string"}}},
                       {"points", strings},
                       {"settings", strings},
                       {"outcomes", {{"type", "integer"}}}}}};
  const json event = {{"type", "object"},
                      {"properties",
                       {{"histories", ints},
                        {"cylinder", {{"type", "object"}, {"additionalProperties", ints}}}}}};
  const json layout = {{"type", "object"},
                       {"required", {"wings", "k_dim"}},
                       {"properties", {{"wings", {{"type", "array"}, {"items", wing}}}, {"k_dim", {{"type", "integer"}}}}}};
  json s;
  s["historyspace"] = {{"type", "object"},
                       {"required", {"points", "alphabets", "histories"}},
                       {"properties",
                        {{"points", strings},
                         {"alphabets", ints},
                         {"histories", {{"type", "array"}, {"items", ints}}},
                         {"labels", strings}}}};
  s["order"] = {{"type", "object"},
                {"required", {"points", "covers"}},
                {"properties", {{"points", strings}, {"covers", {{"type", "array"}, {"items", strings}}}}}};
  s["dcf"] = {{"type", "object"},
              {"required", {"space"}},
              {"description", "exactly one of matrix (|Omega| x |Omega|) or vectors (ambient x |Omega|)"},
              {"properties", {{"space", {{"$ref", "#/historyspace"}}}, {"matrix", cmatrix}, {"vectors", cmatrix}}}};
  s["event"] = event;
  s["theory"] = {{"description", "directory holding order.json and dcf.json (space.json optional)"}};
  s["scenario"] = {
      {"type", "object"},
      {"description", "scenario.json inside a directory that also holds one theory directory per global setting"},
      {"required", {"z_points", "wings", "theories"}},
      {"properties",
       {{"z_points", strings},
        {"wings", {{"type", "array"}, {"items", wing}}},
        {"theories",
         {{"type", "array"},
          {"items",
           {{"type", "object"},
            {"required", {"setting", "dir", "beams"}},
            {"properties",
             {{"setting", ints},
              {"dir", {{"type", "string"}}},
              {"beams", {{"type", "array"}, {"items", {{"type", "array"}, {"items", event}}}}}}}}}}}}}};
  s["table"] = {{"type", "object"},
                {"required", {"settings", "outcomes", "probs"}},
                {"properties",
                 {{"settings", ints},
                  {"outcomes", ints},
                  {"probs", {{"type", "array"}, {"items", {{"type", "array"}, {"items", {{"type", "number"}}}}}}}}}};
  s["settingdcfs"] = {{"type", "object"},
                      {"required", {"settings", "outcomes", "dcfs"}},
                      {"properties",
                       {{"settings", ints}, {"outcomes", ints}, {"dcfs", {{"type", "array"}, {"items", cmatrix}}}}}};
  s["jointdcf"] = {{"type", "object"},
                   {"required", {"layout", "matrix"}},
                   {"properties", {{"layout", layout}, {"matrix", cmatrix}}}};
  s["jointmeasure"] = {{"type", "object"},
                       {"required", {"layout", "p"}},
                       {"properties", {{"layout", layout}, {"p", {{"type", "array"}, {"items", {{"type", "number"}}}}}}}};
  s["skmodel"] = {
      {"type", "object"},
      {"required", {"L", "T", "q", "gates"}},
      {"description", "psi (q^L amplitudes) or rho (q^L x q^L); cells are named s{site}t{time}"},
      {"properties",
       {{"L", {{"type", "integer"}}},
        {"T", {{"type", "integer"}}},
        {"q", {{"type", "integer"}}},
        {"psi", {{"type", "array"}, {"items", complex}}},
        {"rho", cmatrix},
        {"gates",
         {{"type", "array"},
          {"items",
           {{"type", "object"},
            {"required", {"t", "sites", "u"}},
            {"properties", {{"t", {{"type", "integer"}}}, {"sites", ints}, {"u", cmatrix}}}}}}},
        {"t_f", {{"type", "integer"}}},
        {"regions", {{"type", "object"}, {"additionalProperties", {{"enum", {"Z", "A", "B", "-"}}}}}}}}};
  for (auto& [kind, schema] : s.items()) schema["title"] = kind;
  return s;
}

}  // namespace qmt::io
