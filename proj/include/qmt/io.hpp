#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "qmt/patching.hpp"
#include "qmt/sk_model.hpp"

namespace qmt::io {

using json = nlohmann::json;
namespace fs = std::filesystem;

json read_json(const fs::path& p);
// Pretty-printed with a trailing newline; creates parent directories.
void write_json(const fs::path& p, const json& j);

json to_json(cd z);
cd complex_from_json(const json& j);
json to_json(const Mat& m);
Mat matrix_from_json(const json& j);
json to_json(const Vec& v);
Vec vector_from_json(const json& j);

json to_json(const HistorySpace& hs);
SpacePtr space_from_json(const json& j);

json to_json(const CausalOrder& o);
std::shared_ptr<const CausalOrder> order_from_json(const json& j);

// Dense functionals store "matrix"; vector-mode ones store "vectors" (one
// ambient column per history).
json to_json(const DecoherenceFunctional& d);
DecoherenceFunctional dcf_from_json(const json& j, const Tolerance& tol = {});

// {"histories": [i...]} or {"cylinder": {point: [values...]}} (conjunction
// over points, disjunction over the listed values).
json to_json(const Event& e);
Event event_from_json(const HistorySpace& hs, const json& j);

// Region arguments are comma-separated point names.
Region parse_region(const Theory& t, const std::string& spec);
json region_names(const Theory& t, const Region& r);

// Theory directory: order.json and dcf.json (space.json is written for reference).
void write_theory(const fs::path& dir, const Theory& t);
Theory read_theory(const fs::path& dir, const Tolerance& tol = {});

// Scenario directory: scenario.json plus one theory directory per global setting.
void write_scenario(const fs::path& dir, const SettingScenario& sc);
SettingScenario read_scenario(const fs::path& dir, const Tolerance& tol = {});

json to_json(const CorrelationTable& ct);
CorrelationTable table_from_json(const json& j);
json to_json(const SettingDcfs& d);
SettingDcfs setting_dcfs_from_json(const json& j);
json to_json(const JointLayout& l);
JointLayout layout_from_json(const json& j);
json to_json(const JointDcf& d);
JointDcf joint_dcf_from_json(const json& j);
json to_json(const JointMeasure& m);
JointMeasure joint_measure_from_json(const json& j);

json to_json(const SkConfig& cfg);
SkConfig sk_config_from_json(const json& j);

json tolerance_json(const Tolerance& tol);
// JSON schemas of every document kind.
json schemas();

}  // namespace qmt::io
