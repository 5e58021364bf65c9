#pragma once

#include "itr/ate_estimators.hpp"
#include "itr/calibration.hpp"
#include "itr/data_model.hpp"
#include "itr/ga_optimizer.hpp"
#include "itr/glm.hpp"
#include "itr/rule.hpp"
#include "itr/simulation.hpp"
#include "itr/value_function.hpp"

#include <json.hpp>

#include <filesystem>

namespace itr {

using json = nlohmann::ordered_json;

json to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const json& j);

json to_json(const LinearItr& rule);
LinearItr rule_from_json(const json& j);
LinearItr load_rule(const std::filesystem::path& path);

json to_json(const ValidationReport& rep);
json to_json(const CovariateSummary& s);
json to_json(const LinearModel& m);
json to_json(const LogisticModel& m);
json to_json(const AteEstimate& e);
json to_json(const AteSummary& s);
json to_json(const BalanceReport& rep);
json to_json(const CalibrationWeights& w);
json to_json(const ValueEstimate& v);
json to_json(const std::vector<ImportanceEntry>& ranking);

json to_json(const GaConfig& c);
// Reads the keys present in j over the values in `base`.
GaConfig ga_config_from_json(const json& j, GaConfig base = {});
json to_json(const GaResult& r);

json to_json(const SimConfig& c);
SimConfig sim_config_from_json(const json& j, SimConfig base = {});

json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& j);

} // namespace itr
