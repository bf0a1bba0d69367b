#pragma once

#include "pfpp/engine.hpp"
#include "pfpp/sim.hpp"

#include <json.hpp>

namespace pfpp {

using Json = nlohmann::json;

Json measure_to_json(const RiskAversionMeasure& m);
RiskAversionMeasure measure_from_json(const Json& j);

Json theta_to_json(const ThetaBlock& theta);
ThetaBlock theta_from_json(const Json& j);

Json inverse_marginal_to_json(const InverseMarginal& im);
InverseMarginal inverse_marginal_from_json(const Json& j);

Json scenario_to_json(const ScenarioSpec& spec);
ScenarioSpec scenario_from_json(const Json& j);

Json state_to_json(const PfppState& state);
PfppState state_from_json(const Json& j);

Json deconv_config_to_json(const DeconvConfig& cfg);
DeconvConfig deconv_config_from_json(const Json& j);

Json summary_to_json(const SummaryReport& report);

} // namespace pfpp
