#pragma once

#include <iosfwd>

#include <nlohmann/json.hpp>

#include "slowfast/averaging.hpp"
#include "slowfast/ergodicity.hpp"
#include "slowfast/experiments.hpp"
#include "slowfast/metrics.hpp"
#include "slowfast/models.hpp"
#include "slowfast/simulate.hpp"
#include "slowfast/stationary.hpp"

namespace slowfast {

/// Version tag of every JSON report schema written by the library.
inline constexpr int kReportSchemaVersion = 1;

void to_json(nlohmann::json& j, const SimConfig& c);
/// Missing keys keep their defaults; unknown keys throw ConfigError.
void from_json(const nlohmann::json& j, SimConfig& c);

void to_json(nlohmann::json& j, const StateDomain& d);
void to_json(nlohmann::json& j, const AssumptionReport& r);
void to_json(nlohmann::json& j, const Density1D& d);
void to_json(nlohmann::json& j, const DistanceReport& r);
void to_json(nlohmann::json& j, const ErgodicityReport& r);
void to_json(nlohmann::json& j, const DecayCurve& c);
void to_json(nlohmann::json& j, const AveragedModel& m);
void to_json(nlohmann::json& j, const DiscontinuityProbe& p);
void to_json(nlohmann::json& j, const HolderFitReport& r);
void to_json(nlohmann::json& j, const ConvergenceReport& r);
void to_json(nlohmann::json& j, const L2Report& r);

/// Header `y,density`.
void write_density_csv(std::ostream& out, const Density1D& d);
/// Header `sample`.
void write_samples_csv(std::ostream& out, const EmpiricalMeasure& m);
/// Header `x,b_bar,a_bar,sigma_bar`.
void write_averaged_csv(std::ostream& out, const AveragedModel& m);
/// Header `t,value`.
void write_curve_csv(std::ostream& out, const DecayCurve& c);
/// Header `x1,x2,distance,bound,satisfied`.
void write_holder_csv(std::ostream& out, const HolderFitReport& r);
/// Header `epsilon,w1_terminal,noise_floor`.
void write_convergence_csv(std::ostream& out, const ConvergenceReport& r);
/// Header `epsilon,mean_square_gap,standard_error,relative_error,w1_terminal,predicted_limit,noise_floor`.
void write_l2_csv(std::ostream& out, const L2Report& r);
/// Flattens any JSON object into `key,value` rows (nested keys joined by '.').
void write_key_value_csv(std::ostream& out, const nlohmann::json& j);

}  // namespace slowfast
