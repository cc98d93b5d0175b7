#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "repsample/clustering.hpp"
#include "repsample/eval_harness.hpp"
#include "repsample/sampler.hpp"

namespace repsample {

using Json = nlohmann::json;

/// Serializes like Json::dump, except that every floating-point value is
/// written with 17 significant digits. Output is byte-stable.
std::string dump_json(const Json& value, int indent = 2);

/// {K, weights[], means[][], variances[][], variance_floor, seed}
Json model_to_json(const GaussianMixtureModel& model);
/// Throws InvalidModel on missing fields or a model that fails validate().
GaussianMixtureModel model_from_json(const Json& doc);

Json bic_table_to_json(const std::vector<BicEntry>& table);

/// {seed, k, quotas_raw[], quotas_final[], bic_table, loglik, iterations,
///  converged, cluster_ids[], cluster_sizes[], dropped_measures[], ...}
Json pipeline_report_to_json(const PipelineResult& result, Seed seed);

/// {dimension, seed, clusters: [{count, mean[], stddev[]}]}. Throws
/// InvalidPopulationSpec naming the offending field.
SyntheticPopulationSpec population_spec_from_json(const Json& doc);
Json population_spec_to_json(const SyntheticPopulationSpec& spec);

Json comparison_report_to_json(const ComparisonReport& report);

} // namespace repsample
