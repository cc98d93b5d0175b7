#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "repsample/feature_table.hpp"
#include "repsample/random.hpp"
#include "repsample/sampler.hpp"

namespace repsample {

struct ClusterSpec {
    std::size_t count = 0;
    std::vector<double> mean;
    std::vector<double> stddev;
};

struct SyntheticPopulationSpec {
    std::size_t dimension = 0;
    Seed seed = 0;
    std::vector<ClusterSpec> clusters;

    /// Throws InvalidPopulationSpec naming the offending field.
    void validate() const;
};

struct Population {
    CharacterisedObjectSet set;
    std::vector<std::size_t> true_labels;
};

/// Draws each cluster's points from its axis-aligned Gaussian; ids are
/// "c{i}_{j}". Deterministic given the spec.
Population generate_population(const SyntheticPopulationSpec& spec);

/// Fraction of distinct true clusters with at least one selected member.
double cluster_coverage(const std::vector<std::string>& selected_ids,
                        const std::vector<std::string>& population_ids,
                        const std::vector<std::size_t>& true_labels);

/// Seeded partial Fisher-Yates draw of `size` ids without replacement.
std::vector<std::string> uniform_random_sample(const std::vector<std::string>& ids, std::size_t size,
                                               Seed seed);

struct StrategySummary {
    std::string name;
    std::size_t runs = 0;
    double mean_coverage = 0.0;
    double full_coverage_fraction = 0.0;
    /// Per true cluster: fraction of runs in which it got no selected member.
    std::vector<double> miss_fraction;
};

struct ComparisonReport {
    SyntheticPopulationSpec spec;
    std::size_t sample_size = 0;
    Seed master_seed = 0;
    std::vector<StrategySummary> strategies; // "method", then "uniform_random"
};

/// Each run r regenerates the population with seed derive_seed(spec.seed, r),
/// draws a method sample (pipeline seed and uniform seed both derived from
/// options.seed and r) and a uniform sample, and scores coverage against
/// the true labels. Runs are independent and aggregated in run order.
ComparisonReport run_comparison(const SyntheticPopulationSpec& spec, std::size_t sample_size,
                                std::size_t runs, const PipelineOptions& options);

/// Aligned plain-text table of the per-strategy summaries.
std::string format_comparison_table(const ComparisonReport& report);

} // namespace repsample
