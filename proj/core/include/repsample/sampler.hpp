#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "repsample/clustering.hpp"
#include "repsample/feature_table.hpp"

namespace repsample {

/// Per-cluster quotas. Slots cover the non-empty clusters only;
/// `cluster_ids[i]` is the mixture component behind slot i.
struct Allocation {
    std::vector<std::size_t> cluster_ids;
    std::vector<std::size_t> cluster_sizes;
    std::vector<std::size_t> raw_quotas;
    std::vector<std::size_t> final_quotas;
    std::size_t sample_expected_size = 0;
    std::size_t total = 0;
};

struct SampleEntry {
    std::string object_id;
    std::size_t cluster = 0;
    double responsibility = 0.0;
    std::size_t rank = 0; // 1-based within the cluster

    friend bool operator==(const SampleEntry&, const SampleEntry&) = default;
};

struct SampleResult {
    std::vector<SampleEntry> entries; // grouped by cluster, then rank
    Allocation allocation;
};

/// argmax_k r_nk per object; ties go to the smaller index.
std::vector<std::size_t> hard_assign(const ResponsibilityMatrix& resp);

/// Object count per cluster index in [0, k).
std::vector<std::size_t> cluster_sizes(const std::vector<std::size_t>& assignment, std::size_t k);

/// Proportional quota with a floor of one:
///   n_i = max(floor(size * cluster_size_i / total + 1/2), 1)
/// evaluated in exact integer arithmetic, so a share of exactly x.5 always
/// rounds up.
std::vector<std::size_t> allocate(std::size_t sample_expected_size,
                                  const std::vector<std::size_t>& cluster_sizes);

/// Adjusts raw quotas so they sum to the requested size. Quotas are first
/// clamped to their cluster size. While the sum is too large, the quota
/// furthest above its exact proportional share (and still above 1) is
/// decremented, ties to the larger index. While too small, the quota furthest
/// below its share (with members left to pick) is incremented, ties to the
/// smaller index. Throws InfeasibleSample unless K <= size <= N.
std::vector<std::size_t> rebalance(const std::vector<std::size_t>& raw_quotas,
                                   const std::vector<std::size_t>& cluster_sizes,
                                   std::size_t sample_expected_size);

/// Within each cluster, members ordered by responsibility (descending, ties
/// by ascending id) and the first quota[k] taken. `quotas` is indexed by
/// cluster; a zero quota selects nothing.
SampleResult select_representatives(const ResponsibilityMatrix& resp,
                                    const std::vector<std::size_t>& assignment,
                                    const std::vector<std::size_t>& quotas,
                                    const std::vector<std::string>& object_ids);

struct KRange {
    std::size_t k_min = 1;
    std::size_t k_max = 8;
};

struct PipelineOptions {
    bool normalize = true;
    std::optional<double> filter_threshold;
    std::optional<std::size_t> fixed_k; // unset means choose k by BIC over k_range
    KRange k_range;
    Seed seed = 0;
    std::size_t max_iter = 200;
    double tol = 1e-6;
    std::size_t restarts = 5;
};

struct PipelineResult {
    SampleResult sample;
    FitResult fit;
    std::size_t k = 0;
    std::vector<BicEntry> bic_table;
    std::optional<NormalizationReport> normalization;
    std::optional<FilterReport> filter;
    std::vector<std::size_t> assignment;
};

struct PreparedSet {
    CharacterisedObjectSet set;
    std::optional<NormalizationReport> normalization;
    std::optional<FilterReport> filter;
};

/// The optional normalize and filter_measures stages of the pipeline.
PreparedSet prepare_measures(const CharacterisedObjectSet& set, const PipelineOptions& options);

/// The clustering stage: select_k over the configured range, or over
/// [fixed_k, fixed_k] when a k is given.
KSelection fit_clusters(const CharacterisedObjectSet& prepared, const PipelineOptions& options);

/// normalize -> filter_measures -> clustering -> hard_assign -> allocate ->
/// rebalance -> select_representatives. A fixed k still runs `restarts` fits
/// and keeps the best one.
PipelineResult sample_pipeline(const CharacterisedObjectSet& set, std::size_t sample_expected_size,
                               const PipelineOptions& options);

/// log10 C(n, s) via lgamma.
double count_sample_space(std::uint64_t n, std::uint64_t s);

/// CSV: object_id,cluster,responsibility,rank
void write_sample_csv(const SampleResult& result, std::ostream& out);

} // namespace repsample
