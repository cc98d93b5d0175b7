#include "repsample/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>

#include "repsample/error.hpp"

namespace repsample {

namespace {

// Keeps every quota*N and size*cluster product below 2^62.
constexpr std::size_t kMaxPopulation = std::size_t{1} << 31;

std::size_t checked_total(const std::vector<std::size_t>& sizes)
{
    std::size_t total = 0;
    for (std::size_t c : sizes) {
        if (c == 0) {
            throw Error(ErrorCode::InvalidArguments, "cluster sizes must be >= 1");
        }
        total += c;
        if (total > kMaxPopulation) {
            throw Error(ErrorCode::InvalidArguments, "population too large for exact quota arithmetic");
        }
    }
    return total;
}

} // namespace

std::vector<std::size_t> hard_assign(const ResponsibilityMatrix& resp)
{
    std::vector<std::size_t> out(resp.objects(), 0);
    for (std::size_t n = 0; n < resp.objects(); ++n) {
        const auto row = resp.row(n);
        // max_element returns the first maximum, i.e. the smallest index on ties.
        out[n] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return out;
}

std::vector<std::size_t> cluster_sizes(const std::vector<std::size_t>& assignment, std::size_t k)
{
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t a : assignment) {
        if (a >= k) {
            throw Error(ErrorCode::InvalidArguments, "cluster index out of range");
        }
        ++sizes[a];
    }
    return sizes;
}

std::vector<std::size_t> allocate(std::size_t sample_expected_size,
                                  const std::vector<std::size_t>& cluster_sizes)
{
    if (sample_expected_size == 0) {
        throw Error(ErrorCode::InvalidArguments, "sample size must be >= 1");
    }
    if (cluster_sizes.empty()) {
        throw Error(ErrorCode::InvalidArguments, "no clusters");
    }
    const std::size_t total = checked_total(cluster_sizes);
    if (sample_expected_size > kMaxPopulation) {
        throw Error(ErrorCode::InvalidArguments, "sample size too large for exact quota arithmetic");
    }
    std::vector<std::size_t> quotas;
    quotas.reserve(cluster_sizes.size());
    for (std::size_t c : cluster_sizes) {
        // floor(s*c/N + 1/2) == floor((2*s*c + N) / (2*N))
        const std::uint64_t num = 2 * static_cast<std::uint64_t>(sample_expected_size) * c + total;
        const std::uint64_t den = 2 * static_cast<std::uint64_t>(total);
        quotas.push_back(std::max<std::size_t>(static_cast<std::size_t>(num / den), 1));
    }
    return quotas;
}

std::vector<std::size_t> rebalance(const std::vector<std::size_t>& raw_quotas,
                                   const std::vector<std::size_t>& cluster_sizes,
                                   std::size_t sample_expected_size)
{
    if (raw_quotas.size() != cluster_sizes.size() || raw_quotas.empty()) {
        throw Error(ErrorCode::InvalidArguments, "quota and cluster-size vectors disagree");
    }
    const std::size_t total = checked_total(cluster_sizes);
    const std::size_t k = cluster_sizes.size();
    if (sample_expected_size < k || sample_expected_size > total) {
        throw Error(ErrorCode::InfeasibleSample,
                    "sample size " + std::to_string(sample_expected_size) + " must lie in [K=" +
                        std::to_string(k) + ", N=" + std::to_string(total) + "]");
    }

    std::vector<std::size_t> q(k);
    for (std::size_t i = 0; i < k; ++i) {
        q[i] = std::clamp<std::size_t>(raw_quotas[i], 1, cluster_sizes[i]);
    }
    // Deviation from the exact share s*c_i/N, scaled by N to stay integral.
    const auto excess = [&](std::size_t i) {
        return static_cast<std::int64_t>(q[i] * total) -
               static_cast<std::int64_t>(sample_expected_size * cluster_sizes[i]);
    };

    std::size_t sum = std::accumulate(q.begin(), q.end(), std::size_t{0});
    while (sum > sample_expected_size) {
        std::size_t pick = k;
        for (std::size_t i = 0; i < k; ++i) {
            if (q[i] > 1 && (pick == k || excess(i) >= excess(pick))) {
                pick = i;
            }
        }
        --q[pick];
        --sum;
    }
    while (sum < sample_expected_size) {
        std::size_t pick = k;
        for (std::size_t i = 0; i < k; ++i) {
            if (q[i] < cluster_sizes[i] && (pick == k || excess(i) < excess(pick))) {
                pick = i;
            }
        }
        ++q[pick];
        ++sum;
    }
    return q;
}

SampleResult select_representatives(const ResponsibilityMatrix& resp,
                                    const std::vector<std::size_t>& assignment,
                                    const std::vector<std::size_t>& quotas,
                                    const std::vector<std::string>& object_ids)
{
    const std::size_t n = resp.objects();
    const std::size_t k = resp.components();
    if (assignment.size() != n || object_ids.size() != n || quotas.size() != k) {
        throw Error(ErrorCode::DimensionMismatch, "responsibilities, assignment, quotas and ids disagree");
    }
    std::vector<std::vector<std::size_t>> members(k);
    for (std::size_t i = 0; i < n; ++i) {
        if (assignment[i] >= k) {
            throw Error(ErrorCode::InvalidArguments, "cluster index out of range");
        }
        members[assignment[i]].push_back(i);
    }

    SampleResult result;
    for (std::size_t c = 0; c < k; ++c) {
        auto& m = members[c];
        if (quotas[c] > m.size()) {
            throw Error(ErrorCode::QuotaExceedsCluster,
                        "cluster " + std::to_string(c) + " has " + std::to_string(m.size()) +
                            " members but quota " + std::to_string(quotas[c]));
        }
        if (m.empty()) {
            continue;
        }
        std::sort(m.begin(), m.end(), [&](std::size_t a, std::size_t b) {
            if (resp(a, c) != resp(b, c)) {
                return resp(a, c) > resp(b, c);
            }
            return object_ids[a] < object_ids[b];
        });
        for (std::size_t r = 0; r < quotas[c]; ++r) {
            result.entries.push_back({object_ids[m[r]], c, resp(m[r], c), r + 1});
        }
        result.allocation.cluster_ids.push_back(c);
        result.allocation.cluster_sizes.push_back(m.size());
        result.allocation.final_quotas.push_back(quotas[c]);
    }
    result.allocation.raw_quotas = result.allocation.final_quotas;
    result.allocation.sample_expected_size = result.entries.size();
    result.allocation.total = n;
    return result;
}

PreparedSet prepare_measures(const CharacterisedObjectSet& set, const PipelineOptions& options)
{
    PreparedSet out{set, std::nullopt, std::nullopt};
    if (options.normalize) {
        auto [normalized, report] = normalize(out.set);
        out.set = std::move(normalized);
        out.normalization = std::move(report);
    }
    if (options.filter_threshold) {
        auto [filtered, report] = filter_measures(out.set, *options.filter_threshold);
        out.set = std::move(filtered);
        out.filter = std::move(report);
    }
    return out;
}

KSelection fit_clusters(const CharacterisedObjectSet& prepared, const PipelineOptions& options)
{
    const EmOptions em{options.max_iter, options.tol, kDefaultVarianceFloor};
    const std::size_t k_min = options.fixed_k ? *options.fixed_k : options.k_range.k_min;
    const std::size_t k_max = options.fixed_k ? *options.fixed_k : options.k_range.k_max;
    return select_k(prepared, k_min, k_max, options.seed, options.restarts, em);
}

PipelineResult sample_pipeline(const CharacterisedObjectSet& set, std::size_t sample_expected_size,
                               const PipelineOptions& options)
{
    if (sample_expected_size == 0 || sample_expected_size > set.size()) {
        throw Error(ErrorCode::InfeasibleSample, "sample size " + std::to_string(sample_expected_size) +
                                                     " must lie in [1, N=" + std::to_string(set.size()) + "]");
    }
    PipelineResult out;
    PreparedSet prepared = prepare_measures(set, options);
    out.normalization = std::move(prepared.normalization);
    out.filter = std::move(prepared.filter);

    KSelection selection = fit_clusters(prepared.set, options);
    out.k = selection.best_k;
    out.bic_table = std::move(selection.bic_table);
    out.fit = std::move(selection.fit);

    out.assignment = hard_assign(out.fit.responsibilities);
    const auto sizes = cluster_sizes(out.assignment, out.k);

    Allocation allocation;
    for (std::size_t c = 0; c < sizes.size(); ++c) {
        if (sizes[c] > 0) {
            allocation.cluster_ids.push_back(c);
            allocation.cluster_sizes.push_back(sizes[c]);
        }
    }
    allocation.sample_expected_size = sample_expected_size;
    allocation.total = set.size();
    if (sample_expected_size < allocation.cluster_ids.size()) {
        throw Error(ErrorCode::InfeasibleSample,
                    "sample size " + std::to_string(sample_expected_size) + " is below the " +
                        std::to_string(allocation.cluster_ids.size()) + " non-empty clusters");
    }
    allocation.raw_quotas = allocate(sample_expected_size, allocation.cluster_sizes);
    allocation.final_quotas = rebalance(allocation.raw_quotas, allocation.cluster_sizes, sample_expected_size);

    std::vector<std::size_t> quotas(out.k, 0);
    for (std::size_t i = 0; i < allocation.cluster_ids.size(); ++i) {
        quotas[allocation.cluster_ids[i]] = allocation.final_quotas[i];
    }
    out.sample = select_representatives(out.fit.responsibilities, out.assignment, quotas, set.object_ids());
    out.sample.allocation = std::move(allocation);
    return out;
}

double count_sample_space(std::uint64_t n, std::uint64_t s)
{
    if (s > n) {
        throw Error(ErrorCode::InvalidArguments, "need 0 <= s <= N");
    }
    const double ln = std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(s) + 1.0) -
                      std::lgamma(static_cast<double>(n - s) + 1.0);
    return ln / std::numbers::ln10;
}

void write_sample_csv(const SampleResult& result, std::ostream& out)
{
    out << "object_id,cluster,responsibility,rank\n";
    for (const auto& e : result.entries) {
        out << csv_escape(e.object_id) << ',' << e.cluster << ',' << format_real(e.responsibility) << ','
            << e.rank << '\n';
    }
}

} // namespace repsample
