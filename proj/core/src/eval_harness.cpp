#include "repsample/eval_harness.hpp"

#include <cmath>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "repsample/error.hpp"

namespace repsample {

void SyntheticPopulationSpec::validate() const
{
    if (dimension == 0) {
        throw Error(ErrorCode::InvalidPopulationSpec, "dimension must be >= 1");
    }
    if (clusters.empty()) {
        throw Error(ErrorCode::InvalidPopulationSpec, "clusters must not be empty");
    }
    for (std::size_t i = 0; i < clusters.size(); ++i) {
        const auto& c = clusters[i];
        const std::string where = "clusters[" + std::to_string(i) + "]";
        if (c.count == 0) {
            throw Error(ErrorCode::InvalidPopulationSpec, where + ".count must be >= 1");
        }
        if (c.mean.size() != dimension) {
            throw Error(ErrorCode::InvalidPopulationSpec, where + ".mean must have `dimension` entries");
        }
        if (c.stddev.size() != dimension) {
            throw Error(ErrorCode::InvalidPopulationSpec, where + ".stddev must have `dimension` entries");
        }
        for (double m : c.mean) {
            if (!std::isfinite(m)) {
                throw Error(ErrorCode::InvalidPopulationSpec, where + ".mean must be finite");
            }
        }
        for (double s : c.stddev) {
            if (!(s > 0.0) || !std::isfinite(s)) {
                throw Error(ErrorCode::InvalidPopulationSpec, where + ".stddev must be positive");
            }
        }
    }
}

Population generate_population(const SyntheticPopulationSpec& spec)
{
    spec.validate();
    const std::size_t n = std::accumulate(spec.clusters.begin(), spec.clusters.end(), std::size_t{0},
                                          [](std::size_t acc, const ClusterSpec& c) { return acc + c.count; });
    Rng rng(spec.seed);
    Matrix values(n, spec.dimension);
    std::vector<std::string> ids;
    std::vector<std::size_t> labels;
    ids.reserve(n);
    labels.reserve(n);
    std::size_t row = 0;
    for (std::size_t i = 0; i < spec.clusters.size(); ++i) {
        const auto& c = spec.clusters[i];
        for (std::size_t j = 0; j < c.count; ++j, ++row) {
            for (std::size_t d = 0; d < spec.dimension; ++d) {
                values(row, d) = c.mean[d] + c.stddev[d] * rng.normal();
            }
            ids.push_back("c" + std::to_string(i) + "_" + std::to_string(j));
            labels.push_back(i);
        }
    }
    std::vector<std::string> names;
    for (std::size_t d = 0; d < spec.dimension; ++d) {
        names.push_back("m" + std::to_string(d));
    }
    return {CharacterisedObjectSet(std::move(ids), std::move(names), std::move(values)), std::move(labels)};
}

namespace {

std::vector<bool> clusters_hit(const std::vector<std::string>& selected_ids,
                               const std::vector<std::string>& population_ids,
                               const std::vector<std::size_t>& true_labels, std::size_t& label_count)
{
    if (population_ids.size() != true_labels.size()) {
        throw Error(ErrorCode::DimensionMismatch, "ids and labels differ in length");
    }
    std::unordered_map<std::string_view, std::size_t> label_of;
    std::size_t max_label = 0;
    for (std::size_t i = 0; i < population_ids.size(); ++i) {
        label_of.emplace(population_ids[i], true_labels[i]);
        max_label = std::max(max_label, true_labels[i]);
    }
    label_count = population_ids.empty() ? 0 : max_label + 1;
    std::vector<bool> hit(label_count, false);
    for (const auto& id : selected_ids) {
        const auto it = label_of.find(id);
        if (it == label_of.end()) {
            throw Error(ErrorCode::UnknownId, "selected id '" + id + "' is not in the population");
        }
        hit[it->second] = true;
    }
    return hit;
}

} // namespace

double cluster_coverage(const std::vector<std::string>& selected_ids,
                        const std::vector<std::string>& population_ids,
                        const std::vector<std::size_t>& true_labels)
{
    std::size_t label_count = 0;
    const auto hit = clusters_hit(selected_ids, population_ids, true_labels, label_count);
    const std::set<std::size_t> present(true_labels.begin(), true_labels.end());
    if (present.empty()) {
        return 0.0;
    }
    std::size_t covered = 0;
    for (std::size_t label : present) {
        covered += hit[label] ? 1 : 0;
    }
    return static_cast<double>(covered) / static_cast<double>(present.size());
}

std::vector<std::string> uniform_random_sample(const std::vector<std::string>& ids, std::size_t size, Seed seed)
{
    if (size > ids.size()) {
        throw Error(ErrorCode::SizeTooLarge, "sample size " + std::to_string(size) + " exceeds population " +
                                                 std::to_string(ids.size()));
    }
    std::vector<std::size_t> index(ids.size());
    std::iota(index.begin(), index.end(), 0);
    Rng rng(seed);
    std::vector<std::string> out;
    out.reserve(size);
    for (std::size_t i = 0; i < size; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(ids.size() - i));
        std::swap(index[i], index[j]);
        out.push_back(ids[index[i]]);
    }
    return out;
}

ComparisonReport run_comparison(const SyntheticPopulationSpec& spec, std::size_t sample_size, std::size_t runs,
                                const PipelineOptions& options)
{
    spec.validate();
    if (runs == 0) {
        throw Error(ErrorCode::InvalidArguments, "runs must be >= 1");
    }
    const std::size_t k_true = spec.clusters.size();

    struct Tally {
        double coverage_sum = 0.0;
        std::size_t full = 0;
        std::vector<std::size_t> misses;
    };
    Tally method{0.0, 0, std::vector<std::size_t>(k_true, 0)};
    Tally random{0.0, 0, std::vector<std::size_t>(k_true, 0)};

    auto score = [&](Tally& t, const std::vector<std::string>& selected, const Population& pop) {
        std::size_t label_count = 0;
        const auto hit = clusters_hit(selected, pop.set.object_ids(), pop.true_labels, label_count);
        const double cov = cluster_coverage(selected, pop.set.object_ids(), pop.true_labels);
        t.coverage_sum += cov;
        t.full += cov == 1.0 ? 1 : 0;
        for (std::size_t c = 0; c < k_true; ++c) {
            t.misses[c] += hit[c] ? 0 : 1;
        }
    };

    for (std::size_t r = 0; r < runs; ++r) {
        SyntheticPopulationSpec run_spec = spec;
        run_spec.seed = derive_seed(spec.seed, r);
        const Population pop = generate_population(run_spec);

        PipelineOptions run_options = options;
        run_options.seed = derive_seed(options.seed, {r, 0});
        const PipelineResult result = sample_pipeline(pop.set, sample_size, run_options);
        std::vector<std::string> chosen;
        chosen.reserve(result.sample.entries.size());
        for (const auto& e : result.sample.entries) {
            chosen.push_back(e.object_id);
        }
        score(method, chosen, pop);

        const auto uniform = uniform_random_sample(pop.set.object_ids(), sample_size, derive_seed(options.seed, {r, 1}));
        score(random, uniform, pop);
    }

    auto summarize = [&](const std::string& name, const Tally& t) {
        StrategySummary s;
        s.name = name;
        s.runs = runs;
        s.mean_coverage = t.coverage_sum / static_cast<double>(runs);
        s.full_coverage_fraction = static_cast<double>(t.full) / static_cast<double>(runs);
        for (std::size_t m : t.misses) {
            s.miss_fraction.push_back(static_cast<double>(m) / static_cast<double>(runs));
        }
        return s;
    };

    ComparisonReport report;
    report.spec = spec;
    report.sample_size = sample_size;
    report.master_seed = options.seed;
    report.strategies.push_back(summarize("method", method));
    report.strategies.push_back(summarize("uniform_random", random));
    return report;
}

std::string format_comparison_table(const ComparisonReport& report)
{
    std::ostringstream out;
    out << "population: " << report.spec.clusters.size() << " clusters, sizes [";
    for (std::size_t i = 0; i < report.spec.clusters.size(); ++i) {
        out << (i ? ", " : "") << report.spec.clusters[i].count;
    }
    out << "], sample size " << report.sample_size << "\n\n";
    out << std::left << std::setw(16) << "strategy" << std::right << std::setw(8) << "runs" << std::setw(16)
        << "mean_coverage" << std::setw(16) << "full_coverage";
    for (std::size_t c = 0; c < report.spec.clusters.size(); ++c) {
        out << std::setw(12) << ("miss_c" + std::to_string(c));
    }
    out << '\n';
    out << std::fixed << std::setprecision(4);
    for (const auto& s : report.strategies) {
        out << std::left << std::setw(16) << s.name << std::right << std::setw(8) << s.runs << std::setw(16)
            << s.mean_coverage << std::setw(16) << s.full_coverage_fraction;
        for (double m : s.miss_fraction) {
            out << std::setw(12) << m;
        }
        out << '\n';
    }
    return out.str();
}

} // namespace repsample
