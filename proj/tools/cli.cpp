#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "repsample/error.hpp"
#include "repsample/eval_harness.hpp"
#include "repsample/feature_table.hpp"
#include "repsample/json_io.hpp"
#include "repsample/sampler.hpp"

namespace repsample::cli {

namespace {

constexpr const char* kSchemaHelp = R"(Table CSV (input of sample and cluster):
  UTF-8, comma-separated. The first header cell names the id column, the
  remaining header cells are measure names. One object per row; every
  measure cell must be a finite real (decimal or scientific notation).
  Missing cells are an error. Quote ids containing commas with "...".

Outputs:
  sample  --output   object_id,cluster,responsibility,rank
  cluster --output   object_id,cluster,responsibility
  cluster --model    {K, weights, means, variances, variance_floor, seed}
  eval    --spec     {dimension, seed, clusters: [{count, mean[], stddev[]}]}
  Every --report / eval --output JSON embeds the resolved configuration.

Exit status: 0 success, 1 data or feasibility error, 2 usage error.)";

/// Thrown for flag-level problems; maps to exit status 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string subcommand;
    std::string input;
    std::string output;
    std::string report;
    std::string model;
    std::string spec;
    std::string table;
    std::int64_t size = 0;
    std::string k = "auto";
    std::int64_t k_min = 1;
    std::int64_t k_max = 8;
    std::uint64_t seed = 0;
    bool normalize = true;
    double filter_threshold = 0.0;
    bool filter_enabled = false;
    std::int64_t max_iter = 200;
    double tol = 1e-6;
    std::int64_t restarts = 5;
    std::int64_t runs = 100;
};

void add_pipeline_options(CLI::App& sub, RunConfig& cfg, CLI::Option*& filter_opt)
{
    sub.add_option("--k", cfg.k, "Number of clusters, or 'auto' to choose by BIC")->capture_default_str();
    sub.add_option("--k-min", cfg.k_min, "Smallest k tried when --k auto")->capture_default_str();
    sub.add_option("--k-max", cfg.k_max, "Largest k tried when --k auto")->capture_default_str();
    sub.add_option("--seed", cfg.seed, "Random seed (runs are reproducible per seed)")->capture_default_str();
    sub.add_flag("--normalize,!--no-normalize", cfg.normalize,
                 "Z-score measures before clustering (default on)");
    filter_opt = sub.add_option("--filter-threshold", cfg.filter_threshold,
                                "Drop measures whose |Pearson r| with an earlier kept measure reaches this value "
                                "(0, 1]; disabled by default");
    sub.add_option("--max-iter", cfg.max_iter, "EM iteration cap")->capture_default_str();
    sub.add_option("--tol", cfg.tol, "EM log-likelihood improvement tolerance")->capture_default_str();
    sub.add_option("--restarts", cfg.restarts, "EM restarts per k")->capture_default_str();
}

PipelineOptions validate_pipeline(RunConfig& cfg)
{
    PipelineOptions opt;
    opt.normalize = cfg.normalize;
    if (cfg.filter_enabled) {
        if (!(cfg.filter_threshold > 0.0 && cfg.filter_threshold <= 1.0)) {
            throw UsageError("--filter-threshold must lie in (0, 1]");
        }
        opt.filter_threshold = cfg.filter_threshold;
    }
    if (cfg.k != "auto") {
        std::int64_t k = 0;
        const auto* end = cfg.k.data() + cfg.k.size();
        const auto [ptr, ec] = std::from_chars(cfg.k.data(), end, k);
        if (ec != std::errc() || ptr != end || k < 1) {
            throw UsageError("--k must be 'auto' or a positive integer, got '" + cfg.k + "'");
        }
        opt.fixed_k = static_cast<std::size_t>(k);
    } else {
        if (cfg.k_min < 1) {
            throw UsageError("--k-min must be >= 1");
        }
        if (cfg.k_max < cfg.k_min) {
            throw UsageError("--k-max must be >= --k-min");
        }
        opt.k_range = {static_cast<std::size_t>(cfg.k_min), static_cast<std::size_t>(cfg.k_max)};
    }
    if (cfg.max_iter < 1) {
        throw UsageError("--max-iter must be >= 1");
    }
    if (!(cfg.tol > 0.0)) {
        throw UsageError("--tol must be > 0");
    }
    if (cfg.restarts < 1) {
        throw UsageError("--restarts must be >= 1");
    }
    opt.seed = cfg.seed;
    opt.max_iter = static_cast<std::size_t>(cfg.max_iter);
    opt.tol = cfg.tol;
    opt.restarts = static_cast<std::size_t>(cfg.restarts);
    return opt;
}

void require_size(const RunConfig& cfg)
{
    if (cfg.size < 1) {
        throw UsageError("--size must be >= 1, got " + std::to_string(cfg.size));
    }
}

bool same_file(const std::string& a, const std::string& b)
{
    if (a.empty() || b.empty()) {
        return false;
    }
    std::error_code ec;
    if (std::filesystem::equivalent(a, b, ec)) {
        return true;
    }
    return std::filesystem::weakly_canonical(a, ec) == std::filesystem::weakly_canonical(b, ec);
}

void forbid_overwriting(const std::string& input, std::initializer_list<std::pair<const char*, const std::string*>> outs)
{
    for (const auto& [flag, path] : outs) {
        if (same_file(input, *path)) {
            throw UsageError(std::string(flag) + " must not point at the input file '" + input + "'");
        }
    }
}

void write_file(const std::string& path, const std::string& contents)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::Io, "cannot write '" + path + "'");
    }
    out << contents;
    if (!out) {
        throw Error(ErrorCode::Io, "failed writing '" + path + "'");
    }
}

Json config_json(const RunConfig& cfg)
{
    Json j{
        {"subcommand", cfg.subcommand},
        {"k", cfg.k},
        {"k_min", cfg.k_min},
        {"k_max", cfg.k_max},
        {"seed", cfg.seed},
        {"normalize", cfg.normalize},
        {"filter_threshold", cfg.filter_enabled ? Json(cfg.filter_threshold) : Json(nullptr)},
        {"max_iter", cfg.max_iter},
        {"tol", cfg.tol},
        {"restarts", cfg.restarts},
        {"variance_floor", kDefaultVarianceFloor},
    };
    if (cfg.subcommand == "eval") {
        j["spec"] = cfg.spec;
        j["runs"] = cfg.runs;
        j["size"] = cfg.size;
        j["output"] = cfg.output;
        j["table"] = cfg.table;
    } else {
        j["input"] = cfg.input;
        j["output"] = cfg.output;
        j["report"] = cfg.report;
        if (cfg.subcommand == "sample") {
            j["size"] = cfg.size;
        } else {
            j["model"] = cfg.model;
        }
    }
    return j;
}

int cmd_sample(RunConfig& cfg)
{
    require_size(cfg);
    const PipelineOptions opt = validate_pipeline(cfg);
    forbid_overwriting(cfg.input, {{"--output", &cfg.output}, {"--report", &cfg.report}});

    const CharacterisedObjectSet set = load_table_file(cfg.input);
    const PipelineResult result = sample_pipeline(set, static_cast<std::size_t>(cfg.size), opt);

    std::ostringstream csv;
    write_sample_csv(result.sample, csv);
    write_file(cfg.output, csv.str());
    if (!cfg.report.empty()) {
        Json report = pipeline_report_to_json(result, cfg.seed);
        report["config"] = config_json(cfg);
        write_file(cfg.report, dump_json(report));
    }
    return kSuccess;
}

int cmd_cluster(RunConfig& cfg)
{
    const PipelineOptions opt = validate_pipeline(cfg);
    forbid_overwriting(cfg.input, {{"--output", &cfg.output}, {"--report", &cfg.report}, {"--model", &cfg.model}});

    const CharacterisedObjectSet set = load_table_file(cfg.input);
    const PreparedSet prepared = prepare_measures(set, opt);
    const KSelection sel = fit_clusters(prepared.set, opt);
    const auto assignment = hard_assign(sel.fit.responsibilities);

    std::ostringstream csv;
    csv << "object_id,cluster,responsibility\n";
    for (std::size_t i = 0; i < set.size(); ++i) {
        csv << csv_escape(set.object_ids()[i]) << ',' << assignment[i] << ','
            << format_real(sel.fit.responsibilities(i, assignment[i])) << '\n';
    }
    write_file(cfg.output, csv.str());
    if (!cfg.model.empty()) {
        write_file(cfg.model, dump_json(model_to_json(sel.fit.model)));
    }
    if (!cfg.report.empty()) {
        Json dropped = Json::array();
        if (prepared.filter) {
            for (const auto& d : prepared.filter->dropped) {
                dropped.push_back({{"name", d.name}, {"duplicate_of", d.duplicate_of}, {"abs_correlation", d.abs_correlation}});
            }
        }
        Json report{
            {"seed", cfg.seed},
            {"k", sel.best_k},
            {"cluster_sizes", cluster_sizes(assignment, sel.best_k)},
            {"bic_table", bic_table_to_json(sel.bic_table)},
            {"loglik", sel.fit.report.final_log_likelihood},
            {"iterations", sel.fit.report.iterations},
            {"converged", sel.fit.report.converged},
            {"fit_seed", sel.fit.report.seed},
            {"model_measures", prepared.set.measure_names()},
            {"dropped_measures", dropped},
            {"config", config_json(cfg)},
        };
        write_file(cfg.report, dump_json(report));
    }
    return kSuccess;
}

int cmd_eval(RunConfig& cfg, std::ostream& out)
{
    require_size(cfg);
    if (cfg.runs < 1) {
        throw UsageError("--runs must be >= 1");
    }
    const PipelineOptions opt = validate_pipeline(cfg);
    forbid_overwriting(cfg.spec, {{"--output", &cfg.output}, {"--table", &cfg.table}});

    std::ifstream in(cfg.spec, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open spec '" + cfg.spec + "'");
    }
    SyntheticPopulationSpec spec;
    try {
        spec = population_spec_from_json(Json::parse(in));
    } catch (const Json::exception& e) {
        throw UsageError(std::string("--spec '") + cfg.spec + "': malformed JSON: " + e.what());
    } catch (const Error& e) {
        throw UsageError(std::string("--spec '") + cfg.spec + "': " + e.what());
    }

    const ComparisonReport report =
        run_comparison(spec, static_cast<std::size_t>(cfg.size), static_cast<std::size_t>(cfg.runs), opt);
    Json doc = comparison_report_to_json(report);
    doc["config"] = config_json(cfg);
    const std::string table = format_comparison_table(report);
    if (!cfg.output.empty()) {
        write_file(cfg.output, dump_json(doc));
    }
    if (!cfg.table.empty()) {
        write_file(cfg.table, table);
    } else {
        out << table;
    }
    return kSuccess;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Representative sampling of objects from a numeric feature table:\n"
                 "cluster with a Gaussian mixture (EM), then draw per-cluster quotas of\n"
                 "the highest-posterior members."};
    app.name(args.empty() ? "repsample" : std::filesystem::path(args.front()).filename().string());
    app.footer(kSchemaHelp);
    app.require_subcommand(1);

    RunConfig cfg;
    CLI::Option* filter_sample = nullptr;
    CLI::Option* filter_cluster = nullptr;
    CLI::Option* filter_eval = nullptr;

    auto* sample = app.add_subcommand("sample", "Select a representative sample and write it as CSV");
    sample->add_option("--input", cfg.input, "Input table CSV")->required();
    sample->add_option("--output", cfg.output, "Sample CSV to write")->required();
    sample->add_option("--report", cfg.report, "JSON run report to write");
    sample->add_option("--size", cfg.size, "Requested sample size (K <= size <= N)")->required();
    add_pipeline_options(*sample, cfg, filter_sample);

    auto* cluster = app.add_subcommand("cluster", "Fit the mixture and write per-object assignments");
    cluster->add_option("--input", cfg.input, "Input table CSV")->required();
    cluster->add_option("--output", cfg.output, "Assignment CSV to write")->required();
    cluster->add_option("--model", cfg.model, "Model JSON to write");
    cluster->add_option("--report", cfg.report, "JSON report (BIC table, fit diagnostics) to write");
    add_pipeline_options(*cluster, cfg, filter_cluster);

    auto* eval = app.add_subcommand("eval", "Compare the method with uniform random sampling on synthetic data");
    eval->add_option("--spec", cfg.spec, "Population spec JSON")->required();
    eval->add_option("--size", cfg.size, "Sample size per run")->required();
    eval->add_option("--runs", cfg.runs, "Number of seeded runs")->capture_default_str();
    eval->add_option("--output", cfg.output, "Comparison report JSON to write");
    eval->add_option("--table", cfg.table, "Plain-text table to write (default: standard output)");
    add_pipeline_options(*eval, cfg, filter_eval);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) {
        reversed.pop_back();
    }
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
            app.exit(e, out, err);
            return kSuccess;
        }
        err << app.get_name() << ": usage error: " << e.what() << '\n';
        return kUsageError;
    }

    try {
        if (sample->parsed()) {
            cfg.subcommand = "sample";
            cfg.filter_enabled = filter_sample->count() > 0;
            return cmd_sample(cfg);
        }
        if (cluster->parsed()) {
            cfg.subcommand = "cluster";
            cfg.filter_enabled = filter_cluster->count() > 0;
            return cmd_cluster(cfg);
        }
        cfg.subcommand = "eval";
        cfg.filter_enabled = filter_eval->count() > 0;
        return cmd_eval(cfg, out);
    } catch (const UsageError& e) {
        err << app.get_name() << ": usage error: " << e.what() << '\n';
        return kUsageError;
    } catch (const Error& e) {
        err << app.get_name() << ": error: " << e.what() << '\n';
        return kDataError;
    } catch (const std::exception& e) {
        err << app.get_name() << ": error: " << e.what() << '\n';
        return kDataError;
    }
}

} // namespace repsample::cli
