#include "repsample/json_io.hpp"

#include <cmath>
#include <sstream>

#include "repsample/error.hpp"

namespace repsample {

namespace {

void write_value(std::ostringstream& out, const Json& v, int indent, int depth)
{
    const auto newline = [&](int level) {
        if (indent >= 0) {
            out << '\n' << std::string(static_cast<std::size_t>(indent * level), ' ');
        }
    };
    const char* sep = indent >= 0 ? ": " : ":";

    switch (v.type()) {
    case Json::value_t::object: {
        if (v.empty()) {
            out << "{}";
            return;
        }
        out << '{';
        bool first = true;
        for (auto it = v.begin(); it != v.end(); ++it) {
            if (!first) {
                out << ',';
            }
            first = false;
            newline(depth + 1);
            out << Json(it.key()).dump() << sep;
            write_value(out, it.value(), indent, depth + 1);
        }
        newline(depth);
        out << '}';
        return;
    }
    case Json::value_t::array: {
        if (v.empty()) {
            out << "[]";
            return;
        }
        out << '[';
        bool first = true;
        for (const auto& item : v) {
            if (!first) {
                out << ',';
            }
            first = false;
            newline(depth + 1);
            write_value(out, item, indent, depth + 1);
        }
        newline(depth);
        out << ']';
        return;
    }
    case Json::value_t::number_float: {
        const double d = v.get<double>();
        if (!std::isfinite(d)) {
            out << "null";
        } else {
            out << format_real(d);
        }
        return;
    }
    default:
        out << v.dump();
    }
}

Json matrix_to_json(const Matrix& m)
{
    Json rows = Json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
    }
    return rows;
}

Matrix matrix_from_json(const Json& doc, const char* field, std::size_t rows)
{
    if (!doc.is_array() || doc.size() != rows || rows == 0) {
        throw Error(ErrorCode::InvalidModel, std::string(field) + " must be an array of K rows");
    }
    const std::size_t cols = doc.front().is_array() ? doc.front().size() : 0;
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const Json& row = doc[r];
        if (!row.is_array() || row.size() != cols) {
            throw Error(ErrorCode::InvalidModel, std::string(field) + " rows must have equal length");
        }
        for (std::size_t c = 0; c < cols; ++c) {
            if (!row[c].is_number()) {
                throw Error(ErrorCode::InvalidModel, std::string(field) + " must hold numbers");
            }
            m(r, c) = row[c].get<double>();
        }
    }
    return m;
}

const Json& require(const Json& doc, const char* field, ErrorCode code)
{
    if (!doc.is_object() || !doc.contains(field)) {
        throw Error(code, std::string("missing field `") + field + "`");
    }
    return doc.at(field);
}

std::vector<double> real_vector(const Json& doc, const std::string& field)
{
    if (!doc.is_array()) {
        throw Error(ErrorCode::InvalidPopulationSpec, "`" + field + "` must be an array of numbers");
    }
    std::vector<double> out;
    for (const auto& x : doc) {
        if (!x.is_number()) {
            throw Error(ErrorCode::InvalidPopulationSpec, "`" + field + "` must be an array of numbers");
        }
        out.push_back(x.get<double>());
    }
    return out;
}

std::uint64_t unsigned_field(const Json& doc, const std::string& field)
{
    if (doc.is_number_unsigned()) {
        return doc.get<std::uint64_t>();
    }
    if (doc.is_number_integer() && doc.get<std::int64_t>() >= 0) {
        return static_cast<std::uint64_t>(doc.get<std::int64_t>());
    }
    throw Error(ErrorCode::InvalidPopulationSpec, "`" + field + "` must be a non-negative integer");
}

} // namespace

std::string dump_json(const Json& value, int indent)
{
    std::ostringstream out;
    write_value(out, value, indent, 0);
    if (indent >= 0) {
        out << '\n';
    }
    return out.str();
}

Json model_to_json(const GaussianMixtureModel& model)
{
    return Json{
        {"K", model.components()},
        {"weights", model.weights},
        {"means", matrix_to_json(model.means)},
        {"variances", matrix_to_json(model.variances)},
        {"variance_floor", model.variance_floor},
        {"seed", model.seed},
    };
}

GaussianMixtureModel model_from_json(const Json& doc)
{
    const Json& k_field = require(doc, "K", ErrorCode::InvalidModel);
    if (!k_field.is_number_integer() || k_field.get<std::int64_t>() < 1) {
        throw Error(ErrorCode::InvalidModel, "`K` must be a positive integer");
    }
    const auto k = static_cast<std::size_t>(k_field.get<std::int64_t>());
    GaussianMixtureModel model;
    const Json& weights = require(doc, "weights", ErrorCode::InvalidModel);
    if (!weights.is_array() || weights.size() != k) {
        throw Error(ErrorCode::InvalidModel, "`weights` must have K entries");
    }
    for (const auto& w : weights) {
        if (!w.is_number()) {
            throw Error(ErrorCode::InvalidModel, "`weights` must hold numbers");
        }
        model.weights.push_back(w.get<double>());
    }
    model.means = matrix_from_json(require(doc, "means", ErrorCode::InvalidModel), "means", k);
    model.variances = matrix_from_json(require(doc, "variances", ErrorCode::InvalidModel), "variances", k);
    const Json& floor = require(doc, "variance_floor", ErrorCode::InvalidModel);
    if (!floor.is_number()) {
        throw Error(ErrorCode::InvalidModel, "`variance_floor` must be a number");
    }
    model.variance_floor = floor.get<double>();
    const Json& seed = require(doc, "seed", ErrorCode::InvalidModel);
    if (!seed.is_number_integer() || (seed.is_number_integer() && !seed.is_number_unsigned() &&
                                      seed.get<std::int64_t>() < 0)) {
        throw Error(ErrorCode::InvalidModel, "`seed` must be a non-negative integer");
    }
    model.seed = seed.get<std::uint64_t>();
    model.validate();
    return model;
}

Json bic_table_to_json(const std::vector<BicEntry>& table)
{
    Json out = Json::array();
    for (const auto& e : table) {
        out.push_back({{"k", e.k},
                       {"loglik", e.log_likelihood},
                       {"free_parameters", e.free_parameters},
                       {"bic", e.bic},
                       {"iterations", e.iterations},
                       {"converged", e.converged}});
    }
    return out;
}

Json pipeline_report_to_json(const PipelineResult& result, Seed seed)
{
    const Allocation& a = result.sample.allocation;
    Json dropped = Json::array();
    if (result.filter) {
        for (const auto& d : result.filter->dropped) {
            dropped.push_back({{"name", d.name}, {"duplicate_of", d.duplicate_of}, {"abs_correlation", d.abs_correlation}});
        }
    }
    Json constant = Json::array();
    if (result.normalization) {
        constant = result.normalization->constant_measures;
    }
    return Json{
        {"seed", seed},
        {"k", result.k},
        {"sample_expected_size", a.sample_expected_size},
        {"total", a.total},
        {"cluster_ids", a.cluster_ids},
        {"cluster_sizes", a.cluster_sizes},
        {"quotas_raw", a.raw_quotas},
        {"quotas_final", a.final_quotas},
        {"bic_table", bic_table_to_json(result.bic_table)},
        {"loglik", result.fit.report.final_log_likelihood},
        {"iterations", result.fit.report.iterations},
        {"converged", result.fit.report.converged},
        {"fit_seed", result.fit.report.seed},
        {"dropped_measures", dropped},
        {"constant_measures", constant},
    };
}

SyntheticPopulationSpec population_spec_from_json(const Json& doc)
{
    if (!doc.is_object()) {
        throw Error(ErrorCode::InvalidPopulationSpec, "spec must be a JSON object");
    }
    SyntheticPopulationSpec spec;
    spec.dimension = unsigned_field(require(doc, "dimension", ErrorCode::InvalidPopulationSpec), "dimension");
    spec.seed = doc.contains("seed") ? unsigned_field(doc.at("seed"), "seed") : 0;
    const Json& clusters = require(doc, "clusters", ErrorCode::InvalidPopulationSpec);
    if (!clusters.is_array()) {
        throw Error(ErrorCode::InvalidPopulationSpec, "`clusters` must be an array");
    }
    for (std::size_t i = 0; i < clusters.size(); ++i) {
        const std::string where = "clusters[" + std::to_string(i) + "]";
        const Json& c = clusters[i];
        if (!c.is_object()) {
            throw Error(ErrorCode::InvalidPopulationSpec, "`" + where + "` must be an object");
        }
        for (const char* field : {"count", "mean", "stddev"}) {
            if (!c.contains(field)) {
                throw Error(ErrorCode::InvalidPopulationSpec, "missing field `" + where + "." + field + "`");
            }
        }
        ClusterSpec cs;
        cs.count = unsigned_field(c.at("count"), where + ".count");
        cs.mean = real_vector(c.at("mean"), where + ".mean");
        cs.stddev = real_vector(c.at("stddev"), where + ".stddev");
        spec.clusters.push_back(std::move(cs));
    }
    spec.validate();
    return spec;
}

Json population_spec_to_json(const SyntheticPopulationSpec& spec)
{
    Json clusters = Json::array();
    for (const auto& c : spec.clusters) {
        clusters.push_back({{"count", c.count}, {"mean", c.mean}, {"stddev", c.stddev}});
    }
    return Json{{"dimension", spec.dimension}, {"seed", spec.seed}, {"clusters", clusters}};
}

Json comparison_report_to_json(const ComparisonReport& report)
{
    Json strategies = Json::array();
    for (const auto& s : report.strategies) {
        strategies.push_back({{"strategy", s.name},
                              {"runs", s.runs},
                              {"mean_coverage", s.mean_coverage},
                              {"full_coverage_fraction", s.full_coverage_fraction},
                              {"miss_fraction", s.miss_fraction}});
    }
    return Json{{"population", population_spec_to_json(report.spec)},
                {"sample_size", report.sample_size},
                {"master_seed", report.master_seed},
                {"strategies", strategies}};
}

} // namespace repsample
