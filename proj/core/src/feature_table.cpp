#include "repsample/feature_table.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "repsample/error.hpp"

namespace repsample {

namespace {

constexpr double kUnitCorrelationSlack = 1e-12;

using Record = std::vector<std::string>;

// Splits CSV text into records. Quoted fields may contain commas, quotes
// ("" escape) and newlines. Blank lines are skipped.
std::vector<Record> split_records(std::string_view text)
{
    std::vector<Record> records;
    Record current;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;

    auto end_field = [&] {
        current.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        if (!current.empty() || field_started || !field.empty()) {
            end_field();
            records.push_back(std::move(current));
        }
        current.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
        case '"':
            in_quotes = true;
            field_started = true;
            break;
        case ',':
            field_started = true;
            end_field();
            field_started = true;
            break;
        case '\r':
            if (i + 1 < text.size() && text[i + 1] == '\n') {
                break;
            }
            end_record();
            break;
        case '\n':
            end_record();
            break;
        default:
            field.push_back(c);
            field_started = true;
        }
    }
    if (in_quotes) {
        throw Error(ErrorCode::MalformedRow, "unterminated quoted field");
    }
    end_record();
    return records;
}

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

// Returns false when the text is not a complete real literal.
bool parse_real(std::string_view text, double& out)
{
    text = trim(text);
    if (!text.empty() && text.front() == '+') {
        text.remove_prefix(1);
    }
    if (text.empty()) {
        return false;
    }
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec == std::errc::result_out_of_range) {
        // Overflow to infinity is reported as non-finite; underflow is a valid 0-ish value.
        out = std::strtod(std::string(text).c_str(), nullptr);
        return ptr == last;
    }
    return ec == std::errc() && ptr == last;
}

double column_mean(const Matrix& m, std::size_t c)
{
    double sum = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        sum += m(r, c);
    }
    return sum / static_cast<double>(m.rows());
}

bool column_is_constant(const Matrix& m, std::size_t c)
{
    for (std::size_t r = 1; r < m.rows(); ++r) {
        if (m(r, c) != m(0, c)) {
            return false;
        }
    }
    return true;
}

CharacterisedObjectSet select_columns(const CharacterisedObjectSet& set,
                                      const std::vector<std::size_t>& columns)
{
    const Matrix& in = set.values();
    Matrix out(in.rows(), columns.size());
    std::vector<std::string> names;
    names.reserve(columns.size());
    for (std::size_t j = 0; j < columns.size(); ++j) {
        names.push_back(set.measure_names()[columns[j]]);
        for (std::size_t r = 0; r < in.rows(); ++r) {
            out(r, j) = in(r, columns[j]);
        }
    }
    return {set.object_ids(), std::move(names), std::move(out)};
}

} // namespace

CharacterisedObjectSet::CharacterisedObjectSet(std::vector<std::string> object_ids,
                                               std::vector<std::string> measure_names,
                                               Matrix values)
    : object_ids_(std::move(object_ids)),
      measure_names_(std::move(measure_names)),
      values_(std::move(values))
{
    if (object_ids_.empty()) {
        throw Error(ErrorCode::EmptyInput, "object set has no objects");
    }
    if (measure_names_.empty()) {
        throw Error(ErrorCode::MalformedHeader, "object set has no measures");
    }
    if (values_.rows() != object_ids_.size() || values_.cols() != measure_names_.size()) {
        throw Error(ErrorCode::DimensionMismatch, "value matrix shape does not match ids and measures");
    }
    std::unordered_set<std::string_view> seen;
    for (const auto& id : object_ids_) {
        if (!seen.insert(id).second) {
            throw Error(ErrorCode::DuplicateId, "duplicate object id '" + id + "'");
        }
    }
    seen.clear();
    for (const auto& name : measure_names_) {
        if (name.empty()) {
            throw Error(ErrorCode::MalformedHeader, "empty measure name");
        }
        if (!seen.insert(name).second) {
            throw Error(ErrorCode::DuplicateMeasureName, "duplicate measure name '" + name + "'");
        }
    }
    for (std::size_t r = 0; r < values_.rows(); ++r) {
        for (std::size_t c = 0; c < values_.cols(); ++c) {
            if (!std::isfinite(values_(r, c))) {
                throw Error(ErrorCode::NonFiniteCell,
                            "row " + std::to_string(r + 1) + ", column \"" + measure_names_[c] + "\"");
            }
        }
    }
}

CharacterisedObjectSet load_table(std::istream& in)
{
    std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    if (text.starts_with("\xEF\xBB\xBF")) {
        text.erase(0, 3);
    }
    auto records = split_records(text);
    if (records.empty()) {
        throw Error(ErrorCode::EmptyInput, "no header row");
    }
    const Record& header = records.front();
    if (header.size() < 2) {
        throw Error(ErrorCode::MalformedHeader, "header needs an id column and at least one measure");
    }
    std::vector<std::string> measures(header.begin() + 1, header.end());
    for (auto& name : measures) {
        name = std::string(trim(name));
    }
    const std::size_t n_rows = records.size() - 1;
    if (n_rows == 0) {
        throw Error(ErrorCode::EmptyInput, "no data rows");
    }

    std::vector<std::string> ids;
    ids.reserve(n_rows);
    Matrix values(n_rows, measures.size());
    std::unordered_set<std::string> seen;
    for (std::size_t r = 0; r < n_rows; ++r) {
        const Record& rec = records[r + 1];
        const std::string row_label = "row " + std::to_string(r + 1);
        if (rec.size() != header.size()) {
            throw Error(ErrorCode::MalformedRow, row_label + ": expected " + std::to_string(header.size()) +
                                                     " fields, found " + std::to_string(rec.size()));
        }
        if (!seen.insert(rec[0]).second) {
            throw Error(ErrorCode::DuplicateId, row_label + ": duplicate object id '" + rec[0] + "'");
        }
        ids.push_back(rec[0]);
        for (std::size_t c = 0; c < measures.size(); ++c) {
            double v = 0.0;
            if (!parse_real(rec[c + 1], v)) {
                throw Error(ErrorCode::NonNumericCell,
                            row_label + ", column \"" + measures[c] + "\": '" + rec[c + 1] + "'");
            }
            if (!std::isfinite(v)) {
                throw Error(ErrorCode::NonFiniteCell, row_label + ", column \"" + measures[c] + "\"");
            }
            values(r, c) = v;
        }
    }
    return {std::move(ids), std::move(measures), std::move(values)};
}

CharacterisedObjectSet load_table_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open '" + path + "'");
    }
    return load_table(in);
}

std::string format_real(double value)
{
    char buf[32];
    const int n = std::snprintf(buf, sizeof buf, "%.17g", value);
    return std::string(buf, static_cast<std::size_t>(n));
}

std::string csv_escape(std::string_view field)
{
    const bool needs_quotes = field.find_first_of(",\"\r\n") != std::string_view::npos ||
                              (!field.empty() && (field.front() == ' ' || field.back() == ' '));
    if (!needs_quotes) {
        return std::string(field);
    }
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') {
            out += "\"\"";
        } else {
            out.push_back(c);
        }
    }
    out.push_back('"');
    return out;
}

void serialize(const CharacterisedObjectSet& set, std::ostream& out)
{
    out << "id";
    for (const auto& name : set.measure_names()) {
        out << ',' << csv_escape(name);
    }
    out << '\n';
    const Matrix& v = set.values();
    for (std::size_t r = 0; r < set.size(); ++r) {
        out << csv_escape(set.object_ids()[r]);
        for (std::size_t c = 0; c < set.dimension(); ++c) {
            out << ',' << format_real(v(r, c));
        }
        out << '\n';
    }
}

std::pair<CharacterisedObjectSet, NormalizationReport>
normalize(const CharacterisedObjectSet& set)
{
    const Matrix& in = set.values();
    const std::size_t n = in.rows();
    const std::size_t d = in.cols();
    Matrix out(n, d);
    NormalizationReport report;
    report.measure_names = set.measure_names();
    report.means.resize(d);
    report.stddevs.resize(d);

    for (std::size_t c = 0; c < d; ++c) {
        if (column_is_constant(in, c)) {
            report.means[c] = in(0, c);
            report.stddevs[c] = 0.0;
            report.constant_measures.push_back(set.measure_names()[c]);
            continue; // column stays all zero
        }
        const double mean = column_mean(in, c);
        double ss = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            const double dev = in(r, c) - mean;
            ss += dev * dev;
        }
        const double sd = std::sqrt(ss / static_cast<double>(n));
        report.means[c] = mean;
        report.stddevs[c] = sd;
        for (std::size_t r = 0; r < n; ++r) {
            out(r, c) = (in(r, c) - mean) / sd;
        }
    }
    return {CharacterisedObjectSet(set.object_ids(), set.measure_names(), std::move(out)),
            std::move(report)};
}

double abs_pearson(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size()) {
        throw Error(ErrorCode::DimensionMismatch, "correlated columns differ in length");
    }
    const std::size_t n = a.size();
    if (n == 0) {
        return 0.0;
    }
    double mean_a = 0.0;
    double mean_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_a += a[i];
        mean_b += b[i];
    }
    mean_a /= static_cast<double>(n);
    mean_b /= static_cast<double>(n);
    double sab = 0.0;
    double saa = 0.0;
    double sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a[i] - mean_a;
        const double db = b[i] - mean_b;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    const bool a_constant = std::all_of(a.begin(), a.end(), [&](double x) { return x == a[0]; });
    const bool b_constant = std::all_of(b.begin(), b.end(), [&](double x) { return x == b[0]; });
    if (a_constant || b_constant || saa == 0.0 || sbb == 0.0) {
        return 0.0;
    }
    double r = std::abs(sab) / (std::sqrt(saa) * std::sqrt(sbb));
    if (r > 1.0 - kUnitCorrelationSlack) {
        r = 1.0;
    }
    return r;
}

std::pair<CharacterisedObjectSet, FilterReport>
filter_measures(const CharacterisedObjectSet& set, double threshold)
{
    if (!(threshold > 0.0 && threshold <= 1.0)) {
        throw Error(ErrorCode::InvalidThreshold, "threshold must lie in (0, 1], got " + format_real(threshold));
    }
    const Matrix& values = set.values();
    std::vector<std::vector<double>> columns;
    columns.reserve(set.dimension());
    for (std::size_t c = 0; c < set.dimension(); ++c) {
        columns.push_back(values.column(c));
    }

    FilterReport report;
    report.threshold = threshold;
    std::vector<std::size_t> kept;
    for (std::size_t c = 0; c < set.dimension(); ++c) {
        double best = -1.0;
        std::size_t best_kept = 0;
        for (std::size_t k : kept) {
            const double r = abs_pearson(columns[k], columns[c]);
            if (r > best) {
                best = r;
                best_kept = k;
            }
        }
        if (best >= threshold) {
            report.dropped.push_back({set.measure_names()[c], set.measure_names()[best_kept], best});
        } else {
            kept.push_back(c);
            report.kept.push_back(set.measure_names()[c]);
        }
    }
    return {select_columns(set, kept), std::move(report)};
}

} // namespace repsample
