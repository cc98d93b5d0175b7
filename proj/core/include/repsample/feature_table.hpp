#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "repsample/matrix.hpp"

namespace repsample {

/// N objects described by D numeric measures.
///
/// Construction validates every invariant (N >= 1, D >= 1, distinct ids,
/// distinct non-empty measure names, finite cells), so any instance that
/// exists is valid. Instances are immutable.
class CharacterisedObjectSet {
public:
    CharacterisedObjectSet(std::vector<std::string> object_ids,
                           std::vector<std::string> measure_names,
                           Matrix values);

    std::size_t size() const noexcept { return object_ids_.size(); }
    std::size_t dimension() const noexcept { return measure_names_.size(); }

    const std::vector<std::string>& object_ids() const noexcept { return object_ids_; }
    const std::vector<std::string>& measure_names() const noexcept { return measure_names_; }
    const Matrix& values() const noexcept { return values_; }

    friend bool operator==(const CharacterisedObjectSet&, const CharacterisedObjectSet&) = default;

private:
    std::vector<std::string> object_ids_;
    std::vector<std::string> measure_names_;
    Matrix values_;
};

struct NormalizationReport {
    std::vector<std::string> measure_names;
    std::vector<double> means;
    std::vector<double> stddevs; // population (divide by N)
    std::vector<std::string> constant_measures;
};

struct DroppedMeasure {
    std::string name;
    std::string duplicate_of;
    double abs_correlation = 0.0;

    friend bool operator==(const DroppedMeasure&, const DroppedMeasure&) = default;
};

struct FilterReport {
    double threshold = 1.0;
    std::vector<std::string> kept;
    std::vector<DroppedMeasure> dropped;
};

/// Parses the CSV table format: header `id,<measure>...`, one object per row.
/// Row numbers in diagnostics count data rows from 1.
CharacterisedObjectSet load_table(std::istream& in);
CharacterisedObjectSet load_table_file(const std::string& path);

/// Writes the same CSV format with reals at 17 significant digits, so that
/// load_table(serialize(set)) == set.
void serialize(const CharacterisedObjectSet& set, std::ostream& out);

/// Z-scores each measure with the population standard deviation. Measures
/// whose values are all equal become all-zero columns.
std::pair<CharacterisedObjectSet, NormalizationReport>
normalize(const CharacterisedObjectSet& set);

/// Absolute Pearson correlation of two equal-length columns; 0 when either
/// column is constant. Values within 1e-12 of 1 are reported as exactly 1.
double abs_pearson(std::span<const double> a, std::span<const double> b);

/// Greedy redundancy filter: scanning measures in input order, a measure is
/// dropped when its |r| with an already kept measure reaches `threshold`.
/// The first measure is always kept. threshold must lie in (0, 1].
std::pair<CharacterisedObjectSet, FilterReport>
filter_measures(const CharacterisedObjectSet& set, double threshold);

/// Formats a real with 17 significant digits, enough to round-trip any double.
std::string format_real(double value);

/// CSV field quoting for ids that contain separators or quotes.
std::string csv_escape(std::string_view field);

} // namespace repsample
