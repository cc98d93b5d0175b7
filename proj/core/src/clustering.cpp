#include "repsample/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "repsample/error.hpp"

namespace repsample {

namespace {

constexpr double kEmptyComponentFraction = 1e-10;
constexpr double kRecoveredMinWeight = 1e-12;
const double kLogTwoPi = std::log(2.0 * std::numbers::pi);

void check_fit_arguments(const Matrix& data, std::size_t k, const EmOptions& options)
{
    if (data.rows() == 0 || data.cols() == 0) {
        throw Error(ErrorCode::EmptySet, "cannot fit a mixture to an empty set");
    }
    if (k == 0) {
        throw Error(ErrorCode::InvalidArguments, "component count must be >= 1");
    }
    if (k > data.rows()) {
        throw Error(ErrorCode::KTooLarge, "k = " + std::to_string(k) + " exceeds N = " +
                                              std::to_string(data.rows()));
    }
    if (options.max_iter == 0) {
        throw Error(ErrorCode::InvalidArguments, "max_iter must be >= 1");
    }
    if (!(options.tol > 0.0)) {
        throw Error(ErrorCode::InvalidArguments, "tol must be > 0");
    }
    if (!(options.variance_floor > 0.0)) {
        throw Error(ErrorCode::InvalidArguments, "variance floor must be > 0");
    }
    for (double v : data.data()) {
        if (!std::isfinite(v)) {
            throw Error(ErrorCode::NonFiniteCell, "data contains a non-finite value");
        }
    }
}

// Row indices sorted by row values; all reductions over rows follow it.
std::vector<std::size_t> canonical_row_order(const Matrix& data)
{
    std::vector<std::size_t> order(data.rows());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto ra = data.row(a);
        const auto rb = data.row(b);
        return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
    });
    return order;
}

std::vector<double> column_variances(const Matrix& data, const std::vector<std::size_t>& order,
                                     double floor)
{
    const std::size_t d = data.cols();
    const double n = static_cast<double>(data.rows());
    std::vector<double> mean(d, 0.0);
    std::vector<double> var(d, 0.0);
    for (std::size_t i : order) {
        for (std::size_t c = 0; c < d; ++c) {
            mean[c] += data(i, c);
        }
    }
    for (double& m : mean) {
        m /= n;
    }
    for (std::size_t i : order) {
        for (std::size_t c = 0; c < d; ++c) {
            const double dev = data(i, c) - mean[c];
            var[c] += dev * dev;
        }
    }
    for (double& v : var) {
        v = std::max(v / n, floor);
    }
    return var;
}

double squared_distance(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        s += diff * diff;
    }
    return s;
}

// k-means++ seeding over the canonical row order.
Matrix seed_means(const Matrix& data, const std::vector<std::size_t>& order, std::size_t k, Rng& rng)
{
    const std::size_t n = data.rows();
    const std::size_t d = data.cols();
    Matrix means(k, d);
    std::vector<double> nearest(n, std::numeric_limits<double>::infinity());

    auto take = [&](std::size_t component, std::size_t row) {
        std::copy_n(data.row(row).begin(), d, means.row(component).begin());
        for (std::size_t i : order) {
            nearest[i] = std::min(nearest[i], squared_distance(data.row(i), data.row(row)));
        }
    };

    take(0, order[rng.below(n)]);
    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t i : order) {
            total += nearest[i];
        }
        if (!(total > 0.0)) {
            take(c, order[rng.below(n)]);
            continue;
        }
        const double target = rng.uniform() * total;
        double cumulative = 0.0;
        std::size_t chosen = n;
        for (std::size_t i : order) {
            if (nearest[i] <= 0.0) {
                continue;
            }
            chosen = i;
            cumulative += nearest[i];
            if (cumulative > target) {
                break;
            }
        }
        take(c, chosen);
    }
    return means;
}

struct EStep {
    Matrix responsibilities;
    std::vector<double> point_log_density;
    double log_likelihood = 0.0;
};

// Per-component constant: ln pi_k - 0.5 * sum_d ln(2 pi sigma2_kd).
std::vector<double> component_log_norms(const GaussianMixtureModel& model)
{
    const std::size_t k = model.components();
    const std::size_t d = model.dimension();
    std::vector<double> out(k);
    for (std::size_t j = 0; j < k; ++j) {
        double s = std::log(model.weights[j]);
        for (std::size_t c = 0; c < d; ++c) {
            s -= 0.5 * (kLogTwoPi + std::log(model.variances(j, c)));
        }
        out[j] = s;
    }
    return out;
}

void component_log_terms(const GaussianMixtureModel& model, const std::vector<double>& log_norms,
                         std::span<const double> x, std::span<double> out)
{
    const std::size_t d = model.dimension();
    for (std::size_t j = 0; j < model.components(); ++j) {
        double q = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            const double diff = x[c] - model.means(j, c);
            q += diff * diff / model.variances(j, c);
        }
        out[j] = log_norms[j] - 0.5 * q;
    }
}

double log_sum_exp(std::span<const double> terms)
{
    const double top = *std::max_element(terms.begin(), terms.end());
    if (!std::isfinite(top)) {
        return top;
    }
    double s = 0.0;
    for (double t : terms) {
        s += std::exp(t - top);
    }
    return top + std::log(s);
}

EStep expectation(const Matrix& data, const std::vector<std::size_t>& order,
                  const GaussianMixtureModel& model)
{
    const std::size_t n = data.rows();
    const std::size_t k = model.components();
    EStep out{Matrix(n, k), std::vector<double>(n), 0.0};
    const auto log_norms = component_log_norms(model);
    std::vector<double> terms(k);

    for (std::size_t i = 0; i < n; ++i) {
        component_log_terms(model, log_norms, data.row(i), terms);
        const double lse = log_sum_exp(terms);
        out.point_log_density[i] = lse;
        auto r = out.responsibilities.row(i);
        double total = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            r[j] = std::exp(terms[j] - lse);
            total += r[j];
        }
        for (std::size_t j = 0; j < k; ++j) {
            r[j] /= total;
        }
    }
    for (std::size_t i : order) {
        out.log_likelihood += out.point_log_density[i];
    }
    return out;
}

// Returns true when a component had to be recovered.
bool maximization(const Matrix& data, const std::vector<std::size_t>& order, const EStep& e,
                  const std::vector<double>& data_variances, GaussianMixtureModel& model)
{
    const std::size_t n = data.rows();
    const std::size_t d = data.cols();
    const std::size_t k = model.components();
    const double floor = model.variance_floor;
    bool recovered = false;

    for (std::size_t j = 0; j < k; ++j) {
        double mass = 0.0;
        for (std::size_t i : order) {
            mass += e.responsibilities(i, j);
        }
        if (mass < kEmptyComponentFraction * static_cast<double>(n)) {
            std::size_t worst = order.front();
            for (std::size_t i : order) {
                if (e.point_log_density[i] < e.point_log_density[worst]) {
                    worst = i;
                }
            }
            std::copy_n(data.row(worst).begin(), d, model.means.row(j).begin());
            std::copy(data_variances.begin(), data_variances.end(), model.variances.row(j).begin());
            model.weights[j] = std::max(mass / static_cast<double>(n), kRecoveredMinWeight);
            recovered = true;
            continue;
        }

        model.weights[j] = mass / static_cast<double>(n);
        auto mean = model.means.row(j);
        std::fill(mean.begin(), mean.end(), 0.0);
        for (std::size_t i : order) {
            const double r = e.responsibilities(i, j);
            for (std::size_t c = 0; c < d; ++c) {
                mean[c] += r * data(i, c);
            }
        }
        for (double& m : mean) {
            m /= mass;
        }
        auto var = model.variances.row(j);
        std::fill(var.begin(), var.end(), 0.0);
        for (std::size_t i : order) {
            const double r = e.responsibilities(i, j);
            for (std::size_t c = 0; c < d; ++c) {
                const double diff = data(i, c) - mean[c];
                var[c] += r * diff * diff;
            }
        }
        for (double& v : var) {
            v = std::max(v / mass, floor);
        }
    }

    const double total = std::accumulate(model.weights.begin(), model.weights.end(), 0.0);
    for (double& w : model.weights) {
        w /= total;
    }
    return recovered;
}

// Sorts components by (means, variances, weight) and permutes the
// responsibility columns to match.
void canonicalize(GaussianMixtureModel& model, Matrix& responsibilities)
{
    const std::size_t k = model.components();
    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
        const auto ma = model.means.row(a);
        const auto mb = model.means.row(b);
        if (!std::equal(ma.begin(), ma.end(), mb.begin())) {
            return std::lexicographical_compare(ma.begin(), ma.end(), mb.begin(), mb.end());
        }
        const auto va = model.variances.row(a);
        const auto vb = model.variances.row(b);
        if (!std::equal(va.begin(), va.end(), vb.begin())) {
            return std::lexicographical_compare(va.begin(), va.end(), vb.begin(), vb.end());
        }
        return model.weights[a] < model.weights[b];
    });

    GaussianMixtureModel sorted = model;
    Matrix resp(responsibilities.rows(), k);
    for (std::size_t j = 0; j < k; ++j) {
        const std::size_t from = perm[j];
        sorted.weights[j] = model.weights[from];
        std::copy_n(model.means.row(from).begin(), model.dimension(), sorted.means.row(j).begin());
        std::copy_n(model.variances.row(from).begin(), model.dimension(),
                    sorted.variances.row(j).begin());
        for (std::size_t i = 0; i < resp.rows(); ++i) {
            resp(i, j) = responsibilities(i, from);
        }
    }
    model = std::move(sorted);
    responsibilities = std::move(resp);
}

} // namespace

void GaussianMixtureModel::validate() const
{
    const std::size_t k = weights.size();
    if (k == 0) {
        throw Error(ErrorCode::InvalidModel, "model has no components");
    }
    if (means.rows() != k || variances.rows() != k || means.cols() != variances.cols() ||
        means.cols() == 0) {
        throw Error(ErrorCode::InvalidModel, "weights, means and variances disagree in shape");
    }
    if (!(variance_floor > 0.0)) {
        throw Error(ErrorCode::InvalidModel, "variance_floor must be > 0");
    }
    double total = 0.0;
    for (double w : weights) {
        if (!(w > 0.0 && w <= 1.0)) {
            throw Error(ErrorCode::InvalidModel, "weight outside (0, 1]");
        }
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw Error(ErrorCode::InvalidModel, "weights do not sum to 1");
    }
    for (double m : means.data()) {
        if (!std::isfinite(m)) {
            throw Error(ErrorCode::InvalidModel, "non-finite mean");
        }
    }
    for (double v : variances.data()) {
        if (!std::isfinite(v) || v < variance_floor) {
            throw Error(ErrorCode::InvalidModel, "variance below floor or non-finite");
        }
    }
}

FitResult em_fit(const Matrix& data, std::size_t k, Seed seed, const EmOptions& options)
{
    check_fit_arguments(data, k, options);
    const auto order = canonical_row_order(data);
    const auto data_variances = column_variances(data, order, options.variance_floor);

    Rng rng(seed);
    GaussianMixtureModel model;
    model.weights.assign(k, 1.0 / static_cast<double>(k));
    model.means = seed_means(data, order, k, rng);
    model.variances = Matrix(k, data.cols());
    for (std::size_t j = 0; j < k; ++j) {
        std::copy(data_variances.begin(), data_variances.end(), model.variances.row(j).begin());
    }
    model.variance_floor = options.variance_floor;
    model.seed = seed;
    return em_refine(data, std::move(model), options);
}

FitResult em_refine(const Matrix& data, GaussianMixtureModel model, const EmOptions& options)
{
    model.validate();
    check_fit_arguments(data, model.components(), options);
    if (model.dimension() != data.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "model and data disagree in dimension");
    }
    const auto order = canonical_row_order(data);
    const auto data_variances = column_variances(data, order, model.variance_floor);

    FitReport report;
    report.seed = model.seed;
    EStep e = expectation(data, order, model);
    double previous = e.log_likelihood;
    for (std::size_t it = 1; it <= options.max_iter; ++it) {
        const bool recovered = maximization(data, order, e, data_variances, model);
        e = expectation(data, order, model);
        report.log_likelihood_trace.push_back(e.log_likelihood);
        report.iterations = it;
        if (!recovered && e.log_likelihood - previous < options.tol) {
            report.converged = true;
            break;
        }
        previous = e.log_likelihood;
    }
    report.final_log_likelihood = report.log_likelihood_trace.back();

    Matrix responsibilities = std::move(e.responsibilities);
    canonicalize(model, responsibilities);
    return {std::move(model), ResponsibilityMatrix(std::move(responsibilities)), std::move(report)};
}

FitResult em_fit(const CharacterisedObjectSet& set, std::size_t k, Seed seed, const EmOptions& options)
{
    return em_fit(set.values(), k, seed, options);
}

std::size_t free_parameters(std::size_t k, std::size_t dimension) noexcept
{
    return (k - 1) + 2 * k * dimension;
}

KSelection select_k(const Matrix& data, std::size_t k_min, std::size_t k_max, Seed seed,
                    std::size_t restarts, const EmOptions& options)
{
    if (k_min == 0 || k_min > k_max) {
        throw Error(ErrorCode::InvalidArguments, "need 1 <= k_min <= k_max");
    }
    if (restarts == 0) {
        throw Error(ErrorCode::InvalidArguments, "restarts must be >= 1");
    }
    check_fit_arguments(data, k_max, options);

    const double log_n = std::log(static_cast<double>(data.rows()));
    KSelection selection;
    double best_bic = std::numeric_limits<double>::infinity();
    for (std::size_t k = k_min; k <= k_max; ++k) {
        FitResult best = em_fit(data, k, derive_seed(seed, {k, 0}), options);
        for (std::size_t r = 1; r < restarts; ++r) {
            FitResult candidate = em_fit(data, k, derive_seed(seed, {k, r}), options);
            if (candidate.report.final_log_likelihood > best.report.final_log_likelihood) {
                best = std::move(candidate);
            }
        }
        BicEntry entry;
        entry.k = k;
        entry.log_likelihood = best.report.final_log_likelihood;
        entry.free_parameters = free_parameters(k, data.cols());
        entry.bic = -2.0 * entry.log_likelihood + static_cast<double>(entry.free_parameters) * log_n;
        entry.iterations = best.report.iterations;
        entry.converged = best.report.converged;
        selection.bic_table.push_back(entry);
        if (entry.bic < best_bic) {
            best_bic = entry.bic;
            selection.best_k = k;
            selection.fit = std::move(best);
        }
    }
    return selection;
}

KSelection select_k(const CharacterisedObjectSet& set, std::size_t k_min, std::size_t k_max,
                    Seed seed, std::size_t restarts, const EmOptions& options)
{
    return select_k(set.values(), k_min, k_max, seed, restarts, options);
}

double log_density(const GaussianMixtureModel& model, std::span<const double> x)
{
    if (x.size() != model.dimension()) {
        throw Error(ErrorCode::DimensionMismatch, "point has " + std::to_string(x.size()) +
                                                      " coordinates, model has " +
                                                      std::to_string(model.dimension()));
    }
    std::vector<double> terms(model.components());
    component_log_terms(model, component_log_norms(model), x, terms);
    return log_sum_exp(terms);
}

} // namespace repsample
