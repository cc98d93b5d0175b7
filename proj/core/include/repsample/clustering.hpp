#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "repsample/feature_table.hpp"
#include "repsample/matrix.hpp"
#include "repsample/random.hpp"

namespace repsample {

inline constexpr double kDefaultVarianceFloor = 1e-6;

/// Mixture of axis-aligned Gaussians. `means` and `variances` are K x D.
struct GaussianMixtureModel {
    std::vector<double> weights;
    Matrix means;
    Matrix variances;
    double variance_floor = kDefaultVarianceFloor;
    Seed seed = 0;

    std::size_t components() const noexcept { return weights.size(); }
    std::size_t dimension() const noexcept { return means.cols(); }

    /// Throws InvalidModel unless shapes agree, weights are in (0, 1] and sum
    /// to 1 within 1e-9, and every variance is >= variance_floor > 0.
    void validate() const;

    friend bool operator==(const GaussianMixtureModel&, const GaussianMixtureModel&) = default;
};

/// N x K posterior membership probabilities; each row sums to 1.
class ResponsibilityMatrix {
public:
    ResponsibilityMatrix() = default;
    explicit ResponsibilityMatrix(Matrix values) : values_(std::move(values)) {}

    std::size_t objects() const noexcept { return values_.rows(); }
    std::size_t components() const noexcept { return values_.cols(); }
    double operator()(std::size_t n, std::size_t k) const noexcept { return values_(n, k); }
    std::span<const double> row(std::size_t n) const noexcept { return values_.row(n); }
    const Matrix& values() const noexcept { return values_; }

    friend bool operator==(const ResponsibilityMatrix&, const ResponsibilityMatrix&) = default;

private:
    Matrix values_;
};

struct FitReport {
    std::size_t iterations = 0;
    double final_log_likelihood = 0.0;
    std::vector<double> log_likelihood_trace;
    bool converged = false;
    Seed seed = 0;

    friend bool operator==(const FitReport&, const FitReport&) = default;
};

struct EmOptions {
    std::size_t max_iter = 200;
    double tol = 1e-6;
    double variance_floor = kDefaultVarianceFloor;
};

struct FitResult {
    GaussianMixtureModel model;
    ResponsibilityMatrix responsibilities;
    FitReport report;
};

/// Fits a K-component diagonal Gaussian mixture by EM.
///
/// Means are seeded k-means++ style from the data, weights start uniform and
/// variances start at the column variances. Each iteration is an M-step
/// followed by an E-step; the log-likelihood after every E-step is appended
/// to the trace and the fit stops once it improves by less than `tol`.
/// Components whose total responsibility drops below 1e-10 * N are moved to
/// the worst-explained point. Components are returned sorted by mean
/// (lexicographically), with responsibility columns permuted to match.
///
/// Row sums are accumulated in a value-sorted order, so permuting the input
/// rows permutes the responsibilities and leaves the model bit-identical.
FitResult em_fit(const Matrix& data, std::size_t k, Seed seed, const EmOptions& options = {});
FitResult em_fit(const CharacterisedObjectSet& set, std::size_t k, Seed seed,
                 const EmOptions& options = {});

/// Runs the same EM loop as em_fit starting from `initial` instead of the
/// seeded initialization; the model's variance_floor and seed are kept.
FitResult em_refine(const Matrix& data, GaussianMixtureModel initial, const EmOptions& options = {});

struct BicEntry {
    std::size_t k = 0;
    double log_likelihood = 0.0;
    std::size_t free_parameters = 0;
    double bic = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

struct KSelection {
    std::size_t best_k = 0;
    FitResult fit;
    std::vector<BicEntry> bic_table;
};

/// Number of free parameters of a K-component diagonal mixture in D dims.
std::size_t free_parameters(std::size_t k, std::size_t dimension) noexcept;

/// For each k in [k_min, k_max], keeps the best of `restarts` EM fits (by
/// log-likelihood) and scores it with BIC = -2 logL + p ln N. Returns the k
/// with the lowest BIC; ties go to the smaller k.
KSelection select_k(const Matrix& data, std::size_t k_min, std::size_t k_max, Seed seed,
                    std::size_t restarts, const EmOptions& options = {});
KSelection select_k(const CharacterisedObjectSet& set, std::size_t k_min, std::size_t k_max,
                    Seed seed, std::size_t restarts, const EmOptions& options = {});

/// ln sum_k pi_k prod_d Normal(x_d; mu_kd, sigma2_kd), via log-sum-exp.
double log_density(const GaussianMixtureModel& model, std::span<const double> x);

} // namespace repsample
