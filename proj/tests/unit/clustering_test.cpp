#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "repsample/clustering.hpp"
#include "repsample/error.hpp"

using namespace repsample;

namespace {

Matrix random_mixture_data(std::mt19937_64& gen, std::size_t n, std::size_t d, std::size_t groups)
{
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> center(-10, 10);
    std::uniform_real_distribution<double> spread(0.2, 3.0);
    Matrix centers(groups, d);
    Matrix spreads(groups, d);
    for (std::size_t g = 0; g < groups; ++g) {
        for (std::size_t c = 0; c < d; ++c) {
            centers(g, c) = center(gen);
            spreads(g, c) = spread(gen);
        }
    }
    Matrix x(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t g = gen() % groups;
        for (std::size_t c = 0; c < d; ++c) {
            x(i, c) = centers(g, c) + spreads(g, c) * normal(gen);
        }
    }
    return x;
}

void expect_fit_invariants(const FitResult& fit, std::size_t n)
{
    const auto& trace = fit.report.log_likelihood_trace;
    ASSERT_EQ(trace.size(), fit.report.iterations);
    ASSERT_GE(fit.report.iterations, 1u);
    EXPECT_EQ(fit.report.final_log_likelihood, trace.back());
    for (std::size_t t = 1; t < trace.size(); ++t) {
        EXPECT_GE(trace[t] - trace[t - 1], -1e-7) << "iteration " << t;
        EXPECT_TRUE(std::isfinite(trace[t]));
    }
    ASSERT_EQ(fit.responsibilities.objects(), n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = fit.responsibilities.row(i);
        double s = 0.0;
        for (double r : row) {
            EXPECT_GE(r, 0.0);
            EXPECT_LE(r, 1.0);
            s += r;
        }
        EXPECT_NEAR(s, 1.0, 1e-9);
    }
    const double w = std::accumulate(fit.model.weights.begin(), fit.model.weights.end(), 0.0);
    EXPECT_NEAR(w, 1.0, 1e-9);
    for (double v : fit.model.variances.data()) {
        EXPECT_GE(v, fit.model.variance_floor);
    }
    EXPECT_NO_THROW(fit.model.validate());
}

} // namespace

TEST(LogDensity, StandardNormalPeak)
{
    GaussianMixtureModel m{{1.0}, Matrix(1, 1, 0.0), Matrix(1, 1, 1.0)};
    EXPECT_NEAR(log_density(m, std::vector<double>{0.0}), -0.918938533204673, 1e-12);
}

TEST(LogDensity, IdenticalComponentsCollapse)
{
    GaussianMixtureModel one{{1.0}, Matrix(1, 2, std::vector<double>{0.3, -1.0}),
                             Matrix(1, 2, std::vector<double>{2.0, 0.5})};
    GaussianMixtureModel two{{0.5, 0.5}, Matrix(2, 2, std::vector<double>{0.3, -1.0, 0.3, -1.0}),
                             Matrix(2, 2, std::vector<double>{2.0, 0.5, 2.0, 0.5})};
    const std::vector<double> x{1.7, 0.2};
    EXPECT_NEAR(log_density(two, x), log_density(one, x), 1e-12);
}

TEST(LogDensity, TwoTermMixtureAgainstDirectSum)
{
    GaussianMixtureModel m{{0.5, 0.5}, Matrix(2, 1, std::vector<double>{0.0, 10.0}),
                           Matrix(2, 1, std::vector<double>{1.0, 1.0})};
    const double direct = std::log(0.5 * std::exp(oracle::log_normal_pdf(0, 0, 1)) +
                                   0.5 * std::exp(oracle::log_normal_pdf(0, 10, 1)));
    EXPECT_NEAR(log_density(m, std::vector<double>{0.0}), direct, 1e-12);
    EXPECT_THROW(log_density(m, std::vector<double>{0.0, 1.0}), Error);
}

TEST(LogDensity, StableFarFromEveryComponent)
{
    GaussianMixtureModel m{{0.5, 0.5}, Matrix(2, 1, std::vector<double>{0.0, 10.0}),
                           Matrix(2, 1, std::vector<double>{1e-6, 1e-6})};
    const double v = log_density(m, std::vector<double>{5.0});
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_NEAR(v, std::log(0.5) + oracle::log_normal_pdf(5, 0, 1e-6) + std::log(2.0), 1e-6);
}

TEST(EmFit, SingleComponentClosedForm)
{
    std::mt19937_64 gen(1);
    const Matrix x = random_mixture_data(gen, 40, 3, 2);
    const FitResult fit = em_fit(x, 1, 99);
    EXPECT_EQ(fit.model.weights, std::vector<double>{1.0});
    for (std::size_t c = 0; c < 3; ++c) {
        const auto col = x.column(c);
        const double mean = std::accumulate(col.begin(), col.end(), 0.0) / col.size();
        double ss = 0;
        for (double v : col) ss += (v - mean) * (v - mean);
        EXPECT_NEAR(fit.model.means(0, c), mean, 1e-12);
        EXPECT_NEAR(fit.model.variances(0, c), std::max(ss / col.size(), kDefaultVarianceFloor), 1e-10);
    }
    for (std::size_t i = 0; i < x.rows(); ++i) {
        EXPECT_EQ(fit.responsibilities(i, 0), 1.0);
    }
    EXPECT_TRUE(fit.report.converged);
    EXPECT_LE(fit.report.iterations, 2u);
    EXPECT_EQ(fit.report.seed, 99u);
}

TEST(EmFit, SeparatedGroupsGetConfidentPosteriors)
{
    const std::vector<double> offsets{-0.9, -0.4, 0.0, 0.5, 1.0};
    Matrix x(10, 1);
    for (std::size_t i = 0; i < 5; ++i) {
        x(i, 0) = -100 + offsets[i];
        x(i + 5, 0) = 100 - offsets[i];
    }
    for (Seed seed : {0ull, 1ull, 2ull, 77ull}) {
        const FitResult fit = em_fit(x, 2, seed);
        expect_fit_invariants(fit, 10);
        // Canonical order puts the negative group first.
        EXPECT_LT(fit.model.means(0, 0), 0.0);
        EXPECT_GT(fit.model.means(1, 0), 0.0);
        for (std::size_t i = 0; i < 10; ++i) {
            const std::size_t own = i < 5 ? 0 : 1;
            EXPECT_GT(fit.responsibilities(i, own), 0.999);
            // Posterior recomputed directly from the fitted parameters.
            double lp[2];
            for (std::size_t k = 0; k < 2; ++k) {
                lp[k] = std::log(fit.model.weights[k]) +
                        oracle::log_normal_pdf(x(i, 0), fit.model.means(k, 0), fit.model.variances(k, 0));
            }
            const double p_own = 1.0 / (1.0 + std::exp(lp[1 - own] - lp[own]));
            EXPECT_NEAR(fit.responsibilities(i, own), p_own, 1e-12);
        }
    }
}

TEST(EmFit, IdenticalPointsClampToFloor)
{
    Matrix x(8, 2);
    for (std::size_t i = 0; i < 8; ++i) {
        x(i, 0) = 3.5;
        x(i, 1) = -1.0;
    }
    const FitResult fit = em_fit(x, 2, 4);
    expect_fit_invariants(fit, 8);
    for (double v : fit.model.variances.data()) {
        EXPECT_EQ(v, kDefaultVarianceFloor);
    }
    for (double r : fit.responsibilities.values().data()) {
        EXPECT_FALSE(std::isnan(r));
    }
}

TEST(EmFit, InvariantsOnRandomInstances)
{
    std::mt19937_64 gen(2024);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 5 + gen() % 200;
        const std::size_t d = 1 + gen() % 11;
        const std::size_t k = 1 + gen() % std::min<std::size_t>(6, n);
        Matrix x = random_mixture_data(gen, n, d, 1 + gen() % 4);
        if (trial % 5 == 0) {
            // Heavy duplication exercises the floor and the empty-component path.
            for (std::size_t i = 0; i < n; ++i) {
                std::copy_n(x.row(i % 3).begin(), d, x.row(i).begin());
            }
        }
        const FitResult fit = em_fit(x, k, gen(), {100, 1e-8});
        expect_fit_invariants(fit, n);
    }
}

TEST(EmFit, Deterministic)
{
    std::mt19937_64 gen(8);
    const Matrix x = random_mixture_data(gen, 120, 4, 3);
    const FitResult a = em_fit(x, 3, 12345);
    const FitResult b = em_fit(x, 3, 12345);
    EXPECT_EQ(a.model, b.model);
    EXPECT_EQ(a.responsibilities, b.responsibilities);
    EXPECT_EQ(a.report, b.report);
}

TEST(EmFit, PermutationEquivariant)
{
    std::mt19937_64 gen(9);
    for (int trial = 0; trial < 5; ++trial) {
        const Matrix x = random_mixture_data(gen, 60 + trial * 10, 3, 3);
        std::vector<std::size_t> perm(x.rows());
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), gen);
        Matrix shuffled(x.rows(), x.cols());
        for (std::size_t i = 0; i < x.rows(); ++i) {
            std::copy_n(x.row(perm[i]).begin(), x.cols(), shuffled.row(i).begin());
        }
        const FitResult a = em_fit(x, 3, 5);
        const FitResult b = em_fit(shuffled, 3, 5);
        EXPECT_EQ(a.model, b.model);
        EXPECT_EQ(a.report, b.report);
        for (std::size_t i = 0; i < x.rows(); ++i) {
            for (std::size_t k = 0; k < 3; ++k) {
                EXPECT_EQ(b.responsibilities(i, k), a.responsibilities(perm[i], k));
            }
        }
    }
}

TEST(EmFit, ComponentsAreCanonicallyOrdered)
{
    std::mt19937_64 gen(10);
    const Matrix x = random_mixture_data(gen, 150, 2, 4);
    const FitResult fit = em_fit(x, 4, 3);
    for (std::size_t k = 1; k < 4; ++k) {
        const auto prev = fit.model.means.row(k - 1);
        const auto cur = fit.model.means.row(k);
        EXPECT_FALSE(std::lexicographical_compare(cur.begin(), cur.end(), prev.begin(), prev.end()));
    }
}

TEST(EmFit, Errors)
{
    const Matrix x(3, 2, 1.0);
    auto code_of = [](auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::Io;
    };
    EXPECT_EQ(code_of([&] { em_fit(x, 4, 0); }), ErrorCode::KTooLarge);
    EXPECT_EQ(code_of([&] { em_fit(Matrix(0, 2), 1, 0); }), ErrorCode::EmptySet);
    EXPECT_EQ(code_of([&] { em_fit(x, 0, 0); }), ErrorCode::InvalidArguments);
    EXPECT_EQ(code_of([&] { em_fit(x, 1, 0, {0, 1e-6}); }), ErrorCode::InvalidArguments);
    EXPECT_EQ(code_of([&] { em_fit(x, 1, 0, {10, 0.0}); }), ErrorCode::InvalidArguments);
    EXPECT_EQ(code_of([&] { select_k(x, 2, 1, 0, 1); }), ErrorCode::InvalidArguments);
    EXPECT_EQ(code_of([&] { select_k(x, 1, 4, 0, 1); }), ErrorCode::KTooLarge);
}

TEST(SelectK, RecoversThreeSeparatedBlobs)
{
    std::mt19937_64 gen(31);
    std::normal_distribution<double> normal;
    const double centers[3][2] = {{0, 0}, {20, 0}, {10, 20}};
    Matrix x(150, 2);
    for (std::size_t i = 0; i < 150; ++i) {
        for (std::size_t c = 0; c < 2; ++c) {
            x(i, c) = centers[i / 50][c] + normal(gen);
        }
    }
    const KSelection sel = select_k(x, 1, 6, 7, 5);
    ASSERT_EQ(sel.bic_table.size(), 6u);
    EXPECT_EQ(sel.best_k, 3u);
    const auto best = std::min_element(sel.bic_table.begin(), sel.bic_table.end(),
                                       [](const BicEntry& a, const BicEntry& b) { return a.bic < b.bic; });
    EXPECT_EQ(best->k, 3u);
    // Centroid oracle: each true center has a fitted mean within 1 unit.
    for (const auto& center : centers) {
        double nearest = 1e9;
        for (std::size_t k = 0; k < 3; ++k) {
            nearest = std::min(nearest, std::hypot(sel.fit.model.means(k, 0) - center[0],
                                                   sel.fit.model.means(k, 1) - center[1]));
        }
        EXPECT_LT(nearest, 1.0);
    }
    for (const auto& e : sel.bic_table) {
        EXPECT_EQ(e.free_parameters, (e.k - 1) + 4 * e.k);
        EXPECT_NEAR(e.bic, -2 * e.log_likelihood + e.free_parameters * std::log(150.0), 1e-9);
    }
}

TEST(SelectK, IdenticalPointsPreferOneComponent)
{
    const Matrix x(20, 3, 0.25);
    const KSelection sel = select_k(x, 1, 3, 0, 3);
    EXPECT_EQ(sel.best_k, 1u);
    EXPECT_EQ(sel.fit.model.components(), 1u);
}

TEST(SelectK, DegenerateRangeReturnsThatK)
{
    std::mt19937_64 gen(12);
    const Matrix x = random_mixture_data(gen, 50, 2, 2);
    const KSelection sel = select_k(x, 4, 4, 1, 1);
    EXPECT_EQ(sel.best_k, 4u);
    ASSERT_EQ(sel.bic_table.size(), 1u);
    EXPECT_EQ(sel.fit.model.components(), 4u);
    // A single restart is exactly the em_fit with the derived seed.
    const FitResult direct = em_fit(x, 4, derive_seed(1, {4, 0}));
    EXPECT_EQ(direct.model, sel.fit.model);
}

TEST(SelectK, KeepsBestRestart)
{
    std::mt19937_64 gen(13);
    const Matrix x = random_mixture_data(gen, 80, 2, 5);
    const KSelection sel = select_k(x, 3, 3, 21, 6);
    for (std::size_t r = 0; r < 6; ++r) {
        const FitResult f = em_fit(x, 3, derive_seed(21, {3, r}));
        EXPECT_LE(f.report.final_log_likelihood, sel.fit.report.final_log_likelihood);
    }
}

TEST(EmRefine, RecoversStarvedComponent)
{
    // Two groups; the third component starts far away with negligible weight,
    // so its total responsibility is effectively zero.
    Matrix x(21, 1);
    for (std::size_t i = 0; i < 10; ++i) {
        x(i, 0) = -5.0 + 0.1 * static_cast<double>(i);
        x(i + 10, 0) = 5.0 + 0.1 * static_cast<double>(i);
    }
    x(20, 0) = 40.0; // worst-explained point under the initial model
    GaussianMixtureModel init;
    init.weights = {0.5 - 5e-16, 0.5 - 5e-16, 1e-15};
    init.means = Matrix(3, 1, std::vector<double>{-4.5, 5.5, 1e6});
    init.variances = Matrix(3, 1, std::vector<double>{1.0, 1.0, 1e-6});
    init.seed = 5;

    const FitResult fit = em_refine(x, init, {200, 1e-9});
    expect_fit_invariants(fit, 21);
    EXPECT_EQ(fit.report.seed, 5u);
    // The revived component ends up owning the outlier.
    EXPECT_NEAR(fit.model.means(2, 0), 40.0, 1e-6);
    EXPECT_GT(fit.responsibilities(20, 2), 0.999);
    EXPECT_NEAR(fit.model.weights[2], 1.0 / 21.0, 1e-6);
}

TEST(EmRefine, RejectsMismatchedModels)
{
    const Matrix x(5, 2, 1.0);
    GaussianMixtureModel one_dim{{1.0}, Matrix(1, 1, 0.0), Matrix(1, 1, 1.0)};
    EXPECT_THROW(em_refine(x, one_dim), Error);
    GaussianMixtureModel bad_weights{{0.7}, Matrix(1, 2, 0.0), Matrix(1, 2, 1.0)};
    EXPECT_THROW(em_refine(x, bad_weights), Error);
}
