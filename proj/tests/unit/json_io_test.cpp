#include <gtest/gtest.h>

#include <random>

#include "repsample/error.hpp"
#include "repsample/json_io.hpp"

using namespace repsample;

TEST(DumpJson, RealsUseSeventeenDigits)
{
    const Json doc{{"x", 0.1}, {"n", 3}, {"s", "a\"b"}, {"v", std::vector<double>{1.0 / 3.0}}};
    const std::string text = dump_json(doc, -1);
    EXPECT_EQ(text, R"({"n":3,"s":"a\"b","v":[0.33333333333333331],"x":0.10000000000000001})");
    EXPECT_EQ(Json::parse(text)["x"].get<double>(), 0.1);
}

TEST(ModelJson, RoundTripsExactly)
{
    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> u(-5, 5);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t k = 1 + gen() % 4;
        const std::size_t d = 1 + gen() % 5;
        GaussianMixtureModel m;
        double total = 0;
        for (std::size_t j = 0; j < k; ++j) {
            m.weights.push_back(0.1 + std::abs(u(gen)));
            total += m.weights.back();
        }
        for (double& w : m.weights) w /= total;
        m.means = Matrix(k, d);
        m.variances = Matrix(k, d);
        for (std::size_t j = 0; j < k; ++j) {
            for (std::size_t c = 0; c < d; ++c) {
                m.means(j, c) = u(gen);
                m.variances(j, c) = 1e-6 + std::abs(u(gen));
            }
        }
        m.seed = gen();
        const auto back = model_from_json(Json::parse(dump_json(model_to_json(m))));
        EXPECT_EQ(back, m);
    }
}

TEST(ModelJson, RejectsInvalidModels)
{
    const Json good = Json::parse(R"({"K":1,"weights":[1.0],"means":[[0.0]],"variances":[[1.0]],"variance_floor":1e-6,"seed":0})");
    EXPECT_NO_THROW(model_from_json(good));
    auto broken = [&](auto&& edit) {
        Json j = good;
        edit(j);
        try {
            model_from_json(j);
        } catch (const Error& e) {
            return e.code() == ErrorCode::InvalidModel;
        }
        return false;
    };
    EXPECT_TRUE(broken([](Json& j) { j.erase("means"); }));
    EXPECT_TRUE(broken([](Json& j) { j["weights"] = {0.5}; }));
    EXPECT_TRUE(broken([](Json& j) { j["variances"] = {{1e-9}}; }));
    EXPECT_TRUE(broken([](Json& j) { j["K"] = 2; }));
    EXPECT_TRUE(broken([](Json& j) { j["seed"] = -1; }));
}

TEST(PopulationSpecJson, ParsesAndNamesBadFields)
{
    const auto spec = population_spec_from_json(Json::parse(
        R"({"dimension":2,"seed":4,"clusters":[{"count":3,"mean":[0,1],"stddev":[1,2]}]})"));
    EXPECT_EQ(spec.dimension, 2u);
    EXPECT_EQ(spec.seed, 4u);
    ASSERT_EQ(spec.clusters.size(), 1u);
    EXPECT_EQ(spec.clusters[0].stddev, (std::vector<double>{1, 2}));

    try {
        population_spec_from_json(Json::parse(R"({"dimension":2,"clusters":[{"count":3,"mean":[0,1]}]})"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidPopulationSpec);
        EXPECT_NE(std::string(e.what()).find("clusters[0].stddev"), std::string::npos) << e.what();
    }
    try {
        population_spec_from_json(Json::parse(R"({"dimension":-2,"clusters":[]})"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("dimension"), std::string::npos) << e.what();
    }
}
