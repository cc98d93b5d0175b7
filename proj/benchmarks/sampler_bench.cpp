#include <benchmark/benchmark.h>

#include <numeric>
#include <sstream>

#include "repsample/eval_harness.hpp"
#include "repsample/sampler.hpp"

using namespace repsample;

static void allocate_and_rebalance(benchmark::State& state)
{
    std::vector<std::size_t> sizes(static_cast<std::size_t>(state.range(0)));
    std::iota(sizes.begin(), sizes.end(), std::size_t{1});
    const std::size_t total = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
    const std::size_t target = std::max(sizes.size(), total / 7);
    for (auto _ : state) {
        auto q = rebalance(allocate(target, sizes), sizes, target);
        benchmark::DoNotOptimize(q.data());
    }
}
BENCHMARK(allocate_and_rebalance)->Arg(8)->Arg(64)->Arg(512);

static void pipeline_280_to_50(benchmark::State& state)
{
    const SyntheticPopulationSpec spec{
        2, 4, {{200, {0.0, 0.0}, {1.0, 1.0}}, {70, {25.0, 0.0}, {1.0, 1.0}}, {10, {12.0, 25.0}, {1.0, 1.0}}}};
    const auto pop = generate_population(spec);
    PipelineOptions opt;
    opt.k_range = {1, 6};
    for (auto _ : state) {
        auto res = sample_pipeline(pop.set, 50, opt);
        benchmark::DoNotOptimize(res.sample.entries.data());
    }
}
BENCHMARK(pipeline_280_to_50)->Unit(benchmark::kMillisecond);

static void load_table_csv(benchmark::State& state)
{
    std::vector<ClusterSpec> clusters{{static_cast<std::size_t>(state.range(0)), std::vector<double>(11, 0.0),
                                       std::vector<double>(11, 1.0)}};
    const auto pop = generate_population({11, 1, clusters});
    std::ostringstream out;
    serialize(pop.set, out);
    const std::string text = out.str();
    for (auto _ : state) {
        std::istringstream in(text);
        auto set = load_table(in);
        benchmark::DoNotOptimize(set.size());
    }
    state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(load_table_csv)->Arg(280)->Arg(10000);
