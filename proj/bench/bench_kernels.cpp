// Serial reference vs OpenMP kernel for each hot loop.
// Run with OMP_NUM_THREADS set to compare thread counts.

#include <benchmark/benchmark.h>

#include <memory>

#include "webshop/agents.hpp"
#include "webshop/rng.hpp"
#include "webshop/search.hpp"
#include "webshop/training.hpp"

using namespace webshop;

namespace {

struct World {
    std::shared_ptr<const Catalog> catalog;
    std::shared_ptr<const SearchIndex> index;
    std::unique_ptr<Environment> env;
    std::vector<std::string> queries;
};

const World& world() {
    static const World w = [] {
        World w;
        SyntheticCatalogConfig cc;
        cc.n_products = 5000;
        w.catalog = std::make_shared<const Catalog>(generate_synthetic_catalog(cc, 7));
        w.index = std::make_shared<const SearchIndex>(build_index(*w.catalog));
        w.env = std::make_unique<Environment>(w.catalog, w.index, generate_goals(*w.catalog, 64, 8));
        for (const auto& g : w.env->goals()) w.queries.push_back(g.instruction_text);
        return w;
    }();
    return w;
}

std::vector<ChoiceSample> choice_batch(std::size_t n, std::size_t vocab) {
    Rng rng(3);
    auto tokens = [&](std::size_t len) {
        TokenIds t(len);
        for (auto& id : t) id = static_cast<std::uint32_t>(rng.uniform_index(vocab));
        return t;
    };
    std::vector<ChoiceSample> out(n);
    for (auto& s : out) {
        s.observation = tokens(20);
        for (int j = 0; j < 12; ++j) s.actions.push_back(tokens(6));
        s.chosen = rng.uniform_index(12);
    }
    return out;
}

void BM_RankSerial(benchmark::State& state) {
    const auto& w = world();
    std::size_t q = 0;
    for (auto _ : state) benchmark::DoNotOptimize(rank_serial(*w.index, w.queries[q++ % w.queries.size()]));
}

void BM_RankParallel(benchmark::State& state) {
    const auto& w = world();
    std::size_t q = 0;
    for (auto _ : state) benchmark::DoNotOptimize(rank_parallel(*w.index, w.queries[q++ % w.queries.size()]));
}

void BM_OracleSerial(benchmark::State& state) {
    const auto& w = world();
    std::size_t q = 0;
    for (auto _ : state) {
        const auto& g = w.env->goals()[q++ % w.env->goals().size()];
        benchmark::DoNotOptimize(choice_oracle(PrivilegedAccess{}, *w.env, g.goal_id, g.instruction_text));
    }
}

void BM_OracleParallel(benchmark::State& state) {
    const auto& w = world();
    std::size_t q = 0;
    for (auto _ : state) {
        const auto& g = w.env->goals()[q++ % w.env->goals().size()];
        benchmark::DoNotOptimize(choice_oracle_parallel(PrivilegedAccess{}, *w.env, g.goal_id, g.instruction_text));
    }
}

void BM_ChoiceGradSerial(benchmark::State& state) {
    const auto scorer = CrossAttentionScorer::fan_in_init(32, 4096, 1);
    const auto batch = choice_batch(static_cast<std::size_t>(state.range(0)), 4096);
    for (auto _ : state) {
        ScorerGradient g(32);
        benchmark::DoNotOptimize(choice_loss_and_gradient_serial(scorer, batch, g));
    }
}

void BM_ChoiceGradParallel(benchmark::State& state) {
    const auto scorer = CrossAttentionScorer::fan_in_init(32, 4096, 1);
    const auto batch = choice_batch(static_cast<std::size_t>(state.range(0)), 4096);
    for (auto _ : state) {
        ScorerGradient g(32);
        benchmark::DoNotOptimize(choice_loss_and_gradient(scorer, batch, g));
    }
}

}  // namespace

BENCHMARK(BM_RankSerial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_RankParallel)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_OracleSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_OracleParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ChoiceGradSerial)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ChoiceGradParallel)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
