#include <benchmark/benchmark.h>

#include "welsch/estimators.hpp"
#include "welsch/loss.hpp"
#include "welsch/rng.hpp"
#include "welsch/simulation.hpp"

namespace {

using namespace welsch;

Dataset benchmark_dataset(long n, long p, double proportion, std::uint64_t seed) {
    ContaminationSpec cont;
    cont.proportion = proportion;
    cont.magnitude = 100.0;
    cont.strategy = AdversaryStrategy::sign_aligned;
    NoiseSpec noise;
    noise.kind = NoiseSpec::Kind::pareto;
    const Eigen::VectorXd beta =
        Eigen::VectorXd::Constant(p, 1.0 / std::sqrt(static_cast<double>(p)));
    return generate_dataset(n, beta, DesignKind::gaussian_isotropic, noise, cont, seed).first;
}

void BM_WelschRho(benchmark::State& state) {
    const LossSpec spec = LossSpec::welsch(0.1);
    Rng rng(1);
    std::vector<double> xs(4096);
    for (double& x : xs) x = rng.gaussian() * 3.0;
    for (auto _ : state) {
        double acc = 0.0;
        for (double x : xs) acc += rho(spec, x);
        benchmark::DoNotOptimize(acc);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(xs.size()));
}
BENCHMARK(BM_WelschRho);

void BM_ObjectiveGradient(benchmark::State& state) {
    const long n = state.range(0);
    const Dataset data = benchmark_dataset(n, 5, 0.1, 2);
    const Objective obj = make_loss_objective(data, LossSpec::welsch(0.1));
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(5);
    Eigen::VectorXd grad(5);
    for (auto _ : state) {
        benchmark::DoNotOptimize(obj(beta, grad));
    }
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_ObjectiveGradient)->Arg(1000)->Arg(5000);

void BM_TwoStageFit(benchmark::State& state) {
    const long n = state.range(0);
    const Dataset data = benchmark_dataset(n, 5, 0.1, 3);
    FitConfig cfg;
    cfg.loss = LossSpec::welsch(0.1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_two_stage(data, cfg).beta);
    }
}
BENCHMARK(BM_TwoStageFit)->Arg(500)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_LadWarmStart(benchmark::State& state) {
    const Dataset data = benchmark_dataset(state.range(0), 5, 0.1, 4);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            fit_lad(data, Eigen::VectorXd::Zero(5), 1.0, 100).beta);
    }
}
BENCHMARK(BM_LadWarmStart)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_GenerateDataset(benchmark::State& state) {
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(benchmark_dataset(state.range(0), 5, 0.1, seed++).y);
    }
}
BENCHMARK(BM_GenerateDataset)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
