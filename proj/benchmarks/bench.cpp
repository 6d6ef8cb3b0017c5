// Microbenchmarks for the hot paths: KDE evaluation, dataset construction,
// net inference, the per-iteration filter updates, and a whole trial.
// Run with --benchmark_filter=... to narrow.

#include <benchmark/benchmark.h>

#include <optional>
#include <vector>

#include "dnnaf/filters.hpp"
#include "dnnaf/gradnet.hpp"
#include "dnnaf/harness.hpp"
#include "dnnaf/kde.hpp"
#include "dnnaf/math.hpp"
#include "dnnaf/noise.hpp"
#include "dnnaf/rng.hpp"
#include "dnnaf/theory.hpp"

using namespace dnnaf;

namespace {

const NoiseSampleSet& impulse_samples() {
    static const NoiseSampleSet set = sample(NoiseModel::impulse(), 5000, 1);
    return set;
}

const GradientNet& impulse_net() {
    static const GradientNet net = [] {
        const GradientDataset data =
            build_gradient_dataset(impulse_samples(), std::nullopt, default_threads());
        GradientNet n = init_network(1);
        TrainConfig cfg;
        cfg.init_seed = 1;
        cfg.shuffle_seed = 2;
        train(n, data, cfg);
        return n;
    }();
    return net;
}

void bm_silverman(benchmark::State& state) {
    const auto& samples = impulse_samples().samples;
    for (auto _ : state) benchmark::DoNotOptimize(silverman_bandwidth(samples));
}
BENCHMARK(bm_silverman);

void bm_kde_derivative_point(benchmark::State& state) {
    const auto& set = impulse_samples();
    const KdeModel kde(set.samples, silverman_bandwidth(set.samples));
    double x = -2.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(estimate_pdf_derivative(kde, x));
        x = x < 2.0 ? x + 1e-3 : -2.0;
    }
}
BENCHMARK(bm_kde_derivative_point);

void bm_build_gradient_dataset(benchmark::State& state) {
    const NoiseSampleSet set = sample(NoiseModel::impulse(), 1000, 1);
    const unsigned threads = unsigned(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(build_gradient_dataset(set, std::nullopt, threads));
}
BENCHMARK(bm_build_gradient_dataset)->Arg(1)->Arg(4);

void bm_net_forward(benchmark::State& state) {
    const GradientNet& net = impulse_net();
    double x = -3.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(forward(net, x));
        x = x < 3.0 ? x + 1e-4 : -3.0;
    }
}
BENCHMARK(bm_net_forward);

// One update step per iteration, M = 5, recycled inputs. DNN-AF runs past
// its pre-training phase so the measured path is the network one.
void bm_filter_update(benchmark::State& state) {
    constexpr std::size_t kM = 5;
    const Algorithm algo = Algorithm(state.range(0));
    FilterState fs = [&] {
        switch (algo) {
            case Algorithm::LMS: return FilterState::lms(kM, 1e-3);
            case Algorithm::LMF: return FilterState::lmf(kM, 1e-4);
            case Algorithm::MCC: return FilterState::mcc(kM, 1e-3, 1.0);
            case Algorithm::MEE: return FilterState::mee(kM, 1e-3, 10, 1.0);
            default: return FilterState::dnnaf(kM, 1e-4, impulse_net(), 0, 1e-3);
        }
    }();
    Rng rng(9);
    std::vector<RegressionStep> steps(256);
    for (auto& s : steps) {
        s.input.resize(kM);
        for (auto& u : s.input) u = rng.normal();
        s.desired = rng.normal();
    }
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(update(fs, steps[i]));
        i = (i + 1) % steps.size();
    }
}
BENCHMARK(bm_filter_update)
    ->Arg(long(Algorithm::LMS))
    ->Arg(long(Algorithm::LMF))
    ->Arg(long(Algorithm::MCC))
    ->Arg(long(Algorithm::MEE))
    ->Arg(long(Algorithm::DNNAF));

void bm_run_trial_lms(benchmark::State& state) {
    ExperimentConfig cfg(NoiseModel::impulse());
    cfg.iterations = 1000;
    cfg.trials = 1;
    AlgoSpec spec;
    spec.algo = Algorithm::LMS;
    spec.eta = 0.005;
    for (auto _ : state) benchmark::DoNotOptimize(run_trial(cfg, spec, 0));
}
BENCHMARK(bm_run_trial_lms);

void bm_estimate_expectations(benchmark::State& state) {
    const NoiseModel model = NoiseModel::impulse();
    for (auto _ : state)
        benchmark::DoNotOptimize(estimate_expectations(model, AnalyticSource{}, 100000, 1,
                                                       unsigned(state.range(0))));
}
BENCHMARK(bm_estimate_expectations)->Arg(1)->Arg(4);

} // namespace

BENCHMARK_MAIN();
