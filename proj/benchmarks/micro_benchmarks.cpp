#include <benchmark/benchmark.h>

#include "pmvsk/bench.hpp"
#include "pmvsk/sparsity.hpp"

using namespace pmvsk;

namespace
{

const ReturnPanel& panel(Index n)
{
    static ReturnPanel p10 = generate_synthetic_panel(10, 250, 1);
    static ReturnPanel p25 = generate_synthetic_panel(25, 250, 1);
    static ReturnPanel p50 = generate_synthetic_panel(50, 250, 1);
    return n == 10 ? p10 : n == 25 ? p25 : p50;
}

const MomentModel& model(Index n)
{
    static MomentModel m10 = estimate_moments(panel(10));
    static MomentModel m25 = estimate_moments(panel(25));
    static MomentModel m50 = estimate_moments(panel(50));
    return n == 10 ? m10 : n == 25 ? m25 : m50;
}

ModelParams params_for(const MomentModel& m)
{
    SolverConfig c;
    c.risk_aversion = 10.0;
    c.k = std::max<int>(1, static_cast<int>(m.assets()) / 5);
    c.alpha = std::max(0.2, 1.0 / c.k);
    return make_params(c, m);
}

void BM_EstimateMoments(benchmark::State& state)
{
    const ReturnPanel& p = panel(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(estimate_moments(p));
}
BENCHMARK(BM_EstimateMoments)->Arg(10)->Arg(25)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_Evaluate(benchmark::State& state)
{
    const MomentModel& m = model(state.range(0));
    const ModelParams p = params_for(m);
    const Eigen::VectorXd w = build_feasible_init(m.assets(), p.alpha, 3);
    for (auto _ : state)
        benchmark::DoNotOptimize(evaluate(m, p, w));
}
BENCHMARK(BM_Evaluate)->Arg(10)->Arg(25)->Arg(50);

void BM_HessNcvx(benchmark::State& state)
{
    const MomentModel& m = model(state.range(0));
    const ModelParams p = params_for(m);
    const Eigen::VectorXd w = build_feasible_init(m.assets(), p.alpha, 3);
    for (auto _ : state)
        benchmark::DoNotOptimize(hess_ncvx(m, p, w));
}
BENCHMARK(BM_HessNcvx)->Arg(10)->Arg(25)->Arg(50);

void BM_SubproblemQp(benchmark::State& state)
{
    const MomentModel& m = model(state.range(0));
    const ModelParams p = params_for(m);
    const Index n = m.assets();
    const Eigen::VectorXd w = build_feasible_init(n, p.alpha, 3);
    const Eigen::MatrixXd Q = 2 * p.lambdas.variance * m.sigma + p.tau_dc * Eigen::MatrixXd::Identity(n, n);
    const Eigen::VectorXd c = -p.lambdas.mean * m.mu - p.tau_dc * w - p.rho * subgrad_largest_k(w, p.k).s;
    const QpProblem qp = capped_simplex_qp(Q, c, p.alpha, p.rho);
    for (auto _ : state)
        benchmark::DoNotOptimize(solve_qp(qp));
}
BENCHMARK(BM_SubproblemQp)->Arg(10)->Arg(25)->Arg(50)->Unit(benchmark::kMicrosecond);

void BM_LargestKSubgradient(benchmark::State& state)
{
    const Eigen::VectorXd w = build_feasible_init(state.range(0), 0.2, 5);
    for (auto _ : state)
        benchmark::DoNotOptimize(subgrad_largest_k(w, 10));
}
BENCHMARK(BM_LargestKSubgradient)->Arg(50)->Arg(500);

void BM_ScaSolve(benchmark::State& state)
{
    const MomentModel& m = model(state.range(0));
    const ModelParams p = params_for(m);
    SolverConfig c;
    const Eigen::VectorXd w0 = build_feasible_init(m.assets(), p.alpha, 3);
    for (auto _ : state)
        benchmark::DoNotOptimize(sca(m, p, c, w0));
}
BENCHMARK(BM_ScaSolve)->Arg(10)->Arg(25)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
