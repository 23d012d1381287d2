#include <benchmark/benchmark.h>

#include "metamem/harness.hpp"
#include "metamem/optim.hpp"
#include "metamem/oracle.hpp"

using namespace metamem;

static void BM_MlpLossGrad(benchmark::State& state) {
    TaskSet ts = gen_sinewave_tasks();
    RngStream rng(1);
    ParamVector w = ts.arch->init_params(rng.substream("w", 0));
    RngStream br = rng.substream("b", 0);
    Batch b = sample_batch(ts.task(1), static_cast<int>(state.range(0)), br);
    for (auto _ : state)
        benchmark::DoNotOptimize(ts.arch->loss_grad(w, b.inputs, b.targets));
}
BENCHMARK(BM_MlpLossGrad)->Arg(1)->Arg(5)->Arg(25);

static void BM_MomlV1SinewaveIteration(benchmark::State& state) {
    RunConfig cfg;
    cfg.algorithm = Algorithm::moml_v1;
    cfg.B = 3;
    cfg.K = static_cast<int>(state.range(0));
    TaskSet ts = gen_sinewave_tasks();
    OptState st;
    st.rng = RngStream(1);
    st.w = initial_meta_model(cfg, ts);
    for (auto _ : state) benchmark::DoNotOptimize(moml_v1_step(st, ts, cfg, cfg.eta));
}
BENCHMARK(BM_MomlV1SinewaveIteration)->Arg(1)->Arg(5);

static void BM_ExactMetaGrad(benchmark::State& state) {
    TaskSet ts = gen_quad_tasks(25, static_cast<int>(state.range(0)), 10.0, RngStream(2));
    OracleHandle oracle = OracleHandle::analytic(ts, 0.01);
    ParamVector w(static_cast<std::size_t>(state.range(0)), 0.3);
    for (auto _ : state) benchmark::DoNotOptimize(oracle.exact_meta_grad(w));
}
BENCHMARK(BM_ExactMetaGrad)->Arg(5)->Arg(20);

static void BM_FederatedRound(benchmark::State& state) {
    RunConfig cfg;
    cfg.algorithm = Algorithm::local_moml;
    cfg.task_family = TaskFamily::quadratic;
    cfg.n = 20;
    cfg.B = 4;
    cfg.H = 5;
    cfg.eta = 0.01;
    TaskSet ts = build_taskset(cfg);
    ServerState server;
    server.w_global = initial_meta_model(cfg, ts);
    std::vector<ClientState> clients(static_cast<std::size_t>(cfg.n));
    for (int i = 1; i <= cfg.n; ++i) clients[static_cast<std::size_t>(i) - 1].client_id = i;
    RngStream root(cfg.seed);
    for (auto _ : state)
        benchmark::DoNotOptimize(run_round(server, clients, ts, cfg, root));
}
BENCHMARK(BM_FederatedRound);

BENCHMARK_MAIN();
