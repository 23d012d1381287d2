#include <doctest.h>

#include <cmath>

#include "metamem/fedsim.hpp"
#include "metamem/optim.hpp"

using namespace metamem;

namespace {

RunConfig fed_cfg() {
    RunConfig cfg;
    cfg.algorithm = Algorithm::local_moml;
    cfg.task_family = TaskFamily::quadratic;
    cfg.fed_mode = FedMode::cross_device;
    cfg.n = 10;
    cfg.B = 4;
    cfg.H = 3;
    cfg.K = 1;
    cfg.R = 5;
    cfg.alpha = 0.05;
    cfg.eta = 0.01;
    cfg.beta = 0.5;
    cfg.quad_dim = 3;
    cfg.eta_decay = false;
    return cfg;
}

TaskSet fed_tasks(const RunConfig& cfg, double spread = 5.0) {
    RngStream gen(cfg.effective_taskset_seed());
    return gen_quad_tasks(cfg.n, cfg.quad_dim, spread, gen);
}

}  // namespace

TEST_CASE("reset_or_carry_memory semantics") {
    RunConfig cfg = fed_cfg();
    TaskSet ts = fed_tasks(cfg);
    ParamVector w(3, 0.5);
    RngStream root(3);

    ClientState c;
    c.client_id = 1;
    reset_or_carry_memory(c, ts, w, FedMode::cross_device, 2, cfg.alpha,
                          root.substream("s0", 1));
    CHECK(c.has_u);
    CHECK(c.w_local == w);
    CHECK(c.samples_used == 2);
    // quadratic backend is noise-free, so the reset is the exact inner step
    ParamVector expect = w;
    expect.axpy(-cfg.alpha, ts.task(1).quadratic().model.grad(w));
    CHECK((c.u_local - expect).norm() == 0.0);

    // cross-silo with existing memory: u untouched, w refreshed, no samples
    ParamVector stale(3, 9.0);
    c.u_local = stale;
    ParamVector w2(3, -1.0);
    reset_or_carry_memory(c, ts, w2, FedMode::cross_silo, 2, cfg.alpha,
                          root.substream("s0", 2));
    CHECK(c.u_local == stale);
    CHECK(c.w_local == w2);
    CHECK(c.samples_used == 2);

    // cross-silo bootstraps via reset when no memory exists yet
    ClientState fresh;
    fresh.client_id = 2;
    reset_or_carry_memory(fresh, ts, w, FedMode::cross_silo, 4, cfg.alpha,
                          root.substream("s0", 3));
    CHECK(fresh.has_u);
    CHECK(fresh.samples_used == 4);

    ClientState bad;
    bad.client_id = 1;
    CHECK_THROWS_AS(reset_or_carry_memory(bad, ts, w, FedMode::cross_device, 0,
                                          cfg.alpha, root.substream("s0", 4)),
                    std::invalid_argument);
}

TEST_CASE("client_local_step with eta = 0 moves memory but not the local model") {
    RunConfig cfg = fed_cfg();
    // noisy gradients so the momentum write actually changes u
    RngStream gen(cfg.effective_taskset_seed());
    TaskSet ts = gen_quad_tasks(cfg.n, cfg.quad_dim, 5.0, gen, 0.5);
    RngStream root(5);
    ClientState c;
    c.client_id = 3;
    ParamVector w(3, 0.2);
    reset_or_carry_memory(c, ts, w, FedMode::cross_device, 2, cfg.alpha,
                          root.substream("s0", 1));
    ParamVector u_before = c.u_local;
    double loss = client_local_step(c, ts, 0.5, cfg.alpha, 0.0, 1,
                                    root.substream("s1", 1), root.substream("s2", 1),
                                    root.substream("s3", 1));
    CHECK(c.w_local == w);
    CHECK_FALSE(c.u_local == u_before);
    CHECK(std::isfinite(loss));
    CHECK(c.samples_used == 2 + 3);

    CHECK_THROWS_AS(client_local_step(c, ts, 0.0, cfg.alpha, 0.0, 1,
                                      root.substream("s1", 2), root.substream("s2", 2),
                                      root.substream("s3", 2)),
                    std::invalid_argument);
}

TEST_CASE("one full-participation round with H=1 and beta=1 equals a bsgd step") {
    RunConfig cfg = fed_cfg();
    cfg.B = cfg.n;
    cfg.H = 1;
    cfg.beta = 1.0;
    TaskSet ts = fed_tasks(cfg);

    ServerState server;
    server.w_global = initial_meta_model(cfg, ts);
    std::vector<ClientState> clients(static_cast<std::size_t>(cfg.n));
    for (int i = 1; i <= cfg.n; ++i) clients[static_cast<std::size_t>(i) - 1].client_id = i;
    RngStream root(cfg.seed);
    RoundReport rep = run_round(server, clients, ts, cfg, root);

    RunConfig ccfg = cfg;
    ccfg.algorithm = Algorithm::bsgd;
    OptState st;
    st.rng = RngStream(cfg.seed);
    st.w = initial_meta_model(ccfg, ts);
    double train = bsgd_step(st, ts, ccfg, cfg.eta);

    CHECK((server.w_global - st.w).norm() < 1e-12);
    CHECK(rep.train_error == doctest::Approx(train).epsilon(1e-12));
    CHECK(rep.mean_local_drift == 0.0);  // H = 1: drift measured before any local step
}

TEST_CASE("comms accounting is 2 B per round") {
    RunConfig cfg = fed_cfg();
    cfg.R = 7;
    TaskSet ts = fed_tasks(cfg);
    ServerState server;
    auto reps = run_federated(cfg, ts, nullptr, &server);
    REQUIRE(reps.size() == 7);
    for (std::size_t k = 0; k < reps.size(); ++k) {
        CHECK(reps[k].r == static_cast<long>(k) + 1);
        CHECK(reps[k].comms == 2L * cfg.B * (static_cast<long>(k) + 1));
    }
    CHECK(server.comms == 2L * cfg.B * cfg.R);
    // per-round samples: B clients x (K0 reset + 3K per local step)
    CHECK(server.samples_used ==
          cfg.R * cfg.B * (cfg.effective_k0() + 3L * cfg.H * cfg.K));
}

TEST_CASE("cross-device rounds are insensitive to wiping client state between rounds") {
    RunConfig cfg = fed_cfg();
    cfg.R = 4;
    TaskSet ts = fed_tasks(cfg);

    ServerState s1;
    auto reps = run_federated(cfg, ts, nullptr, &s1);

    // replay round by round, discarding all client state after each round
    ServerState s2;
    s2.w_global = initial_meta_model(cfg, ts);
    RngStream root(cfg.seed);
    for (long r = 0; r < cfg.R; ++r) {
        std::vector<ClientState> wiped(static_cast<std::size_t>(cfg.n));
        for (int i = 1; i <= cfg.n; ++i)
            wiped[static_cast<std::size_t>(i) - 1].client_id = i;
        run_round(s2, wiped, ts, cfg, root);
    }
    CHECK(s1.w_global == s2.w_global);  // bitwise

    // cross-silo is NOT wipe-insensitive once a client is revisited
    RunConfig silo = cfg;
    silo.fed_mode = FedMode::cross_silo;
    silo.B = silo.n;  // guarantee revisits
    ServerState s3, s4;
    auto silo_reps = run_federated(silo, ts, nullptr, &s3);
    s4.w_global = initial_meta_model(silo, ts);
    RngStream root2(silo.seed);
    for (long r = 0; r < silo.R; ++r) {
        std::vector<ClientState> wiped(static_cast<std::size_t>(silo.n));
        for (int i = 1; i <= silo.n; ++i)
            wiped[static_cast<std::size_t>(i) - 1].client_id = i;
        run_round(s4, wiped, ts, silo, root2);
    }
    CHECK_FALSE(s3.w_global == s4.w_global);
}

TEST_CASE("client participation marginals are B/n") {
    RunConfig cfg = fed_cfg();
    cfg.H = 1;
    cfg.R = 2000;
    cfg.quad_dim = 2;
    cfg.eta = 0.001;
    TaskSet ts = fed_tasks(cfg, 3.0);

    ServerState server;
    server.w_global = initial_meta_model(cfg, ts);
    std::vector<ClientState> clients(static_cast<std::size_t>(cfg.n));
    for (int i = 1; i <= cfg.n; ++i) clients[static_cast<std::size_t>(i) - 1].client_id = i;
    RngStream root(cfg.seed);
    std::vector<long> before(static_cast<std::size_t>(cfg.n), 0);
    std::vector<long> hits(static_cast<std::size_t>(cfg.n), 0);
    for (long r = 0; r < cfg.R; ++r) {
        run_round(server, clients, ts, cfg, root);
        for (int i = 0; i < cfg.n; ++i) {
            if (clients[static_cast<std::size_t>(i)].samples_used >
                before[static_cast<std::size_t>(i)])
                ++hits[static_cast<std::size_t>(i)];
            before[static_cast<std::size_t>(i)] =
                clients[static_cast<std::size_t>(i)].samples_used;
        }
    }
    const double expect = static_cast<double>(cfg.B) / cfg.n;  // 0.4
    for (int i = 0; i < cfg.n; ++i) {
        double freq = static_cast<double>(hits[static_cast<std::size_t>(i)]) / cfg.R;
        CHECK(freq == doctest::Approx(expect).epsilon(0.1));
    }
}

TEST_CASE("eta = 0 rounds leave the broadcast model fixed") {
    RunConfig cfg = fed_cfg();
    cfg.eta = 0.0;
    cfg.R = 3;
    TaskSet ts = fed_tasks(cfg);
    ServerState server;
    run_federated(cfg, ts, nullptr, &server);
    CHECK(server.w_global == initial_meta_model(cfg, ts));
}

TEST_CASE("run_federated descends the exact meta-gradient on quadratics") {
    RunConfig cfg = fed_cfg();
    cfg.R = 150;
    cfg.H = 5;
    cfg.eta = 0.02;
    cfg.beta = 1.0;  // exact memory: noise-free quadratics make local steps exact
    TaskSet ts = fed_tasks(cfg);
    cfg.alpha = 0.5 / ts.L;
    OracleHandle oracle = OracleHandle::analytic(ts, cfg.alpha);

    // start far from the meta-minimizer (the zero init is already near it)
    ServerState server;
    server.w_global = ParamVector(static_cast<std::size_t>(cfg.quad_dim), 5.0);
    std::vector<ClientState> clients(static_cast<std::size_t>(cfg.n));
    for (int i = 1; i <= cfg.n; ++i) clients[static_cast<std::size_t>(i) - 1].client_id = i;
    RngStream root(cfg.seed);
    std::vector<RoundReport> reps;
    for (long r = 0; r < cfg.R; ++r)
        reps.push_back(run_round(server, clients, ts, cfg, root, &oracle));
    REQUIRE(reps.size() == 150);
    CHECK(*reps.back().oracle_grad_norm < 0.1 * *reps.front().oracle_grad_norm);
    for (const RoundReport& rep : reps) {
        CHECK(rep.mean_local_drift >= 0.0);
        CHECK(*rep.mean_tracking_error >= 0.0);
    }
}

TEST_CASE("per_fedavg runs and run_federated rejects centralized algorithms") {
    RunConfig cfg = fed_cfg();
    cfg.algorithm = Algorithm::per_fedavg;
    cfg.beta = 1.0;
    cfg.R = 3;
    TaskSet ts = fed_tasks(cfg);
    auto reps = run_federated(cfg, ts);
    CHECK(reps.size() == 3);

    RunConfig bad = fed_cfg();
    bad.algorithm = Algorithm::moml_v1;
    CHECK_THROWS_AS(run_federated(bad, ts), std::invalid_argument);
}

TEST_CASE("replaying run_federated is bitwise deterministic") {
    RunConfig cfg = fed_cfg();
    cfg.R = 6;
    TaskSet ts = fed_tasks(cfg);
    ServerState a, b;
    auto ra = run_federated(cfg, ts, nullptr, &a);
    auto rb = run_federated(cfg, ts, nullptr, &b);
    CHECK(a.w_global == b.w_global);
    for (std::size_t k = 0; k < ra.size(); ++k) {
        CHECK(ra[k].train_error == rb[k].train_error);
        CHECK(ra[k].mean_local_drift == rb[k].mean_local_drift);
    }
}
