#include "metamem/fedsim.hpp"

#include <stdexcept>

namespace metamem {

void reset_or_carry_memory(ClientState& client, const TaskSet& ts,
                           const ParamVector& w_broadcast, FedMode mode, int k0,
                           double alpha, RngStream s0_rng) {
    client.w_local = w_broadcast;
    const bool reset = (mode == FedMode::cross_device) || !client.has_u;
    if (reset) {
        if (k0 < 1) throw std::invalid_argument("reset_or_carry_memory: K0 must be >= 1");
        Batch s0 = sample_batch(ts.task(client.client_id), k0, s0_rng);
        client.u_local = inner_adapt(ts, ts.task(client.client_id), client.w_local, s0,
                                     alpha);
        client.samples_used += k0;
        client.has_u = true;
    }
    // cross-silo with prior memory: u carried over unchanged
}

double client_local_step(ClientState& client, const TaskSet& ts, double beta,
                         double alpha, double eta, int k, RngStream s1_rng,
                         RngStream s2_rng, RngStream s3_rng) {
    if (!(beta > 0.0 && beta <= 1.0))
        throw std::invalid_argument("client_local_step: beta must be in (0,1]");
    const Task& task = ts.task(client.client_id);

    Batch s1 = sample_batch(task, k, s1_rng);
    ParamVector vhat = inner_adapt(ts, task, client.w_local, s1, alpha);
    client.u_local *= (1.0 - beta);
    client.u_local.axpy(beta, vhat);

    Batch s2 = sample_batch(task, k, s2_rng);
    Batch s3 = sample_batch(task, k, s3_rng);
    ParamVector g = stochastic_grad(ts, task, client.u_local, s3);
    ParamVector hv = stochastic_hvp(ts, task, client.w_local, g, s2);
    hv.check_finite("client_local_step HVP");
    // same curvature-regime guard as meta_grad_estimate
    const double gn = g.norm(), hn = hv.norm();
    if (hn > 0.0 && alpha * hn > gn) hv *= gn / (alpha * hn);
    g.axpy(-alpha, hv);

    client.w_local.axpy(-eta, g);
    client.w_local.check_finite("client_local_step local model");
    client.samples_used += 3L * k;
    return task_loss(ts, task, client.u_local, s3);
}

RoundReport run_round(ServerState& server, std::vector<ClientState>& clients,
                      const TaskSet& ts, const RunConfig& cfg, const RngStream& root,
                      const OracleHandle* oracle) {
    const long r = server.r + 1;
    const int n = cfg.n;
    std::vector<int> sampled;
    if (cfg.B == n) {
        for (int i = 1; i <= n; ++i) sampled.push_back(i);
    } else {
        RngStream batch_rng = root.substream("clientbatch", static_cast<std::uint64_t>(r));
        sampled = sample_without_replacement(batch_rng, n, cfg.B);
    }

    RoundReport report;
    report.r = r;
    ParamVector sum(server.w_global.size());
    double drift = 0.0, train = 0.0, tracking = 0.0;
    long samples_before = 0;
    for (const ClientState& c : clients) samples_before += c.samples_used;

    for (int i : sampled) {
        ClientState& client = clients[static_cast<std::size_t>(i) - 1];
        reset_or_carry_memory(client, ts, server.w_global, cfg.fed_mode,
                              cfg.effective_k0(), cfg.alpha,
                              data_stream(root, "s0", static_cast<std::uint64_t>(r),
                                          static_cast<std::uint64_t>(i)));
        for (int h = 1; h <= cfg.H; ++h) {
            const std::uint64_t t_global =
                static_cast<std::uint64_t>(r - 1) * cfg.H + static_cast<std::uint64_t>(h - 1);
            ParamVector gap = client.w_local - server.w_global;
            drift += gap.norm_sq();
            train += client_local_step(
                client, ts, cfg.beta, cfg.alpha, eta_at(cfg, static_cast<long>(t_global)),
                cfg.K, data_stream(root, "s1", t_global, static_cast<std::uint64_t>(i)),
                data_stream(root, "s2", t_global, static_cast<std::uint64_t>(i)),
                data_stream(root, "s3", t_global, static_cast<std::uint64_t>(i)));
        }
        sum += client.w_local;
        if (oracle) {
            ParamVector gap = client.u_local -
                              oracle->exact_inner(client.client_id, client.w_local);
            tracking += gap.norm_sq();
        }
    }
    sum *= 1.0 / static_cast<double>(sampled.size());
    server.w_global = std::move(sum);
    server.w_global.check_finite("run_round aggregated model");
    server.r = r;
    server.comms += 2L * static_cast<long>(sampled.size());
    long samples_after = 0;
    for (const ClientState& c : clients) samples_after += c.samples_used;
    server.samples_used += samples_after - samples_before;

    const double bh = static_cast<double>(sampled.size()) * cfg.H;
    report.mean_local_drift = drift / bh;
    report.train_error = train / bh;
    if (oracle) {
        report.oracle_grad_norm = oracle->exact_meta_grad(server.w_global).norm();
        report.mean_tracking_error = tracking / static_cast<double>(sampled.size());
    }
    report.comms = server.comms;
    report.samples_used = server.samples_used;
    return report;
}

std::vector<RoundReport> run_federated(const RunConfig& cfg, const TaskSet& ts,
                                       const OracleHandle* oracle,
                                       ServerState* final_server) {
    cfg.validate();
    if (!cfg.is_federated())
        throw std::invalid_argument("run_federated: algorithm must be local_moml or per_fedavg");
    RngStream root(cfg.seed);
    ServerState server;
    server.w_global = initial_meta_model(cfg, ts);
    std::vector<ClientState> clients(static_cast<std::size_t>(cfg.n));
    for (int i = 1; i <= cfg.n; ++i)
        clients[static_cast<std::size_t>(i) - 1].client_id = i;

    std::vector<RoundReport> reports;
    reports.reserve(static_cast<std::size_t>(cfg.R));
    for (long r = 0; r < cfg.R; ++r)
        reports.push_back(run_round(server, clients, ts, cfg, root, oracle));
    if (final_server) *final_server = std::move(server);
    return reports;
}

}  // namespace metamem
