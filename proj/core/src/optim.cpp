#include "metamem/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace metamem {

ParamVector inner_adapt(const TaskSet& ts, const Task& task, const ParamVector& w,
                        const Batch& batch, double alpha) {
    ParamVector g = stochastic_grad(ts, task, w, batch);
    g.check_finite("inner_adapt gradient");
    ParamVector v = w;
    v.axpy(-alpha, g);
    return v;
}

void moml_v1_update_memory(MemoryStore& memory, const std::vector<int>& sampled,
                           const std::map<int, ParamVector>& vhat, double beta, long t) {
    if (!(beta > 0.0 && beta <= 1.0))
        throw std::invalid_argument("moml_v1_update_memory: beta must be in (0,1]");
    for (int i : sampled) {
        auto it = vhat.find(i);
        if (it == vhat.end())
            throw std::invalid_argument("moml_v1_update_memory: missing v_hat for task " +
                                        std::to_string(i));
        if (!memory.initialized(i)) {
            memory.write(i, it->second, t);  // first touch: u = v_hat
        } else {
            ParamVector u = memory.u.at(i);
            u *= (1.0 - beta);
            u.axpy(beta, it->second);
            memory.write(i, std::move(u), t);
        }
    }
}

void moml_v2_update_memory(MemoryStore& memory, const std::vector<int>& sampled_prime,
                           const ParamVector& w, const std::map<int, ParamVector>& vhat,
                           double beta, const std::vector<double>& p, long t, int n) {
    if (!(beta > 0.0 && beta <= 1.0))
        throw std::invalid_argument("moml_v2_update_memory: beta must be in (0,1]");
    std::vector<bool> in_prime(static_cast<std::size_t>(n) + 1, false);
    for (int i : sampled_prime) {
        if (vhat.find(i) == vhat.end())
            throw std::invalid_argument("moml_v2_update_memory: missing v_hat for task " +
                                        std::to_string(i));
        in_prime[static_cast<std::size_t>(i)] = true;
    }
    for (int i = 1; i <= n; ++i) {
        ParamVector u = memory.initialized(i) ? memory.u.at(i) : w;
        u *= (1.0 - beta);
        u.axpy(beta, w);
        if (in_prime[static_cast<std::size_t>(i)]) {
            ParamVector corr = vhat.at(i) - w;
            u.axpy(beta / p[static_cast<std::size_t>(i) - 1], corr);
        }
        memory.write(i, std::move(u), t);
    }
}

ParamVector meta_grad_estimate(const TaskSet& ts, const std::vector<int>& sampled,
                               const ParamVector& w, const MemoryStore& memory,
                               const std::map<int, std::pair<Batch, Batch>>& batches,
                               double alpha) {
    if (sampled.empty()) throw std::invalid_argument("meta_grad_estimate: empty batch");
    std::vector<int> order = sampled;
    std::sort(order.begin(), order.end());
    ParamVector acc(w.size());
    for (int i : order) {
        const Task& task = ts.task(i);
        const auto& [s2, s3] = batches.at(i);
        ParamVector g = stochastic_grad(ts, task, memory.u.at(i), s3);
        ParamVector hv = stochastic_hvp(ts, task, w, g, s2);
        hv.check_finite("meta_grad_estimate HVP");
        // The estimator assumes alpha-compatible smoothness (alpha <= 1/L), so
        // alpha*||Hg|| <= ||g|| for any in-regime curvature. FD probes across
        // ReLU subgradient jumps break that bound by orders of magnitude;
        // project such spikes back to the regime boundary.
        const double gn = g.norm(), hn = hv.norm();
        if (hn > 0.0 && alpha * hn > gn) hv *= gn / (alpha * hn);
        g.axpy(-alpha, hv);
        acc += g;
    }
    acc *= 1.0 / static_cast<double>(sampled.size());
    return acc;
}

double lhat(const TaskSet& ts, const std::vector<int>& task_batch,
            const std::vector<Batch>& grad_batches, const ParamVector& w, double L,
            double rho, double alpha) {
    if (task_batch.size() != grad_batches.size())
        throw std::invalid_argument("lhat: batch size mismatch");
    double sum_norms = 0.0;
    for (std::size_t k = 0; k < task_batch.size(); ++k) {
        double nrm = stochastic_grad(ts, ts.task(task_batch[k]), w, grad_batches[k]).norm();
        if (!std::isfinite(nrm)) throw std::runtime_error("lhat: non-finite gradient norm");
        sum_norms += nrm;
    }
    return 4.0 * L +
           2.0 * rho * alpha * sum_norms / static_cast<double>(task_batch.size());
}

namespace {

std::vector<int> select_task_batch(const RngStream& root, long t, int n, int B) {
    if (B == n) {
        std::vector<int> all(static_cast<std::size_t>(n));
        for (int i = 1; i <= n; ++i) all[static_cast<std::size_t>(i) - 1] = i;
        return all;  // deterministic, RNG untouched
    }
    RngStream rng = root.substream("taskbatch", static_cast<std::uint64_t>(t));
    return sample_without_replacement(rng, n, B);
}

}  // namespace

double moml_v1_step(OptState& state, const TaskSet& ts, const RunConfig& cfg,
                    double eta_t) {
    const long t = state.t;
    std::vector<int> sampled = select_task_batch(state.rng, t, cfg.n, cfg.B);

    std::map<int, ParamVector> vhat;
    for (int i : sampled) {
        RngStream s1_rng = data_stream(state.rng, "s1", static_cast<std::uint64_t>(t),
                                       static_cast<std::uint64_t>(i));
        Batch s1 = sample_batch(ts.task(i), cfg.K, s1_rng);
        vhat.emplace(i, inner_adapt(ts, ts.task(i), state.w, s1, cfg.alpha));
    }
    moml_v1_update_memory(state.memory, sampled, vhat, cfg.beta, t);

    std::map<int, std::pair<Batch, Batch>> s23;
    for (int i : sampled) {
        RngStream s2_rng = data_stream(state.rng, "s2", static_cast<std::uint64_t>(t),
                                       static_cast<std::uint64_t>(i));
        RngStream s3_rng = data_stream(state.rng, "s3", static_cast<std::uint64_t>(t),
                                       static_cast<std::uint64_t>(i));
        s23.emplace(i, std::make_pair(sample_batch(ts.task(i), cfg.K, s2_rng),
                                      sample_batch(ts.task(i), cfg.K, s3_rng)));
    }
    ParamVector delta = meta_grad_estimate(ts, sampled, state.w, state.memory, s23,
                                           cfg.alpha);

    double train_error = 0.0;
    for (int i : sampled)
        train_error += task_loss(ts, ts.task(i), state.memory.u.at(i), s23.at(i).second);
    train_error /= static_cast<double>(sampled.size());

    state.w.axpy(-eta_t, delta);
    state.w.check_finite("moml_v1_step meta-model");
    state.samples_used += 3L * cfg.B * cfg.K;
    state.t = t + 1;
    return train_error;
}

double bsgd_step(OptState& state, const TaskSet& ts, const RunConfig& cfg, double eta_t) {
    RunConfig c = cfg;
    c.beta = 1.0;  // same code path as MOML v1 with full memory overwrite
    return moml_v1_step(state, ts, c, eta_t);
}

double moml_v2_step(OptState& state, const TaskSet& ts, const RunConfig& cfg) {
    const long t = state.t;
    if (state.eta_prev <= 0.0) state.eta_prev = cfg.eta0 / (4.0 * cfg.L);
    const double beta_t = 6.0 * cfg.L * cfg.L * std::pow(cfg.eta0, -1.0 / 3.0) *
                          state.eta_prev;
    if (beta_t > 1.0)
        throw std::runtime_error(
            "moml_v2_step: beta_t > 1; eta0 must satisfy eta0 <= (2/(3L))^{3/2}");

    std::vector<int> sampled = select_task_batch(state.rng, t, cfg.n, cfg.B);
    RngStream prime_rng = state.rng.substream("taskbatch2", static_cast<std::uint64_t>(t));
    std::vector<double> p = cfg.effective_p();
    std::vector<int> sampled_prime = bernoulli_subset(prime_rng, p);

    std::map<int, ParamVector> vhat;
    for (int i : sampled_prime) {
        RngStream s1_rng = data_stream(state.rng, "s1", static_cast<std::uint64_t>(t),
                                       static_cast<std::uint64_t>(i));
        Batch s1 = sample_batch(ts.task(i), cfg.K, s1_rng);
        vhat.emplace(i, inner_adapt(ts, ts.task(i), state.w, s1, cfg.alpha));
    }
    moml_v2_update_memory(state.memory, sampled_prime, state.w, vhat, beta_t, p, t, cfg.n);

    std::map<int, std::pair<Batch, Batch>> s23;
    for (int i : sampled) {
        RngStream s2_rng = data_stream(state.rng, "s2", static_cast<std::uint64_t>(t),
                                       static_cast<std::uint64_t>(i));
        RngStream s3_rng = data_stream(state.rng, "s3", static_cast<std::uint64_t>(t),
                                       static_cast<std::uint64_t>(i));
        s23.emplace(i, std::make_pair(sample_batch(ts.task(i), cfg.K, s2_rng),
                                      sample_batch(ts.task(i), cfg.K, s3_rng)));
    }
    ParamVector delta = meta_grad_estimate(ts, sampled, state.w, state.memory, s23,
                                           cfg.alpha);

    // dedicated batch for the gradient-Lipschitz estimate
    std::vector<int> lbatch;
    {
        RngStream lb_rng = state.rng.substream("lbatch", static_cast<std::uint64_t>(t));
        lbatch = (cfg.B == cfg.n) ? sampled : sample_without_replacement(lb_rng, cfg.n, cfg.B);
    }
    std::vector<Batch> lbatches;
    for (int i : lbatch) {
        RngStream sl_rng = data_stream(state.rng, "sl", static_cast<std::uint64_t>(t),
                                       static_cast<std::uint64_t>(i));
        lbatches.push_back(sample_batch(ts.task(i), cfg.K, sl_rng));
    }
    const double lhat_t = lhat(ts, lbatch, lbatches, state.w, cfg.L, cfg.rho, cfg.alpha);
    const double eta_t = cfg.eta0 / lhat_t;

    double train_error = 0.0;
    for (int i : sampled)
        train_error += task_loss(ts, ts.task(i), state.memory.u.at(i), s23.at(i).second);
    train_error /= static_cast<double>(sampled.size());

    state.w.axpy(-eta_t, delta);
    state.w.check_finite("moml_v2_step meta-model");
    state.eta_prev = eta_t;
    state.samples_used += static_cast<long>(sampled_prime.size()) * cfg.K +
                          2L * cfg.B * cfg.K + static_cast<long>(lbatch.size()) * cfg.K;
    state.t = t + 1;
    return train_error;
}

ParamVector initial_meta_model(const RunConfig& cfg, const TaskSet& ts) {
    if (ts.arch) return ts.arch->init_params(RngStream(cfg.seed).substream("init", 0));
    return ParamVector(ts.param_dim());  // zero vector for quadratics
}

double eta_at(const RunConfig& cfg, long t) {
    if (!cfg.eta_decay) return cfg.eta;
    const long total = cfg.is_federated() ? cfg.R * cfg.H : cfg.T;
    const long cut = (3 * total) / 4;
    return (total > 0 && t >= cut) ? 0.1 * cfg.eta : cfg.eta;
}

std::vector<MetricsRecord> run_optimizer(const RunConfig& cfg, const TaskSet& ts,
                                         const OracleHandle* oracle,
                                         OptState* final_state) {
    cfg.validate();
    OptState state;
    state.rng = RngStream(cfg.seed);
    state.w = initial_meta_model(cfg, ts);
    if (cfg.algorithm == Algorithm::moml_v2) state.eta_prev = cfg.eta0 / (4.0 * cfg.L);

    std::vector<MetricsRecord> records;
    records.reserve(static_cast<std::size_t>(cfg.T) + 1);

    auto emit = [&](long t, double train_error) {
        MetricsRecord rec;
        rec.algorithm = cfg.algorithm;
        rec.seed = cfg.seed;
        rec.t_or_r = t;
        rec.train_error = train_error;
        rec.samples_used = state.samples_used;
        rec.comms = 0;
        if (oracle) {
            rec.oracle_grad_norm = oracle->exact_meta_grad(state.w).norm();
            rec.oracle_value = oracle->exact_meta_value(state.w);
            rec.tracking_error = oracle->tracking_error(state.memory, state.w);
        }
        records.push_back(std::move(rec));
    };

    emit(0, oracle ? oracle->exact_meta_value(state.w) : 0.0);

    for (long t = 0; t < cfg.T; ++t) {
        const double eta_t = eta_at(cfg, t);
        double train_error = 0.0;
        switch (cfg.algorithm) {
            case Algorithm::bsgd:
                train_error = bsgd_step(state, ts, cfg, eta_t);
                break;
            case Algorithm::moml_v1:
                train_error = moml_v1_step(state, ts, cfg, eta_t);
                break;
            case Algorithm::moml_v2:
                train_error = moml_v2_step(state, ts, cfg);
                break;
            case Algorithm::exact_gd: {
                if (!oracle || !oracle->is_analytic())
                    throw std::invalid_argument("exact_gd requires an analytic oracle");
                state.w.axpy(-eta_t, oracle->exact_meta_grad(state.w));
                state.w.check_finite("exact_gd meta-model");
                state.t = t + 1;
                train_error = oracle->exact_meta_value(state.w);
                break;
            }
            default:
                throw std::invalid_argument("run_optimizer: not a centralized algorithm");
        }
        emit(t + 1, train_error);
    }
    if (final_state) *final_state = std::move(state);
    return records;
}

}  // namespace metamem
