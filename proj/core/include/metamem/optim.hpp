#pragma once

#include <map>
#include <optional>
#include <vector>

#include "metamem/config.hpp"
#include "metamem/oracle.hpp"
#include "metamem/param_vector.hpp"
#include "metamem/rng.hpp"
#include "metamem/tasks.hpp"

namespace metamem {

// Per-task personalized models u^i with last-update bookkeeping. An entry
// exists only after its first initialization.
struct MemoryStore {
    std::map<int, ParamVector> u;
    std::map<int, long> touched;       // last iteration that wrote the entry
    std::map<int, long> write_count;

    bool initialized(int id) const { return u.count(id) != 0; }
    void write(int id, ParamVector value, long t) {
        u.insert_or_assign(id, std::move(value));
        touched[id] = t;
        ++write_count[id];
    }
};

struct OptState {
    ParamVector w;
    MemoryStore memory;
    long t = 0;
    double eta_prev = 0.0;  // previous step size (v2 schedule)
    long samples_used = 0;
    RngStream rng{0};
};

// One row of per-iteration / per-round diagnostics.
struct MetricsRecord {
    std::string run_id;
    Algorithm algorithm = Algorithm::moml_v1;
    std::uint64_t seed = 0;
    long t_or_r = 0;
    double train_error = 0.0;
    std::optional<double> oracle_grad_norm;
    std::optional<double> oracle_value;
    std::optional<double> tracking_error;
    long samples_used = 0;
    long comms = 0;
    std::optional<double> wall_ms;
};

// v_hat = w − alpha * stochastic_grad(task, w, batch)
ParamVector inner_adapt(const TaskSet& ts, const Task& task, const ParamVector& w,
                        const Batch& batch, double alpha);

// Momentum write u^i <- (1−beta) u^i + beta v_hat^i for sampled tasks only;
// first-touch tasks are initialized to v_hat directly.
void moml_v1_update_memory(MemoryStore& memory, const std::vector<int>& sampled,
                           const std::map<int, ParamVector>& vhat, double beta, long t);

// Two-case update applied to all n tasks every iteration:
//   i in sampled': (1−beta) u + beta w + (beta/p_i)(v_hat − w)
//   otherwise:     (1−beta) u + beta w
// Entries absent at the first call are initialized to w beforehand.
void moml_v2_update_memory(MemoryStore& memory, const std::vector<int>& sampled_prime,
                           const ParamVector& w, const std::map<int, ParamVector>& vhat,
                           double beta, const std::vector<double>& p, long t, int n);

// Delta_hat = (1/B) sum_i [ g_i − alpha * HVP_{S2}(w, g_i) ] with
// g_i = stochastic_grad(task_i, u^i, S3); tasks reduced in id order.
ParamVector meta_grad_estimate(const TaskSet& ts, const std::vector<int>& sampled,
                               const ParamVector& w, const MemoryStore& memory,
                               const std::map<int, std::pair<Batch, Batch>>& batches,
                               double alpha);

// 4L + (2 rho alpha / |batch|) * sum ||stochastic_grad_i(w)||
double lhat(const TaskSet& ts, const std::vector<int>& task_batch,
            const std::vector<Batch>& grad_batches, const ParamVector& w, double L,
            double rho, double alpha);

// One iteration of the respective algorithm. eta_t is the effective outer
// step for this iteration (decay applied by the driver). Returns the training
// error observed this iteration (mean S3 loss at the personalized models).
double moml_v1_step(OptState& state, const TaskSet& ts, const RunConfig& cfg,
                    double eta_t);
double bsgd_step(OptState& state, const TaskSet& ts, const RunConfig& cfg, double eta_t);
double moml_v2_step(OptState& state, const TaskSet& ts, const RunConfig& cfg);

// Drives the centralized algorithms (bsgd, moml_v1, moml_v2, exact_gd) for
// cfg.T iterations; emits T+1 records (the first describes the initial state).
std::vector<MetricsRecord> run_optimizer(const RunConfig& cfg, const TaskSet& ts,
                                         const OracleHandle* oracle = nullptr,
                                         OptState* final_state = nullptr);

// Initial meta-model: zero vector for quadratics, MLP init otherwise.
ParamVector initial_meta_model(const RunConfig& cfg, const TaskSet& ts);

// Effective outer step at iteration t: eta, times 0.1 from 75% of T on.
double eta_at(const RunConfig& cfg, long t);

}  // namespace metamem
