#pragma once

#include <optional>
#include <vector>

#include "metamem/config.hpp"
#include "metamem/optim.hpp"
#include "metamem/oracle.hpp"
#include "metamem/param_vector.hpp"
#include "metamem/rng.hpp"
#include "metamem/tasks.hpp"

namespace metamem {

struct ClientState {
    int client_id = 0;
    ParamVector w_local;
    ParamVector u_local;
    bool has_u = false;     // no personalized model before the first participation
    long samples_used = 0;
};

struct ServerState {
    ParamVector w_global;
    long r = 0;          // rounds completed
    long comms = 0;      // model transfers: broadcast + upload per sampled client
    long samples_used = 0;
};

struct RoundReport {
    long r = 0;
    std::optional<double> oracle_grad_norm;
    double mean_local_drift = 0.0;  // (1/BH) sum_i sum_h ||w^i_{r,h} - w_r||^2
    std::optional<double> mean_tracking_error;
    double train_error = 0.0;
    long comms = 0;
    long samples_used = 0;
};

// Round-start handling of the personalized model: cross-device resets it from
// a fresh K0-point batch at the broadcast model; cross-silo carries the value
// from the end of the previous round (round 1 bootstraps with the reset rule).
void reset_or_carry_memory(ClientState& client, const TaskSet& ts,
                           const ParamVector& w_broadcast, FedMode mode, int k0,
                           double alpha, RngStream s0_rng);

// One local iteration: memory momentum step on S1, meta-gradient estimate on
// (S2, S3), local model step. Returns the S3 training loss at u.
double client_local_step(ClientState& client, const TaskSet& ts, double beta,
                         double alpha, double eta, int k, RngStream s1_rng,
                         RngStream s2_rng, RngStream s3_rng);

// One communication round: sample B clients, run H local steps each, average
// the uploads. Clients outside the batch consume no RNG and no samples.
RoundReport run_round(ServerState& server, std::vector<ClientState>& clients,
                      const TaskSet& ts, const RunConfig& cfg, const RngStream& root,
                      const OracleHandle* oracle = nullptr);

std::vector<RoundReport> run_federated(const RunConfig& cfg, const TaskSet& ts,
                                       const OracleHandle* oracle = nullptr,
                                       ServerState* final_server = nullptr);

}  // namespace metamem
