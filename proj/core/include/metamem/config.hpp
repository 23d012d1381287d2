#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace metamem {

enum class Algorithm { bsgd, moml_v1, moml_v2, local_moml, per_fedavg, exact_gd };
enum class FedMode { cross_silo, cross_device };
enum class TaskFamily { sinewave, quadratic, blob };

std::string to_string(Algorithm a);
std::string to_string(FedMode m);
std::string to_string(TaskFamily f);
Algorithm algorithm_from_string(const std::string& s);
FedMode fed_mode_from_string(const std::string& s);
TaskFamily task_family_from_string(const std::string& s);

// All hyperparameters an algorithm run consumes. Field defaults mirror the
// sinewave benchmark setup; validate() enforces every invariant and is called
// by the config loader.
struct RunConfig {
    Algorithm algorithm = Algorithm::moml_v1;
    TaskFamily task_family = TaskFamily::sinewave;
    FedMode fed_mode = FedMode::cross_device;

    double alpha = 0.01;   // inner step size
    double eta = 0.01;     // outer step size
    double eta0 = 0.0;     // v2 base step; must satisfy eta0 <= (2/(3L))^{3/2}
    double beta = 0.5;     // momentum factor, in (0,1]
    int B = 3;             // tasks per iteration / sampled clients per round
    int K = 1;             // data points per batch
    int K0 = -1;           // cross-device reset batch size; -1 -> 2*K
    int H = 5;             // local steps per round
    long R = 0;            // federated rounds
    long T = 1000;         // centralized iterations
    int n = 25;            // task / client count
    double L = 0.0;        // gradient-Lipschitz constant (0 = unknown)
    double rho = 0.0;      // Hessian-Lipschitz constant
    std::vector<double> p; // per-task selection probabilities (v2); empty -> B/n each
    std::uint64_t seed = 1;
    std::uint64_t taskset_seed = 0;  // 0 -> same as seed

    // task-family parameters
    int quad_dim = 5;
    double quad_spread = 10.0;      // eigenvalue range [1, spread]
    double noise_std = 0.0;         // injected gradient noise (quadratic backend)
    int blob_classes = 10;
    int blob_dim = 8;
    int blob_a = 68;

    // schedule / bookkeeping
    bool eta_decay = true;   // multiply eta by 0.1 at 75% of T
    bool timing = false;     // emit wall_ms column values (off keeps CSVs replayable)
    long oracle_grid = 100000;  // eval-set size for empirical oracles

    std::uint64_t effective_taskset_seed() const {
        return taskset_seed != 0 ? taskset_seed : seed;
    }
    int effective_k0() const { return K0 >= 0 ? K0 : 2 * K; }
    bool is_federated() const {
        return algorithm == Algorithm::local_moml || algorithm == Algorithm::per_fedavg;
    }

    // per-task probabilities for the Bernoulli batch law of MOML v2
    std::vector<double> effective_p() const;

    // Throws std::invalid_argument with a named diagnostic on any violation.
    void validate() const;
};

}  // namespace metamem
