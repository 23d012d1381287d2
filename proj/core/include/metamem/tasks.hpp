#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "metamem/models.hpp"
#include "metamem/param_vector.hpp"
#include "metamem/rng.hpp"

namespace metamem {

// Parallel (inputs, targets) sequences of length K. For the quadratic backend
// the "inputs" hold per-sample additive gradient-noise realizations and
// targets are unused.
struct Batch {
    std::vector<std::vector<double>> inputs;
    std::vector<std::vector<double>> targets;
    std::size_t size() const { return inputs.size(); }
};

// f(x) = A sin(phi + x), x ~ Unif(-5, 5), fit by a shared MLP. Noise-free.
struct SinewaveBackend {
    double amplitude;
    double phase;
};

// Deterministic quadratic loss with optional injected per-sample Gaussian
// gradient noise of known standard deviation (test configs only).
struct QuadraticBackend {
    QuadraticModel model;
    double noise_std = 0.0;
};

// Fixed per-client dataset over shared class-conditional Gaussian blobs,
// targets one-hot; batches sample with replacement from the client's data.
struct BlobBackend {
    std::vector<std::vector<double>> inputs;
    std::vector<std::vector<double>> targets;
};

struct Task {
    int id = 0;
    std::variant<SinewaveBackend, QuadraticBackend, BlobBackend> backend;
    std::optional<Batch> eval_set;  // fixed held-out sample set

    bool is_quadratic() const { return std::holds_alternative<QuadraticBackend>(backend); }
    const QuadraticBackend& quadratic() const { return std::get<QuadraticBackend>(backend); }
};

struct TaskSet {
    std::vector<Task> tasks;
    // Shared model architecture for data-driven backends (sinewave, blob);
    // unused by the quadratic backend.
    std::optional<MlpModel> arch;
    // Gradient-Lipschitz constant of the family when known exactly
    // (quadratic generation records max eigenvalue); 0 otherwise.
    double L = 0.0;

    int n() const { return static_cast<int>(tasks.size()); }
    const Task& task(int id) const { return tasks.at(static_cast<std::size_t>(id - 1)); }
    std::size_t param_dim() const;
};

// 25 training tasks: A in {1..5} x phi in {pi/5, ..., pi}, MLP 1-40-40-1.
TaskSet gen_sinewave_tasks();

// A ~ Unif(1,5), phi ~ Unif(pi/5, pi).
Task gen_unseen_sinewave(RngStream& rng);

// n quadratic tasks of dimension d with eigenvalues in [1, spread] and
// distinct optima; TaskSet.L = largest eigenvalue across tasks.
TaskSet gen_quad_tasks(int n, int d, double spread, RngStream rng,
                       double noise_std = 0.0);

// Heterogeneous client partition over shared Gaussian blob classes:
// first n/2 clients balanced (a samples of each of the first classes/2
// classes), second n/2 skewed (a/2 samples from one of the first half's
// classes plus 2a samples from one of the second half's classes).
TaskSet gen_blob_clients(int n, int d, int classes, int a, RngStream rng);

Batch sample_batch(const Task& task, int K, RngStream& rng);

double task_loss(const TaskSet& ts, const Task& task, const ParamVector& w,
                 const Batch& batch);
ParamVector stochastic_grad(const TaskSet& ts, const Task& task, const ParamVector& w,
                            const Batch& batch);
ParamVector stochastic_hvp(const TaskSet& ts, const Task& task, const ParamVector& w,
                           const ParamVector& v, const Batch& batch);

// Line-oriented text manifest (one task per line: id, backend, parameters)
// for reproducibility audits.
std::string taskset_manifest(const TaskSet& ts);

}  // namespace metamem
