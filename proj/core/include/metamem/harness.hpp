#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "metamem/config.hpp"
#include "metamem/fedsim.hpp"
#include "metamem/optim.hpp"
#include "metamem/tasks.hpp"

namespace metamem {

// Flat `key = value` config file, `#` comments; unknown or duplicate keys are
// a hard error with the offending line number. All RunConfig invariants are
// enforced at load time.
RunConfig load_config(const std::string& path);
RunConfig parse_config(std::istream& in, const std::string& origin);

struct AdaptationResult {
    double amplitude = 0.0;  // task parameters (sinewave)
    double phase = 0.0;
    double pre_adapt_error = 0.0;
    double post_adapt_error = 0.0;
    int steps = 0;
    int shots = 0;
};

// Few-shot protocol: copy w, run `steps` full-batch GD steps on a
// `shots`-point support set, report MSE on a fresh `test_points`-point set.
std::vector<AdaptationResult> evaluate_adaptation(
    const TaskSet& ts, const ParamVector& w, const std::vector<Task>& unseen_tasks,
    int shots, int steps, double lr, int test_points, RngStream rng);

struct RunSummary {
    std::string run_id;
    Algorithm algorithm = Algorithm::moml_v1;
    std::uint64_t seed = 0;
    double final_train_error = 0.0;
    double mean_test_error = 0.0;   // adaptation eval (sinewave configs)
    double std_test_error = 0.0;
    bool has_test_error = false;
    long samples_used = 0;
    long comms = 0;
    double mean_wall_ms_per_iter = 0.0;
    std::string csv_path;
};

std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsRecord& rec);
void write_metrics_csv(const std::string& path, const std::vector<MetricsRecord>& recs);

TaskSet build_taskset(const RunConfig& cfg);

// Runs one config end to end: dispatches to the centralized or federated
// driver, writes the per-step CSV under out_dir, and for sinewave configs
// runs the adaptation evaluation on 5 unseen tasks.
RunSummary run_experiment(const RunConfig& cfg, const std::string& out_dir);

struct ComparisonRow {
    std::string config_path;
    Algorithm algorithm = Algorithm::moml_v1;
    double beta = 0.0;
    int K = 0;
    int n_seeds = 0;
    double mean_test_error = 0.0;
    double std_test_error = 0.0;
    double mean_wall_ms_per_iter = 0.0;
};

// Runs each config over `seeds` consecutive seeds starting at its own seed;
// all configs must share the same taskset seed.
std::vector<ComparisonRow> compare_algorithms(
    const std::vector<std::pair<std::string, RunConfig>>& configs, int seeds,
    const std::string& out_dir);

std::string format_comparison_table(const std::vector<ComparisonRow>& rows);

}  // namespace metamem
