#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include <CLI11.hpp>

#include "metamem/fedsim.hpp"
#include "metamem/harness.hpp"
#include "metamem/oracle.hpp"
#include "metamem/optim.hpp"

using namespace metamem;

namespace {

int cmd_run(const std::string& config_path, long seed_override, const std::string& out) {
    RunConfig cfg = load_config(config_path);
    if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
    RunSummary s = run_experiment(cfg, out);
    std::cout << "run " << s.run_id << " finished\n"
              << "  csv: " << s.csv_path << "\n"
              << "  final train error: " << s.final_train_error << "\n";
    if (s.has_test_error)
        std::cout << "  adaptation test error: " << s.mean_test_error << " +- "
                  << s.std_test_error << " (5 unseen tasks)\n";
    std::cout << "  samples used: " << s.samples_used << ", comms: " << s.comms << "\n";
    return 0;
}

int cmd_compare(const std::vector<std::string>& config_paths, int seeds,
                const std::string& out) {
    std::vector<std::pair<std::string, RunConfig>> configs;
    for (const std::string& p : config_paths) configs.emplace_back(p, load_config(p));
    auto rows = compare_algorithms(configs, seeds, out);
    std::string table = format_comparison_table(rows);
    std::filesystem::create_directories(out);
    std::ofstream f(out + "/comparison.csv", std::ios::binary);
    f << table;
    std::cout << table;
    return 0;
}

bool check(bool ok, const std::string& name) {
    std::cout << (ok ? "PASS " : "FAIL ") << name << "\n";
    return ok;
}

// Compact oracle / invariant suite; the full acceptance battery lives in the
// test tree.
int cmd_verify() {
    bool all = true;

    {
        TaskSet ts = gen_quad_tasks(6, 5, 8.0, RngStream(11));
        OracleHandle oracle = OracleHandle::analytic(ts, 0.05);
        ParamVector w(5);
        RngStream r(3);
        for (std::size_t i = 0; i < 5; ++i) w[i] = r.normal();
        ParamVector g = oracle.exact_meta_grad(w);
        ParamVector fd = oracle.fd_meta_grad(w, 1e-5 * (1.0 + w.inf_norm()));
        all &= check((g - fd).norm() / std::max(1e-12, g.norm()) < 1e-6,
                     "exact_meta_grad vs finite differences");

        OracleHandle emp = OracleHandle::empirical(ts, 0.05, 1);
        all &= check((emp.exact_meta_grad(w) - g).norm() < 1e-12,
                     "empirical oracle agrees with analytic on quadratics");
    }
    {
        TaskSet ts = gen_sinewave_tasks();
        RngStream r(5);
        ParamVector w = ts.arch->init_params(r.substream("w", 0));
        RngStream br = r.substream("batch", 0);
        Batch b = sample_batch(ts.task(3), 8, br);
        auto [loss, grad] = ts.arch->loss_grad(w, b.inputs, b.targets);
        (void)loss;
        double max_rel = 0.0;
        const double eps = 1e-5;
        ParamVector wp = w;
        for (std::size_t i = 0; i < w.size(); i += 97) {  // spot-check coordinates
            wp[i] = w[i] + eps;
            double fp = ts.arch->loss_grad(wp, b.inputs, b.targets).first;
            wp[i] = w[i] - eps;
            double fm = ts.arch->loss_grad(wp, b.inputs, b.targets).first;
            wp[i] = w[i];
            double fd = (fp - fm) / (2 * eps);
            max_rel = std::max(max_rel, std::abs(fd - grad[i]) / (1e-8 + std::abs(grad[i])));
        }
        all &= check(max_rel < 1e-5, "MLP backprop vs finite differences");
    }
    {
        RunConfig cfg;
        cfg.algorithm = Algorithm::moml_v1;
        cfg.task_family = TaskFamily::quadratic;
        cfg.n = 6;
        cfg.B = 3;
        cfg.T = 50;
        cfg.alpha = 0.05;
        cfg.eta = 0.01;
        cfg.seed = 7;
        TaskSet ts = build_taskset(cfg);
        OracleHandle oracle = OracleHandle::analytic(ts, cfg.alpha);
        auto rec1 = run_optimizer(cfg, ts, &oracle);
        auto rec2 = run_optimizer(cfg, ts, &oracle);
        bool same = rec1.size() == rec2.size();
        for (std::size_t i = 0; same && i < rec1.size(); ++i)
            same = metrics_csv_row(rec1[i]) == metrics_csv_row(rec2[i]);
        all &= check(same, "replay determinism");
    }
    return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"memory-based meta-learning optimization toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out";
    long seed_override = -1;
    auto* run = app.add_subcommand("run", "run one experiment config");
    run->add_option("--config", config_path, "config file path")->required();
    run->add_option("--seed", seed_override, "override the config's seed");
    run->add_option("--out", out_dir, "output directory");

    std::vector<std::string> compare_paths;
    int seeds = 5;
    std::string fed_mode;
    auto* cmp = app.add_subcommand("compare", "run several configs and tabulate");
    cmp->add_option("--configs", compare_paths, "config file paths")->required();
    cmp->add_option("--seeds", seeds, "seeds per config");
    cmp->add_option("--out", out_dir, "output directory");

    auto* verify = app.add_subcommand("verify", "run the oracle/invariant suite");
    (void)verify;

    std::string run_fed_mode;
    run->add_option("--fed-mode", run_fed_mode,
                    "override fed_mode: cross_silo or cross_device");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("run")) {
            if (!run_fed_mode.empty()) {
                RunConfig cfg = load_config(config_path);
                cfg.fed_mode = fed_mode_from_string(run_fed_mode);
                if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
                cfg.validate();
                RunSummary s = run_experiment(cfg, out_dir);
                std::cout << "run " << s.run_id << " finished; csv: " << s.csv_path << "\n";
                return 0;
            }
            return cmd_run(config_path, seed_override, out_dir);
        }
        if (app.got_subcommand("compare")) return cmd_compare(compare_paths, seeds, out_dir);
        if (app.got_subcommand("verify")) return cmd_verify();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
