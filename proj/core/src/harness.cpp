#include "metamem/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>

#include "metamem/oracle.hpp"

namespace metamem {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

[[noreturn]] void config_error(const std::string& origin, int line, const std::string& msg) {
    throw std::invalid_argument(origin + ":" + std::to_string(line) + ": " + msg);
}

double parse_double(const std::string& origin, int line, const std::string& v) {
    try {
        std::size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        config_error(origin, line, "expected a real number, got '" + v + "'");
    }
}

long parse_long(const std::string& origin, int line, const std::string& v) {
    try {
        std::size_t pos = 0;
        long x = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        config_error(origin, line, "expected an integer, got '" + v + "'");
    }
}

bool parse_bool(const std::string& origin, int line, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    config_error(origin, line, "expected true/false, got '" + v + "'");
}

std::vector<double> parse_double_list(const std::string& origin, int line,
                                      const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(origin, line, trim(item)));
    return out;
}

std::string fmt17(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

}  // namespace

RunConfig parse_config(std::istream& in, const std::string& origin) {
    RunConfig cfg;
    std::set<std::string> seen;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            config_error(origin, lineno, "expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            config_error(origin, lineno, "expected 'key = value'");
        if (!seen.insert(key).second)
            config_error(origin, lineno, "duplicate key '" + key + "'");

        if (key == "algorithm") {
            try { cfg.algorithm = algorithm_from_string(val); }
            catch (const std::exception& e) { config_error(origin, lineno, e.what()); }
        } else if (key == "task_family") {
            try { cfg.task_family = task_family_from_string(val); }
            catch (const std::exception& e) { config_error(origin, lineno, e.what()); }
        } else if (key == "fed_mode") {
            try { cfg.fed_mode = fed_mode_from_string(val); }
            catch (const std::exception& e) { config_error(origin, lineno, e.what()); }
        } else if (key == "alpha") cfg.alpha = parse_double(origin, lineno, val);
        else if (key == "eta") cfg.eta = parse_double(origin, lineno, val);
        else if (key == "eta0") cfg.eta0 = parse_double(origin, lineno, val);
        else if (key == "beta") cfg.beta = parse_double(origin, lineno, val);
        else if (key == "B") cfg.B = static_cast<int>(parse_long(origin, lineno, val));
        else if (key == "K") cfg.K = static_cast<int>(parse_long(origin, lineno, val));
        else if (key == "K0") cfg.K0 = static_cast<int>(parse_long(origin, lineno, val));
        else if (key == "H") cfg.H = static_cast<int>(parse_long(origin, lineno, val));
        else if (key == "R") cfg.R = parse_long(origin, lineno, val);
        else if (key == "T") cfg.T = parse_long(origin, lineno, val);
        else if (key == "n") cfg.n = static_cast<int>(parse_long(origin, lineno, val));
        else if (key == "L") cfg.L = parse_double(origin, lineno, val);
        else if (key == "rho") cfg.rho = parse_double(origin, lineno, val);
        else if (key == "p") cfg.p = parse_double_list(origin, lineno, val);
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_long(origin, lineno, val));
        else if (key == "taskset_seed") cfg.taskset_seed = static_cast<std::uint64_t>(parse_long(origin, lineno, val));
        else if (key == "quad_dim") cfg.quad_dim = static_cast<int>(parse_long(origin, lineno, val));
        else if (key == "quad_spread") cfg.quad_spread = parse_double(origin, lineno, val);
        else if (key == "noise_std") cfg.noise_std = parse_double(origin, lineno, val);
        else if (key == "blob_classes") cfg.blob_classes = static_cast<int>(parse_long(origin, lineno, val));
        else if (key == "blob_dim") cfg.blob_dim = static_cast<int>(parse_long(origin, lineno, val));
        else if (key == "blob_a") cfg.blob_a = static_cast<int>(parse_long(origin, lineno, val));
        else if (key == "eta_decay") cfg.eta_decay = parse_bool(origin, lineno, val);
        else if (key == "timing") cfg.timing = parse_bool(origin, lineno, val);
        else if (key == "oracle_grid") cfg.oracle_grid = parse_long(origin, lineno, val);
        else config_error(origin, lineno, "unknown key '" + key + "'");
    }
    try {
        cfg.validate();
    } catch (const std::exception& e) {
        throw std::invalid_argument(origin + ": " + e.what());
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    return parse_config(in, path);
}

std::vector<AdaptationResult> evaluate_adaptation(
    const TaskSet& ts, const ParamVector& w, const std::vector<Task>& unseen_tasks,
    int shots, int steps, double lr, int test_points, RngStream rng) {
    if (shots < 1 || test_points < 1 || steps < 0)
        throw std::invalid_argument("evaluate_adaptation: bad protocol parameters");
    std::vector<AdaptationResult> results;
    int idx = 0;
    for (const Task& task : unseen_tasks) {
        RngStream task_rng = rng.substream("adapt", static_cast<std::uint64_t>(idx++));
        RngStream support_rng = task_rng.substream("support", 0);
        RngStream test_rng = task_rng.substream("test", 0);
        Batch support = sample_batch(task, shots, support_rng);
        Batch test = sample_batch(task, test_points, test_rng);

        AdaptationResult res;
        if (const auto* sw = std::get_if<SinewaveBackend>(&task.backend)) {
            res.amplitude = sw->amplitude;
            res.phase = sw->phase;
        }
        res.steps = steps;
        res.shots = shots;
        res.pre_adapt_error = task_loss(ts, task, w, test);
        ParamVector adapted = w;
        for (int s = 0; s < steps; ++s)
            adapted.axpy(-lr, stochastic_grad(ts, task, adapted, support));
        res.post_adapt_error = task_loss(ts, task, adapted, test);
        if (!std::isfinite(res.post_adapt_error))
            throw std::runtime_error("evaluate_adaptation: non-finite test error");
        results.push_back(res);
    }
    return results;
}

std::string metrics_csv_header() {
    return "run_id,algorithm,seed,t_or_r,train_error,oracle_grad_norm,oracle_value,"
           "tracking_error,samples_used,comms,wall_ms";
}

std::string metrics_csv_row(const MetricsRecord& rec) {
    std::ostringstream os;
    os << rec.run_id << ',' << to_string(rec.algorithm) << ',' << rec.seed << ','
       << rec.t_or_r << ',' << fmt17(rec.train_error) << ',';
    if (rec.oracle_grad_norm) os << fmt17(*rec.oracle_grad_norm);
    os << ',';
    if (rec.oracle_value) os << fmt17(*rec.oracle_value);
    os << ',';
    if (rec.tracking_error) os << fmt17(*rec.tracking_error);
    os << ',' << rec.samples_used << ',' << rec.comms << ',';
    if (rec.wall_ms) os << fmt17(*rec.wall_ms);
    return os.str();
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsRecord>& recs) {
    std::ofstream out(path, std::ios::binary);  // LF endings on every platform
    if (!out) throw std::runtime_error("cannot open CSV for writing: " + path);
    out << metrics_csv_header() << '\n';
    for (const MetricsRecord& rec : recs) out << metrics_csv_row(rec) << '\n';
}

TaskSet build_taskset(const RunConfig& cfg) {
    RngStream rng(cfg.effective_taskset_seed());
    switch (cfg.task_family) {
        case TaskFamily::sinewave:
            return gen_sinewave_tasks();
        case TaskFamily::quadratic:
            return gen_quad_tasks(cfg.n, cfg.quad_dim, cfg.quad_spread,
                                  rng.substream("taskset", 0), cfg.noise_std);
        case TaskFamily::blob:
            return gen_blob_clients(cfg.n, cfg.blob_dim, cfg.blob_classes, cfg.blob_a,
                                    rng.substream("taskset", 0));
    }
    throw std::invalid_argument("build_taskset: unknown task family");
}

RunSummary run_experiment(const RunConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    TaskSet ts = build_taskset(cfg);
    if (static_cast<int>(ts.tasks.size()) != cfg.n && cfg.task_family == TaskFamily::sinewave) {
        // the sinewave benchmark fixes n = 25
        if (cfg.n != 25)
            throw std::invalid_argument("sinewave task family requires n = 25");
    }

    std::unique_ptr<OracleHandle> oracle;
    if (cfg.task_family == TaskFamily::quadratic)
        oracle = std::make_unique<OracleHandle>(OracleHandle::analytic(ts, cfg.alpha));

    const std::string run_id =
        to_string(cfg.algorithm) + "_" + to_string(cfg.task_family) + "_s" +
        std::to_string(cfg.seed);

    auto start = std::chrono::steady_clock::now();
    std::vector<MetricsRecord> records;
    ParamVector final_w;
    long total_iters = 0;
    if (cfg.is_federated()) {
        ServerState server;
        std::vector<RoundReport> reports = run_federated(cfg, ts, oracle.get(), &server);
        final_w = server.w_global;
        total_iters = cfg.R * cfg.H;
        MetricsRecord init;
        init.run_id = run_id;
        init.algorithm = cfg.algorithm;
        init.seed = cfg.seed;
        init.t_or_r = 0;
        records.push_back(init);
        for (const RoundReport& rep : reports) {
            MetricsRecord rec;
            rec.run_id = run_id;
            rec.algorithm = cfg.algorithm;
            rec.seed = cfg.seed;
            rec.t_or_r = rep.r;
            rec.train_error = rep.train_error;
            rec.oracle_grad_norm = rep.oracle_grad_norm;
            rec.tracking_error = rep.mean_tracking_error;
            rec.samples_used = rep.samples_used;
            rec.comms = rep.comms;
            records.push_back(std::move(rec));
        }
    } else {
        OptState state;
        records = run_optimizer(cfg, ts, oracle.get(), &state);
        final_w = state.w;
        total_iters = cfg.T;
        for (MetricsRecord& rec : records) rec.run_id = run_id;
    }
    auto elapsed = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - start)
                       .count();
    if (cfg.timing && !records.empty())
        records.back().wall_ms = elapsed;

    std::filesystem::create_directories(out_dir);
    const std::string csv_path = out_dir + "/" + run_id + ".csv";
    write_metrics_csv(csv_path, records);
    {
        std::ofstream mf(out_dir + "/" + run_id + ".tasks.txt", std::ios::binary);
        mf << taskset_manifest(ts);
    }

    RunSummary summary;
    summary.run_id = run_id;
    summary.algorithm = cfg.algorithm;
    summary.seed = cfg.seed;
    summary.final_train_error = records.back().train_error;
    summary.samples_used = records.back().samples_used;
    summary.comms = records.back().comms;
    summary.mean_wall_ms_per_iter = total_iters > 0 ? elapsed / static_cast<double>(total_iters) : 0.0;
    summary.csv_path = csv_path;

    if (cfg.task_family == TaskFamily::sinewave) {
        RngStream eval_rng = RngStream(cfg.seed).substream("unseen", 0);
        std::vector<Task> unseen;
        for (int k = 0; k < 5; ++k) unseen.push_back(gen_unseen_sinewave(eval_rng));
        auto results = evaluate_adaptation(ts, final_w, unseen, 10, 10, 0.01, 100,
                                           RngStream(cfg.seed).substream("adapt_eval", 0));
        double mean = 0.0;
        for (const auto& r : results) mean += r.post_adapt_error;
        mean /= static_cast<double>(results.size());
        double var = 0.0;
        for (const auto& r : results) {
            double d = r.post_adapt_error - mean;
            var += d * d;
        }
        var /= static_cast<double>(results.size() - 1);
        summary.mean_test_error = mean;
        summary.std_test_error = std::sqrt(var);
        summary.has_test_error = true;
    }
    return summary;
}

std::vector<ComparisonRow> compare_algorithms(
    const std::vector<std::pair<std::string, RunConfig>>& configs, int seeds,
    const std::string& out_dir) {
    if (configs.empty()) throw std::invalid_argument("compare_algorithms: no configs");
    const std::uint64_t taskset_seed = configs.front().second.effective_taskset_seed();
    for (const auto& [path, cfg] : configs)
        if (cfg.effective_taskset_seed() != taskset_seed)
            throw std::invalid_argument("compare_algorithms: configs must share the "
                                        "taskset seed (mismatch in " + path + ")");
    std::vector<ComparisonRow> rows;
    for (const auto& [path, base] : configs) {
        ComparisonRow row;
        row.config_path = path;
        row.algorithm = base.algorithm;
        row.beta = base.beta;
        row.K = base.K;
        row.n_seeds = seeds;
        std::vector<double> errs;
        double wall = 0.0;
        for (int s = 0; s < seeds; ++s) {
            RunConfig cfg = base;
            cfg.seed = base.seed + static_cast<std::uint64_t>(s);
            cfg.taskset_seed = taskset_seed;
            RunSummary summary = run_experiment(cfg, out_dir);
            errs.push_back(summary.has_test_error ? summary.mean_test_error
                                                  : summary.final_train_error);
            wall += summary.mean_wall_ms_per_iter;
        }
        double mean = 0.0;
        for (double e : errs) mean += e;
        mean /= static_cast<double>(errs.size());
        double var = 0.0;
        for (double e : errs) var += (e - mean) * (e - mean);
        row.mean_test_error = mean;
        row.std_test_error = errs.size() > 1
                                 ? std::sqrt(var / static_cast<double>(errs.size() - 1))
                                 : 0.0;
        row.mean_wall_ms_per_iter = wall / static_cast<double>(seeds);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string format_comparison_table(const std::vector<ComparisonRow>& rows) {
    std::ostringstream os;
    os << "config,algorithm,beta,K,seeds,mean_test_error,std_test_error,"
          "mean_wall_ms_per_iter\n";
    for (const ComparisonRow& r : rows) {
        os << r.config_path << ',' << to_string(r.algorithm) << ',' << r.beta << ','
           << r.K << ',' << r.n_seeds << ',' << fmt17(r.mean_test_error) << ','
           << fmt17(r.std_test_error) << ',' << r.mean_wall_ms_per_iter << '\n';
    }
    return os.str();
}

}  // namespace metamem
