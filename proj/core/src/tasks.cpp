#include "metamem/tasks.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace metamem {

std::size_t TaskSet::param_dim() const {
    if (arch) return arch->param_count();
    if (!tasks.empty() && tasks.front().is_quadratic())
        return tasks.front().quadratic().model.dim();
    throw std::runtime_error("TaskSet::param_dim: empty task set");
}

TaskSet gen_sinewave_tasks() {
    TaskSet ts;
    ts.arch = MlpModel({1, 40, 40, 1});
    int id = 1;
    for (int ai = 1; ai <= 5; ++ai) {
        for (int pi_idx = 1; pi_idx <= 5; ++pi_idx) {
            Task t;
            t.id = id++;
            t.backend = SinewaveBackend{static_cast<double>(ai),
                                        pi_idx * std::numbers::pi / 5.0};
            ts.tasks.push_back(std::move(t));
        }
    }
    return ts;
}

Task gen_unseen_sinewave(RngStream& rng) {
    Task t;
    t.id = 0;
    double a = rng.uniform(1.0, 5.0);
    double phi = rng.uniform(std::numbers::pi / 5.0, std::numbers::pi);
    t.backend = SinewaveBackend{a, phi};
    return t;
}

TaskSet gen_quad_tasks(int n, int d, double spread, RngStream rng, double noise_std) {
    if (n < 1 || d < 1) throw std::invalid_argument("gen_quad_tasks: n, d must be >= 1");
    if (spread < 1.0) throw std::invalid_argument("gen_quad_tasks: spread must be >= 1");
    TaskSet ts;
    double max_eig = 0.0;
    for (int i = 1; i <= n; ++i) {
        RngStream task_rng = rng.substream("quadgen", static_cast<std::uint64_t>(i));
        // A = Q diag(lambda) Qᵀ with Q from QR of a Gaussian matrix
        std::vector<double> g(static_cast<std::size_t>(d) * d);
        for (double& x : g) x = task_rng.normal();
        // Gram-Schmidt columns
        std::vector<double> q(g);
        for (int col = 0; col < d; ++col) {
            for (int prev = 0; prev < col; ++prev) {
                double dot = 0.0;
                for (int r = 0; r < d; ++r)
                    dot += q[static_cast<std::size_t>(r) * d + col] * q[static_cast<std::size_t>(r) * d + prev];
                for (int r = 0; r < d; ++r)
                    q[static_cast<std::size_t>(r) * d + col] -= dot * q[static_cast<std::size_t>(r) * d + prev];
            }
            double nrm = 0.0;
            for (int r = 0; r < d; ++r) {
                double v = q[static_cast<std::size_t>(r) * d + col];
                nrm += v * v;
            }
            nrm = std::sqrt(nrm);
            for (int r = 0; r < d; ++r) q[static_cast<std::size_t>(r) * d + col] /= nrm;
        }
        std::vector<double> lambda(static_cast<std::size_t>(d));
        for (int k = 0; k < d; ++k)
            lambda[static_cast<std::size_t>(k)] = task_rng.uniform(1.0, spread);
        std::vector<double> a(static_cast<std::size_t>(d) * d, 0.0);
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c) {
                double s = 0.0;
                for (int k = 0; k < d; ++k)
                    s += q[static_cast<std::size_t>(r) * d + k] * lambda[static_cast<std::size_t>(k)] *
                         q[static_cast<std::size_t>(c) * d + k];
                a[static_cast<std::size_t>(r) * d + c] = s;
            }
        // enforce exact symmetry against rounding
        for (int r = 0; r < d; ++r)
            for (int c = r + 1; c < d; ++c) {
                double s = 0.5 * (a[static_cast<std::size_t>(r) * d + c] + a[static_cast<std::size_t>(c) * d + r]);
                a[static_cast<std::size_t>(r) * d + c] = s;
                a[static_cast<std::size_t>(c) * d + r] = s;
            }
        std::vector<double> b(static_cast<std::size_t>(d));
        for (double& x : b) x = task_rng.normal(0.0, 2.0);
        QuadraticModel model(std::move(a), std::move(b), 0.0);
        max_eig = std::max(max_eig, model.max_eigenvalue());
        Task t;
        t.id = i;
        t.backend = QuadraticBackend{std::move(model), noise_std};
        ts.tasks.push_back(std::move(t));
    }
    ts.L = std::max(max_eig, spread);  // spread bounds each task's eigenvalues
    return ts;
}

TaskSet gen_blob_clients(int n, int d, int classes, int a, RngStream rng) {
    if (n < 2 || n % 2 != 0) throw std::invalid_argument("gen_blob_clients: n must be even >= 2");
    if (classes < 2 || classes % 2 != 0)
        throw std::invalid_argument("gen_blob_clients: classes must be even >= 2");
    if (a < 2 || a % 2 != 0) throw std::invalid_argument("gen_blob_clients: a must be even >= 2");
    TaskSet ts;
    ts.arch = MlpModel({d, 40, 40, classes});

    // shared class-conditional Gaussians: mean per class, unit covariance
    std::vector<std::vector<double>> means(static_cast<std::size_t>(classes));
    RngStream mean_rng = rng.substream("blobmeans", 0);
    for (int c = 0; c < classes; ++c) {
        means[static_cast<std::size_t>(c)].resize(static_cast<std::size_t>(d));
        for (double& x : means[static_cast<std::size_t>(c)]) x = mean_rng.normal(0.0, 3.0);
    }
    auto draw_sample = [&](int cls, RngStream& r, BlobBackend& bk) {
        std::vector<double> x(static_cast<std::size_t>(d));
        for (int k = 0; k < d; ++k)
            x[static_cast<std::size_t>(k)] = means[static_cast<std::size_t>(cls)][static_cast<std::size_t>(k)] + r.normal();
        std::vector<double> y(static_cast<std::size_t>(classes), 0.0);
        y[static_cast<std::size_t>(cls)] = 1.0;
        bk.inputs.push_back(std::move(x));
        bk.targets.push_back(std::move(y));
    };

    const int half = classes / 2;
    for (int i = 1; i <= n; ++i) {
        RngStream client_rng = rng.substream("blobclient", static_cast<std::uint64_t>(i));
        BlobBackend bk;
        if (i <= n / 2) {
            // balanced: a samples of each of the first `half` classes
            for (int c = 0; c < half; ++c)
                for (int s = 0; s < a; ++s) draw_sample(c, client_rng, bk);
        } else {
            // skewed: a/2 from one first-half class, 2a from one second-half class
            int k = i - n / 2 - 1;
            int c1 = k % half;
            int c2 = half + k % half;
            for (int s = 0; s < a / 2; ++s) draw_sample(c1, client_rng, bk);
            for (int s = 0; s < 2 * a; ++s) draw_sample(c2, client_rng, bk);
        }
        Task t;
        t.id = i;
        t.backend = std::move(bk);
        ts.tasks.push_back(std::move(t));
    }
    return ts;
}

Batch sample_batch(const Task& task, int K, RngStream& rng) {
    if (K < 1) throw std::invalid_argument("sample_batch: K must be >= 1");
    Batch b;
    b.inputs.reserve(static_cast<std::size_t>(K));
    if (const auto* sw = std::get_if<SinewaveBackend>(&task.backend)) {
        b.targets.reserve(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k) {
            double x = rng.uniform(-5.0, 5.0);
            b.inputs.push_back({x});
            b.targets.push_back({sw->amplitude * std::sin(sw->phase + x)});
        }
    } else if (const auto* q = std::get_if<QuadraticBackend>(&task.backend)) {
        const std::size_t d = q->model.dim();
        for (int k = 0; k < K; ++k) {
            std::vector<double> noise(d, 0.0);
            if (q->noise_std > 0.0)
                for (double& x : noise) x = rng.normal(0.0, q->noise_std);
            b.inputs.push_back(std::move(noise));
        }
    } else {
        const auto& bk = std::get<BlobBackend>(task.backend);
        b.targets.reserve(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k) {
            std::size_t idx = static_cast<std::size_t>(
                rng.uniform_int(0, bk.inputs.size() - 1));
            b.inputs.push_back(bk.inputs[idx]);
            b.targets.push_back(bk.targets[idx]);
        }
    }
    return b;
}

double task_loss(const TaskSet& ts, const Task& task, const ParamVector& w,
                 const Batch& batch) {
    if (const auto* q = std::get_if<QuadraticBackend>(&task.backend)) {
        (void)batch;
        return q->model.loss(w);
    }
    return ts.arch->loss_grad(w, batch.inputs, batch.targets).first;
}

ParamVector stochastic_grad(const TaskSet& ts, const Task& task, const ParamVector& w,
                            const Batch& batch) {
    if (batch.size() == 0) throw std::invalid_argument("stochastic_grad: empty batch");
    if (const auto* q = std::get_if<QuadraticBackend>(&task.backend)) {
        ParamVector g = q->model.grad(w);
        if (q->noise_std > 0.0) {
            const double inv_k = 1.0 / static_cast<double>(batch.size());
            for (const auto& noise : batch.inputs)
                for (std::size_t i = 0; i < g.size(); ++i) g[i] += inv_k * noise[i];
        }
        return g;
    }
    return ts.arch->loss_grad(w, batch.inputs, batch.targets).second;
}

ParamVector stochastic_hvp(const TaskSet& ts, const Task& task, const ParamVector& w,
                           const ParamVector& v, const Batch& batch) {
    if (const auto* q = std::get_if<QuadraticBackend>(&task.backend))
        return q->model.hvp(v);
    auto grad_fn = [&](const ParamVector& ww) {
        return ts.arch->loss_grad(ww, batch.inputs, batch.targets).second;
    };
    return hvp_fd(grad_fn, w, v, default_hvp_eps(w));
}

std::string taskset_manifest(const TaskSet& ts) {
    std::ostringstream out;
    out.precision(17);
    for (const Task& t : ts.tasks) {
        out << t.id << ' ';
        if (const auto* sw = std::get_if<SinewaveBackend>(&t.backend)) {
            out << "sinewave A=" << sw->amplitude << " phi=" << sw->phase;
        } else if (const auto* q = std::get_if<QuadraticBackend>(&t.backend)) {
            out << "quadratic d=" << q->model.dim() << " noise_std=" << q->noise_std
                << " A=[";
            for (std::size_t k = 0; k < q->model.a().size(); ++k)
                out << (k ? "," : "") << q->model.a()[k];
            out << "] b=[";
            for (std::size_t k = 0; k < q->model.b().size(); ++k)
                out << (k ? "," : "") << q->model.b()[k];
            out << "] c=" << q->model.c();
        } else {
            const auto& bk = std::get<BlobBackend>(t.backend);
            out << "blob samples=" << bk.inputs.size();
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace metamem
