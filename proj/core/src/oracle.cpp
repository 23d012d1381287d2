#include "metamem/oracle.hpp"

#include <cmath>
#include <stdexcept>

#include "metamem/optim.hpp"

namespace metamem {

OracleHandle OracleHandle::analytic(const TaskSet& ts, double alpha) {
    for (const Task& t : ts.tasks)
        if (!t.is_quadratic())
            throw std::invalid_argument("analytic oracle requires quadratic tasks");
    OracleHandle h;
    h.ts_ = &ts;
    h.alpha_ = alpha;
    h.analytic_ = true;
    return h;
}

OracleHandle OracleHandle::empirical(const TaskSet& ts, double alpha, long grid_points) {
    OracleHandle h;
    h.ts_ = &ts;
    h.alpha_ = alpha;
    h.analytic_ = false;
    h.eval_sets_.reserve(ts.tasks.size());
    for (const Task& t : ts.tasks) {
        Batch b;
        if (const auto* sw = std::get_if<SinewaveBackend>(&t.backend)) {
            b.inputs.reserve(static_cast<std::size_t>(grid_points));
            b.targets.reserve(static_cast<std::size_t>(grid_points));
            for (long k = 0; k < grid_points; ++k) {
                double x = -5.0 + 10.0 * (static_cast<double>(k) + 0.5) /
                                      static_cast<double>(grid_points);
                b.inputs.push_back({x});
                b.targets.push_back({sw->amplitude * std::sin(sw->phase + x)});
            }
        } else if (const auto* bk = std::get_if<BlobBackend>(&t.backend)) {
            b.inputs = bk->inputs;
            b.targets = bk->targets;
        } else {
            // quadratic: deterministic backend, any nonempty batch is the population
            b.inputs.push_back(std::vector<double>(t.quadratic().model.dim(), 0.0));
        }
        if (t.eval_set) b = *t.eval_set;
        h.eval_sets_.push_back(std::move(b));
    }
    return h;
}

ParamVector OracleHandle::full_grad(int task_id, const ParamVector& w) const {
    const Task& t = ts_->task(task_id);
    if (analytic_) return t.quadratic().model.grad(w);
    return stochastic_grad(*ts_, t, w, eval_sets_[static_cast<std::size_t>(task_id - 1)]);
}

double OracleHandle::full_loss(int task_id, const ParamVector& w) const {
    const Task& t = ts_->task(task_id);
    if (analytic_) return t.quadratic().model.loss(w);
    return task_loss(*ts_, t, w, eval_sets_[static_cast<std::size_t>(task_id - 1)]);
}

ParamVector OracleHandle::full_hvp(int task_id, const ParamVector& w,
                                   const ParamVector& v) const {
    const Task& t = ts_->task(task_id);
    if (analytic_) return t.quadratic().model.hvp(v);
    return stochastic_hvp(*ts_, t, w, v, eval_sets_[static_cast<std::size_t>(task_id - 1)]);
}

ParamVector OracleHandle::exact_inner(int task_id, const ParamVector& w) const {
    ParamVector v = w;
    v.axpy(-alpha_, full_grad(task_id, w));
    return v;
}

double OracleHandle::exact_meta_value(const ParamVector& w) const {
    double f = 0.0;
    for (const Task& t : ts_->tasks) f += full_loss(t.id, exact_inner(t.id, w));
    return f / static_cast<double>(ts_->n());
}

ParamVector OracleHandle::exact_meta_grad(const ParamVector& w) const {
    ParamVector acc(w.size());
    for (const Task& t : ts_->tasks) {
        ParamVector g = full_grad(t.id, exact_inner(t.id, w));
        g.axpy(-alpha_, full_hvp(t.id, w, g));
        acc += g;
    }
    acc *= 1.0 / static_cast<double>(ts_->n());
    return acc;
}

ParamVector OracleHandle::fd_meta_grad(const ParamVector& w, double eps) const {
    if (!(eps > 0.0)) throw std::invalid_argument("fd_meta_grad: eps must be > 0");
    ParamVector g(w.size());
    ParamVector wp = w;
    for (std::size_t i = 0; i < w.size(); ++i) {
        wp[i] = w[i] + eps;
        double fp = exact_meta_value(wp);
        wp[i] = w[i] - eps;
        double fm = exact_meta_value(wp);
        wp[i] = w[i];
        g[i] = (fp - fm) / (2.0 * eps);
    }
    return g;
}

double OracleHandle::tracking_error(const MemoryStore& memory, const ParamVector& w) const {
    double acc = 0.0;
    for (const Task& t : ts_->tasks) {
        auto it = memory.u.find(t.id);
        if (it == memory.u.end()) continue;  // would-be value is v_i(w): zero gap
        ParamVector diff = it->second - exact_inner(t.id, w);
        acc += diff.norm_sq();
    }
    return acc / static_cast<double>(ts_->n());
}

std::vector<ParamVector> OracleHandle::exact_gd_reference(const ParamVector& w0,
                                                          double eta, long T) const {
    std::vector<ParamVector> traj;
    traj.reserve(static_cast<std::size_t>(T) + 1);
    traj.push_back(w0);
    ParamVector w = w0;
    for (long t = 0; t < T; ++t) {
        w.axpy(-eta, exact_meta_grad(w));
        traj.push_back(w);
    }
    return traj;
}

}  // namespace metamem
