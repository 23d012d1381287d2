#pragma once

#include <vector>

#include "metamem/param_vector.hpp"
#include "metamem/tasks.hpp"

namespace metamem {

struct MemoryStore;  // optim.hpp

// Ground-truth evaluator over a task set. Analytic handles require every task
// to carry the quadratic backend and evaluate the meta-objective exactly;
// empirical handles fall back to a frozen per-task evaluation set and are
// eval-set oracles, not population ones.
class OracleHandle {
public:
    static OracleHandle analytic(const TaskSet& ts, double alpha);
    // Sinewave tasks get a fixed uniform grid of grid_points on [-5, 5];
    // other backends reuse their own eval_set / full data.
    static OracleHandle empirical(const TaskSet& ts, double alpha, long grid_points);

    bool is_analytic() const { return analytic_; }
    double alpha() const { return alpha_; }
    const TaskSet& tasks() const { return *ts_; }

    // v_i(w) = w − alpha * grad L_i(w) with population (or full-eval-set) gradient
    ParamVector exact_inner(int task_id, const ParamVector& w) const;
    // F(w) = (1/n) sum L_i(v_i(w))
    double exact_meta_value(const ParamVector& w) const;
    // (1/n) sum (I − alpha H_i(w)) grad L_i(v_i(w))
    ParamVector exact_meta_grad(const ParamVector& w) const;
    // central finite differences of exact_meta_value, coordinate-wise
    ParamVector fd_meta_grad(const ParamVector& w, double eps) const;
    // Upsilon = (1/n) sum ||u_i − v_i(w)||²; tasks with no memory entry
    // contribute through their would-be value v_i(w), i.e. zero.
    double tracking_error(const MemoryStore& memory, const ParamVector& w) const;

    // deterministic descent w <- w − eta * exact_meta_grad(w); returns the
    // T+1 visited points including w0
    std::vector<ParamVector> exact_gd_reference(const ParamVector& w0, double eta,
                                                long T) const;

private:
    ParamVector full_grad(int task_id, const ParamVector& w) const;
    double full_loss(int task_id, const ParamVector& w) const;
    ParamVector full_hvp(int task_id, const ParamVector& w, const ParamVector& v) const;

    const TaskSet* ts_ = nullptr;
    double alpha_ = 0.0;
    bool analytic_ = false;
    std::vector<Batch> eval_sets_;  // per task, empirical handles only
};

}  // namespace metamem
