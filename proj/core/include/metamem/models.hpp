#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "metamem/param_vector.hpp"
#include "metamem/rng.hpp"

namespace metamem {

// Quadratic loss ½ wᵀAw − bᵀw + c with A symmetric PSD. Gradient and Hessian
// are exact, so this backend satisfies the L-smooth / rho=0 regime with
// L = largest eigenvalue of A.
class QuadraticModel {
public:
    QuadraticModel(std::vector<double> a_rowmajor, std::vector<double> b, double c);

    std::size_t dim() const { return d_; }
    double c() const { return c_; }
    const std::vector<double>& a() const { return a_; }
    const std::vector<double>& b() const { return b_; }

    double loss(const ParamVector& w) const;
    ParamVector grad(const ParamVector& w) const;  // A w − b
    ParamVector hvp(const ParamVector& v) const;   // A v, independent of w
    // largest eigenvalue of A (power iteration; exact enough for step bounds)
    double max_eigenvalue() const;
    // solves A w = b (Cholesky); requires A positive definite
    ParamVector minimizer() const;

private:
    ParamVector matvec(const ParamVector& v) const;
    std::size_t d_;
    std::vector<double> a_;  // row-major d x d
    std::vector<double> b_;
    double c_;
};

// Fully connected ReLU network described by its layer sizes; parameters live
// externally in a ParamVector, flattened per layer as weights (out x in,
// row-major) then biases. ReLU uses subgradient 0 at exactly 0.
class MlpModel {
public:
    explicit MlpModel(std::vector<int> layer_sizes);

    const std::vector<int>& layer_sizes() const { return sizes_; }
    std::size_t param_count() const { return param_count_; }

    std::vector<double> forward(const ParamVector& w, const std::vector<double>& x) const;

    // Mean over the batch of ½‖ŷ − y‖²; gradient by reverse-mode backprop.
    // inputs[k] / targets[k] are parallel samples.
    std::pair<double, ParamVector> loss_grad(
        const ParamVector& w,
        const std::vector<std::vector<double>>& inputs,
        const std::vector<std::vector<double>>& targets) const;

    // Per-layer uniform init in [−1/√fan_in, +1/√fan_in].
    ParamVector init_params(RngStream rng) const;

private:
    std::vector<int> sizes_;
    std::size_t param_count_;
};

// Symmetric-difference Hessian-vector product of a gradient evaluator:
// (grad(w + eps v) − grad(w − eps v)) / (2 eps). Exact for quadratic losses
// up to rounding; O(eps²) error otherwise.
ParamVector hvp_fd(const std::function<ParamVector(const ParamVector&)>& grad_fn,
                   const ParamVector& w, const ParamVector& v, double eps);

// Default FD step used throughout: 1e-4 · (1 + ‖w‖∞).
inline double default_hvp_eps(const ParamVector& w) { return 1e-4 * (1.0 + w.inf_norm()); }

}  // namespace metamem
