#include "metamem/models.hpp"

#include <cmath>
#include <stdexcept>

namespace metamem {

QuadraticModel::QuadraticModel(std::vector<double> a_rowmajor, std::vector<double> b,
                               double c)
    : d_(b.size()), a_(std::move(a_rowmajor)), b_(std::move(b)), c_(c) {
    if (a_.size() != d_ * d_)
        throw std::invalid_argument("QuadraticModel: A must be d x d");
    for (std::size_t i = 0; i < d_; ++i)
        for (std::size_t j = i + 1; j < d_; ++j)
            if (std::abs(a_[i * d_ + j] - a_[j * d_ + i]) > 1e-12)
                throw std::invalid_argument("QuadraticModel: A not symmetric");
    // PSD check via Cholesky with zero tolerance on the diagonal
    std::vector<double> m = a_;
    for (std::size_t k = 0; k < d_; ++k) {
        double diag = m[k * d_ + k];
        if (diag < -1e-12)
            throw std::invalid_argument("QuadraticModel: A not positive semidefinite");
        if (diag <= 0.0) continue;  // semidefinite direction, skip elimination
        for (std::size_t i = k + 1; i < d_; ++i) {
            double f = m[i * d_ + k] / diag;
            for (std::size_t j = k; j < d_; ++j) m[i * d_ + j] -= f * m[k * d_ + j];
        }
    }
}

ParamVector QuadraticModel::matvec(const ParamVector& v) const {
    if (v.size() != d_) throw std::invalid_argument("QuadraticModel: dim mismatch");
    ParamVector out(d_);
    for (std::size_t i = 0; i < d_; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < d_; ++j) s += a_[i * d_ + j] * v[j];
        out[i] = s;
    }
    return out;
}

double QuadraticModel::loss(const ParamVector& w) const {
    ParamVector aw = matvec(w);
    double s = 0.0, bw = 0.0;
    for (std::size_t i = 0; i < d_; ++i) {
        s += w[i] * aw[i];
        bw += b_[i] * w[i];
    }
    return 0.5 * s - bw + c_;
}

ParamVector QuadraticModel::grad(const ParamVector& w) const {
    ParamVector g = matvec(w);
    for (std::size_t i = 0; i < d_; ++i) g[i] -= b_[i];
    return g;
}

ParamVector QuadraticModel::hvp(const ParamVector& v) const { return matvec(v); }

double QuadraticModel::max_eigenvalue() const {
    ParamVector v(d_, 1.0);
    v[0] = 1.5;  // break symmetry
    double lambda = 0.0;
    for (int it = 0; it < 500; ++it) {
        ParamVector av = matvec(v);
        double nrm = av.norm();
        if (nrm == 0.0) return 0.0;
        av *= 1.0 / nrm;
        double next = av.dot(matvec(av));
        if (std::abs(next - lambda) <= 1e-13 * std::max(1.0, std::abs(next))) return next;
        lambda = next;
        v = av;
    }
    return lambda;
}

ParamVector QuadraticModel::minimizer() const {
    // Gaussian elimination with partial pivoting on [A | b]
    std::vector<double> m = a_;
    std::vector<double> rhs = b_;
    for (std::size_t k = 0; k < d_; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < d_; ++i)
            if (std::abs(m[i * d_ + k]) > std::abs(m[piv * d_ + k])) piv = i;
        if (std::abs(m[piv * d_ + k]) < 1e-14)
            throw std::runtime_error("QuadraticModel::minimizer: A singular");
        if (piv != k) {
            for (std::size_t j = 0; j < d_; ++j) std::swap(m[k * d_ + j], m[piv * d_ + j]);
            std::swap(rhs[k], rhs[piv]);
        }
        for (std::size_t i = k + 1; i < d_; ++i) {
            double f = m[i * d_ + k] / m[k * d_ + k];
            for (std::size_t j = k; j < d_; ++j) m[i * d_ + j] -= f * m[k * d_ + j];
            rhs[i] -= f * rhs[k];
        }
    }
    ParamVector w(d_);
    for (std::size_t ii = d_; ii-- > 0;) {
        double s = rhs[ii];
        for (std::size_t j = ii + 1; j < d_; ++j) s -= m[ii * d_ + j] * w[j];
        w[ii] = s / m[ii * d_ + ii];
    }
    return w;
}

MlpModel::MlpModel(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
    if (sizes_.size() < 2) throw std::invalid_argument("MlpModel: need >= 2 layer sizes");
    param_count_ = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        if (sizes_[l] < 1 || sizes_[l + 1] < 1)
            throw std::invalid_argument("MlpModel: layer sizes must be positive");
        param_count_ += static_cast<std::size_t>(sizes_[l]) * sizes_[l + 1] + sizes_[l + 1];
    }
}

namespace {
inline double relu(double x) { return x > 0.0 ? x : 0.0; }
inline double relu_deriv(double x) { return x > 0.0 ? 1.0 : 0.0; }  // 0 at exactly 0
}  // namespace

std::vector<double> MlpModel::forward(const ParamVector& w,
                                      const std::vector<double>& x) const {
    if (w.size() != param_count_) throw std::invalid_argument("MlpModel: bad param count");
    if (static_cast<int>(x.size()) != sizes_.front())
        throw std::invalid_argument("MlpModel: input dim mismatch");
    std::vector<double> act = x;
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        const int in = sizes_[l], out = sizes_[l + 1];
        std::vector<double> next(static_cast<std::size_t>(out));
        for (int o = 0; o < out; ++o) {
            double s = w[off + static_cast<std::size_t>(in) * out + o];  // bias
            for (int i = 0; i < in; ++i) s += w[off + static_cast<std::size_t>(o) * in + i] * act[i];
            next[o] = s;
        }
        off += static_cast<std::size_t>(in) * out + out;
        if (l + 2 < sizes_.size())
            for (double& v : next) v = relu(v);
        act = std::move(next);
    }
    return act;
}

std::pair<double, ParamVector> MlpModel::loss_grad(
    const ParamVector& w, const std::vector<std::vector<double>>& inputs,
    const std::vector<std::vector<double>>& targets) const {
    if (inputs.empty() || inputs.size() != targets.size())
        throw std::invalid_argument("MlpModel::loss_grad: empty or mismatched batch");
    if (w.size() != param_count_) throw std::invalid_argument("MlpModel: bad param count");
    const std::size_t n_layers = sizes_.size() - 1;
    ParamVector grad(param_count_);
    double loss = 0.0;
    const double inv_n = 1.0 / static_cast<double>(inputs.size());

    std::vector<std::vector<double>> pre(n_layers);  // pre-activations per layer
    std::vector<std::vector<double>> act(n_layers + 1);

    for (std::size_t s = 0; s < inputs.size(); ++s) {
        act[0] = inputs[s];
        std::size_t off = 0;
        for (std::size_t l = 0; l < n_layers; ++l) {
            const int in = sizes_[l], out = sizes_[l + 1];
            pre[l].assign(static_cast<std::size_t>(out), 0.0);
            for (int o = 0; o < out; ++o) {
                double z = w[off + static_cast<std::size_t>(in) * out + o];
                for (int i = 0; i < in; ++i)
                    z += w[off + static_cast<std::size_t>(o) * in + i] * act[l][i];
                pre[l][o] = z;
            }
            off += static_cast<std::size_t>(in) * out + out;
            act[l + 1] = pre[l];
            if (l + 1 < n_layers)
                for (double& v : act[l + 1]) v = relu(v);
        }
        // ½‖ŷ − y‖² residual
        std::vector<double> delta(act[n_layers].size());
        for (std::size_t o = 0; o < delta.size(); ++o) {
            double r = act[n_layers][o] - targets[s][o];
            loss += 0.5 * r * r * inv_n;
            delta[o] = r * inv_n;
        }
        // backprop
        off = param_count_;
        for (std::size_t l = n_layers; l-- > 0;) {
            const int in = sizes_[l], out = sizes_[l + 1];
            off -= static_cast<std::size_t>(in) * out + out;
            if (l + 1 < n_layers)
                for (int o = 0; o < out; ++o) delta[o] *= relu_deriv(pre[l][o]);
            std::vector<double> prev_delta(static_cast<std::size_t>(in), 0.0);
            for (int o = 0; o < out; ++o) {
                grad[off + static_cast<std::size_t>(in) * out + o] += delta[o];
                for (int i = 0; i < in; ++i) {
                    grad[off + static_cast<std::size_t>(o) * in + i] += delta[o] * act[l][i];
                    prev_delta[i] += w[off + static_cast<std::size_t>(o) * in + i] * delta[o];
                }
            }
            delta = std::move(prev_delta);
        }
    }
    return {loss, grad};
}

ParamVector MlpModel::init_params(RngStream rng) const {
    ParamVector w(param_count_);
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        const int in = sizes_[l], out = sizes_[l + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        const std::size_t n_params = static_cast<std::size_t>(in) * out + out;
        for (std::size_t k = 0; k < n_params; ++k) w[off + k] = rng.uniform(-bound, bound);
        off += n_params;
    }
    return w;
}

ParamVector hvp_fd(const std::function<ParamVector(const ParamVector&)>& grad_fn,
                   const ParamVector& w, const ParamVector& v, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("hvp_fd: eps must be > 0");
    ParamVector wp = w, wm = w;
    wp.axpy(eps, v);
    wm.axpy(-eps, v);
    ParamVector gp = grad_fn(wp);
    ParamVector gm = grad_fn(wm);
    gp.check_finite("hvp_fd gradient");
    gm.check_finite("hvp_fd gradient");
    gp -= gm;
    gp *= 1.0 / (2.0 * eps);
    return gp;
}

}  // namespace metamem
