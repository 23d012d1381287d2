#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace metamem {

// Flat vector of 64-bit reals. All binary operations require equal lengths;
// a mismatch throws. Entries are expected to stay finite; callers can assert
// that with check_finite().
class ParamVector {
public:
    ParamVector() = default;
    explicit ParamVector(std::size_t n, double fill = 0.0) : v_(n, fill) {}
    explicit ParamVector(std::vector<double> values) : v_(std::move(values)) {}

    std::size_t size() const { return v_.size(); }
    double& operator[](std::size_t i) { return v_[i]; }
    double operator[](std::size_t i) const { return v_[i]; }
    const std::vector<double>& values() const { return v_; }
    std::vector<double>& values() { return v_; }

    bool is_finite() const {
        for (double x : v_)
            if (!std::isfinite(x)) return false;
        return true;
    }
    void check_finite(const char* where) const {
        if (!is_finite())
            throw std::runtime_error(std::string("non-finite value in ") + where);
    }

    ParamVector& operator+=(const ParamVector& o) {
        require_same_size(o);
        for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
        return *this;
    }
    ParamVector& operator-=(const ParamVector& o) {
        require_same_size(o);
        for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
        return *this;
    }
    ParamVector& operator*=(double c) {
        for (double& x : v_) x *= c;
        return *this;
    }

    friend ParamVector operator+(ParamVector a, const ParamVector& b) { return a += b; }
    friend ParamVector operator-(ParamVector a, const ParamVector& b) { return a -= b; }
    friend ParamVector operator*(double c, ParamVector a) { return a *= c; }
    friend ParamVector operator*(ParamVector a, double c) { return a *= c; }

    // this += c * o
    void axpy(double c, const ParamVector& o) {
        require_same_size(o);
        for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += c * o.v_[i];
    }

    double dot(const ParamVector& o) const {
        require_same_size(o);
        double s = 0.0;
        for (std::size_t i = 0; i < v_.size(); ++i) s += v_[i] * o.v_[i];
        return s;
    }
    double norm() const { return std::sqrt(dot(*this)); }
    double norm_sq() const { return dot(*this); }
    double inf_norm() const {
        double m = 0.0;
        for (double x : v_) m = std::max(m, std::abs(x));
        return m;
    }

    bool operator==(const ParamVector& o) const { return v_ == o.v_; }

private:
    void require_same_size(const ParamVector& o) const {
        if (v_.size() != o.v_.size())
            throw std::invalid_argument("ParamVector length mismatch");
    }

    std::vector<double> v_;
};

}  // namespace metamem
