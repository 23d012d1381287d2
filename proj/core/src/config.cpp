#include "metamem/config.hpp"

#include <cmath>
#include <stdexcept>

namespace metamem {

std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::bsgd: return "bsgd";
        case Algorithm::moml_v1: return "moml_v1";
        case Algorithm::moml_v2: return "moml_v2";
        case Algorithm::local_moml: return "local_moml";
        case Algorithm::per_fedavg: return "per_fedavg";
        case Algorithm::exact_gd: return "exact_gd";
    }
    return "?";
}
std::string to_string(FedMode m) {
    return m == FedMode::cross_silo ? "cross_silo" : "cross_device";
}
std::string to_string(TaskFamily f) {
    switch (f) {
        case TaskFamily::sinewave: return "sinewave";
        case TaskFamily::quadratic: return "quadratic";
        case TaskFamily::blob: return "blob";
    }
    return "?";
}

Algorithm algorithm_from_string(const std::string& s) {
    if (s == "bsgd") return Algorithm::bsgd;
    if (s == "moml_v1") return Algorithm::moml_v1;
    if (s == "moml_v2") return Algorithm::moml_v2;
    if (s == "local_moml") return Algorithm::local_moml;
    if (s == "per_fedavg") return Algorithm::per_fedavg;
    if (s == "exact_gd") return Algorithm::exact_gd;
    throw std::invalid_argument("unknown algorithm: " + s);
}
FedMode fed_mode_from_string(const std::string& s) {
    if (s == "cross_silo") return FedMode::cross_silo;
    if (s == "cross_device") return FedMode::cross_device;
    throw std::invalid_argument("unknown fed_mode: " + s);
}
TaskFamily task_family_from_string(const std::string& s) {
    if (s == "sinewave") return TaskFamily::sinewave;
    if (s == "quadratic") return TaskFamily::quadratic;
    if (s == "blob") return TaskFamily::blob;
    throw std::invalid_argument("unknown task_family: " + s);
}

std::vector<double> RunConfig::effective_p() const {
    if (!p.empty()) {
        if (static_cast<int>(p.size()) == 1)
            return std::vector<double>(static_cast<std::size_t>(n), p[0]);
        if (static_cast<int>(p.size()) != n)
            throw std::invalid_argument("p must have length 1 or n");
        return p;
    }
    return std::vector<double>(static_cast<std::size_t>(n),
                               static_cast<double>(B) / static_cast<double>(n));
}

void RunConfig::validate() const {
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    if (!(beta > 0.0 && beta <= 1.0))
        throw std::invalid_argument("beta must be in (0,1]");
    if (B < 1 || B > n) throw std::invalid_argument("B must satisfy 1 <= B <= n");
    if (K < 1) throw std::invalid_argument("K must be >= 1");
    if (alpha < 0.0) throw std::invalid_argument("alpha must be >= 0");
    if (L > 0.0 && alpha > 1.0 / L)
        throw std::invalid_argument("alpha must be in (0, 1/L] when L is supplied");
    if (eta < 0.0) throw std::invalid_argument("eta must be >= 0");
    for (double pi : effective_p())
        if (!(pi > 0.0 && pi <= 1.0))
            throw std::invalid_argument("every p_i must be in (0,1]");
    if (algorithm == Algorithm::moml_v2) {
        if (L <= 0.0) throw std::invalid_argument("moml_v2 requires L > 0");
        if (eta0 <= 0.0) throw std::invalid_argument("moml_v2 requires eta0 > 0");
        const double bound = std::pow(2.0 / (3.0 * L), 1.5);
        if (eta0 > bound)
            throw std::invalid_argument(
                "eta0 must satisfy eta0 <= (2/(3L))^{3/2} = " + std::to_string(bound) +
                " so that beta_t <= 1");
        if (rho < 0.0) throw std::invalid_argument("rho must be >= 0");
    }
    if (is_federated()) {
        if (R < 0) throw std::invalid_argument("R must be >= 0");
        if (H < 1) throw std::invalid_argument("H must be >= 1");
        if (fed_mode == FedMode::cross_device && effective_k0() < 1)
            throw std::invalid_argument("cross_device requires K0 >= 1");
        if (algorithm == Algorithm::per_fedavg && beta != 1.0)
            throw std::invalid_argument("per_fedavg requires beta = 1");
        if (fed_mode == FedMode::cross_silo && B != n)
            throw std::invalid_argument("cross_silo requires B = n");
    } else {
        if (T < 0) throw std::invalid_argument("T must be >= 0");
    }
    if (task_family == TaskFamily::quadratic) {
        if (quad_dim < 1) throw std::invalid_argument("quad_dim must be >= 1");
        if (quad_spread < 1.0) throw std::invalid_argument("quad_spread must be >= 1");
        if (noise_std < 0.0) throw std::invalid_argument("noise_std must be >= 0");
    }
    if (task_family == TaskFamily::blob) {
        if (blob_classes < 2 || blob_classes % 2 != 0)
            throw std::invalid_argument("blob_classes must be even and >= 2");
        if (n % 2 != 0) throw std::invalid_argument("blob task_family requires even n");
        if (blob_a < 2 || blob_a % 2 != 0)
            throw std::invalid_argument("blob_a must be even and >= 2");
    }
    if (algorithm == Algorithm::exact_gd && task_family != TaskFamily::quadratic)
        throw std::invalid_argument("exact_gd requires the quadratic task family");
}

}  // namespace metamem
