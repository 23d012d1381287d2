#include "metamem/rng.hpp"

#include <algorithm>
#include <stdexcept>

namespace metamem {

std::vector<int> sample_without_replacement(RngStream& rng, int n, int B) {
    if (B < 1 || B > n)
        throw std::invalid_argument("sample_without_replacement: need 1 <= B <= n");
    std::vector<int> out;
    out.reserve(B);
    if (B == n) {
        for (int i = 1; i <= n; ++i) out.push_back(i);
        return out;  // deterministic, no RNG consumed
    }
    // Floyd's algorithm: exactly B draws regardless of n.
    std::set<int> chosen;
    for (int j = n - B + 1; j <= n; ++j) {
        int r = static_cast<int>(rng.uniform_int(1, static_cast<std::uint64_t>(j)));
        if (!chosen.insert(r).second) chosen.insert(j);
    }
    out.assign(chosen.begin(), chosen.end());
    return out;
}

std::vector<int> bernoulli_subset(RngStream& rng, const std::vector<double>& p) {
    for (double pi : p)
        if (!(pi > 0.0 && pi <= 1.0))
            throw std::invalid_argument("bernoulli_subset: every p_i must be in (0,1]");
    std::vector<int> out;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (rng.uniform() < p[i]) out.push_back(static_cast<int>(i) + 1);
    }
    return out;
}

}  // namespace metamem
