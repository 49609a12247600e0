#include "hyforest/quadrature.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "hyforest/error.hpp"

namespace hyforest {

QuadratureRule make_gauss_legendre_unit(int num_nodes) {
    if (num_nodes < 1) {
        throw ValidationError("quadrature needs at least one node");
    }
    const int m = num_nodes;
    QuadratureRule rule;
    rule.nodes.resize(static_cast<std::size_t>(m));
    rule.weights.resize(static_cast<std::size_t>(m));
    // Roots are symmetric; solve for the positive half on [-1, 1] then map to [0, 1].
    for (int i = 0; i < (m + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 1; k < m; ++k) {
                const double p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
                p0 = p1;
                p1 = p2;
            }
            dp = m * (x * p1 - p0) / (x * x - 1.0);
            const double step = p1 / dp;
            x -= step;
            if (std::abs(step) < 1e-16) {
                break;
            }
        }
        // Recompute the derivative at the converged root.
        {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 1; k < m; ++k) {
                const double p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
                p0 = p1;
                p1 = p2;
            }
            dp = m * (x * p1 - p0) / (x * x - 1.0);
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        const auto lo = static_cast<std::size_t>(i);
        const auto hi = static_cast<std::size_t>(m - 1 - i);
        rule.nodes[lo] = 0.5 * (1.0 - x);
        rule.nodes[hi] = 0.5 * (1.0 + x);
        rule.weights[lo] = 0.5 * w;
        rule.weights[hi] = 0.5 * w;
    }
    if (m % 2 == 1) {
        rule.nodes[static_cast<std::size_t>(m / 2)] = 0.5;
    }
    return rule;
}

const QuadratureRule& gauss_legendre_unit(int num_nodes) {
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<QuadratureRule>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[num_nodes];
    if (!slot) {
        slot = std::make_unique<QuadratureRule>(make_gauss_legendre_unit(num_nodes));
    }
    return *slot;
}

}  // namespace hyforest
