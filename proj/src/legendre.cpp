#include "hyforest/legendre.hpp"

#include <cmath>
#include <string>

#include "hyforest/error.hpp"

namespace hyforest {

ProfileCoefficients::ProfileCoefficients(int order) {
    if (order < 1) {
        throw ValidationError("profile order must be >= 1, got " + std::to_string(order));
    }
    values_.assign(static_cast<std::size_t>(order), 0.0);
}

ProfileCoefficients::ProfileCoefficients(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) {
        throw ValidationError("profile order must be >= 1");
    }
    for (double v : values_) {
        if (!std::isfinite(v)) {
            throw ValidationError("profile coefficients must be finite");
        }
    }
}

namespace {

void check_argument(double x) {
    if (!(std::abs(x) <= 1.0 + 1e-12)) {
        throw DomainError("Legendre argument outside [-1, 1]: " + std::to_string(x));
    }
}

}  // namespace

double eval_legendre(int n, double x) {
    if (n < 0) {
        throw DomainError("Legendre degree must be >= 0");
    }
    check_argument(x);
    if (n == 0) {
        return 1.0;
    }
    double prev = 1.0;
    double curr = x;
    for (int k = 1; k < n; ++k) {
        const double next = ((2.0 * k + 1.0) * x * curr - k * prev) / (k + 1.0);
        prev = curr;
        curr = next;
    }
    return curr;
}

void eval_legendre_all(double x, std::span<double> out) {
    check_argument(x);
    if (out.empty()) {
        return;
    }
    out[0] = 1.0;
    if (out.size() > 1) {
        out[1] = x;
    }
    for (std::size_t k = 1; k + 1 < out.size(); ++k) {
        const double kd = static_cast<double>(k);
        out[k + 1] = ((2.0 * kd + 1.0) * x * out[k] - kd * out[k - 1]) / (kd + 1.0);
    }
}

double eval_profile_raw(const ProfileCoefficients& coeffs, double u) {
    if (!(u >= 0.0 && u <= 1.0)) {
        throw DomainError("normalized height outside [0, 1]: " + std::to_string(u));
    }
    std::vector<double> p(static_cast<std::size_t>(coeffs.order()) + 1);
    eval_legendre_all(2.0 * u - 1.0, p);
    double f = 1.0;
    const auto a = coeffs.values();
    for (std::size_t n = 0; n < a.size(); ++n) {
        f += a[n] * p[n + 1];
    }
    return f;
}

Rectified rectify(double f_raw, const RectifierConfig& cfg) {
    const double root = std::hypot(f_raw, cfg.delta);
    // For f_raw << 0 the direct sum cancels; use the conjugate form delta^2 / (root - f_raw).
    if (f_raw >= 0.0) {
        return {0.5 * (f_raw + root), 0.5 * (1.0 + f_raw / root)};
    }
    const double d2 = cfg.delta * cfg.delta;
    return {0.5 * d2 / (root - f_raw), 0.5 * d2 / (root * (root - f_raw))};
}

}  // namespace hyforest
