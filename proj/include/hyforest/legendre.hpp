#pragma once

#include <span>
#include <utility>
#include <vector>

namespace hyforest {

inline constexpr int kDefaultProfileOrder = 7;

/// Legendre coefficients a_1..a_N of a vertical reflectivity profile.
///
/// The constant term is fixed at 1; the profile on the normalized height
/// u = z / h_v in [0, 1] is f(u) = 1 + sum_n a_n P_n(2u - 1).
class ProfileCoefficients {
public:
    /// All-zero coefficients of the given order (a uniform profile).
    explicit ProfileCoefficients(int order = kDefaultProfileOrder);
    explicit ProfileCoefficients(std::vector<double> values);

    int order() const noexcept { return static_cast<int>(values_.size()); }
    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }
    double operator[](int n) const { return values_.at(static_cast<std::size_t>(n - 1)); }

private:
    std::vector<double> values_;
};

struct RectifierConfig {
    double delta = 0.01;
};

/// P_n(x) via Bonnet's recurrence. Throws DomainError if |x| > 1 + 1e-12 or n < 0.
double eval_legendre(int n, double x);

/// Fills out[n] = P_n(x) for n = 0..out.size()-1.
void eval_legendre_all(double x, std::span<double> out);

/// 1 + sum a_n P_n(2u - 1). Throws DomainError if u is outside [0, 1].
double eval_profile_raw(const ProfileCoefficients& coeffs, double u);

struct Rectified {
    double value;       ///< strictly positive
    double derivative;  ///< d value / d f_raw
};

/// Smooth positive part: (f + sqrt(f^2 + delta^2)) / 2.
Rectified rectify(double f_raw, const RectifierConfig& cfg = {});

}  // namespace hyforest
