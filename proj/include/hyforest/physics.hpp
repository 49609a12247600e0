#pragma once

#include <complex>
#include <span>
#include <vector>

#include "hyforest/legendre.hpp"

namespace hyforest {

inline constexpr double kTanDemXWavelength = 0.031;  // X band, metres

struct AcquisitionGeometry {
    double wavelength = kTanDemXWavelength;  ///< metres
    double look_angle = 0.0;                 ///< theta_0, radians
    double delta_theta = 0.0;                ///< baseline-induced look-angle difference, radians
    int mode_factor = 1;                     ///< 1 bistatic, 2 monostatic

    void validate() const;

    /// Geometry whose flat-terrain height of ambiguity equals `hoa` (signed, metres).
    static AcquisitionGeometry from_height_of_ambiguity(double hoa, double look_angle,
                                                        double wavelength = kTanDemXWavelength,
                                                        int mode_factor = 1);
};

struct ForwardConfig {
    double z0 = 0.0;  ///< ground phase height, metres
    int quad_nodes = 64;
    double norm_guard_eps = 1e-9;
    RectifierConfig rectifier{};

    void validate() const;
};

using ComplexCoherence = std::complex<double>;

struct DecorrelationFactors {
    double temporal = 1.0;
    double range = 1.0;
    double system = 1.0;

    void validate() const;
};

/// kz = m (2 pi / lambda) dtheta / sin(theta0 + alpha), in rad/m.
double vertical_wavenumber(const AcquisitionGeometry& geom, double range_slope);

/// 2 pi / kz, signed.
double height_of_ambiguity(double kz);

/// Rectified profile sampled at the nodes of the configured quadrature rule.
struct SampledProfile {
    std::vector<double> raw;         ///< 1 + sum a_n P_n(x_j)
    std::vector<double> value;       ///< rectified, > 0
    std::vector<double> derivative;  ///< d value / d raw
};

SampledProfile sample_profile(const ProfileCoefficients& coeffs, const ForwardConfig& cfg);

/// Same as above for a raw coefficient span (a_1..a_N); values are not checked for finiteness.
SampledProfile sample_profile(std::span<const double> coeffs, const ForwardConfig& cfg);

/// |gamma| of a pre-sampled rectified profile; the cheap kernel used by height search.
double coherence_magnitude(const SampledProfile& profile, double h_v, double kz,
                           const ForwardConfig& cfg);

/// Volume coherence of the rectified Legendre profile, by Gauss–Legendre quadrature on u = z/h_v.
ComplexCoherence volume_coherence(const ProfileCoefficients& coeffs, double h_v, double kz,
                                  const ForwardConfig& cfg);

/// Volume coherence of an arbitrary nonnegative profile given at the quadrature nodes
/// of `cfg` (normalized axis). Invariant to positive scaling of the samples.
ComplexCoherence volume_coherence_sampled(std::span<const double> profile_at_nodes, double h_v,
                                          double kz, const ForwardConfig& cfg);

struct CoherenceGradient {
    double magnitude = 1.0;
    std::vector<double> d_coeffs;  ///< d|gamma| / d a_n, n = 1..N
    double d_height = 0.0;         ///< d|gamma| / d h_v
};

CoherenceGradient coherence_mag_and_grads(const ProfileCoefficients& coeffs, double h_v, double kz,
                                          const ForwardConfig& cfg);

/// Magnitude-and-gradient kernel on a pre-sampled profile; `legendre` holds P_n(x_j)
/// laid out node-major (node j, order n at j * order + n - 1).
CoherenceGradient coherence_mag_and_grads(const SampledProfile& profile,
                                          std::span<const double> legendre, int order, double h_v,
                                          double kz, const ForwardConfig& cfg);

/// Node-major table of P_1..P_order at the nodes of an M-point rule.
const std::vector<double>& legendre_node_table(int num_nodes, int order);

/// gamma_tmp * gamma_rg * gamma_sys * gamma_vol.
ComplexCoherence compose_observed(ComplexCoherence gamma_vol, const DecorrelationFactors& d);

}  // namespace hyforest
