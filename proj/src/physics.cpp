#include "hyforest/physics.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>
#include <utility>

#include "hyforest/error.hpp"
#include "hyforest/quadrature.hpp"

namespace hyforest {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_height(double h_v) {
    if (!(h_v >= 0.0) || !std::isfinite(h_v)) {
        throw DomainError("forest height must be finite and >= 0, got " + std::to_string(h_v));
    }
}

ComplexCoherence ground_phase(double kz, const ForwardConfig& cfg) {
    return std::polar(1.0, kz * cfg.z0);
}

}  // namespace

void AcquisitionGeometry::validate() const {
    if (!(wavelength > 0.0)) {
        throw ValidationError("wavelength must be > 0");
    }
    if (!(look_angle > 0.0 && look_angle < std::numbers::pi / 2)) {
        throw ValidationError("look angle must lie in (0, pi/2)");
    }
    if (mode_factor != 1 && mode_factor != 2) {
        throw ValidationError("mode factor must be 1 (bistatic) or 2 (monostatic)");
    }
    if (!std::isfinite(delta_theta)) {
        throw ValidationError("delta_theta must be finite");
    }
}

AcquisitionGeometry AcquisitionGeometry::from_height_of_ambiguity(double hoa, double look_angle,
                                                                  double wavelength,
                                                                  int mode_factor) {
    if (hoa == 0.0 || !std::isfinite(hoa)) {
        throw ValidationError("height of ambiguity must be finite and non-zero");
    }
    AcquisitionGeometry g;
    g.wavelength = wavelength;
    g.look_angle = look_angle;
    g.mode_factor = mode_factor;
    g.delta_theta = wavelength * std::sin(look_angle) / (mode_factor * hoa);
    g.validate();
    return g;
}

void ForwardConfig::validate() const {
    if (quad_nodes < 8) {
        throw ValidationError("quad_nodes must be >= 8");
    }
    if (!(norm_guard_eps > 0.0)) {
        throw ValidationError("norm_guard_eps must be > 0");
    }
    if (!(rectifier.delta > 0.0)) {
        throw ValidationError("rectifier delta must be > 0");
    }
    if (!std::isfinite(z0)) {
        throw ValidationError("z0 must be finite");
    }
}

void DecorrelationFactors::validate() const {
    for (double f : {temporal, range, system}) {
        if (!(f >= 0.0 && f <= 1.0)) {
            throw ValidationError("decorrelation factors must lie in [0, 1]");
        }
    }
}

double vertical_wavenumber(const AcquisitionGeometry& geom, double range_slope) {
    geom.validate();
    const double s = std::sin(geom.look_angle + range_slope);
    if (std::abs(s) < 1e-6) {
        throw SingularGeometryError("sin(theta0 + alpha) vanishes");
    }
    return geom.mode_factor * (kTwoPi / geom.wavelength) * geom.delta_theta / s;
}

double height_of_ambiguity(double kz) {
    if (kz == 0.0) {
        throw DomainError("height of ambiguity undefined for kz = 0");
    }
    return kTwoPi / kz;
}

const std::vector<double>& legendre_node_table(int num_nodes, int order) {
    static std::mutex mutex;
    static std::map<std::pair<int, int>, std::unique_ptr<std::vector<double>>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[{num_nodes, order}];
    if (!slot) {
        const auto& rule = gauss_legendre_unit(num_nodes);
        auto table = std::make_unique<std::vector<double>>(
            static_cast<std::size_t>(num_nodes) * static_cast<std::size_t>(order));
        std::vector<double> p(static_cast<std::size_t>(order) + 1);
        for (int j = 0; j < num_nodes; ++j) {
            eval_legendre_all(2.0 * rule.nodes[static_cast<std::size_t>(j)] - 1.0, p);
            for (int n = 1; n <= order; ++n) {
                (*table)[static_cast<std::size_t>(j * order + n - 1)] = p[static_cast<std::size_t>(n)];
            }
        }
        slot = std::move(table);
    }
    return *slot;
}

SampledProfile sample_profile(const ProfileCoefficients& coeffs, const ForwardConfig& cfg) {
    return sample_profile(coeffs.values(), cfg);
}

SampledProfile sample_profile(std::span<const double> a, const ForwardConfig& cfg) {
    cfg.validate();
    const int m = cfg.quad_nodes;
    const int order = static_cast<int>(a.size());
    if (order < 1) {
        throw ValidationError("profile order must be >= 1");
    }
    const auto& table = legendre_node_table(m, order);
    SampledProfile out;
    out.raw.resize(static_cast<std::size_t>(m));
    out.value.resize(static_cast<std::size_t>(m));
    out.derivative.resize(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        double f = 1.0;
        const double* row = table.data() + static_cast<std::size_t>(j * order);
        for (int n = 0; n < order; ++n) {
            f += a[static_cast<std::size_t>(n)] * row[n];
        }
        const auto r = rectify(f, cfg.rectifier);
        out.raw[static_cast<std::size_t>(j)] = f;
        out.value[static_cast<std::size_t>(j)] = r.value;
        out.derivative[static_cast<std::size_t>(j)] = r.derivative;
    }
    return out;
}

ComplexCoherence volume_coherence_sampled(std::span<const double> profile_at_nodes, double h_v,
                                          double kz, const ForwardConfig& cfg) {
    cfg.validate();
    check_height(h_v);
    const auto& rule = gauss_legendre_unit(cfg.quad_nodes);
    if (static_cast<int>(profile_at_nodes.size()) != rule.size()) {
        throw DimensionError("sampled profile length " + std::to_string(profile_at_nodes.size()) +
                             " does not match quadrature size " + std::to_string(rule.size()));
    }
    if (h_v == 0.0) {
        return ground_phase(kz, cfg);
    }
    double denom = 0.0;
    double re = 0.0;
    double im = 0.0;
    for (std::size_t j = 0; j < profile_at_nodes.size(); ++j) {
        const double f = profile_at_nodes[j];
        if (!(f >= 0.0)) {
            throw DomainError("sampled profile must be nonnegative");
        }
        const double wf = rule.weights[j] * f;
        const double phase = kz * h_v * rule.nodes[j];
        denom += wf;
        re += wf * std::cos(phase);
        im += wf * std::sin(phase);
    }
    if (denom < cfg.norm_guard_eps) {
        throw DegenerateProfileError("profile integral below guard threshold");
    }
    return ground_phase(kz, cfg) * ComplexCoherence(re / denom, im / denom);
}

ComplexCoherence volume_coherence(const ProfileCoefficients& coeffs, double h_v, double kz,
                                  const ForwardConfig& cfg) {
    check_height(h_v);
    if (h_v == 0.0) {
        cfg.validate();
        return ground_phase(kz, cfg);
    }
    const auto profile = sample_profile(coeffs, cfg);
    return volume_coherence_sampled(profile.value, h_v, kz, cfg);
}

double coherence_magnitude(const SampledProfile& profile, double h_v, double kz,
                           const ForwardConfig& cfg) {
    return std::abs(volume_coherence_sampled(profile.value, h_v, kz, cfg));
}

CoherenceGradient coherence_mag_and_grads(const SampledProfile& profile,
                                          std::span<const double> legendre, int order, double h_v,
                                          double kz, const ForwardConfig& cfg) {
    check_height(h_v);
    const auto& rule = gauss_legendre_unit(cfg.quad_nodes);
    const auto m = static_cast<std::size_t>(rule.size());
    if (profile.value.size() != m ||
        legendre.size() != m * static_cast<std::size_t>(order)) {
        throw DimensionError("sampled profile does not match quadrature configuration");
    }
    CoherenceGradient g;
    g.d_coeffs.assign(static_cast<std::size_t>(order), 0.0);

    double denom = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        denom += rule.weights[j] * profile.value[j];
    }
    if (denom < cfg.norm_guard_eps) {
        throw DegenerateProfileError("profile integral below guard threshold");
    }
    if (h_v == 0.0 || kz == 0.0) {
        g.magnitude = 1.0;
        return g;
    }

    // N = sum w f e^{i kz h u}, D = sum w f; |gamma| = |N| / D.
    double n_re = 0.0;
    double n_im = 0.0;
    double dn_dh_re = 0.0;
    double dn_dh_im = 0.0;
    std::vector<double> cosines(m);
    std::vector<double> sines(m);
    for (std::size_t j = 0; j < m; ++j) {
        const double phase = kz * h_v * rule.nodes[j];
        cosines[j] = std::cos(phase);
        sines[j] = std::sin(phase);
        const double wf = rule.weights[j] * profile.value[j];
        n_re += wf * cosines[j];
        n_im += wf * sines[j];
        const double wfku = wf * kz * rule.nodes[j];
        dn_dh_re -= wfku * sines[j];
        dn_dh_im += wfku * cosines[j];
    }
    const double n_abs = std::hypot(n_re, n_im);
    g.magnitude = n_abs / denom;
    if (n_abs == 0.0) {
        // Exact null: |N| is not differentiable; the zero subgradient is used.
        return g;
    }
    const double ur = n_re / n_abs;
    const double ui = n_im / n_abs;
    g.d_height = (ur * dn_dh_re + ui * dn_dh_im) / denom;

    for (std::size_t j = 0; j < m; ++j) {
        const double wd = rule.weights[j] * profile.derivative[j];
        // d|N|/df_j and dD/df_j per unit of raw profile change; chain into a_n below.
        const double d_abs_n = wd * (ur * cosines[j] + ui * sines[j]);
        const double d_mag = d_abs_n / denom - g.magnitude * wd / denom;
        const double* row = legendre.data() + j * static_cast<std::size_t>(order);
        for (int n = 0; n < order; ++n) {
            g.d_coeffs[static_cast<std::size_t>(n)] += d_mag * row[n];
        }
    }
    return g;
}

CoherenceGradient coherence_mag_and_grads(const ProfileCoefficients& coeffs, double h_v, double kz,
                                          const ForwardConfig& cfg) {
    check_height(h_v);
    const auto profile = sample_profile(coeffs, cfg);
    const auto& table = legendre_node_table(cfg.quad_nodes, coeffs.order());
    return coherence_mag_and_grads(profile, table, coeffs.order(), h_v, kz, cfg);
}

ComplexCoherence compose_observed(ComplexCoherence gamma_vol, const DecorrelationFactors& d) {
    d.validate();
    return d.temporal * d.range * d.system * gamma_vol;
}

}  // namespace hyforest
