#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "hyforest/features.hpp"
#include "hyforest/legendre.hpp"
#include "hyforest/model.hpp"
#include "hyforest/physics.hpp"
#include "hyforest/raster.hpp"

namespace hyforest {

enum class AmbiguityPolicy { LowestHeight };

struct InversionConfig {
    double h_min = 0.0;
    double h_max = 60.0;
    double grid_step = 0.5;
    double refine_tol = 1e-3;
    double residual_max = 0.15;
    AmbiguityPolicy ambiguity_policy = AmbiguityPolicy::LowestHeight;

    void validate() const;
};

/// Quality bits stored in the `flags` raster (as float-encoded integers).
namespace quality {
inline constexpr std::uint32_t kMasked = 1u << 0;            ///< input masked or nodata
inline constexpr std::uint32_t kResidualExceeded = 1u << 1;  ///< best residual > residual_max
inline constexpr std::uint32_t kMultipleMinima = 1u << 2;    ///< tie resolved by lowest height
inline constexpr std::uint32_t kAtSearchBoundary = 1u << 3;  ///< solution at h_min or h_max
}  // namespace quality

struct InversionResult {
    std::optional<double> h_v;  ///< empty when nodata
    double residual = 0.0;      ///< | |gamma_model(h_v)| - |gamma_obs| |
    ProfileCoefficients coeffs;
    std::uint32_t flags = 0;

    bool valid() const noexcept { return h_v.has_value(); }
};

/// Coarse grid scan of |model(h) - observed| on [h_min, h_max], then refinement of every local
/// minimum: sign changes are bracketed and solved as roots, other minima use golden-section
/// search to refine_tol. Among minima within 1e-6 of the best residual the lowest height wins.
InversionResult invert_curve(const std::function<double(double)>& model_magnitude,
                             double coh_obs_mag, const InversionConfig& cfg);

/// Inversion with a fixed Legendre profile (the network bypassed).
InversionResult invert_profile(const ProfileCoefficients& coeffs, double kz, double coh_obs_mag,
                               const InversionConfig& inv, const ForwardConfig& fwd);

/// Two-step inference: features -> coefficients -> height.
InversionResult invert_pixel(const Model& model, const FeatureVector& features, double kz,
                             double coh_obs_mag, const InversionConfig& inv,
                             const ForwardConfig& fwd);

/// Output bands: h_v, residual, a1, a2, a3, valid, flags, kz, coh.
SceneBundle invert_scene(const Model& model, const SceneBundle& scene, int acq_index,
                         const InversionConfig& inv, const ForwardConfig& fwd, int threads = 1);

/// Same outputs using each pixel's true simulated profile family instead of the network;
/// coefficient bands are nodata.
SceneBundle invert_scene_oracle(const SceneBundle& scene, int acq_index,
                                const InversionConfig& inv, const ForwardConfig& fwd,
                                int threads = 1);

}  // namespace hyforest
