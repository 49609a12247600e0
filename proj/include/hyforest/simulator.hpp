#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "hyforest/physics.hpp"
#include "hyforest/raster.hpp"

namespace hyforest {

enum class FamilyKind { Uniform = 0, Exponential = 1, TwoLayer = 2 };

/// Exact vertical reflectivity profile used to synthesize coherence.
struct ProfileFamily {
    FamilyKind kind = FamilyKind::Uniform;
    double rate = 0.0;            ///< Exponential: f(z) = exp(rate z), 1/m
    double canopy_center = 0.7;   ///< TwoLayer: canopy layer centre as a fraction of h_v
    double canopy_width = 0.15;   ///< TwoLayer: canopy layer std-dev as a fraction of h_v
    double ground_weight = 0.3;   ///< TwoLayer: share of the ground peak, in [0, 1)

    static ProfileFamily uniform();
    static ProfileFamily exponential(double rate);
    static ProfileFamily two_layer(double canopy_center, double canopy_width, double ground_weight);

    void validate() const;
    std::string name() const;
    bool same_shape(const ProfileFamily& other) const noexcept;

    /// Profile variant for a canopy density in [0, 1]: denser stands are more top-heavy
    /// (Exponential rate scaled by 0.5 + d) or carry less ground return (TwoLayer weight by 1.5 - d).
    ProfileFamily with_density(double density) const;

    /// Unnormalized reflectivity at height z in a stand of height h_v.
    double reflectivity(double z, double h_v) const;

    /// Closed form for Uniform and Exponential, quadrature of the exact profile for TwoLayer.
    ComplexCoherence coherence(double h_v, double kz, const ForwardConfig& fwd) const;
    double coherence_magnitude(double h_v, double kz, const ForwardConfig& fwd) const;
};

void to_json(nlohmann::json& j, const ProfileFamily& f);
void from_json(const nlohmann::json& j, ProfileFamily& f);

/// Flat-terrain height of ambiguity (signed, m) and nominal incidence angle (deg).
struct AcquisitionSpec {
    double hoa = 0.0;
    double theta0_deg = 45.0;
};

/// The five TanDEM-X Lopé acquisitions (HoA, incidence).
std::vector<AcquisitionSpec> lope_acquisitions();
/// Acquisitions 1, 2 and 5 of the set above.
std::vector<AcquisitionSpec> lope_training_acquisitions();

struct FamilyWeight {
    ProfileFamily family;
    double weight = 1.0;
};

struct TerrainSpec {
    double slope_std_deg = 10.0;
    double correlation_length = 300.0;  ///< metres
    double max_slope_deg = 30.0;
    int modes = 32;
};

struct NoiseSpec {
    double looks = 30.0;
    DecorrelationFactors factors{};
};

/// Couples profile structure to slope sign: with probability `strength` a pixel takes
/// `negative_family` on slopes below zero and `positive_family` otherwise.
struct SlopeCoupling {
    double strength = 0.0;
    int negative_family = 0;
    int positive_family = 1;
};

struct SceneSpec {
    int rows = 64;
    int cols = 64;
    double pixel_size = 20.0;
    std::vector<AcquisitionSpec> acquisitions = lope_acquisitions();
    double wavelength = kTanDemXWavelength;
    int mode_factor = 1;
    TerrainSpec terrain{};
    std::vector<FamilyWeight> families = default_families();
    NoiseSpec noise{};
    double h_min_true = 0.0;
    double h_max_true = 55.0;
    double mask_fraction = 0.0;
    SlopeCoupling coupling{};
    double band_noise = 0.005;
    std::uint64_t seed = 0;

    static std::vector<FamilyWeight> default_families();
    void validate() const;
};

void to_json(nlohmann::json& j, const SceneSpec& s);
void from_json(const nlohmann::json& j, SceneSpec& s);

/// Synthesizes a scene; output is identical for any thread count.
SceneBundle generate_scene(const SceneSpec& spec, const ForwardConfig& fwd = {}, int threads = 1);

struct AmbiguityPair {
    int a_row = 0;
    int a_col = 0;
    int b_row = 0;
    int b_col = 0;
    double matched_kz = 0.0;
    int acquisition = 0;
    double h_a = 0.0;
    double h_b = 0.0;
};

struct AmbiguityBenchmark {
    SceneBundle bundle;
    std::vector<AmbiguityPair> pairs;
};

inline constexpr double kPairCoherenceTolerance = 1e-3;
inline constexpr double kPairSpectralFloor = 0.02;

/// Height h_b != h_a in [h_lo, h_hi] at which `family` reproduces `target` coherence
/// at kz (bracketed root search). Throws NoSolutionError if none exists.
double match_height(const ProfileFamily& family, double target, double kz, double h_a, double h_lo,
                    double h_hi, const ForwardConfig& fwd);

/// Pairs family `a` at h_a with family `b`; rejects families of identical shape.
double match_pair(const ProfileFamily& a, double h_a, const ProfileFamily& b, double kz, double h_lo,
                  double h_hi, const ForwardConfig& fwd);

/// Scene whose first 2 n_pairs pixels (row-major) form pairs of distinct families with equal
/// noise-free coherence at one training acquisition but different spectral bands.
AmbiguityBenchmark generate_ambiguity_benchmark(const SceneSpec& spec, int n_pairs,
                                                const ForwardConfig& fwd = {}, int threads = 1);

std::string pairs_csv(const std::vector<AmbiguityPair>& pairs);

}  // namespace hyforest
