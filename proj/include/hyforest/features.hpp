#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hyforest {

/// Feature-set ablation: InSAR + geometry only (C) or with four optical bands appended (D).
enum class ModelVariant { C, D };

int feature_width(ModelVariant variant);
std::vector<std::string> feature_names(ModelVariant variant);
std::string to_string(ModelVariant variant);
ModelVariant parse_variant(std::string_view text);

/// Per-pixel network inputs. `bands` holds red, nir, swir1, swir2 and is present only for D.
struct FeatureVector {
    double kz = 0.0;         ///< rad/m
    double coh_mag = 0.0;    ///< observed coherence magnitude
    double theta0 = 0.0;     ///< nominal look angle, rad
    double theta_loc = 0.0;  ///< local incidence angle, rad
    double alpha = 0.0;      ///< range terrain slope, rad
    std::optional<std::array<double, 4>> bands;

    int size() const noexcept { return bands ? 9 : 5; }
    std::vector<double> to_vector() const;
    void validate() const;
};

struct TrainSample {
    FeatureVector features;
    double kz = 0.0;
    double coh_obs_mag = 0.0;
    double h_ref = 0.0;
    std::int64_t pixel_id = 0;  ///< ground pixel shared across acquisitions of one site
    int acquisition = 0;

    void validate() const;
};

}  // namespace hyforest
