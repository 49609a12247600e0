#include "hyforest/features.hpp"

#include <cmath>

#include "hyforest/error.hpp"

namespace hyforest {

int feature_width(ModelVariant variant) { return variant == ModelVariant::C ? 5 : 9; }

std::vector<std::string> feature_names(ModelVariant variant) {
    std::vector<std::string> names{"kz", "coh_mag", "theta0", "theta_loc", "alpha"};
    if (variant == ModelVariant::D) {
        names.insert(names.end(), {"red", "nir", "swir1", "swir2"});
    }
    return names;
}

std::string to_string(ModelVariant variant) { return variant == ModelVariant::C ? "C" : "D"; }

ModelVariant parse_variant(std::string_view text) {
    if (text == "C" || text == "c") {
        return ModelVariant::C;
    }
    if (text == "D" || text == "d") {
        return ModelVariant::D;
    }
    throw ValidationError("unknown model variant '" + std::string(text) + "' (expected C or D)");
}

std::vector<double> FeatureVector::to_vector() const {
    std::vector<double> v{kz, coh_mag, theta0, theta_loc, alpha};
    if (bands) {
        v.insert(v.end(), bands->begin(), bands->end());
    }
    return v;
}

void FeatureVector::validate() const {
    if (!(coh_mag >= 0.0 && coh_mag <= 1.0)) {
        throw ValidationError("coherence magnitude feature outside [0, 1]");
    }
    for (double v : to_vector()) {
        if (!std::isfinite(v)) {
            throw ValidationError("feature values must be finite");
        }
    }
}

void TrainSample::validate() const {
    features.validate();
    if (!(h_ref >= 0.0) || !std::isfinite(h_ref)) {
        throw ValidationError("reference height must be finite and >= 0");
    }
    if (!std::isfinite(kz) || kz == 0.0) {
        throw ValidationError("sample kz must be finite and non-zero");
    }
    if (!(coh_obs_mag >= 0.0 && coh_obs_mag <= 1.0)) {
        throw ValidationError("observed coherence outside [0, 1]");
    }
}

}  // namespace hyforest
