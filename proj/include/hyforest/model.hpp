#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "hyforest/features.hpp"
#include "hyforest/legendre.hpp"
#include "hyforest/mlp.hpp"

namespace hyforest {

/// A trained coefficient predictor: network, its input standardization, and provenance.
struct Model {
    ModelVariant variant = ModelVariant::C;
    MlpParams params;
    FeatureNormalizer normalizer;
    std::uint64_t seed = 0;

    /// Raw (un-normalized) features to Legendre coefficients.
    ProfileCoefficients predict_coefficients(const FeatureVector& features) const;
    void validate() const;
};

/// JSON container: format tag, variant, seed, layer dims, activation, weights, biases,
/// normalizer statistics. Doubles round-trip exactly.
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace hyforest
