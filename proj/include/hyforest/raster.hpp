#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "hyforest/features.hpp"

namespace hyforest {

inline constexpr float kDefaultNodata = -9999.0f;

struct GridDef {
    int rows = 1;
    int cols = 1;
    double pixel_size = 20.0;  ///< metres
    float nodata = kDefaultNodata;

    std::size_t size() const noexcept {
        return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
    }
    void validate() const;
    bool same_shape(const GridDef& other) const noexcept {
        return rows == other.rows && cols == other.cols;
    }
};

struct Band {
    std::string name;
    std::string units;
    std::vector<float> data;  ///< row-major
};

/// Co-gridded named rasters.
///
/// Per-acquisition bands carry a `_<k>` suffix: kz_k (rad/m), coh_k, theta0_k and
/// theta_loc_k (rad). Site bands: h_ref (m), slope (rad), red, nir, swir1, swir2, mask
/// (1 valid, 0 masked) and, for simulated scenes, the profile family bands.
class SceneBundle {
public:
    SceneBundle() = default;
    explicit SceneBundle(GridDef grid);

    const GridDef& grid() const noexcept { return grid_; }
    std::uint64_t seed = 0;
    std::string created_by = "hyforest";
    nlohmann::ordered_json attributes = nlohmann::ordered_json::object();

    /// Throws ValidationError on duplicate names or size mismatch.
    Band& add_band(std::string name, std::string units, std::vector<float> data);
    Band& add_band(std::string name, std::string units, float fill);
    bool has_band(std::string_view name) const noexcept;
    const Band& band(std::string_view name) const;  ///< MissingBandError if absent
    Band& band(std::string_view name);
    const std::vector<Band>& bands() const noexcept { return bands_; }

    /// Number of consecutive acquisitions k = 0.. having a kz_k band.
    int acquisition_count() const noexcept;

private:
    GridDef grid_;
    std::vector<Band> bands_;
};

std::string acq_band(std::string_view stem, int acq);

/// One `<name>.band` file per band (float32 little-endian, row-major) plus manifest.json.
void write_bundle(const SceneBundle& bundle, const std::filesystem::path& dir);

/// Verifies presence, length, and SHA-256 of every band listed in the manifest.
SceneBundle read_bundle(const std::filesystem::path& dir);

/// Copy holding only the listed acquisitions, renumbered from 0.
SceneBundle select_acquisitions(const SceneBundle& bundle, std::span<const int> acquisitions);

/// Features of one pixel for one acquisition, or nullopt if masked or any contributing band
/// holds nodata. Throws MissingBandError when a required band is absent.
std::optional<FeatureVector> pixel_features(const SceneBundle& bundle, int acq, std::size_t pixel,
                                            ModelVariant variant);

/// One sample per unmasked, nodata-free pixel per acquisition; pixel_id is the pixel index.
std::vector<TrainSample> assemble_samples(const SceneBundle& bundle, std::span<const int> acquisitions,
                                          ModelVariant variant);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::span<const unsigned char> bytes);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace hyforest
