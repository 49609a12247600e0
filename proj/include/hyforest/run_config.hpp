#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"

#include "hyforest/inverter.hpp"
#include "hyforest/physics.hpp"
#include "hyforest/simulator.hpp"
#include "hyforest/trainer.hpp"

namespace hyforest {

void to_json(nlohmann::json& j, const ForwardConfig& cfg);
void from_json(const nlohmann::json& j, ForwardConfig& cfg);
void to_json(nlohmann::json& j, const InversionConfig& cfg);
void from_json(const nlohmann::json& j, InversionConfig& cfg);

/// One declarative document for a whole pipeline run; absent keys keep their defaults.
struct RunConfig {
    std::uint64_t seed = 0;
    int threads = 0;  ///< 0: HYFOREST_THREADS or hardware concurrency
    std::filesystem::path out = "out";
    SceneSpec scene{};
    int benchmark_pairs = 0;
    TrainConfig train{};
    InversionConfig inversion{};
    ForwardConfig forward{};
    double slope_bin_width_deg = 5.0;
    int density_bins = 40;

    /// Pushes the global seed into the scene and training configs and validates everything.
    void finalize();
};

void to_json(nlohmann::json& j, const RunConfig& cfg);
void from_json(const nlohmann::json& j, RunConfig& cfg);

/// Reads a config file; ValidationError on malformed JSON or values, IoError if unreadable.
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace hyforest
