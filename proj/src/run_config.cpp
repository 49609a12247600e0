#include "hyforest/run_config.hpp"

#include <fstream>

#include "hyforest/error.hpp"

namespace hyforest {

namespace {

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& field) {
    if (j.contains(key)) {
        j.at(key).get_to(field);
    }
}

}  // namespace

void to_json(nlohmann::json& j, const ForwardConfig& cfg) {
    j = nlohmann::json{{"z0", cfg.z0},
                       {"quad_nodes", cfg.quad_nodes},
                       {"norm_guard_eps", cfg.norm_guard_eps},
                       {"rectifier_delta", cfg.rectifier.delta}};
}

void from_json(const nlohmann::json& j, ForwardConfig& cfg) {
    read_if(j, "z0", cfg.z0);
    read_if(j, "quad_nodes", cfg.quad_nodes);
    read_if(j, "norm_guard_eps", cfg.norm_guard_eps);
    read_if(j, "rectifier_delta", cfg.rectifier.delta);
}

void to_json(nlohmann::json& j, const InversionConfig& cfg) {
    j = nlohmann::json{{"h_min", cfg.h_min},
                       {"h_max", cfg.h_max},
                       {"grid_step", cfg.grid_step},
                       {"refine_tol", cfg.refine_tol},
                       {"residual_max", cfg.residual_max},
                       {"ambiguity_policy", "lowest_height"}};
}

void from_json(const nlohmann::json& j, InversionConfig& cfg) {
    read_if(j, "h_min", cfg.h_min);
    read_if(j, "h_max", cfg.h_max);
    read_if(j, "grid_step", cfg.grid_step);
    read_if(j, "refine_tol", cfg.refine_tol);
    read_if(j, "residual_max", cfg.residual_max);
    if (j.contains("ambiguity_policy") && j.at("ambiguity_policy").get<std::string>() != "lowest_height") {
        throw ValidationError("inversion.ambiguity_policy must be 'lowest_height'");
    }
}

void RunConfig::finalize() {
    scene.seed = seed;
    train.seed = seed;
    if (benchmark_pairs < 0) {
        throw ValidationError("benchmark.n_pairs must be >= 0");
    }
    if (!(slope_bin_width_deg > 0.0)) {
        throw ValidationError("evaluate.slope_bin_width_deg must be > 0");
    }
    if (density_bins < 1) {
        throw ValidationError("evaluate.density_bins must be >= 1");
    }
    if (threads < 0) {
        throw ValidationError("threads must be >= 0");
    }
    scene.validate();
    train.validate();
    inversion.validate();
    forward.validate();
}

void to_json(nlohmann::json& j, const RunConfig& cfg) {
    j = nlohmann::json{{"seed", cfg.seed},
                       {"threads", cfg.threads},
                       {"out", cfg.out.string()},
                       {"scene", cfg.scene},
                       {"benchmark", {{"n_pairs", cfg.benchmark_pairs}}},
                       {"train", cfg.train},
                       {"inversion", cfg.inversion},
                       {"forward", cfg.forward},
                       {"evaluate",
                        {{"slope_bin_width_deg", cfg.slope_bin_width_deg}, {"density_bins", cfg.density_bins}}}};
}

void from_json(const nlohmann::json& j, RunConfig& cfg) {
    if (!j.is_object()) {
        throw ValidationError("config root must be a JSON object");
    }
    read_if(j, "seed", cfg.seed);
    read_if(j, "threads", cfg.threads);
    if (j.contains("out")) {
        cfg.out = j.at("out").get<std::string>();
    }
    if (j.contains("scene")) {
        from_json(j.at("scene"), cfg.scene);
    }
    if (j.contains("benchmark")) {
        read_if(j.at("benchmark"), "n_pairs", cfg.benchmark_pairs);
    }
    if (j.contains("train")) {
        from_json(j.at("train"), cfg.train);
    }
    if (j.contains("inversion")) {
        from_json(j.at("inversion"), cfg.inversion);
    }
    if (j.contains("forward")) {
        from_json(j.at("forward"), cfg.forward);
    }
    if (j.contains("evaluate")) {
        read_if(j.at("evaluate"), "slope_bin_width_deg", cfg.slope_bin_width_deg);
        read_if(j.at("evaluate"), "density_bins", cfg.density_bins);
    }
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) {
        throw IoError("cannot read config " + path.string());
    }
    RunConfig cfg;
    try {
        const auto j = nlohmann::json::parse(f);
        from_json(j, cfg);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("config " + path.string() + ": " + e.what());
    }
    RunConfig probe = cfg;
    probe.finalize();
    return cfg;
}

}  // namespace hyforest
