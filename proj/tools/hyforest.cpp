// hyforest: simulate | train | invert | evaluate
//
// Exit codes: 0 success, 2 config/validation, 3 I/O, 4 numeric failure.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include <fmt/format.h>

#include "hyforest/error.hpp"
#include "hyforest/inverter.hpp"
#include "hyforest/metrics.hpp"
#include "hyforest/model.hpp"
#include "hyforest/parallel.hpp"
#include "hyforest/raster.hpp"
#include "hyforest/run_config.hpp"
#include "hyforest/simulator.hpp"
#include "hyforest/trainer.hpp"

namespace fs = std::filesystem;
using namespace hyforest;

namespace {

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    int threads = 0;
    std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "global seed (overrides config)");
    cmd->add_option("--threads", o.threads, "worker threads; 0 uses HYFOREST_THREADS or all cores");
    cmd->add_option("--out", o.out, "output directory");
}

RunConfig resolve_config(const CommonOptions& o) {
    RunConfig cfg = o.config.empty() ? RunConfig{} : load_run_config(o.config);
    if (o.seed) {
        cfg.seed = *o.seed;
    }
    if (o.threads > 0) {
        cfg.threads = o.threads;
    }
    if (!o.out.empty()) {
        cfg.out = o.out;
    }
    cfg.finalize();
    cfg.threads = resolve_thread_count(cfg.threads);
    cfg.train.threads = cfg.threads;
    return cfg;
}

/// Config snapshot without run-local settings (output path, thread count), so that reruns
/// into other directories or with other thread counts hash identically.
nlohmann::ordered_json snapshot(const RunConfig& cfg) {
    nlohmann::json j = cfg;
    j.erase("out");
    j.erase("threads");
    j["train"].erase("threads");
    return nlohmann::ordered_json::parse(j.dump());
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw IoError("cannot write " + path.string());
    }
    f << text;
    if (!f) {
        throw IoError("failed writing " + path.string());
    }
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) { write_text(path, j.dump(2) + "\n"); }

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create " + dir.string() + ": " + ec.message());
    }
}

/// provenance.json: command, seed, config snapshot, and the SHA-256 of every other file.
void write_provenance(const fs::path& dir, const std::string& command, const RunConfig& cfg,
                      nlohmann::ordered_json inputs = nlohmann::ordered_json::object()) {
    std::map<std::string, std::string> hashes;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().filename() != "provenance.json") {
            hashes[fs::relative(entry.path(), dir).generic_string()] = sha256_file(entry.path());
        }
    }
    nlohmann::ordered_json j;
    j["command"] = command;
    j["seed"] = cfg.seed;
    j["config"] = snapshot(cfg);
    j["inputs"] = std::move(inputs);
    j["files"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : hashes) {
        j["files"][k] = v;
    }
    write_json(dir / "provenance.json", j);
}

std::string scene_dir_name(const AcquisitionSpec& a) { return fmt::format("hoa_{}", a.hoa); }

int cmd_simulate(const CommonOptions& o) {
    const RunConfig cfg = resolve_config(o);
    SceneBundle full;
    std::vector<AmbiguityPair> pairs;
    if (cfg.benchmark_pairs > 0) {
        auto bench = generate_ambiguity_benchmark(cfg.scene, cfg.benchmark_pairs, cfg.forward, cfg.threads);
        full = std::move(bench.bundle);
        pairs = std::move(bench.pairs);
    } else {
        full = generate_scene(cfg.scene, cfg.forward, cfg.threads);
    }
    std::vector<std::string> names;
    for (const auto& a : cfg.scene.acquisitions) {
        names.push_back(scene_dir_name(a));
    }
    if (std::set<std::string>(names.begin(), names.end()).size() != names.size()) {
        throw ValidationError("scene.acquisitions must have distinct hoa values");
    }
    ensure_dir(cfg.out);
    for (std::size_t k = 0; k < names.size(); ++k) {
        const int idx = static_cast<int>(k);
        auto sub = select_acquisitions(full, std::span<const int>(&idx, 1));
        sub.attributes["scene"] = names[k];
        write_bundle(sub, cfg.out / names[k]);
        std::cout << "wrote " << (cfg.out / names[k]).string() << "\n";
    }
    write_text(cfg.out / "pairs.csv", pairs_csv(pairs));
    write_provenance(cfg.out, "simulate", cfg);
    std::cout << fmt::format("{} scenes, {} ambiguity pairs\n", names.size(), pairs.size());
    return 0;
}

std::string history_csv(const std::vector<LossReport>& history) {
    std::string out = "epoch,train_loss,val_loss\n";
    for (const auto& r : history) {
        out += fmt::format("{},{},{}\n", r.epoch, r.train_loss, r.val_loss);
    }
    return out;
}

int cmd_train(const CommonOptions& o, const std::vector<std::string>& scenes, const std::string& variant,
              std::optional<int> epochs) {
    RunConfig cfg = resolve_config(o);
    if (!variant.empty()) {
        cfg.train.variant = parse_variant(variant);
    }
    if (epochs) {
        cfg.train.epochs = *epochs;
    }
    cfg.train.validate();
    std::vector<TrainSample> samples;
    nlohmann::ordered_json inputs = nlohmann::ordered_json::object();
    for (const auto& s : scenes) {
        const auto bundle = read_bundle(s);
        std::vector<int> acqs(static_cast<std::size_t>(bundle.acquisition_count()));
        for (std::size_t k = 0; k < acqs.size(); ++k) {
            acqs[k] = static_cast<int>(k);
        }
        if (acqs.empty()) {
            throw MissingBandError(acq_band("kz", 0) + " in " + s);
        }
        auto part = assemble_samples(bundle, acqs, cfg.train.variant);
        samples.insert(samples.end(), part.begin(), part.end());
        inputs[fs::path(s).filename().string()] = sha256_file(fs::path(s) / "manifest.json");
    }
    if (samples.empty()) {
        throw ValidationError("no valid pixels in the training scenes");
    }
    const auto result = train(samples, cfg.train, cfg.forward);
    ensure_dir(cfg.out);
    write_json(cfg.out / "config.json", snapshot(cfg));
    write_text(cfg.out / "history.csv", history_csv(result.history));
    save_model(result.best, cfg.out / "model_best.json");
    save_model(result.final, cfg.out / "model_final.json");
    write_provenance(cfg.out, "train", cfg, inputs);
    const auto& last = result.history.back();
    std::cout << fmt::format("variant {} input width {}, {} samples\n", to_string(cfg.train.variant),
                             feature_width(cfg.train.variant), samples.size());
    std::cout << fmt::format("best epoch {} val_loss {}\n", result.best_epoch,
                             result.history[static_cast<std::size_t>(result.best_epoch - 1)].val_loss);
    std::cout << fmt::format("final validation loss: {}\n", last.val_loss);
    return 0;
}

int cmd_invert(const CommonOptions& o, const std::string& model_path, const std::string& scene_path, int acq,
               bool oracle) {
    const RunConfig cfg = resolve_config(o);
    const auto scene = read_bundle(scene_path);
    SceneBundle out;
    if (oracle) {
        out = invert_scene_oracle(scene, acq, cfg.inversion, cfg.forward, cfg.threads);
    } else {
        if (model_path.empty()) {
            throw ValidationError("--model is required unless --oracle-profile is given");
        }
        out = invert_scene(load_model(model_path), scene, acq, cfg.inversion, cfg.forward, cfg.threads);
    }
    ensure_dir(cfg.out);
    write_bundle(out, cfg.out);
    nlohmann::ordered_json inputs;
    inputs["scene"] = sha256_file(fs::path(scene_path) / "manifest.json");
    if (!oracle) {
        inputs["model"] = sha256_file(model_path);
    }
    write_provenance(cfg.out, "invert", cfg, inputs);

    const auto& valid = out.band("valid").data;
    const std::size_t n_valid = static_cast<std::size_t>(std::count(valid.begin(), valid.end(), 1.0f));
    std::cout << fmt::format("{} of {} pixels inverted\n", n_valid, valid.size());
    if (scene.has_band("h_ref")) {
        const auto& h = out.band("h_v").data;
        const auto& kz = out.band("kz").data;
        const auto& ref = scene.band("h_ref").data;
        std::vector<double> est_all, ref_all, est_s, ref_s;
        for (std::size_t p = 0; p < h.size(); ++p) {
            if (valid[p] != 1.0f || ref[p] == scene.grid().nodata) {
                continue;
            }
            est_all.push_back(h[p]);
            ref_all.push_back(ref[p]);
            const double kzh = std::abs(static_cast<double>(kz[p]) * ref[p]);
            if (kzh >= 0.3 && kzh <= 2.8) {
                est_s.push_back(h[p]);
                ref_s.push_back(ref[p]);
            }
        }
        if (!est_all.empty()) {
            std::cout << fmt::format("height RMSE: {:.6f} m over {} pixels\n", rmse(est_all, ref_all), est_all.size());
        }
        if (!est_s.empty()) {
            std::cout << fmt::format("height RMSE (kz*h in [0.3, 2.8]): {:.6f} m over {} pixels\n",
                                     rmse(est_s, ref_s), est_s.size());
        }
    }
    return 0;
}

int cmd_evaluate(const CommonOptions& o, const std::vector<std::string>& heights,
                 const std::vector<std::string>& scenes) {
    const RunConfig cfg = resolve_config(o);
    if (heights.size() != scenes.size() || heights.empty()) {
        throw ValidationError("evaluate needs matching --heights and --scene lists");
    }
    std::vector<EvalTableRow> rows;
    std::vector<double> all_est, all_ref, all_slope, all_coh, all_kzh;
    ensure_dir(cfg.out);
    for (std::size_t s = 0; s < heights.size(); ++s) {
        const auto hb = read_bundle(heights[s]);
        const auto sb = read_bundle(scenes[s]);
        if (!hb.grid().same_shape(sb.grid())) {
            throw DimensionError(fmt::format("grid mismatch: {} is {}x{}, {} is {}x{}", heights[s], hb.grid().rows,
                                             hb.grid().cols, scenes[s], sb.grid().rows, sb.grid().cols));
        }
        const std::string name = fs::path(scenes[s]).filename().string();
        const auto& h = hb.band("h_v").data;
        const auto& valid = hb.band("valid").data;
        const auto& kz = hb.band("kz").data;
        const auto& coh = hb.band("coh").data;
        const auto& ref = sb.band("h_ref").data;
        const auto& slope = sb.band("slope").data;
        const float nodata = sb.grid().nodata;
        const bool has_mask = sb.has_band("mask");
        std::vector<double> est, rf;
        for (std::size_t p = 0; p < h.size(); ++p) {
            if (valid[p] != 1.0f || ref[p] == nodata || slope[p] == nodata ||
                (has_mask && sb.band("mask").data[p] == 0.0f)) {
                continue;
            }
            est.push_back(h[p]);
            rf.push_back(ref[p]);
            all_slope.push_back(slope[p]);
            all_coh.push_back(coh[p]);
            all_kzh.push_back(static_cast<double>(kz[p]) * ref[p]);
        }
        if (est.empty()) {
            throw ValidationError("no valid pixels in " + name);
        }
        rows.push_back(evaluate_row(name, est, rf));
        all_est.insert(all_est.end(), est.begin(), est.end());
        all_ref.insert(all_ref.end(), rf.begin(), rf.end());
        write_ppm(false_rgb(hb.band("a1").data, hb.band("a2").data, hb.band("a3").data, hb.grid().rows,
                            hb.grid().cols, hb.grid().nodata),
                  cfg.out / (name + "_coeffs.ppm"));
    }
    rows.push_back(evaluate_row("Overall", all_est, all_ref));
    write_text(cfg.out / "eval_table.csv", render_eval_table(rows));
    write_text(cfg.out / "slope_bins.csv",
               render_slope_bins(residuals_vs_slope(all_est, all_ref, all_slope, cfg.slope_bin_width_deg)));
    write_text(cfg.out / "density.csv",
               render_density(coherence_density(all_coh, all_kzh, cfg.density_bins, cfg.density_bins)));
    write_provenance(cfg.out, "evaluate", cfg);
    std::cout << render_eval_table(rows);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hybrid physics/ML forest height inversion from InSAR coherence"};
    app.require_subcommand(1);

    CommonOptions sim_o, train_o, inv_o, eval_o;
    auto* sim = app.add_subcommand("simulate", "synthesize scene bundles and ambiguity pairs");
    add_common(sim, sim_o);

    auto* trn = app.add_subcommand("train", "train a coefficient network on scene bundles");
    add_common(trn, train_o);
    std::vector<std::string> train_scenes;
    std::string variant;
    std::optional<int> epochs;
    trn->add_option("--scene", train_scenes, "training scene bundle (repeatable)")->required();
    trn->add_option("--variant", variant, "C (InSAR + geometry) or D (adds optical bands)");
    trn->add_option("--epochs", epochs, "override train.epochs");

    auto* inv = app.add_subcommand("invert", "invert heights for one acquisition of a scene");
    add_common(inv, inv_o);
    std::string model_path, inv_scene;
    int acq = 0;
    bool oracle = false;
    inv->add_option("--model", model_path, "model file from train");
    inv->add_option("--scene", inv_scene, "scene bundle")->required();
    inv->add_option("--acq", acq, "acquisition index within the scene");
    inv->add_flag("--oracle-profile", oracle, "use the simulated profile family instead of the network");

    auto* ev = app.add_subcommand("evaluate", "metrics, slope bins, density and coefficient composites");
    add_common(ev, eval_o);
    std::vector<std::string> heights, ev_scenes;
    ev->add_option("--heights", heights, "inversion output bundle (repeatable)")->required();
    ev->add_option("--scene", ev_scenes, "matching reference scene bundle (repeatable)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*sim) {
            return cmd_simulate(sim_o);
        }
        if (*trn) {
            return cmd_train(train_o, train_scenes, variant, epochs);
        }
        if (*inv) {
            return cmd_invert(inv_o, model_path, inv_scene, acq, oracle);
        }
        return cmd_evaluate(eval_o, heights, ev_scenes);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return 3;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    }
}
