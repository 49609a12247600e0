// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance            run all criteria
//   acceptance 1 4 ...    run the listed criteria only
//
// Exit status is non-zero if any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "hyforest/inverter.hpp"
#include "hyforest/legendre.hpp"
#include "hyforest/metrics.hpp"
#include "hyforest/mlp.hpp"
#include "hyforest/physics.hpp"
#include "hyforest/quadrature.hpp"
#include "hyforest/raster.hpp"
#include "hyforest/simulator.hpp"
#include "hyforest/trainer.hpp"

namespace fs = std::filesystem;
using namespace hyforest;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Independent closed forms, written out here rather than taken from the library.
std::complex<double> uniform_oracle(double kz, double h) {
    const double x = 0.5 * kz * h;
    return std::polar(std::sin(x) / x, x);
}

std::complex<double> exponential_oracle(double p, double kz, double h) {
    const std::complex<double> c(p, kz);
    return (std::exp(c * h) - 1.0) / c * (p / (std::exp(p * h) - 1.0));
}

std::vector<double> sample_on_nodes(int m, double h, const std::function<double(double)>& f) {
    const auto& rule = gauss_legendre_unit(m);
    std::vector<double> out;
    for (double u : rule.nodes) {
        out.push_back(f(u * h));
    }
    return out;
}

// ---------------------------------------------------------------------------------------------

Outcome criterion_1() {
    const auto t0 = std::chrono::steady_clock::now();
    const ForwardConfig fwd;
    const ProfileCoefficients flat(7);
    const std::array<double, 4> rates{-0.05, 0.02, 0.1, 0.2};
    double worst_u = 0.0;
    double worst_e = 0.0;
    int points = 0;
    // 25 kz values x 20 h values = 500 points with kz h <= 12.
    for (int i = 0; i < 25; ++i) {
        const double kz = 0.01 + 0.3 * i / 24.0;
        for (int j = 1; j <= 20; ++j) {
            const double h = (12.0 / kz) * j / 20.0;
            ++points;
            worst_u = std::max(worst_u, std::abs(volume_coherence(flat, h, kz, fwd) - uniform_oracle(kz, h)));
            const double p = rates[static_cast<std::size_t>(points) % rates.size()] * std::min(1.0, 40.0 / h);
            const auto samples = sample_on_nodes(fwd.quad_nodes, h, [p](double z) { return std::exp(p * z); });
            worst_e = std::max(worst_e,
                               std::abs(volume_coherence_sampled(samples, h, kz, fwd) - exponential_oracle(p, kz, h)));
        }
    }
    const double t = seconds_since(t0);
    const bool pass = points == 500 && worst_u < 1e-9 && worst_e < 1e-9 && t < 5.0;
    return {pass, fmt::format("{} points, max |dgamma| uniform {:.2e}, exponential {:.2e} (< 1e-9), {:.2f} s (< 5 s)",
                              points, worst_u, worst_e, t)};
}

// ---------------------------------------------------------------------------------------------

Outcome criterion_2() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> width(2, 8);
    std::uniform_int_distribution<int> depth(1, 2);
    std::uniform_int_distribution<int> nbatch(1, 3);
    const ForwardConfig fwd;
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        TrainConfig cfg;
        cfg.variant = trial % 2 == 0 ? ModelVariant::C : ModelVariant::D;
        cfg.hidden_layers.assign(static_cast<std::size_t>(depth(rng)), 0);
        for (auto& w : cfg.hidden_layers) {
            w = width(rng);
        }
        cfg.neg_penalty_weight = 0.1;
        Model model;
        model.variant = cfg.variant;
        model.params = init_params(cfg.layer_dims(), static_cast<std::uint64_t>(trial));
        // Larger output weights so that some raw profiles dip below zero and the penalty is active.
        for (auto& v : model.params.weights.back().reshaped()) {
            v *= 3.0;
        }
        for (auto& b : model.params.biases.back()) {
            b = 0.4 * u(rng);
        }
        model.normalizer = FeatureNormalizer::identity(feature_width(cfg.variant));
        std::vector<TrainSample> batch;
        for (int s = 0; s < nbatch(rng); ++s) {
            TrainSample ts;
            ts.kz = 0.06 + 0.1 * (u(rng) + 1.0);
            ts.h_ref = 5.0 + 10.0 * (u(rng) + 1.0);
            ts.coh_obs_mag = 0.5 + 0.4 * u(rng);
            ts.features.kz = ts.kz;
            ts.features.coh_mag = ts.coh_obs_mag;
            ts.features.theta0 = 0.8 + 0.1 * u(rng);
            ts.features.theta_loc = ts.features.theta0 + 0.2 * u(rng);
            ts.features.alpha = ts.features.theta_loc - ts.features.theta0;
            if (cfg.variant == ModelVariant::D) {
                ts.features.bands = std::array<double, 4>{0.04 + 0.01 * u(rng), 0.3 + 0.05 * u(rng),
                                                          0.15 + 0.03 * u(rng), 0.07 + 0.02 * u(rng)};
            }
            ts.pixel_id = s;
            batch.push_back(ts);
        }
        const auto lv = loss(model, batch, cfg, fwd, true);
        const auto analytic = lv.gradients.flatten();
        auto theta = flatten_params(model.params);
        std::vector<double> fd(theta.size());
        const double step = 1e-5;
        for (std::size_t k = 0; k < theta.size(); ++k) {
            const double keep = theta[k];
            Model probe = model;
            theta[k] = keep + step;
            unflatten_params(probe.params, theta);
            const double up = loss(probe, batch, cfg, fwd, false).value;
            theta[k] = keep - step;
            unflatten_params(probe.params, theta);
            const double down = loss(probe, batch, cfg, fwd, false).value;
            theta[k] = keep;
            fd[k] = (up - down) / (2.0 * step);
        }
        double diff = 0.0, na = 0.0, nf = 0.0;
        for (std::size_t k = 0; k < fd.size(); ++k) {
            diff += (analytic[k] - fd[k]) * (analytic[k] - fd[k]);
            na += analytic[k] * analytic[k];
            nf += fd[k] * fd[k];
        }
        const double scale = std::max(std::sqrt(std::max(na, nf)), 1e-12);
        worst = std::max(worst, std::sqrt(diff) / scale);
    }
    const double t = seconds_since(t0);
    return {worst < 1e-4 && t < 60.0,
            fmt::format("100 configurations, max relative error {:.2e} (< 1e-4), {:.1f} s (< 60 s)", worst, t)};
}

// ---------------------------------------------------------------------------------------------

std::vector<AcquisitionSpec> large_hoa_acquisitions() {
    const auto all = lope_acquisitions();
    return {all[2], all[3], all[4]};
}

Outcome criterion_3() {
    const auto t0 = std::chrono::steady_clock::now();
    const ForwardConfig fwd;
    const InversionConfig inv;

    // (a) Oracle profiles: random near-uniform Legendre profiles and the simulator families.
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    double worst_oracle = 0.0;
    for (int i = 0; i < 200; ++i) {
        std::vector<double> a(7);
        for (auto& v : a) {
            v = 0.1 * (2.0 * u01(rng) - 1.0);
        }
        const ProfileCoefficients coeffs(a);
        const double kz = 0.06 + 0.1 * u01(rng);
        const double h_true = (0.3 + 2.5 * u01(rng)) / kz;
        if (h_true > inv.h_max) {
            continue;
        }
        const double coh = std::abs(volume_coherence(coeffs, h_true, kz, fwd));
        const auto r = invert_profile(coeffs, kz, coh, inv, fwd);
        worst_oracle = std::max(worst_oracle, r.h_v ? std::abs(*r.h_v - h_true) : 1e9);
    }
    SceneSpec spec;
    spec.rows = 24;
    spec.cols = 24;
    spec.noise.looks = 1e12;
    spec.seed = 3;
    const auto scene = generate_scene(spec, fwd);
    const auto& href = scene.band("h_ref").data;
    int oracle_pixels = 0;
    for (int k = 0; k < scene.acquisition_count(); ++k) {
        const auto out = invert_scene_oracle(scene, k, inv, fwd);
        const auto& kz = scene.band(acq_band("kz", k)).data;
        const auto& h = out.band("h_v").data;
        for (std::size_t p = 0; p < h.size(); ++p) {
            const double kzh = std::abs(kz[p] * href[p]);
            if (kzh >= 0.3 && kzh <= 2.8) {
                ++oracle_pixels;
                worst_oracle = std::max(worst_oracle, out.band("valid").data[p] == 1.0f
                                                          ? std::abs(static_cast<double>(h[p]) - href[p])
                                                          : 1e9);
            }
        }
    }

    // (b) Trained network on a noiseless scene. Large-HoA acquisitions and heights within
    // [5, 38] m keep every pixel on the first monotonic branch of |gamma|(h).
    SceneSpec ns;
    ns.rows = 40;
    ns.cols = 40;
    ns.acquisitions = large_hoa_acquisitions();
    ns.noise.looks = 1e12;
    ns.h_min_true = 5.0;
    ns.h_max_true = 38.0;
    ns.terrain.slope_std_deg = 5.0;
    ns.seed = 11;
    const auto nscene = generate_scene(ns, fwd);
    const std::vector<int> acqs{0, 1, 2};
    const auto samples = assemble_samples(nscene, acqs, ModelVariant::D);
    TrainConfig cfg;
    cfg.variant = ModelVariant::D;
    cfg.epochs = 600;
    cfg.batch_size = 128;
    cfg.learning_rate = 3e-3;
    cfg.seed = 11;
    const auto result = train(samples, cfg, fwd);
    std::vector<double> est, ref;
    for (int k : acqs) {
        const auto out = invert_scene(result.best, nscene, k, inv, fwd);
        const auto& h = out.band("h_v").data;
        const auto& valid = out.band("valid").data;
        for (std::size_t p = 0; p < h.size(); ++p) {
            est.push_back(valid[p] == 1.0f ? h[p] : 0.0);
            ref.push_back(nscene.band("h_ref").data[p]);
        }
    }
    const double scene_rmse = rmse(est, ref);
    const double t = seconds_since(t0);
    const bool pass = worst_oracle < 0.01 && scene_rmse < 1.0 && t < 120.0;
    return {pass, fmt::format("oracle max error {:.2e} m over {} scene pixels + 200 profiles (< 0.01 m); "
                              "trained Model D noiseless scene RMSE {:.3f} m (< 1 m); {:.1f} s (< 120 s)",
                              worst_oracle, oracle_pixels, scene_rmse, t)};
}

// ---------------------------------------------------------------------------------------------

struct AblationScore {
    double rmse_c = 0.0;
    double rmse_d = 0.0;
    std::size_t points = 0;
};

/// Held-out RMSE of both variants on test-split pixels, pooled over all acquisitions, using
/// only (pixel, acquisition) cells that both models invert to a valid height.
AblationScore score_ablation(const SceneBundle& bundle, const TrainResult& c, const TrainResult& d,
                             std::span<const TrainSample> samples, const InversionConfig& inv,
                             const ForwardConfig& fwd) {
    std::vector<double> ec, ed, ref;
    for (auto i : c.split.test) {
        const auto& s = samples[i];
        const auto p = static_cast<std::size_t>(s.pixel_id);
        const int acq = s.acquisition;
        const auto fc = pixel_features(bundle, acq, p, ModelVariant::C);
        const auto fd = pixel_features(bundle, acq, p, ModelVariant::D);
        const auto rc = invert_pixel(c.best, *fc, s.kz, s.coh_obs_mag, inv, fwd);
        const auto rd = invert_pixel(d.best, *fd, s.kz, s.coh_obs_mag, inv, fwd);
        if (rc.valid() && rd.valid()) {
            ec.push_back(*rc.h_v);
            ed.push_back(*rd.h_v);
            ref.push_back(s.h_ref);
        }
    }
    return {rmse(ec, ref), rmse(ed, ref), ref.size()};
}

SceneSpec ablation_spec(std::uint64_t seed) {
    SceneSpec spec;
    spec.rows = 72;
    spec.cols = 72;
    spec.acquisitions = lope_training_acquisitions();
    spec.noise.looks = 30.0;
    spec.seed = seed;
    return spec;
}

Outcome criterion_4() {
    const auto t0 = std::chrono::steady_clock::now();
    const ForwardConfig fwd;
    const InversionConfig inv;
    std::vector<double> reductions;
    int d_wins = 0;
    std::string per_seed;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto spec = ablation_spec(seed);
        const auto bench = generate_ambiguity_benchmark(spec, 1500, fwd);
        const std::vector<int> acqs{0, 1, 2};
        const auto sc = assemble_samples(bench.bundle, acqs, ModelVariant::C);
        const auto sd = assemble_samples(bench.bundle, acqs, ModelVariant::D);
        TrainConfig cfg;
        cfg.seed = seed;
        cfg.variant = ModelVariant::C;
        const auto rc = train(sc, cfg, fwd);
        cfg.variant = ModelVariant::D;
        const auto rd = train(sd, cfg, fwd);
        if (rc.split.test != rd.split.test) {
            return {false, "C and D test splits differ"};
        }
        const auto s = score_ablation(bench.bundle, rc, rd, sc, inv, fwd);
        const double red = 1.0 - s.rmse_d / s.rmse_c;
        reductions.push_back(red);
        d_wins += s.rmse_d < s.rmse_c ? 1 : 0;
        per_seed += fmt::format(" [seed {}: C {:.2f} m, D {:.2f} m, n={}]", seed, s.rmse_c, s.rmse_d, s.points);
    }
    std::sort(reductions.begin(), reductions.end());
    const double median = reductions[2];
    const double t = seconds_since(t0);
    const bool pass = d_wins >= 4 && median >= 0.10 && t < 900.0;
    return {pass, fmt::format("D better on {}/5 seeds (>= 4), median RMSE reduction {:.1f}% (>= 10%), {:.0f} s (< 900 s);{}",
                              d_wins, 100.0 * median, t, per_seed)};
}

// ---------------------------------------------------------------------------------------------

Outcome criterion_5() {
    const ForwardConfig fwd;
    const InversionConfig inv;
    SceneSpec spec;
    spec.rows = 72;
    spec.cols = 72;
    spec.acquisitions = lope_training_acquisitions();
    spec.coupling = {0.5, 2, 0};  // two-layer stands on slopes facing away, uniform elsewhere
    spec.terrain.slope_std_deg = 12.0;
    spec.h_max_true = 40.0;
    spec.seed = 5;
    const auto scene = generate_scene(spec, fwd);
    const std::vector<int> acqs{0, 1, 2};
    const auto sc = assemble_samples(scene, acqs, ModelVariant::C);
    const auto sd = assemble_samples(scene, acqs, ModelVariant::D);
    TrainConfig cfg;
    cfg.seed = 5;
    cfg.epochs = 200;
    cfg.variant = ModelVariant::C;
    const auto rc = train(sc, cfg, fwd);
    cfg.variant = ModelVariant::D;
    const auto rd = train(sd, cfg, fwd);

    std::vector<double> ec, ed, ref, slope;
    for (auto i : rc.split.test) {
        const auto& s = sc[i];
        const auto p = static_cast<std::size_t>(s.pixel_id);
        const int acq = s.acquisition;
        const auto r_c = invert_pixel(rc.best, *pixel_features(scene, acq, p, ModelVariant::C), s.kz,
                                      s.coh_obs_mag, inv, fwd);
        const auto r_d = invert_pixel(rd.best, *pixel_features(scene, acq, p, ModelVariant::D), s.kz,
                                      s.coh_obs_mag, inv, fwd);
        if (r_c.valid() && r_d.valid()) {
            ec.push_back(*r_c.h_v);
            ed.push_back(*r_d.h_v);
            ref.push_back(s.h_ref);
            slope.push_back(s.features.alpha);
        }
    }
    auto range_mean = [&](const std::vector<double>& est, double lo_deg, double hi_deg) {
        const auto bins = residuals_vs_slope(est, ref, slope, 5.0);
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& b : bins) {
            if (b.count > 0 && b.center_deg >= lo_deg && b.center_deg <= hi_deg) {
                sum += b.mean_residual * static_cast<double>(b.count);
                n += b.count;
            }
        }
        return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(n);
    };
    const double c_neg = std::abs(range_mean(ec, -20.0, -10.0));
    const double d_neg = std::abs(range_mean(ed, -20.0, -10.0));
    const double d_mid = std::abs(range_mean(ed, -10.0, 10.0));
    const bool pass = c_neg > d_neg && d_mid < 0.5;
    return {pass, fmt::format("alpha in [-20, -10] deg: |mean residual| C {:.3f} m > D {:.3f} m; "
                              "alpha in [-10, 10] deg: D {:.3f} m (< 0.5 m); {} test cells",
                              c_neg, d_neg, d_mid, ref.size())};
}

// ---------------------------------------------------------------------------------------------

std::string read_file(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::map<std::string, std::string> tree_contents(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) {
            out[fs::relative(e.path(), dir).generic_string()] = read_file(e.path());
        }
    }
    return out;
}

Outcome criterion_6() {
    const ForwardConfig fwd;
    const InversionConfig inv;
    const fs::path root = fs::temp_directory_path() / fmt::format("hyforest_accept6_{}", ::getpid());
    fs::remove_all(root);
    std::vector<std::string> failures;
    std::vector<std::map<std::string, std::string>> trees;
    std::vector<std::string> histories, metrics;
    int run = 0;
    for (int threads : {1, 1, 4}) {
        SceneSpec spec;
        spec.rows = 20;
        spec.cols = 20;
        spec.seed = 6;
        spec.acquisitions = lope_training_acquisitions();
        const auto bench = generate_ambiguity_benchmark(spec, 50, fwd, threads);
        const fs::path dir = root / std::to_string(run++);
        write_bundle(bench.bundle, dir / "scene");
        std::ofstream(dir / "pairs.csv") << pairs_csv(bench.pairs);

        const std::vector<int> acqs{0, 1, 2};
        const auto samples = assemble_samples(bench.bundle, acqs, ModelVariant::D);
        TrainConfig cfg;
        cfg.variant = ModelVariant::D;
        cfg.epochs = 5;
        cfg.batch_size = 64;
        cfg.threads = threads;
        cfg.seed = 6;
        const auto result = train(samples, cfg, fwd);
        std::string hist;
        for (const auto& r : result.history) {
            hist += fmt::format("{},{},{}\n", r.epoch, r.train_loss, r.val_loss);
        }
        histories.push_back(hist);

        const auto out = invert_scene(result.best, bench.bundle, 0, inv, fwd, threads);
        write_bundle(out, dir / "inverted");
        std::vector<double> est, ref, slope, coh, kzh;
        for (std::size_t p = 0; p < out.grid().size(); ++p) {
            if (out.band("valid").data[p] == 1.0f) {
                est.push_back(out.band("h_v").data[p]);
                ref.push_back(bench.bundle.band("h_ref").data[p]);
                slope.push_back(bench.bundle.band("slope").data[p]);
                coh.push_back(out.band("coh").data[p]);
                kzh.push_back(out.band("kz").data[p] * ref.back());
            }
        }
        const std::vector<EvalTableRow> rows{evaluate_row("1", est, ref)};
        metrics.push_back(render_eval_table(rows) + render_slope_bins(residuals_vs_slope(est, ref, slope, 5.0)) +
                          render_density(coherence_density(coh, kzh, 20, 20)));
        trees.push_back(tree_contents(dir));
    }
    fs::remove_all(root);
    if (trees[0] != trees[1] || trees[0] != trees[2]) {
        failures.push_back("bundles");
    }
    if (histories[0] != histories[1] || histories[0] != histories[2]) {
        failures.push_back("loss histories");
    }
    if (metrics[0] != metrics[1] || metrics[0] != metrics[2]) {
        failures.push_back("metric CSVs");
    }
    std::string detail = fmt::format("{} files per run compared across two runs and threads {{1, 4}}", trees[0].size());
    for (const auto& f : failures) {
        detail += "; differs: " + f;
    }
    return {failures.empty(), detail};
}

// ---------------------------------------------------------------------------------------------

Outcome criterion_7() {
    std::vector<std::string> bad;
    auto expect = [&](bool ok, const std::string& what) {
        if (!ok) {
            bad.push_back(what);
        }
    };
    const std::vector<double> est{3.0, -4.0, 0.0};
    const std::vector<double> zero{0.0, 0.0, 0.0};
    // residuals {3, -4, 0}: rmse = sqrt(25/3), mae = 7/3
    expect(rmse(est, zero) == std::sqrt(25.0 / 3.0), "rmse 3-element");
    expect(mae(est, zero) == 7.0 / 3.0, "mae 3-element");
    const std::vector<double> two{3.0, -4.0};
    const std::vector<double> two_zero{0.0, 0.0};
    expect(std::abs(rmse(two, two_zero) - 3.53553) < 5e-6, "rmse {3,-4}");
    expect(mae(two, two_zero) == 3.5, "mae {3,-4}");
    const std::vector<double> ref{1.0, 2.0, 3.0};
    const std::vector<double> est2{1.0, 2.0, 4.0};
    // SS_res = 1, SS_tot = 2
    expect(r2(est2, ref) == 0.5, "r2 3-element");
    expect(rmse(ref, ref) == 0.0 && mae(ref, ref) == 0.0 && r2(ref, ref) == 1.0, "identity");

    const std::string c_table = render_eval_table(published_lope_table('C'));
    const std::string d_table = render_eval_table(published_lope_table('D'));
    expect(c_table ==
               "scene,rmse_m,mae_m,r2\n1,8.09,6.28,0.66\n2,9.09,6.93,0.62\n3,8.34,6.41,0.14\n"
               "4,8.97,6.98,0.69\n5,9.62,7.32,0.28\nOverall,8.84,6.79,0.67\n",
           "Model C table");
    expect(d_table ==
               "scene,rmse_m,mae_m,r2\n1,7.26,5.42,0.72\n2,9.09,5.71,0.65\n3,7.52,5.51,0.37\n"
               "4,6.94,5.25,0.77\n5,8.93,6.55,0.46\nOverall,7.65,5.66,0.75\n",
           "Model D table");
    std::string detail = "3-element rmse/mae/r2 exact; published C and D tables rendered verbatim";
    for (const auto& b : bad) {
        detail += "; mismatch: " + b;
    }
    return {bad.empty(), detail};
}

// ---------------------------------------------------------------------------------------------

Outcome criterion_8() {
    // Spectral convergence presumes a smooth integrand. Profiles whose raw values reach the
    // rectifier knee are not smooth at the knee; they are reported but not held to 1e-9.
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    ForwardConfig f64;
    ForwardConfig f256;
    f256.quad_nodes = 256;
    double worst = 0.0;
    double worst_clipped = 0.0;
    int accepted = 0;
    while (accepted < 2000) {
        const double scale = u01(rng);
        std::vector<double> a(7);
        for (auto& v : a) {
            v = scale * (2.0 * u01(rng) - 1.0);
        }
        const ProfileCoefficients coeffs(a);
        const double kz = 0.01 + 0.3 * u01(rng);
        const double h = 15.0 * u01(rng) / kz;
        double min_raw = 1e300;
        for (int k = 0; k <= 1000; ++k) {
            min_raw = std::min(min_raw, eval_profile_raw(coeffs, k / 1000.0));
        }
        const double d = std::abs(volume_coherence(coeffs, h, kz, f64) - volume_coherence(coeffs, h, kz, f256));
        if (min_raw > 0.1) {
            worst = std::max(worst, d);
            ++accepted;
        } else {
            worst_clipped = std::max(worst_clipped, d);
        }
    }
    // kz h = 15 exactly for the uniform profile.
    worst = std::max(worst, std::abs(volume_coherence(ProfileCoefficients(7), 50.0, 0.3, f64) -
                                     volume_coherence(ProfileCoefficients(7), 50.0, 0.3, f256)));
    return {worst < 1e-9,
            fmt::format("M=64 vs M=256, 2001 unclipped profiles (raw > 0.1) with kz h <= 15: max |dgamma| {:.2e} "
                        "(< 1e-9); rectifier-clipped profiles, informational: {:.2e}",
                        worst, worst_clipped)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::map<int, std::pair<const char*, Outcome (*)()>> criteria{
        {1, {"closed-form forward-model equivalence", criterion_1}},
        {2, {"end-to-end gradient correctness", criterion_2}},
        {3, {"noiseless inversion round trip", criterion_3}},
        {4, {"Model C vs Model D ablation on the ambiguity benchmark", criterion_4}},
        {5, {"slope-bias analog", criterion_5}},
        {6, {"determinism across runs and thread counts", criterion_6}},
        {7, {"metric unit values and published table fixture", criterion_7}},
        {8, {"quadrature convergence guard", criterion_8}},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) {
        selected.insert(std::stoi(argv[i]));
    }
    int failed = 0;
    for (const auto& [id, entry] : criteria) {
        if (!selected.empty() && !selected.contains(id)) {
            continue;
        }
        Outcome o;
        try {
            o = entry.second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", id, entry.first, o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
