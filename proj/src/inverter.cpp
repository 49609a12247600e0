#include "hyforest/inverter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "hyforest/error.hpp"
#include "hyforest/parallel.hpp"
#include "hyforest/simulator.hpp"

namespace hyforest {

namespace {

constexpr double kTieTolerance = 1e-6;
constexpr double kMinSensitivity = 1e-6;

struct Candidate {
    double h;
    double r;
};

double golden_section(const std::function<double(double)>& r, double a, double b, double tol) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double rc = r(c);
    double rd = r(d);
    while (b - a > tol) {
        if (rc <= rd) {
            b = d;
            d = c;
            rd = rc;
            c = b - inv_phi * (b - a);
            rc = r(c);
        } else {
            a = c;
            c = d;
            rc = rd;
            d = a + inv_phi * (b - a);
            rd = r(d);
        }
    }
    return rc <= rd ? c : d;
}

void check_observation(double coh_obs_mag) {
    if (!(coh_obs_mag >= 0.0 && coh_obs_mag <= 1.0)) {
        throw DomainError("observed coherence magnitude must lie in [0, 1]");
    }
}

void check_kz(double kz) {
    if (!std::isfinite(kz) || std::abs(kz) < kMinSensitivity) {
        throw SingularGeometryError("no height sensitivity: |kz| < 1e-6 rad/m");
    }
}

struct OutputBands {
    std::vector<float> h, residual, a1, a2, a3, valid, flags, kz, coh;
    explicit OutputBands(std::size_t n, float nodata)
        : h(n, nodata), residual(n, nodata), a1(n, nodata), a2(n, nodata), a3(n, nodata), valid(n, 0.0f),
          flags(n, 0.0f), kz(n, nodata), coh(n, nodata) {}

    void store(std::size_t p, const InversionResult& r, double kz_p, double coh_p, bool with_coeffs) {
        if (r.h_v) {
            h[p] = static_cast<float>(*r.h_v);
            valid[p] = 1.0f;
        }
        residual[p] = static_cast<float>(r.residual);
        if (with_coeffs) {
            a1[p] = static_cast<float>(r.coeffs.values()[0]);
            a2[p] = r.coeffs.order() >= 2 ? static_cast<float>(r.coeffs.values()[1]) : 0.0f;
            a3[p] = r.coeffs.order() >= 3 ? static_cast<float>(r.coeffs.values()[2]) : 0.0f;
        }
        flags[p] = static_cast<float>(r.flags);
        kz[p] = static_cast<float>(kz_p);
        coh[p] = static_cast<float>(coh_p);
    }

    SceneBundle bundle(const SceneBundle& scene, int acq) && {
        SceneBundle out(scene.grid());
        out.seed = scene.seed;
        out.created_by = "hyforest height_inverter";
        out.attributes["acquisition"] = acq;
        out.add_band("h_v", "m", std::move(h));
        out.add_band("residual", "", std::move(residual));
        out.add_band("a1", "", std::move(a1));
        out.add_band("a2", "", std::move(a2));
        out.add_band("a3", "", std::move(a3));
        out.add_band("valid", "bool", std::move(valid));
        out.add_band("flags", "bits", std::move(flags));
        out.add_band("kz", "rad/m", std::move(kz));
        out.add_band("coh", "", std::move(coh));
        return out;
    }
};

void check_acquisition(const SceneBundle& scene, int acq) {
    if (acq < 0) {
        throw ValidationError("acquisition index must be >= 0");
    }
    scene.band(acq_band("kz", acq));
    scene.band(acq_band("coh", acq));
}

bool pixel_usable(const SceneBundle& scene, std::size_t p, float kz, float coh) {
    const float nodata = scene.grid().nodata;
    if (scene.has_band("mask") && scene.band("mask").data[p] == 0.0f) {
        return false;
    }
    return kz != nodata && coh != nodata && std::isfinite(kz) && std::isfinite(coh);
}

}  // namespace

void InversionConfig::validate() const {
    if (!(h_min >= 0.0 && h_max > h_min && std::isfinite(h_max))) {
        throw ValidationError("inversion.h_min/h_max must satisfy 0 <= h_min < h_max");
    }
    if (!(grid_step > 0.0)) {
        throw ValidationError("inversion.grid_step must be > 0");
    }
    if (!(refine_tol > 0.0)) {
        throw ValidationError("inversion.refine_tol must be > 0");
    }
    if (!(residual_max >= 0.0)) {
        throw ValidationError("inversion.residual_max must be >= 0");
    }
}

InversionResult invert_curve(const std::function<double(double)>& model_magnitude, double coh_obs_mag,
                             const InversionConfig& cfg) {
    cfg.validate();
    check_observation(coh_obs_mag);

    std::vector<double> hs;
    for (int i = 0;; ++i) {
        const double h = cfg.h_min + i * cfg.grid_step;
        if (h >= cfg.h_max - 1e-12) {
            break;
        }
        hs.push_back(h);
    }
    hs.push_back(cfg.h_max);
    const std::size_t n = hs.size();
    auto diff = [&](double h) { return model_magnitude(h) - coh_obs_mag; };
    auto resid = [&](double h) { return std::abs(diff(h)); };
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = diff(hs[i]);
    }

    std::vector<Candidate> cands;
    std::vector<bool> near_crossing(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        if (d[i] == 0.0) {
            cands.push_back({hs[i], 0.0});
            near_crossing[i] = true;
        }
    }
    // Sign changes bracket exact matches; solve them to near machine precision.
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (d[i] == 0.0 || d[i + 1] == 0.0 || (d[i] < 0.0) == (d[i + 1] < 0.0)) {
            continue;
        }
        std::uintmax_t iters = 100;
        const auto bracket = boost::math::tools::toms748_solve(
            diff, hs[i], hs[i + 1], d[i], d[i + 1], boost::math::tools::eps_tolerance<double>(45), iters);
        const double lo_r = std::abs(diff(bracket.first));
        const double hi_r = std::abs(diff(bracket.second));
        cands.push_back(lo_r <= hi_r ? Candidate{bracket.first, lo_r} : Candidate{bracket.second, hi_r});
        near_crossing[i] = near_crossing[i + 1] = true;
    }
    // Remaining local minima of the residual (tangential approaches, boundaries).
    for (std::size_t i = 0; i < n; ++i) {
        if (near_crossing[i]) {
            continue;
        }
        const double ri = std::abs(d[i]);
        const bool left_ok = i == 0 || ri <= std::abs(d[i - 1]);
        const bool right_ok = i + 1 == n || ri <= std::abs(d[i + 1]);
        if (!left_ok || !right_ok) {
            continue;
        }
        const double a = i == 0 ? hs[i] : hs[i - 1];
        const double b = i + 1 == n ? hs[i] : hs[i + 1];
        Candidate best{hs[i], ri};
        if (b > a) {
            const double h = golden_section(resid, a, b, cfg.refine_tol);
            const double r = resid(h);
            if (r < best.r) {
                best = {h, r};
            }
        }
        cands.push_back(best);
    }

    double best_r = std::numeric_limits<double>::infinity();
    for (const auto& c : cands) {
        best_r = std::min(best_r, c.r);
    }
    const Candidate* chosen = nullptr;
    int ties = 0;
    for (const auto& c : cands) {
        if (c.r <= best_r + kTieTolerance) {
            ++ties;
            if (chosen == nullptr || c.h < chosen->h) {
                chosen = &c;
            }
        }
    }

    InversionResult out;
    out.residual = chosen->r;
    if (ties > 1) {
        out.flags |= quality::kMultipleMinima;
    }
    if (chosen->r > cfg.residual_max) {
        out.flags |= quality::kResidualExceeded;
        return out;
    }
    out.h_v = std::clamp(chosen->h, cfg.h_min, cfg.h_max);
    if (*out.h_v - cfg.h_min <= cfg.refine_tol || cfg.h_max - *out.h_v <= cfg.refine_tol) {
        out.flags |= quality::kAtSearchBoundary;
    }
    return out;
}

InversionResult invert_profile(const ProfileCoefficients& coeffs, double kz, double coh_obs_mag,
                               const InversionConfig& inv, const ForwardConfig& fwd) {
    check_kz(kz);
    check_observation(coh_obs_mag);
    fwd.validate();
    const SampledProfile profile = sample_profile(coeffs, fwd);
    auto result = invert_curve([&](double h) { return coherence_magnitude(profile, h, kz, fwd); }, coh_obs_mag, inv);
    result.coeffs = coeffs;
    return result;
}

InversionResult invert_pixel(const Model& model, const FeatureVector& features, double kz,
                             double coh_obs_mag, const InversionConfig& inv, const ForwardConfig& fwd) {
    check_kz(kz);
    check_observation(coh_obs_mag);
    return invert_profile(model.predict_coefficients(features), kz, coh_obs_mag, inv, fwd);
}

SceneBundle invert_scene(const Model& model, const SceneBundle& scene, int acq_index,
                         const InversionConfig& inv, const ForwardConfig& fwd, int threads) {
    inv.validate();
    fwd.validate();
    model.validate();
    check_acquisition(scene, acq_index);
    const std::size_t n = scene.grid().size();
    // Validates every band the variant needs before the per-pixel loop.
    if (n > 0) {
        (void)pixel_features(scene, acq_index, 0, model.variant);
    }
    const auto& kz = scene.band(acq_band("kz", acq_index)).data;
    const auto& coh = scene.band(acq_band("coh", acq_index)).data;
    OutputBands out(n, scene.grid().nodata);
    parallel_for(n, threads, [&](std::size_t p) {
        const auto features = pixel_features(scene, acq_index, p, model.variant);
        if (!features || !pixel_usable(scene, p, kz[p], coh[p])) {
            out.flags[p] = static_cast<float>(quality::kMasked);
            return;
        }
        const double coh_p = std::clamp(static_cast<double>(coh[p]), 0.0, 1.0);
        out.store(p, invert_pixel(model, *features, kz[p], coh_p, inv, fwd), kz[p], coh_p, true);
    });
    return std::move(out).bundle(scene, acq_index);
}

SceneBundle invert_scene_oracle(const SceneBundle& scene, int acq_index, const InversionConfig& inv,
                                const ForwardConfig& fwd, int threads) {
    inv.validate();
    fwd.validate();
    check_acquisition(scene, acq_index);
    const auto& family = scene.band("family").data;
    const auto& p0 = scene.band("fam_p0").data;
    const auto& p1 = scene.band("fam_p1").data;
    const auto& p2 = scene.band("fam_p2").data;
    const auto& kz = scene.band(acq_band("kz", acq_index)).data;
    const auto& coh = scene.band(acq_band("coh", acq_index)).data;
    const std::size_t n = scene.grid().size();
    OutputBands out(n, scene.grid().nodata);
    parallel_for(n, threads, [&](std::size_t p) {
        if (!pixel_usable(scene, p, kz[p], coh[p]) || family[p] == scene.grid().nodata) {
            out.flags[p] = static_cast<float>(quality::kMasked);
            return;
        }
        ProfileFamily fam;
        fam.kind = static_cast<FamilyKind>(static_cast<int>(family[p]));
        fam.rate = fam.kind == FamilyKind::Exponential ? p0[p] : 0.0;
        if (fam.kind == FamilyKind::TwoLayer) {
            fam.canopy_center = p0[p];
            fam.canopy_width = p1[p];
            fam.ground_weight = p2[p];
        }
        const double kz_p = kz[p];
        check_kz(kz_p);
        const double coh_p = std::clamp(static_cast<double>(coh[p]), 0.0, 1.0);
        auto r = invert_curve([&](double h) { return fam.coherence_magnitude(h, kz_p, fwd); }, coh_p, inv);
        out.store(p, r, kz_p, coh_p, false);
    });
    return std::move(out).bundle(scene, acq_index);
}

}  // namespace hyforest
