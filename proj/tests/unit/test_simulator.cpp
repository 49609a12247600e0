#include <algorithm>
#include <cmath>
#include <cstring>

#include "doctest.h"

#include "hyforest/error.hpp"
#include "hyforest/quadrature.hpp"
#include "hyforest/simulator.hpp"

using namespace hyforest;

namespace {

SceneSpec single_uniform(double h) {
    SceneSpec spec;
    spec.rows = 1;
    spec.cols = 1;
    spec.acquisitions = {{52.45, 41.0}};
    spec.families = {{ProfileFamily::uniform(), 1.0}};
    spec.terrain.slope_std_deg = 0.0;
    spec.h_min_true = h;
    spec.h_max_true = h;
    spec.noise.looks = 1e9;
    return spec;
}

}  // namespace

TEST_CASE("single uniform pixel at 20 m against the closed-form sinc") {
    const auto scene = generate_scene(single_uniform(20.0));
    const double kz = scene.band("kz_0").data[0];
    CHECK(kz == doctest::Approx(0.11980).epsilon(1e-4));
    CHECK(scene.band("h_ref").data[0] == 20.0f);
    CHECK(scene.band("slope").data[0] == 0.0f);
    const double x = 0.5 * kz * 20.0;
    CHECK(std::abs(scene.band("coh_0").data[0] - std::abs(std::sin(x) / x)) < 1e-4);
    CHECK(scene.band("coh_0").data[0] == doctest::Approx(0.7778).epsilon(1e-3));
}

TEST_CASE("huge look count reproduces the forward model") {
    SceneSpec spec;
    spec.rows = 12;
    spec.cols = 12;
    spec.noise.looks = 1e9;
    spec.seed = 4;
    const auto scene = generate_scene(spec);
    for (int a = 0; a < scene.acquisition_count(); ++a) {
        const auto& obs = scene.band(acq_band("coh", a)).data;
        const auto& tru = scene.band(acq_band("coh_true", a)).data;
        for (std::size_t p = 0; p < obs.size(); ++p) {
            CHECK(std::abs(obs[p] - tru[p]) < 1e-4);
        }
    }
}

TEST_CASE("same spec and seed give identical bundles for any thread count") {
    SceneSpec spec;
    spec.rows = 10;
    spec.cols = 9;
    spec.seed = 77;
    const auto a = generate_scene(spec);
    const auto b = generate_scene(spec, {}, 3);
    REQUIRE(a.bands().size() == b.bands().size());
    for (std::size_t k = 0; k < a.bands().size(); ++k) {
        CHECK(a.bands()[k].name == b.bands()[k].name);
        CHECK(std::memcmp(a.bands()[k].data.data(), b.bands()[k].data.data(), a.bands()[k].data.size() * 4) == 0);
    }
    spec.seed = 78;
    const auto c = generate_scene(spec);
    CHECK(c.band("h_ref").data != a.band("h_ref").data);
}

TEST_CASE("coherence magnitudes lie in the unit interval") {
    SceneSpec spec;
    spec.rows = 30;
    spec.cols = 30;
    spec.noise.looks = 2.0;
    spec.seed = 9;
    const auto scene = generate_scene(spec);
    for (int a = 0; a < scene.acquisition_count(); ++a) {
        for (float v : scene.band(acq_band("coh", a)).data) {
            CHECK(v >= 0.0f);
            CHECK(v <= 1.0f);
        }
    }
}

TEST_CASE("invalid specs name the field") {
    SceneSpec spec;
    spec.rows = 0;
    CHECK_THROWS_WITH_AS(generate_scene(spec), doctest::Contains("rows"), ValidationError);
    spec = {};
    spec.noise.looks = 0.5;
    CHECK_THROWS_AS(spec.validate(), ValidationError);
    spec = {};
    spec.families[0].weight = 0.9;
    CHECK_THROWS_AS(spec.validate(), ValidationError);
    CHECK_THROWS_AS(ProfileFamily::two_layer(0.7, 0.1, 1.0).validate(), ValidationError);
}

TEST_CASE("closed forms agree with quadrature of the exact profile") {
    const ForwardConfig fwd;
    const auto& rule = gauss_legendre_unit(fwd.quad_nodes);
    for (const auto& f : {ProfileFamily::uniform(), ProfileFamily::exponential(0.15), ProfileFamily::exponential(-0.05),
                          ProfileFamily::two_layer(0.7, 0.12, 0.3)}) {
        for (double h : {5.0, 20.0, 37.0}) {
            std::vector<double> samples;
            for (double u : rule.nodes) {
                samples.push_back(f.reflectivity(u * h, h));
            }
            const auto q = volume_coherence_sampled(samples, h, 0.1198, fwd);
            const auto c = f.coherence(h, 0.1198, fwd);
            CHECK(std::abs(q - c) < 1e-8);
        }
    }
}

namespace {

// independent check: sign change of |gamma_b(h)| - target on a fine grid away from h_a
bool grid_crossing(const ProfileFamily& b, double target, double kz, double h_a, const ForwardConfig& fwd) {
    for (double h = 0.01; h < 60.0; h += 0.01) {
        const double lo = b.coherence_magnitude(h, kz, fwd) - target;
        const double hi = b.coherence_magnitude(h + 0.01, kz, fwd) - target;
        if (lo * hi <= 0.0 && std::abs(h - h_a) > 0.5) {
            return true;
        }
    }
    return false;
}

}  // namespace

TEST_CASE("matching a uniform stand at 20 m with exponential profiles") {
    const ForwardConfig fwd;
    const auto u = ProfileFamily::uniform();
    const double kz = 0.11980;
    const double target = u.coherence_magnitude(20.0, kz, fwd);

    // rate 0.15: |gamma| stays above p / sqrt(p^2 + kz^2) = 0.781 > 0.777 for every height
    const auto steep = ProfileFamily::exponential(0.15);
    CHECK_FALSE(grid_crossing(steep, target, kz, 20.0, fwd));
    CHECK_THROWS_AS(match_pair(u, 20.0, steep, kz, 0.0, 60.0, fwd), NoSolutionError);

    const auto mild = ProfileFamily::exponential(0.05);
    REQUIRE(grid_crossing(mild, target, kz, 20.0, fwd));
    const double hb = match_pair(u, 20.0, mild, kz, 0.0, 60.0, fwd);
    CHECK(std::abs(hb - 20.0) > 0.5);
    CHECK(std::abs(target - mild.coherence_magnitude(hb, kz, fwd)) < 1e-3);

    CHECK_THROWS_AS(match_pair(u, 20.0, u, kz, 0.0, 60.0, fwd), ValidationError);
    CHECK_THROWS_AS(match_height(u, 0.5, 0.01, 30.0, 0.0, 60.0, fwd), NoSolutionError);
}

TEST_CASE("ambiguity benchmark pairs") {
    SceneSpec spec;
    spec.rows = 12;
    spec.cols = 12;
    spec.acquisitions = lope_training_acquisitions();
    spec.seed = 2;
    const ForwardConfig fwd;
    const auto bench = generate_ambiguity_benchmark(spec, 30, fwd);
    REQUIRE(bench.pairs.size() == 30);
    const auto& s = bench.bundle;
    const char* bands[] = {"red", "nir", "swir1", "swir2"};
    for (std::size_t i = 0; i < bench.pairs.size(); ++i) {
        const auto& p = bench.pairs[i];
        const auto a = static_cast<std::size_t>(p.a_row * spec.cols + p.a_col);
        const auto b = static_cast<std::size_t>(p.b_row * spec.cols + p.b_col);
        const auto k = acq_band("coh_true", p.acquisition);
        CHECK(s.band("family").data[a] != s.band("family").data[b]);
        CHECK(s.band("h_ref").data[a] != s.band("h_ref").data[b]);
        CHECK(std::abs(s.band(k).data[a] - s.band(k).data[b]) < 1e-3 + 1e-6);
        double d2 = 0.0;
        for (const char* n : bands) {
            const double d = s.band(n).data[a] - s.band(n).data[b];
            d2 += d * d;
        }
        CHECK(std::sqrt(d2) > kPairSpectralFloor);
    }
    const auto csv = pairs_csv(bench.pairs);
    CHECK(csv.rfind("pixel_a_row,pixel_a_col,pixel_b_row,pixel_b_col,matched_kz\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 31);

    const auto empty = generate_ambiguity_benchmark(spec, 0, fwd);
    CHECK(empty.pairs.empty());
    CHECK(empty.bundle.grid().size() == 144);

    spec.families = {{ProfileFamily::uniform(), 1.0}};
    CHECK_THROWS_AS(generate_ambiguity_benchmark(spec, 3, fwd), ValidationError);
}
