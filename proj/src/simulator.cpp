#include "hyforest/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>

#include "hyforest/error.hpp"
#include "hyforest/parallel.hpp"
#include "hyforest/quadrature.hpp"

namespace hyforest {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kGroundPeakWidth = 0.05;  // fraction of h_v

// Reflectance-like spectral synthesis: base + kind signature + density response.
constexpr std::array<double, 4> kBandBase{0.04, 0.28, 0.15, 0.07};
constexpr std::array<std::array<double, 4>, 3> kKindSignature{{
    {0.00, 0.00, 0.00, 0.00},     // uniform
    {-0.01, 0.10, -0.03, -0.02},  // exponential
    {0.03, -0.09, 0.07, 0.05},    // two-layer
}};
constexpr std::array<double, 4> kDensityResponse{-0.015, 0.04, -0.02, -0.015};
constexpr const char* kBandNames[] = {"red", "nir", "swir1", "swir2"};

// Salts separating the per-pixel random substreams.
constexpr std::uint64_t kSaltDraw = 0x6472617775ULL;
constexpr std::uint64_t kSaltRender = 0x72656e6465ULL;
constexpr std::uint64_t kSaltPair = 0x7061697273ULL;

std::mt19937_64 substream(std::uint64_t seed, std::uint64_t index, std::uint64_t salt) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      static_cast<std::uint32_t>(salt), static_cast<std::uint32_t>(salt >> 32)};
    return std::mt19937_64(seq);
}

double gaussian_pdf(double x, double mu, double sigma) {
    const double t = (x - mu) / sigma;
    return std::exp(-0.5 * t * t) / sigma;
}

struct PixelState {
    int family = 0;
    double density = 0.0;
    double height = 0.0;
    double slope = 0.0;  // rad
    bool masked = false;
};

std::array<double, 4> spectral_signature(FamilyKind kind, double density) {
    std::array<double, 4> out{};
    const auto& sig = kKindSignature[static_cast<std::size_t>(kind)];
    for (std::size_t b = 0; b < 4; ++b) {
        out[b] = kBandBase[b] + sig[b] + kDensityResponse[b] * density;
    }
    return out;
}

double distance(const std::array<double, 4>& a, const std::array<double, 4>& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
        s += (a[k] - b[k]) * (a[k] - b[k]);
    }
    return std::sqrt(s);
}

std::vector<AcquisitionGeometry> geometries(const SceneSpec& spec) {
    std::vector<AcquisitionGeometry> out;
    for (const auto& a : spec.acquisitions) {
        out.push_back(AcquisitionGeometry::from_height_of_ambiguity(a.hoa, a.theta0_deg * kDeg,
                                                                    spec.wavelength, spec.mode_factor));
    }
    return out;
}

int draw_family(const SceneSpec& spec, double slope, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    if (spec.coupling.strength > 0.0 && u01(rng) < spec.coupling.strength) {
        return slope < 0.0 ? spec.coupling.negative_family : spec.coupling.positive_family;
    }
    const double r = u01(rng);
    double acc = 0.0;
    for (std::size_t f = 0; f < spec.families.size(); ++f) {
        acc += spec.families[f].weight;
        if (r < acc) {
            return static_cast<int>(f);
        }
    }
    return static_cast<int>(spec.families.size()) - 1;
}

std::vector<PixelState> draw_pixels(const SceneSpec& spec, int threads) {
    // Correlated slope field: random-phase cosine modes with a Gaussian spectrum.
    std::mt19937_64 master(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    struct Mode {
        double kx, ky, phi;
    };
    std::vector<Mode> modes;
    const double k_scale = 1.0 / spec.terrain.correlation_length;
    for (int i = 0; i < spec.terrain.modes; ++i) {
        const double kx = normal(master) * k_scale;
        const double ky = normal(master) * k_scale;
        modes.push_back({kx, ky, phase(master)});
    }
    const double amp = spec.terrain.slope_std_deg * std::sqrt(2.0 / std::max(1, spec.terrain.modes));

    std::vector<PixelState> states(static_cast<std::size_t>(spec.rows) * static_cast<std::size_t>(spec.cols));
    parallel_for(states.size(), threads, [&](std::size_t p) {
        const double x = static_cast<double>(p % static_cast<std::size_t>(spec.cols)) * spec.pixel_size;
        const double y = static_cast<double>(p / static_cast<std::size_t>(spec.cols)) * spec.pixel_size;
        double slope_deg = 0.0;
        for (const auto& m : modes) {
            slope_deg += amp * std::cos(m.kx * x + m.ky * y + m.phi);
        }
        slope_deg = std::clamp(slope_deg, -spec.terrain.max_slope_deg, spec.terrain.max_slope_deg);
        auto rng = substream(spec.seed, p, kSaltDraw);
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        PixelState s;
        s.slope = slope_deg * kDeg;
        s.family = draw_family(spec, s.slope, rng);
        s.density = u01(rng);
        s.height = spec.h_min_true + (spec.h_max_true - spec.h_min_true) * u01(rng);
        s.masked = u01(rng) < spec.mask_fraction;
        states[p] = s;
    });
    return states;
}

SceneBundle render(const SceneSpec& spec, const std::vector<PixelState>& states,
                   const ForwardConfig& fwd, int threads) {
    GridDef grid;
    grid.rows = spec.rows;
    grid.cols = spec.cols;
    grid.pixel_size = spec.pixel_size;
    SceneBundle bundle(grid);
    bundle.seed = spec.seed;
    bundle.created_by = "hyforest scene_simulator";

    const std::size_t n = grid.size();
    const auto geoms = geometries(spec);
    const std::size_t n_acq = geoms.size();
    std::vector<float> h_ref(n), slope(n), mask(n), family(n), p0(n), p1(n), p2(n), density(n);
    std::array<std::vector<float>, 4> optical;
    for (auto& b : optical) {
        b.resize(n);
    }
    std::vector<std::vector<float>> kz(n_acq, std::vector<float>(n)), coh(n_acq, std::vector<float>(n)),
        coh_true(n_acq, std::vector<float>(n)), theta0(n_acq, std::vector<float>(n)),
        theta_loc(n_acq, std::vector<float>(n));
    const auto& factors = spec.noise.factors;
    const double factor = factors.temporal * factors.range * factors.system;

    parallel_for(n, threads, [&](std::size_t p) {
        const auto& s = states[p];
        const auto fam = spec.families[static_cast<std::size_t>(s.family)].family.with_density(s.density);
        auto rng = substream(spec.seed, p, kSaltRender);
        std::normal_distribution<double> normal(0.0, 1.0);
        h_ref[p] = static_cast<float>(s.height);
        slope[p] = static_cast<float>(s.slope);
        mask[p] = s.masked ? 0.0f : 1.0f;
        family[p] = static_cast<float>(static_cast<int>(fam.kind));
        switch (fam.kind) {
            case FamilyKind::Uniform: p0[p] = p1[p] = p2[p] = 0.0f; break;
            case FamilyKind::Exponential:
                p0[p] = static_cast<float>(fam.rate);
                p1[p] = p2[p] = 0.0f;
                break;
            case FamilyKind::TwoLayer:
                p0[p] = static_cast<float>(fam.canopy_center);
                p1[p] = static_cast<float>(fam.canopy_width);
                p2[p] = static_cast<float>(fam.ground_weight);
                break;
        }
        density[p] = static_cast<float>(s.density);
        for (std::size_t k = 0; k < n_acq; ++k) {
            const double kz_k = vertical_wavenumber(geoms[k], s.slope);
            // The exact family parameters are the float-stored ones, so oracle inversion from
            // the bundle reproduces the synthesized coherence.
            const double vol = fam.coherence_magnitude(static_cast<double>(h_ref[p]), static_cast<float>(kz_k), fwd);
            const double composed = factor * vol;
            const double sigma = (1.0 - composed * composed) / std::sqrt(2.0 * spec.noise.looks);
            const double noisy = std::clamp(composed + sigma * normal(rng), 0.0, 1.0);
            kz[k][p] = static_cast<float>(kz_k);
            coh_true[k][p] = static_cast<float>(vol);
            coh[k][p] = static_cast<float>(noisy);
            theta0[k][p] = static_cast<float>(geoms[k].look_angle);
            theta_loc[k][p] = static_cast<float>(geoms[k].look_angle + s.slope);
        }
        const auto sig = spectral_signature(fam.kind, s.density);
        for (std::size_t b = 0; b < 4; ++b) {
            optical[b][p] = static_cast<float>(sig[b] + spec.band_noise * normal(rng));
        }
    });

    bundle.add_band("h_ref", "m", std::move(h_ref));
    bundle.add_band("slope", "rad", std::move(slope));
    bundle.add_band("mask", "bool", std::move(mask));
    bundle.add_band("family", "enum", std::move(family));
    bundle.add_band("fam_p0", "", std::move(p0));
    bundle.add_band("fam_p1", "", std::move(p1));
    bundle.add_band("fam_p2", "", std::move(p2));
    bundle.add_band("density", "", std::move(density));
    for (std::size_t b = 0; b < 4; ++b) {
        bundle.add_band(kBandNames[b], "reflectance", std::move(optical[b]));
    }
    nlohmann::ordered_json acq_meta = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < n_acq; ++k) {
        const int ik = static_cast<int>(k);
        bundle.add_band(acq_band("kz", ik), "rad/m", std::move(kz[k]));
        bundle.add_band(acq_band("coh", ik), "", std::move(coh[k]));
        bundle.add_band(acq_band("coh_true", ik), "", std::move(coh_true[k]));
        bundle.add_band(acq_band("theta0", ik), "rad", std::move(theta0[k]));
        bundle.add_band(acq_band("theta_loc", ik), "rad", std::move(theta_loc[k]));
        acq_meta.push_back({{"hoa_m", spec.acquisitions[k].hoa},
                            {"theta0_deg", spec.acquisitions[k].theta0_deg},
                            {"wavelength_m", spec.wavelength},
                            {"mode_factor", spec.mode_factor}});
    }
    bundle.attributes["acquisitions"] = std::move(acq_meta);
    nlohmann::json spec_json = spec;
    bundle.attributes["scene_spec"] = nlohmann::ordered_json::parse(spec_json.dump());
    return bundle;
}

}  // namespace

ProfileFamily ProfileFamily::uniform() { return {}; }

ProfileFamily ProfileFamily::exponential(double rate) {
    ProfileFamily f;
    f.kind = FamilyKind::Exponential;
    f.rate = rate;
    f.validate();
    return f;
}

ProfileFamily ProfileFamily::two_layer(double canopy_center, double canopy_width, double ground_weight) {
    ProfileFamily f;
    f.kind = FamilyKind::TwoLayer;
    f.canopy_center = canopy_center;
    f.canopy_width = canopy_width;
    f.ground_weight = ground_weight;
    f.validate();
    return f;
}

void ProfileFamily::validate() const {
    switch (kind) {
        case FamilyKind::Uniform: break;
        case FamilyKind::Exponential:
            if (!std::isfinite(rate) || std::abs(rate) > 1.0) {
                throw ValidationError("exponential rate must be finite with |rate| <= 1 per metre");
            }
            break;
        case FamilyKind::TwoLayer:
            if (!(canopy_center > 0.0 && canopy_center <= 1.0) || !(canopy_width > 0.0 && canopy_width <= 1.0) ||
                !(ground_weight >= 0.0 && ground_weight < 1.0)) {
                throw ValidationError("two-layer family needs centre in (0,1], width in (0,1], ground weight in [0,1)");
            }
            break;
    }
}

std::string ProfileFamily::name() const {
    switch (kind) {
        case FamilyKind::Uniform: return "uniform";
        case FamilyKind::Exponential: return "exponential";
        case FamilyKind::TwoLayer: return "two_layer";
    }
    return "unknown";
}

bool ProfileFamily::same_shape(const ProfileFamily& other) const noexcept {
    if (kind != other.kind) {
        return false;
    }
    switch (kind) {
        case FamilyKind::Uniform: return true;
        case FamilyKind::Exponential: return rate == other.rate;
        case FamilyKind::TwoLayer:
            return canopy_center == other.canopy_center && canopy_width == other.canopy_width &&
                   ground_weight == other.ground_weight;
    }
    return false;
}

ProfileFamily ProfileFamily::with_density(double density) const {
    ProfileFamily f = *this;
    if (kind == FamilyKind::Exponential) {
        f.rate = rate * (0.5 + density);
    } else if (kind == FamilyKind::TwoLayer) {
        f.ground_weight = std::min(0.95, ground_weight * (1.5 - density));
    }
    return f;
}

double ProfileFamily::reflectivity(double z, double h_v) const {
    switch (kind) {
        case FamilyKind::Uniform: return 1.0;
        case FamilyKind::Exponential: return std::exp(rate * z);
        case FamilyKind::TwoLayer: {
            const double u = h_v > 0.0 ? z / h_v : 0.0;
            return ground_weight * gaussian_pdf(u, 0.0, kGroundPeakWidth) +
                   (1.0 - ground_weight) * gaussian_pdf(u, canopy_center, canopy_width);
        }
    }
    return 0.0;
}

ComplexCoherence ProfileFamily::coherence(double h_v, double kz, const ForwardConfig& fwd) const {
    const ComplexCoherence ground = std::polar(1.0, kz * fwd.z0);
    if (h_v == 0.0 || kz == 0.0) {
        return ground;
    }
    const double kh = kz * h_v;
    const double ph = rate * h_v;
    if (kind == FamilyKind::Uniform || (kind == FamilyKind::Exponential && std::abs(ph) < 1e-10)) {
        const double x = 0.5 * kh;
        return ground * std::polar(std::sin(x) / x, x);
    }
    if (kind == FamilyKind::Exponential) {
        const ComplexCoherence c(rate, kz);
        if (rate > 0.0) {
            const double decay = std::exp(-ph);
            return ground * rate * (std::polar(1.0, kh) - decay) / (c * (1.0 - decay));
        }
        return ground * rate * (std::exp(c * h_v) - 1.0) / (c * std::expm1(ph));
    }
    const auto& rule = gauss_legendre_unit(fwd.quad_nodes);
    std::vector<double> samples(rule.nodes.size());
    for (std::size_t j = 0; j < samples.size(); ++j) {
        samples[j] = reflectivity(rule.nodes[j] * h_v, h_v);
    }
    return volume_coherence_sampled(samples, h_v, kz, fwd);
}

double ProfileFamily::coherence_magnitude(double h_v, double kz, const ForwardConfig& fwd) const {
    return std::abs(coherence(h_v, kz, fwd));
}

void to_json(nlohmann::json& j, const ProfileFamily& f) {
    j = nlohmann::json{{"kind", f.name()}};
    if (f.kind == FamilyKind::Exponential) {
        j["rate"] = f.rate;
    } else if (f.kind == FamilyKind::TwoLayer) {
        j["canopy_center"] = f.canopy_center;
        j["canopy_width"] = f.canopy_width;
        j["ground_weight"] = f.ground_weight;
    }
}

void from_json(const nlohmann::json& j, ProfileFamily& f) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "uniform") {
        f = ProfileFamily::uniform();
    } else if (kind == "exponential") {
        f = ProfileFamily::exponential(j.at("rate").get<double>());
    } else if (kind == "two_layer") {
        f = ProfileFamily::two_layer(j.value("canopy_center", 0.7), j.value("canopy_width", 0.15),
                                     j.value("ground_weight", 0.3));
    } else {
        throw ValidationError("unknown profile family '" + kind + "'");
    }
}

std::vector<AcquisitionSpec> lope_acquisitions() {
    return {{52.45, 46.18}, {-65.22, 44.44}, {86.34, 46.08}, {94.89, 45.10}, {95.41, 46.68}};
}

std::vector<AcquisitionSpec> lope_training_acquisitions() {
    const auto all = lope_acquisitions();
    return {all[0], all[1], all[4]};
}

std::vector<FamilyWeight> SceneSpec::default_families() {
    return {{ProfileFamily::uniform(), 0.34},
            {ProfileFamily::exponential(0.08), 0.33},
            {ProfileFamily::two_layer(0.75, 0.12, 0.35), 0.33}};
}

void SceneSpec::validate() const {
    if (rows < 1) {
        throw ValidationError("scene.rows must be >= 1");
    }
    if (cols < 1) {
        throw ValidationError("scene.cols must be >= 1");
    }
    if (!(pixel_size > 0.0)) {
        throw ValidationError("scene.pixel_size must be > 0");
    }
    if (acquisitions.empty()) {
        throw ValidationError("scene.acquisitions must not be empty");
    }
    for (const auto& a : acquisitions) {
        if (a.hoa == 0.0 || !std::isfinite(a.hoa)) {
            throw ValidationError("scene.acquisitions hoa must be finite and non-zero");
        }
        if (!(a.theta0_deg > 0.0 && a.theta0_deg < 90.0)) {
            throw ValidationError("scene.acquisitions theta0_deg must lie in (0, 90)");
        }
    }
    if (families.empty()) {
        throw ValidationError("scene.families must not be empty");
    }
    double sum = 0.0;
    for (const auto& f : families) {
        f.family.validate();
        if (!(f.weight >= 0.0)) {
            throw ValidationError("scene.families weights must be >= 0");
        }
        sum += f.weight;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ValidationError("scene.families weights must sum to 1");
    }
    if (!(noise.looks >= 1.0)) {
        throw ValidationError("scene.noise.looks must be >= 1");
    }
    noise.factors.validate();
    if (!(h_min_true >= 0.0 && h_max_true >= h_min_true)) {
        throw ValidationError("scene.h_min_true/h_max_true must satisfy 0 <= min <= max");
    }
    if (!(mask_fraction >= 0.0 && mask_fraction <= 1.0)) {
        throw ValidationError("scene.mask_fraction must lie in [0, 1]");
    }
    if (!(coupling.strength >= 0.0 && coupling.strength <= 1.0)) {
        throw ValidationError("scene.coupling.strength must lie in [0, 1]");
    }
    const int nf = static_cast<int>(families.size());
    auto in_range = [nf](int k) { return k >= 0 && k < nf; };
    if (coupling.strength > 0.0 && !(in_range(coupling.negative_family) && in_range(coupling.positive_family))) {
        throw ValidationError("scene.coupling family indices out of range");
    }
    if (!(terrain.correlation_length > 0.0) || terrain.modes < 1 || !(terrain.slope_std_deg >= 0.0) ||
        !(terrain.max_slope_deg >= 0.0 && terrain.max_slope_deg < 60.0)) {
        throw ValidationError("scene.terrain parameters invalid");
    }
    if (!(band_noise >= 0.0)) {
        throw ValidationError("scene.band_noise must be >= 0");
    }
    if (!(wavelength > 0.0) || (mode_factor != 1 && mode_factor != 2)) {
        throw ValidationError("scene.wavelength/mode_factor invalid");
    }
}

void to_json(nlohmann::json& j, const SceneSpec& s) {
    nlohmann::json acq = nlohmann::json::array();
    for (const auto& a : s.acquisitions) {
        acq.push_back({{"hoa", a.hoa}, {"theta0_deg", a.theta0_deg}});
    }
    nlohmann::json fams = nlohmann::json::array();
    for (const auto& f : s.families) {
        nlohmann::json jf = f.family;
        jf["weight"] = f.weight;
        fams.push_back(std::move(jf));
    }
    j = nlohmann::json{
        {"rows", s.rows},
        {"cols", s.cols},
        {"pixel_size", s.pixel_size},
        {"acquisitions", std::move(acq)},
        {"wavelength", s.wavelength},
        {"mode_factor", s.mode_factor},
        {"terrain",
         {{"slope_std_deg", s.terrain.slope_std_deg},
          {"correlation_length", s.terrain.correlation_length},
          {"max_slope_deg", s.terrain.max_slope_deg},
          {"modes", s.terrain.modes}}},
        {"families", std::move(fams)},
        {"noise",
         {{"looks", s.noise.looks},
          {"temporal", s.noise.factors.temporal},
          {"range", s.noise.factors.range},
          {"system", s.noise.factors.system}}},
        {"h_min_true", s.h_min_true},
        {"h_max_true", s.h_max_true},
        {"mask_fraction", s.mask_fraction},
        {"coupling",
         {{"strength", s.coupling.strength},
          {"negative_family", s.coupling.negative_family},
          {"positive_family", s.coupling.positive_family}}},
        {"band_noise", s.band_noise},
        {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, SceneSpec& s) {
    auto get = [](const nlohmann::json& obj, const char* key, auto& field) {
        if (obj.contains(key)) {
            obj.at(key).get_to(field);
        }
    };
    get(j, "rows", s.rows);
    get(j, "cols", s.cols);
    get(j, "pixel_size", s.pixel_size);
    if (j.contains("acquisitions")) {
        s.acquisitions.clear();
        for (const auto& a : j.at("acquisitions")) {
            s.acquisitions.push_back({a.at("hoa").get<double>(), a.at("theta0_deg").get<double>()});
        }
    }
    get(j, "wavelength", s.wavelength);
    get(j, "mode_factor", s.mode_factor);
    if (j.contains("terrain")) {
        const auto& t = j.at("terrain");
        get(t, "slope_std_deg", s.terrain.slope_std_deg);
        get(t, "correlation_length", s.terrain.correlation_length);
        get(t, "max_slope_deg", s.terrain.max_slope_deg);
        get(t, "modes", s.terrain.modes);
    }
    if (j.contains("families")) {
        s.families.clear();
        for (const auto& f : j.at("families")) {
            s.families.push_back({f.get<ProfileFamily>(), f.value("weight", 1.0)});
        }
    }
    if (j.contains("noise")) {
        const auto& n = j.at("noise");
        get(n, "looks", s.noise.looks);
        get(n, "temporal", s.noise.factors.temporal);
        get(n, "range", s.noise.factors.range);
        get(n, "system", s.noise.factors.system);
    }
    get(j, "h_min_true", s.h_min_true);
    get(j, "h_max_true", s.h_max_true);
    get(j, "mask_fraction", s.mask_fraction);
    if (j.contains("coupling")) {
        const auto& c = j.at("coupling");
        get(c, "strength", s.coupling.strength);
        get(c, "negative_family", s.coupling.negative_family);
        get(c, "positive_family", s.coupling.positive_family);
    }
    get(j, "band_noise", s.band_noise);
    get(j, "seed", s.seed);
}

SceneBundle generate_scene(const SceneSpec& spec, const ForwardConfig& fwd, int threads) {
    spec.validate();
    fwd.validate();
    return render(spec, draw_pixels(spec, threads), fwd, threads);
}

double match_height(const ProfileFamily& family, double target, double kz, double h_a, double h_lo,
                    double h_hi, const ForwardConfig& fwd) {
    if (!(h_hi > h_lo)) {
        throw ValidationError("match_height needs h_lo < h_hi");
    }
    auto gap = [&](double h) { return family.coherence_magnitude(h, kz, fwd) - target; };
    constexpr double kScanStep = 0.25;
    constexpr double kMinSeparation = 0.5;
    const int steps = static_cast<int>(std::ceil((h_hi - h_lo) / kScanStep));
    double h_prev = h_lo;
    double g_prev = gap(h_prev);
    for (int i = 1; i <= steps; ++i) {
        const double h = std::min(h_hi, h_lo + i * kScanStep);
        const double g = gap(h);
        double root = std::numeric_limits<double>::quiet_NaN();
        if (g_prev == 0.0) {
            root = h_prev;
        } else if ((g_prev < 0.0) != (g < 0.0)) {
            std::uintmax_t iters = 100;
            const auto bracket = boost::math::tools::toms748_solve(
                gap, h_prev, h, g_prev, g, boost::math::tools::eps_tolerance<double>(45), iters);
            root = 0.5 * (bracket.first + bracket.second);
        }
        if (!std::isnan(root) && std::abs(root - h_a) > kMinSeparation &&
            std::abs(gap(root)) < kPairCoherenceTolerance) {
            return root;
        }
        h_prev = h;
        g_prev = g;
    }
    throw NoSolutionError(fmt::format("{} profile cannot reach coherence {:.6f} at kz={:.5f} on [{}, {}] m away from h={}",
                                      family.name(), target, kz, h_lo, h_hi, h_a));
}

double match_pair(const ProfileFamily& a, double h_a, const ProfileFamily& b, double kz, double h_lo,
                  double h_hi, const ForwardConfig& fwd) {
    if (a.same_shape(b)) {
        throw ValidationError("ambiguity pair needs two families of different shape");
    }
    return match_height(b, a.coherence_magnitude(h_a, kz, fwd), kz, h_a, h_lo, h_hi, fwd);
}

AmbiguityBenchmark generate_ambiguity_benchmark(const SceneSpec& spec, int n_pairs,
                                                const ForwardConfig& fwd, int threads) {
    spec.validate();
    fwd.validate();
    if (n_pairs < 0) {
        throw ValidationError("n_pairs must be >= 0");
    }
    const std::size_t n_pixels = static_cast<std::size_t>(spec.rows) * static_cast<std::size_t>(spec.cols);
    if (2 * static_cast<std::size_t>(n_pairs) > n_pixels) {
        throw ValidationError("scene too small for " + std::to_string(n_pairs) + " ambiguity pairs");
    }
    auto states = draw_pixels(spec, threads);
    AmbiguityBenchmark out;
    if (n_pairs > 0) {
        std::vector<std::pair<int, int>> combos;
        for (std::size_t a = 0; a < spec.families.size(); ++a) {
            for (std::size_t b = 0; b < spec.families.size(); ++b) {
                if (!spec.families[a].family.same_shape(spec.families[b].family)) {
                    combos.emplace_back(static_cast<int>(a), static_cast<int>(b));
                }
            }
        }
        if (combos.empty()) {
            throw ValidationError("ambiguity benchmark needs at least two families of different shape");
        }
        if (spec.h_max_true - spec.h_min_true < 2.0) {
            throw ValidationError("ambiguity benchmark needs scene.h_max_true - h_min_true >= 2 m");
        }
        const auto geoms = geometries(spec);
        out.pairs.resize(static_cast<std::size_t>(n_pairs));
        parallel_for(static_cast<std::size_t>(n_pairs), threads, [&](std::size_t i) {
            auto rng = substream(spec.seed, i, kSaltPair);
            std::uniform_real_distribution<double> u01(0.0, 1.0);
            const int acq = static_cast<int>(i % geoms.size());
            auto& sa = states[2 * i];
            auto& sb = states[2 * i + 1];
            const double slope = sa.slope;
            const double kz = static_cast<float>(vertical_wavenumber(geoms[static_cast<std::size_t>(acq)], slope));
            constexpr int kMaxTries = 200;
            for (int attempt = 0; attempt < kMaxTries; ++attempt) {
                const auto [fa, fb] = combos[static_cast<std::size_t>(rng() % combos.size())];
                const double da = u01(rng);
                const double db = u01(rng);
                const double h_a = static_cast<float>(spec.h_min_true + 1.0 +
                                                      (spec.h_max_true - spec.h_min_true - 1.0) * u01(rng));
                const auto fam_a = spec.families[static_cast<std::size_t>(fa)].family.with_density(da);
                const auto fam_b = spec.families[static_cast<std::size_t>(fb)].family.with_density(db);
                const double margin = kPairSpectralFloor + 12.0 * spec.band_noise;
                if (distance(spectral_signature(fam_a.kind, da), spectral_signature(fam_b.kind, db)) < margin) {
                    continue;
                }
                double h_b = 0.0;
                try {
                    h_b = match_pair(fam_a, h_a, fam_b, kz, spec.h_min_true, spec.h_max_true, fwd);
                } catch (const NoSolutionError&) {
                    continue;
                }
                // Stored parameters and heights are float32; re-solve on the stored values.
                h_b = static_cast<float>(h_b);
                sa = {fa, da, h_a, slope, false};
                sb = {fb, db, h_b, slope, false};
                const int cols = spec.cols;
                out.pairs[i] = {static_cast<int>((2 * i) / static_cast<std::size_t>(cols)),
                                static_cast<int>((2 * i) % static_cast<std::size_t>(cols)),
                                static_cast<int>((2 * i + 1) / static_cast<std::size_t>(cols)),
                                static_cast<int>((2 * i + 1) % static_cast<std::size_t>(cols)),
                                kz,
                                acq,
                                h_a,
                                h_b};
                return;
            }
            throw NoSolutionError("no coherence-matched family pair found for pair " + std::to_string(i));
        });
    }
    out.bundle = render(spec, states, fwd, threads);
    nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
    out.bundle.attributes["ambiguity_pairs"] = static_cast<int>(out.pairs.size());
    return out;
}

std::string pairs_csv(const std::vector<AmbiguityPair>& pairs) {
    std::string out = "pixel_a_row,pixel_a_col,pixel_b_row,pixel_b_col,matched_kz\n";
    for (const auto& p : pairs) {
        out += fmt::format("{},{},{},{},{}\n", p.a_row, p.a_col, p.b_row, p.b_col, p.matched_kz);
    }
    return out;
}

}  // namespace hyforest
