#include "hyforest/raster.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <regex>

#include <openssl/evp.h>

#include "hyforest/error.hpp"

namespace hyforest {

namespace fs = std::filesystem;

namespace {

constexpr const char* kBundleFormat = "hyforest-bundle";
constexpr int kBundleVersion = 1;

void check_band_name(const std::string& name) {
    static const std::regex valid("[A-Za-z0-9_]+");
    if (!std::regex_match(name, valid)) {
        throw ValidationError("band name '" + name + "' must match [A-Za-z0-9_]+");
    }
}

std::vector<unsigned char> encode_le(const std::vector<float>& data) {
    std::vector<unsigned char> bytes(data.size() * 4);
    for (std::size_t i = 0; i < data.size(); ++i) {
        auto bits = std::bit_cast<std::uint32_t>(data[i]);
        for (int b = 0; b < 4; ++b) {
            bytes[i * 4 + static_cast<std::size_t>(b)] = static_cast<unsigned char>((bits >> (8 * b)) & 0xffu);
        }
    }
    return bytes;
}

std::vector<float> decode_le(const std::vector<unsigned char>& bytes) {
    std::vector<float> data(bytes.size() / 4);
    for (std::size_t i = 0; i < data.size(); ++i) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) {
            bits |= static_cast<std::uint32_t>(bytes[i * 4 + static_cast<std::size_t>(b)]) << (8 * b);
        }
        data[i] = std::bit_cast<float>(bits);
    }
    return data;
}

std::vector<unsigned char> read_all(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool is_nodata(float v, float nodata) { return v == nodata || !std::isfinite(v); }

}  // namespace

void GridDef::validate() const {
    if (rows < 1 || cols < 1) {
        throw ValidationError("grid rows and cols must be >= 1");
    }
    if (!(pixel_size > 0.0)) {
        throw ValidationError("grid pixel_size must be > 0");
    }
}

SceneBundle::SceneBundle(GridDef grid) : grid_(grid) { grid_.validate(); }

Band& SceneBundle::add_band(std::string name, std::string units, std::vector<float> data) {
    check_band_name(name);
    if (has_band(name)) {
        throw ValidationError("duplicate band name " + name);
    }
    if (data.size() != grid_.size()) {
        throw DimensionError("band " + name + " has " + std::to_string(data.size()) +
                             " cells, grid has " + std::to_string(grid_.size()));
    }
    bands_.push_back({std::move(name), std::move(units), std::move(data)});
    return bands_.back();
}

Band& SceneBundle::add_band(std::string name, std::string units, float fill) {
    return add_band(std::move(name), std::move(units), std::vector<float>(grid_.size(), fill));
}

bool SceneBundle::has_band(std::string_view name) const noexcept {
    for (const auto& b : bands_) {
        if (b.name == name) {
            return true;
        }
    }
    return false;
}

const Band& SceneBundle::band(std::string_view name) const {
    for (const auto& b : bands_) {
        if (b.name == name) {
            return b;
        }
    }
    throw MissingBandError(std::string(name));
}

Band& SceneBundle::band(std::string_view name) {
    return const_cast<Band&>(std::as_const(*this).band(name));
}

int SceneBundle::acquisition_count() const noexcept {
    int k = 0;
    while (has_band(acq_band("kz", k))) {
        ++k;
    }
    return k;
}

std::string acq_band(std::string_view stem, int acq) {
    return std::string(stem) + "_" + std::to_string(acq);
}

std::string sha256_hex(std::span<const unsigned char> bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw IoError("SHA-256 computation failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0xf]);
    }
    return out;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_all(path)); }

void write_bundle(const SceneBundle& bundle, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create bundle directory " + dir.string() + ": " + ec.message());
    }
    const auto& g = bundle.grid();
    nlohmann::ordered_json manifest;
    manifest["format"] = kBundleFormat;
    manifest["version"] = kBundleVersion;
    manifest["grid"] = {{"rows", g.rows},
                        {"cols", g.cols},
                        {"pixel_size_m", g.pixel_size},
                        {"nodata", g.nodata}};
    nlohmann::ordered_json bands = nlohmann::ordered_json::array();
    for (const auto& b : bundle.bands()) {
        const auto bytes = encode_le(b.data);
        const std::string file = b.name + ".band";
        std::ofstream out(dir / file, std::ios::binary | std::ios::trunc);
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            throw IoError("failed writing " + (dir / file).string());
        }
        bands.push_back({{"name", b.name}, {"file", file}, {"units", b.units}, {"sha256", sha256_hex(bytes)}});
    }
    manifest["bands"] = std::move(bands);
    manifest["seed"] = bundle.seed;
    manifest["created_by"] = bundle.created_by;
    manifest["attributes"] = bundle.attributes;
    std::ofstream out(dir / "manifest.json", std::ios::binary | std::ios::trunc);
    out << manifest.dump(2) << '\n';
    if (!out) {
        throw IoError("failed writing manifest in " + dir.string());
    }
}

SceneBundle read_bundle(const fs::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    if (!fs::exists(manifest_path)) {
        throw IoError("no manifest.json in " + dir.string());
    }
    nlohmann::ordered_json manifest;
    try {
        manifest = nlohmann::ordered_json::parse(read_all(manifest_path));
    } catch (const nlohmann::json::exception& e) {
        throw ManifestError("malformed manifest in " + dir.string() + ": " + e.what());
    }
    try {
        if (manifest.at("format") != kBundleFormat) {
            throw ManifestError("not a hyforest bundle: " + dir.string());
        }
        GridDef grid;
        const auto& jg = manifest.at("grid");
        grid.rows = jg.at("rows").get<int>();
        grid.cols = jg.at("cols").get<int>();
        grid.pixel_size = jg.at("pixel_size_m").get<double>();
        grid.nodata = jg.at("nodata").get<float>();
        SceneBundle bundle(grid);
        bundle.seed = manifest.value("seed", std::uint64_t{0});
        bundle.created_by = manifest.value("created_by", std::string{});
        if (manifest.contains("attributes")) {
            bundle.attributes = manifest.at("attributes");
        }
        const std::size_t expected = grid.size() * 4;
        for (const auto& jb : manifest.at("bands")) {
            const auto name = jb.at("name").get<std::string>();
            const auto path = dir / jb.at("file").get<std::string>();
            if (!fs::exists(path)) {
                throw ManifestError("manifest lists band " + name + " but " + path.filename().string() +
                                    " is missing");
            }
            const auto bytes = read_all(path);
            if (bytes.size() < expected) {
                throw TruncatedFileError("band " + name + " is truncated: " + std::to_string(bytes.size()) +
                                         " of " + std::to_string(expected) + " bytes");
            }
            if (bytes.size() > expected) {
                throw ManifestError("band " + name + " has " + std::to_string(bytes.size()) +
                                    " bytes, grid implies " + std::to_string(expected));
            }
            if (jb.contains("sha256") && jb.at("sha256").get<std::string>() != sha256_hex(bytes)) {
                throw ChecksumError("checksum mismatch in band " + name);
            }
            bundle.add_band(name, jb.value("units", std::string{}), decode_le(bytes));
        }
        return bundle;
    } catch (const nlohmann::json::exception& e) {
        throw ManifestError("malformed manifest in " + dir.string() + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ManifestError("inconsistent manifest in " + dir.string() + ": " + e.what());
    }
}

SceneBundle select_acquisitions(const SceneBundle& bundle, std::span<const int> acquisitions) {
    static const std::regex per_acq("(.+)_([0-9]+)");
    const int available = bundle.acquisition_count();
    for (int a : acquisitions) {
        if (a < 0 || a >= available) {
            throw ValidationError("acquisition index " + std::to_string(a) + " out of range (bundle has " +
                                  std::to_string(available) + ")");
        }
    }
    SceneBundle out(bundle.grid());
    out.seed = bundle.seed;
    out.created_by = bundle.created_by;
    out.attributes = bundle.attributes;
    for (const auto& b : bundle.bands()) {
        std::smatch m;
        if (!std::regex_match(b.name, m, per_acq)) {
            out.add_band(b.name, b.units, b.data);
        }
    }
    for (std::size_t j = 0; j < acquisitions.size(); ++j) {
        const std::string suffix = "_" + std::to_string(acquisitions[j]);
        for (const auto& b : bundle.bands()) {
            std::smatch m;
            if (std::regex_match(b.name, m, per_acq) && "_" + m[2].str() == suffix) {
                out.add_band(acq_band(m[1].str(), static_cast<int>(j)), b.units, b.data);
            }
        }
    }
    if (bundle.attributes.contains("acquisitions")) {
        nlohmann::ordered_json acq = nlohmann::ordered_json::array();
        for (int a : acquisitions) {
            acq.push_back(bundle.attributes["acquisitions"].at(static_cast<std::size_t>(a)));
        }
        out.attributes["acquisitions"] = std::move(acq);
    }
    return out;
}

std::optional<FeatureVector> pixel_features(const SceneBundle& bundle, int acq, std::size_t pixel,
                                            ModelVariant variant) {
    const float nodata = bundle.grid().nodata;
    if (bundle.has_band("mask") && bundle.band("mask").data[pixel] == 0.0f) {
        return std::nullopt;
    }
    bool ok = true;
    auto take = [&](std::string_view name) {
        const float v = bundle.band(name).data[pixel];
        if (is_nodata(v, nodata)) {
            ok = false;
        }
        return static_cast<double>(v);
    };
    FeatureVector f;
    f.kz = take(acq_band("kz", acq));
    f.coh_mag = take(acq_band("coh", acq));
    f.theta0 = take(acq_band("theta0", acq));
    f.theta_loc = take(acq_band("theta_loc", acq));
    f.alpha = take("slope");
    if (variant == ModelVariant::D) {
        f.bands = std::array<double, 4>{take("red"), take("nir"), take("swir1"), take("swir2")};
    }
    if (!ok) {
        return std::nullopt;
    }
    return f;
}

std::vector<TrainSample> assemble_samples(const SceneBundle& bundle, std::span<const int> acquisitions,
                                          ModelVariant variant) {
    // Resolve every required band up front so a missing one is reported even on empty masks.
    const char* site[] = {"slope", "h_ref"};
    for (const char* name : site) {
        (void)bundle.band(name);
    }
    if (variant == ModelVariant::D) {
        for (const char* name : {"red", "nir", "swir1", "swir2"}) {
            (void)bundle.band(name);
        }
    }
    for (int a : acquisitions) {
        for (const char* stem : {"kz", "coh", "theta0", "theta_loc"}) {
            (void)bundle.band(acq_band(stem, a));
        }
    }
    const auto& h_ref = bundle.band("h_ref").data;
    const float nodata = bundle.grid().nodata;
    std::vector<TrainSample> samples;
    for (int a : acquisitions) {
        for (std::size_t p = 0; p < bundle.grid().size(); ++p) {
            if (is_nodata(h_ref[p], nodata)) {
                continue;
            }
            auto f = pixel_features(bundle, a, p, variant);
            if (!f) {
                continue;
            }
            TrainSample s;
            s.kz = f->kz;
            s.coh_obs_mag = f->coh_mag;
            s.h_ref = h_ref[p];
            s.pixel_id = static_cast<std::int64_t>(p);
            s.acquisition = a;
            s.features = std::move(*f);
            samples.push_back(std::move(s));
        }
    }
    return samples;
}

}  // namespace hyforest
