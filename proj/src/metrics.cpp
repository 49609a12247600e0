#include "hyforest/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include <fmt/format.h>

#include "hyforest/error.hpp"

namespace hyforest {

namespace {

void check_pair(std::span<const double> est, std::span<const double> ref) {
    if (est.size() != ref.size()) {
        throw DimensionError(fmt::format("length mismatch: {} estimates vs {} references", est.size(), ref.size()));
    }
    if (est.empty()) {
        throw ValidationError("metrics need at least one value");
    }
}

}  // namespace

double rmse(std::span<const double> est, std::span<const double> ref) {
    check_pair(est, ref);
    double ss = 0.0;
    for (std::size_t i = 0; i < est.size(); ++i) {
        ss += (est[i] - ref[i]) * (est[i] - ref[i]);
    }
    return std::sqrt(ss / static_cast<double>(est.size()));
}

double mae(std::span<const double> est, std::span<const double> ref) {
    check_pair(est, ref);
    double s = 0.0;
    for (std::size_t i = 0; i < est.size(); ++i) {
        s += std::abs(est[i] - ref[i]);
    }
    return s / static_cast<double>(est.size());
}

double r2(std::span<const double> est, std::span<const double> ref) {
    check_pair(est, ref);
    if (ref.size() < 2) {
        throw ValidationError("r2 needs at least two values");
    }
    double mean = 0.0;
    for (double v : ref) {
        mean += v;
    }
    mean /= static_cast<double>(ref.size());
    double ss_tot = 0.0;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        ss_tot += (ref[i] - mean) * (ref[i] - mean);
        ss_res += (est[i] - ref[i]) * (est[i] - ref[i]);
    }
    if (ss_tot == 0.0) {
        throw ValidationError("r2 undefined for a constant reference");
    }
    return 1.0 - ss_res / ss_tot;
}

EvalTableRow evaluate_row(std::string scene, std::span<const double> est, std::span<const double> ref) {
    return {std::move(scene), rmse(est, ref), mae(est, ref), r2(est, ref)};
}

std::string render_eval_table(std::span<const EvalTableRow> rows) {
    std::string out = "scene,rmse_m,mae_m,r2\n";
    for (const auto& r : rows) {
        out += fmt::format("{},{},{},{}\n", r.scene, r.rmse, r.mae, r.r2);
    }
    return out;
}

std::vector<EvalTableRow> published_lope_table(char model) {
    if (model == 'C') {
        return {{"1", 8.09, 6.28, 0.66}, {"2", 9.09, 6.93, 0.62}, {"3", 8.34, 6.41, 0.14},
                {"4", 8.97, 6.98, 0.69}, {"5", 9.62, 7.32, 0.28}, {"Overall", 8.84, 6.79, 0.67}};
    }
    if (model == 'D') {
        return {{"1", 7.26, 5.42, 0.72}, {"2", 9.09, 5.71, 0.65}, {"3", 7.52, 5.51, 0.37},
                {"4", 6.94, 5.25, 0.77}, {"5", 8.93, 6.55, 0.46}, {"Overall", 7.65, 5.66, 0.75}};
    }
    throw ValidationError("model must be 'C' or 'D'");
}

std::vector<SlopeBin> residuals_vs_slope(std::span<const double> est, std::span<const double> ref,
                                         std::span<const double> slope_rad, double bin_width_deg) {
    check_pair(est, ref);
    if (slope_rad.size() != est.size()) {
        throw DimensionError("slope length differs from estimates");
    }
    if (!(bin_width_deg > 0.0)) {
        throw ValidationError("bin width must be > 0");
    }
    constexpr double kRadToDeg = 180.0 / 3.14159265358979323846;
    std::map<long, std::vector<double>> groups;
    for (std::size_t i = 0; i < est.size(); ++i) {
        const double deg = slope_rad[i] * kRadToDeg;
        groups[std::lround(deg / bin_width_deg)].push_back(est[i] - ref[i]);
    }
    std::vector<SlopeBin> out;
    const long first = groups.begin()->first;
    const long last = groups.rbegin()->first;
    for (long k = first; k <= last; ++k) {
        SlopeBin bin;
        bin.center_deg = static_cast<double>(k) * bin_width_deg;
        const auto it = groups.find(k);
        if (it == groups.end()) {
            bin.mean_residual = std::numeric_limits<double>::quiet_NaN();
            bin.std_residual = std::numeric_limits<double>::quiet_NaN();
            out.push_back(bin);
            continue;
        }
        const auto& v = it->second;
        bin.count = v.size();
        double mean = 0.0;
        for (double x : v) {
            mean += x;
        }
        mean /= static_cast<double>(v.size());
        bin.mean_residual = mean;
        if (v.size() >= 2) {
            double ss = 0.0;
            for (double x : v) {
                ss += (x - mean) * (x - mean);
            }
            bin.std_residual = std::sqrt(ss / static_cast<double>(v.size() - 1));
        } else {
            bin.std_residual = std::numeric_limits<double>::quiet_NaN();
        }
        out.push_back(bin);
    }
    return out;
}

std::string render_slope_bins(std::span<const SlopeBin> bins) {
    std::string out = "slope_center_deg,mean_residual_m,std_residual_m,count\n";
    for (const auto& b : bins) {
        if (b.count == 0) {
            out += fmt::format("{},,,0\n", b.center_deg);
        } else if (b.count == 1) {
            out += fmt::format("{},{},,1\n", b.center_deg, b.mean_residual);
        } else {
            out += fmt::format("{},{},{},{}\n", b.center_deg, b.mean_residual, b.std_residual, b.count);
        }
    }
    return out;
}

double DensityHistogram::density(int i, int j) const {
    return total == 0 ? 0.0
                      : static_cast<double>(counts[static_cast<std::size_t>(i) * static_cast<std::size_t>(bins_y) +
                                                   static_cast<std::size_t>(j)]) /
                            static_cast<double>(total);
}

double DensityHistogram::x_center(int i) const { return x_min + (i + 0.5) * (x_max - x_min) / bins_x; }

double DensityHistogram::y_center(int j) const { return y_min + (j + 0.5) * (y_max - y_min) / bins_y; }

DensityHistogram coherence_density(std::span<const double> coh_mags, std::span<const double> kz_times_h,
                                   int bins_x, int bins_y) {
    if (coh_mags.size() != kz_times_h.size()) {
        throw DimensionError("coherence and kz*h lengths differ");
    }
    if (coh_mags.empty()) {
        throw ValidationError("coherence density needs at least one point");
    }
    if (bins_x < 1 || bins_y < 1) {
        throw ValidationError("histogram needs at least one bin per axis");
    }
    DensityHistogram h;
    h.bins_x = bins_x;
    h.bins_y = bins_y;
    const auto [lo, hi] = std::minmax_element(kz_times_h.begin(), kz_times_h.end());
    h.x_min = *lo;
    h.x_max = *hi;
    if (h.x_max == h.x_min) {
        h.x_min -= 0.5;
        h.x_max += 0.5;
    }
    h.counts.assign(static_cast<std::size_t>(bins_x) * static_cast<std::size_t>(bins_y), 0);
    auto cell = [](double v, double lo_v, double hi_v, int n) {
        const int k = static_cast<int>(std::floor((v - lo_v) / (hi_v - lo_v) * n));
        return std::clamp(k, 0, n - 1);
    };
    for (std::size_t k = 0; k < coh_mags.size(); ++k) {
        const int i = cell(kz_times_h[k], h.x_min, h.x_max, bins_x);
        const int j = cell(coh_mags[k], h.y_min, h.y_max, bins_y);
        ++h.counts[static_cast<std::size_t>(i) * static_cast<std::size_t>(bins_y) + static_cast<std::size_t>(j)];
    }
    h.total = coh_mags.size();
    return h;
}

std::string render_density(const DensityHistogram& hist) {
    std::string out = "i,j,kzh_center,coh_center,count,density\n";
    for (int i = 0; i < hist.bins_x; ++i) {
        for (int j = 0; j < hist.bins_y; ++j) {
            const auto c = hist.counts[static_cast<std::size_t>(i) * static_cast<std::size_t>(hist.bins_y) +
                                       static_cast<std::size_t>(j)];
            out += fmt::format("{},{},{},{},{},{}\n", i, j, hist.x_center(i), hist.y_center(j), c, hist.density(i, j));
        }
    }
    return out;
}

RgbImage false_rgb(std::span<const float> a1, std::span<const float> a2, std::span<const float> a3, int rows,
                   int cols, float nodata) {
    const std::size_t n = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
    if (rows < 1 || cols < 1 || a1.size() != n || a2.size() != n || a3.size() != n) {
        throw DimensionError("false_rgb channels must share the grid");
    }
    const std::array<std::span<const float>, 3> ch{a1, a2, a3};
    auto usable = [&](std::size_t p) {
        for (const auto& c : ch) {
            if (c[p] == nodata || !std::isfinite(c[p])) {
                return false;
            }
        }
        return true;
    };
    RgbImage img;
    img.rows = rows;
    img.cols = cols;
    img.pixels.assign(3 * n, 0);
    for (std::size_t c = 0; c < 3; ++c) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::size_t p = 0; p < n; ++p) {
            if (usable(p)) {
                lo = std::min(lo, static_cast<double>(ch[c][p]));
                hi = std::max(hi, static_cast<double>(ch[c][p]));
            }
        }
        if (!std::isfinite(lo)) {
            lo = hi = 0.0;
        }
        img.bounds[c] = {lo, hi};
        if (hi == lo) {
            continue;
        }
        for (std::size_t p = 0; p < n; ++p) {
            if (usable(p)) {
                const double v = std::floor(255.0 * (static_cast<double>(ch[c][p]) - lo) / (hi - lo));
                img.pixels[3 * p + c] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
            }
        }
    }
    return img;
}

double dequantize(std::uint8_t v, const ChannelBounds& b) { return b.min + (b.max - b.min) * v / 255.0; }

void write_ppm(const RgbImage& image, const std::filesystem::path& path) {
    {
        std::ofstream f(path, std::ios::binary);
        if (!f) {
            throw IoError("cannot write " + path.string());
        }
        const auto header = fmt::format("P6\n{} {}\n255\n", image.cols, image.rows);
        f.write(header.data(), static_cast<std::streamsize>(header.size()));
        f.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
        if (!f) {
            throw IoError("failed writing " + path.string());
        }
    }
    std::ofstream b(path.string() + ".bounds");
    if (!b) {
        throw IoError("cannot write bounds sidecar for " + path.string());
    }
    b << fmt::format("a1 {} {}\na2 {} {}\na3 {} {}\n", image.bounds[0].min, image.bounds[0].max,
                     image.bounds[1].min, image.bounds[1].max, image.bounds[2].min, image.bounds[2].max);
}

}  // namespace hyforest
