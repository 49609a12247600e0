#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace hyforest {

double rmse(std::span<const double> est, std::span<const double> ref);
double mae(std::span<const double> est, std::span<const double> ref);
/// 1 - SS_res / SS_tot; needs >= 2 values and a non-constant reference.
double r2(std::span<const double> est, std::span<const double> ref);

struct EvalTableRow {
    std::string scene;
    double rmse = 0.0;
    double mae = 0.0;
    double r2 = 0.0;
};

EvalTableRow evaluate_row(std::string scene, std::span<const double> est, std::span<const double> ref);

/// CSV with header `scene,rmse_m,mae_m,r2`; numbers use the shortest round-trip form.
std::string render_eval_table(std::span<const EvalTableRow> rows);

/// RMSE, MAE and R² per Lopé scene as published, for rendering checks.
std::vector<EvalTableRow> published_lope_table(char model);

struct SlopeBin {
    double center_deg = 0.0;
    double mean_residual = 0.0;  ///< NaN when empty
    double std_residual = 0.0;   ///< sample std; NaN with fewer than 2 points
    std::size_t count = 0;
};

/// Residual est - ref binned by slope (radians in, degrees out). Bins are centred on
/// integer multiples of the width and span the data range; bins in between that hold no
/// points are emitted with count 0.
std::vector<SlopeBin> residuals_vs_slope(std::span<const double> est, std::span<const double> ref,
                                         std::span<const double> slope_rad, double bin_width_deg);
std::string render_slope_bins(std::span<const SlopeBin> bins);

struct DensityHistogram {
    int bins_x = 0;  ///< kz * h axis
    int bins_y = 0;  ///< coherence axis
    double x_min = 0.0, x_max = 0.0;
    double y_min = 0.0, y_max = 1.0;
    std::vector<std::uint64_t> counts;  ///< row-major [i * bins_y + j]
    std::size_t total = 0;

    double density(int i, int j) const;
    double x_center(int i) const;
    double y_center(int j) const;
};

/// 2-D histogram of (kz h, |gamma|). The x range is the data range, the y range [0, 1].
DensityHistogram coherence_density(std::span<const double> coh_mags, std::span<const double> kz_times_h,
                                   int bins_x, int bins_y);
/// Header `i,j,kzh_center,coh_center,count,density`.
std::string render_density(const DensityHistogram& hist);

struct ChannelBounds {
    double min = 0.0;
    double max = 0.0;
};

struct RgbImage {
    int rows = 0;
    int cols = 0;
    std::vector<std::uint8_t> pixels;  ///< interleaved RGB
    std::array<ChannelBounds, 3> bounds{};
};

/// Per-channel min-max scaling, floor(255 (v - min) / (max - min)); constant channels map to 0,
/// nodata or non-finite values to black.
RgbImage false_rgb(std::span<const float> a1, std::span<const float> a2, std::span<const float> a3, int rows,
                   int cols, float nodata);

/// Inverse of the scaling for one channel value.
double dequantize(std::uint8_t v, const ChannelBounds& b);

/// Binary PPM (P6) plus `<path>.bounds` holding one `min max` line per channel.
void write_ppm(const RgbImage& image, const std::filesystem::path& path);

}  // namespace hyforest
