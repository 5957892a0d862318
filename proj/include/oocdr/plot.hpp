#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "oocdr/types.hpp"

namespace oocdr {

struct Rgb {
    std::uint8_t r = 255, g = 255, b = 255;
    bool operator==(const Rgb&) const = default;
};

/// 8-bit RGB raster, row 0 at the top.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<Rgb> pixels;

    Image() = default;
    Image(int w, int h, Rgb fill = {});
    Rgb& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    const Rgb& at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

/// Binary PPM (P6).
void write_ppm(const Image& img, const std::filesystem::path& path);
Image read_ppm(const std::filesystem::path& path);

struct Bounds {
    double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
};

Bounds data_bounds(const RowMatrix<double>& points);

struct ScatterSpec {
    int width = 800;
    int height = 800;
    int point_radius = 1;  // square of side 2r+1
    double margin = 0.02;  // fraction of the data range added on each side
};

/// Fixed categorical palette; index wraps.
Rgb category_color(std::int32_t label);
inline constexpr Rgb kUnlabeledColor{31, 119, 180};

/// Points drawn in row order; labels pick the palette color, absent labels
/// draw everything in one color.
Image render_scatter(const RowMatrix<double>& points, const Labels* labels, const ScatterSpec& spec);

enum class ColorScale { linear, log };

struct HeatmapSpec {
    int grid_w = 64;
    int grid_h = 64;
    ColorScale scale = ColorScale::log;
    int width = 512;
    int height = 512;
    std::optional<Bounds> bounds;  // defaults to the data bounding box

    void validate() const;
};

struct Heatmap {
    std::vector<std::uint64_t> counts;  // row-major, tile row 0 = lowest y
    int grid_w = 0;
    int grid_h = 0;
    std::uint64_t max_count = 0;
    std::uint64_t total() const;
    std::uint64_t at(int tx, int ty) const { return counts[static_cast<std::size_t>(ty) * grid_w + tx]; }
};

/// Half-open tiles; the last tile on each axis also takes the upper edge.
/// Points outside explicit bounds are clamped into the border tiles.
Heatmap bin_points(const RowMatrix<double>& points, const HeatmapSpec& spec);

/// Blue-to-red ramp for t in [0, 1].
Rgb ramp_color(double t);

Image render_heatmap(const Heatmap& heat, const HeatmapSpec& spec);

}  // namespace oocdr
