#include "oocdr/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

namespace oocdr {

Image::Image(int w, int h, Rgb fill) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

void write_ppm(const Image& img, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing (" + path.string() + ")");
    out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
    for (const auto& p : img.pixels) {
        const char px[3] = {static_cast<char>(p.r), static_cast<char>(p.g), static_cast<char>(p.b)};
        out.write(px, 3);
    }
    if (!out) throw IoError("write failed (" + path.string() + ")");
}

Image read_ppm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open (" + path.string() + ")");
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    in.get();
    if (magic != "P6" || w < 1 || h < 1 || maxval != 255) throw IoError("not an 8-bit P6 image (" + path.string() + ")");
    Image img(w, h);
    for (auto& p : img.pixels) {
        char px[3];
        in.read(px, 3);
        p = {static_cast<std::uint8_t>(px[0]), static_cast<std::uint8_t>(px[1]), static_cast<std::uint8_t>(px[2])};
    }
    if (!in) throw IoError("truncated image (" + path.string() + ")");
    return img;
}

Bounds data_bounds(const RowMatrix<double>& points) {
    if (points.rows() < 1) throw ValidationError("cannot plot an empty projection");
    Bounds b;
    b.xmin = points.col(0).minCoeff();
    b.xmax = points.col(0).maxCoeff();
    b.ymin = points.col(1).minCoeff();
    b.ymax = points.col(1).maxCoeff();
    return b;
}

namespace {

void check_2d(const RowMatrix<double>& points) {
    if (points.cols() != 2) throw ValidationError("plotting needs a 2-D projection, got " + std::to_string(points.cols()) + " dims");
    if (!points.allFinite()) throw ValidationError("projection contains non-finite coordinates");
}

std::pair<double, double> padded(double lo, double hi, double margin) {
    double range = hi - lo;
    if (range <= 0) {
        lo -= 0.5;
        hi += 0.5;
        range = 1;
    }
    return {lo - margin * range, hi + margin * range};
}

constexpr std::array<Rgb, 10> kPalette{{{31, 119, 180},
                                        {255, 127, 14},
                                        {44, 160, 44},
                                        {214, 39, 40},
                                        {148, 103, 189},
                                        {140, 86, 75},
                                        {227, 119, 194},
                                        {127, 127, 127},
                                        {188, 189, 34},
                                        {23, 190, 207}}};

}  // namespace

Rgb category_color(std::int32_t label) {
    const auto n = static_cast<std::int32_t>(kPalette.size());
    return kPalette[static_cast<std::size_t>(((label % n) + n) % n)];
}

Image render_scatter(const RowMatrix<double>& points, const Labels* labels, const ScatterSpec& spec) {
    check_2d(points);
    if (spec.width < 1 || spec.height < 1) throw ValidationError("image size must be positive");
    if (labels && labels->size() != static_cast<std::size_t>(points.rows()))
        throw ValidationError("label count does not match projection rows");
    const auto b = data_bounds(points);
    const auto [x0, x1] = padded(b.xmin, b.xmax, spec.margin);
    const auto [y0, y1] = padded(b.ymin, b.ymax, spec.margin);

    Image img(spec.width, spec.height);
    for (Index i = 0; i < points.rows(); ++i) {
        const int px = static_cast<int>(std::lround((points(i, 0) - x0) / (x1 - x0) * (spec.width - 1)));
        const int py = static_cast<int>(std::lround((y1 - points(i, 1)) / (y1 - y0) * (spec.height - 1)));
        const Rgb color = labels ? category_color((*labels)[static_cast<std::size_t>(i)]) : kUnlabeledColor;
        for (int dy = -spec.point_radius; dy <= spec.point_radius; ++dy)
            for (int dx = -spec.point_radius; dx <= spec.point_radius; ++dx) {
                const int x = px + dx, y = py + dy;
                if (x >= 0 && x < spec.width && y >= 0 && y < spec.height) img.at(x, y) = color;
            }
    }
    return img;
}

void HeatmapSpec::validate() const {
    if (grid_w < 1 || grid_h < 1) throw ValidationError("heat map grid must be at least 1x1");
    if (width < 1 || height < 1) throw ValidationError("image size must be positive");
}

std::uint64_t Heatmap::total() const { return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}); }

Heatmap bin_points(const RowMatrix<double>& points, const HeatmapSpec& spec) {
    check_2d(points);
    spec.validate();
    const Bounds b = spec.bounds.value_or(data_bounds(points));
    Heatmap h;
    h.grid_w = spec.grid_w;
    h.grid_h = spec.grid_h;
    h.counts.assign(static_cast<std::size_t>(spec.grid_w) * spec.grid_h, 0);
    auto tile = [](double v, double lo, double hi, int cells) {
        if (!(hi > lo)) return 0;
        const double t = std::floor((v - lo) / (hi - lo) * cells);
        return static_cast<int>(std::clamp(t, 0.0, static_cast<double>(cells - 1)));
    };
    for (Index i = 0; i < points.rows(); ++i) {
        const int tx = tile(points(i, 0), b.xmin, b.xmax, spec.grid_w);
        const int ty = tile(points(i, 1), b.ymin, b.ymax, spec.grid_h);
        ++h.counts[static_cast<std::size_t>(ty) * spec.grid_w + tx];
    }
    h.max_count = *std::max_element(h.counts.begin(), h.counts.end());
    return h;
}

Rgb ramp_color(double t) {
    static constexpr std::array<Rgb, 5> stops{{{49, 54, 149}, {69, 117, 180}, {116, 173, 209}, {244, 109, 67}, {165, 0, 38}}};
    t = std::clamp(t, 0.0, 1.0) * (stops.size() - 1);
    const auto i = std::min(static_cast<std::size_t>(t), stops.size() - 2);
    const double f = t - static_cast<double>(i);
    auto mix = [f](std::uint8_t a, std::uint8_t b) {
        return static_cast<std::uint8_t>(std::lround(a + (static_cast<double>(b) - a) * f));
    };
    return {mix(stops[i].r, stops[i + 1].r), mix(stops[i].g, stops[i + 1].g), mix(stops[i].b, stops[i + 1].b)};
}

Image render_heatmap(const Heatmap& heat, const HeatmapSpec& spec) {
    spec.validate();
    Image img(spec.width, spec.height);
    const double top = spec.scale == ColorScale::log ? std::log1p(static_cast<double>(heat.max_count))
                                                     : static_cast<double>(heat.max_count);
    for (int y = 0; y < spec.height; ++y) {
        const int ty = heat.grid_h - 1 - static_cast<int>(static_cast<long>(y) * heat.grid_h / spec.height);
        for (int x = 0; x < spec.width; ++x) {
            const int tx = static_cast<int>(static_cast<long>(x) * heat.grid_w / spec.width);
            const auto c = heat.at(tx, ty);
            if (c == 0) continue;
            const double v = spec.scale == ColorScale::log ? std::log1p(static_cast<double>(c)) : static_cast<double>(c);
            img.at(x, y) = ramp_color(top > 0 ? v / top : 0.0);
        }
    }
    return img;
}

}  // namespace oocdr
