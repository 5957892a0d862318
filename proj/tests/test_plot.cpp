#include "doctest.h"
#include "oocdr/plot.hpp"
#include "test_support.hpp"

#include <fstream>
#include <iterator>
#include <set>

using namespace oocdr;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

// Per-point tile lookup written independently of bin_points.
std::vector<std::uint64_t> naive_bins(const RowMatrix<double>& p, int gw, int gh) {
    const double x0 = p.col(0).minCoeff(), x1 = p.col(0).maxCoeff();
    const double y0 = p.col(1).minCoeff(), y1 = p.col(1).maxCoeff();
    std::vector<std::uint64_t> c(static_cast<std::size_t>(gw) * gh, 0);
    for (Index i = 0; i < p.rows(); ++i) {
        int tx = 0, ty = 0;
        while (tx + 1 < gw && p(i, 0) >= x0 + (x1 - x0) * (tx + 1) / gw) ++tx;
        while (ty + 1 < gh && p(i, 1) >= y0 + (y1 - y0) * (ty + 1) / gh) ++ty;
        ++c[static_cast<std::size_t>(ty) * gw + tx];
    }
    return c;
}

}  // namespace

TEST_CASE("scatter rendering is deterministic and byte-stable") {
    test::TempDir dir("plot");
    const auto pts = test::random_matrix(500, 2, 1);
    Labels labels(500);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 4);
    const auto a = render_scatter(pts, &labels, {});
    const auto b = render_scatter(pts, &labels, {});
    CHECK(a.pixels == b.pixels);
    write_ppm(a, dir / "a.ppm");
    write_ppm(b, dir / "b.ppm");
    CHECK(slurp(dir / "a.ppm") == slurp(dir / "b.ppm"));
    const auto back = read_ppm(dir / "a.ppm");
    CHECK(back.width == 800);
    CHECK(back.pixels == a.pixels);

    std::set<std::tuple<int, int, int>> colors;
    for (const auto& p : a.pixels)
        if (!(p == Rgb{})) colors.insert({p.r, p.g, p.b});
    CHECK(colors.size() == 4);
}

TEST_CASE("unlabeled scatter uses one color and respects the margin") {
    const auto pts = test::random_matrix(300, 2, 2, 5.0);
    const auto img = render_scatter(pts, nullptr, {});
    int xmin = img.width, xmax = -1, ymin = img.height, ymax = -1;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const auto& p = img.at(x, y);
            if (p == Rgb{}) continue;
            CHECK(p == kUnlabeledColor);
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    // Margin 2% of the range on each side: extremes land near 1.9% and 98.1%.
    CHECK(xmin >= 12);
    CHECK(xmin <= 20);
    CHECK(xmax >= 779);
    CHECK(xmax <= 787);
    CHECK(ymin >= 12);
    CHECK(ymin <= 20);
    CHECK(ymax >= 779);
    CHECK(ymax <= 787);
}

TEST_CASE("heat map binning") {
    SUBCASE("coincident points fill one tile") {
        RowMatrix<double> p = RowMatrix<double>::Constant(37, 2, 1.5);
        HeatmapSpec spec;
        spec.grid_w = spec.grid_h = 8;
        const auto h = bin_points(p, spec);
        CHECK(h.max_count == 37);
        CHECK(h.total() == 37);
    }
    SUBCASE("one point per tile center") {
        HeatmapSpec spec;
        spec.grid_w = 5;
        spec.grid_h = 3;
        spec.bounds = Bounds{0, 5, 0, 3};
        RowMatrix<double> p(15, 2);
        for (int ty = 0; ty < 3; ++ty)
            for (int tx = 0; tx < 5; ++tx) p.row(ty * 5 + tx) << tx + 0.5, ty + 0.5;
        const auto h = bin_points(p, spec);
        for (auto c : h.counts) CHECK(c == 1);
    }
    SUBCASE("matches a naive per-point lookup and conserves the count") {
        for (std::uint64_t s = 0; s < 5; ++s) {
            RowMatrix<double> p = test::random_matrix(2000, 2, 10 + s);
            // Exact edges too.
            p.row(0) << p.col(0).maxCoeff(), p.col(1).maxCoeff();
            HeatmapSpec spec;
            spec.grid_w = 17;
            spec.grid_h = 9;
            const auto h = bin_points(p, spec);
            CHECK(h.counts == naive_bins(p, 17, 9));
            CHECK(h.total() == 2000);
        }
    }
}

TEST_CASE("heat map rendering") {
    test::TempDir dir("plot");
    const auto pts = test::random_matrix(3000, 2, 3);
    HeatmapSpec spec;
    const auto h = bin_points(pts, spec);
    const auto a = render_heatmap(h, spec);
    write_ppm(a, dir / "a.ppm");
    write_ppm(render_heatmap(bin_points(pts, spec), spec), dir / "b.ppm");
    CHECK(slurp(dir / "a.ppm") == slurp(dir / "b.ppm"));
    CHECK(ramp_color(0) == Rgb{49, 54, 149});
    CHECK(ramp_color(1) == Rgb{165, 0, 38});
    // The densest tile gets the top of the ramp on either scale.
    spec.scale = ColorScale::linear;
    const auto lin = render_heatmap(h, spec);
    bool hot = false;
    for (const auto& p : lin.pixels) hot = hot || p == ramp_color(1);
    CHECK(hot);
}

TEST_CASE("plot preconditions") {
    const auto p3 = test::random_matrix(10, 3, 4);
    CHECK_THROWS_AS(render_scatter(p3, nullptr, {}), ValidationError);
    CHECK_THROWS_AS(bin_points(p3, {}), ValidationError);
    HeatmapSpec bad;
    bad.grid_w = 0;
    CHECK_THROWS_AS(bin_points(test::random_matrix(10, 2, 5), bad), ValidationError);
    Labels short_labels(3, 0);
    CHECK_THROWS_AS(render_scatter(test::random_matrix(10, 2, 6), &short_labels, {}), ValidationError);
}
