// oocdr command line: generate, import-csv, project, evaluate, bench, plot.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "oocdr/blobs.hpp"
#include "oocdr/io.hpp"
#include "oocdr/method.hpp"
#include "oocdr/metrics.hpp"
#include "oocdr/pipeline.hpp"
#include "oocdr/plot.hpp"

using namespace oocdr;

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty()) out.push_back(item);
    return out;
}

std::pair<int, int> parse_grid(const std::string& s) {
    const auto x = s.find('x');
    if (x == std::string::npos) throw ValidationError("grid must look like WxH, got '" + s + "'");
    const auto w = parse_u64(s.substr(0, x), "grid width");
    const auto h = parse_u64(s.substr(x + 1), "grid height");
    if (w < 1 || h < 1 || w > 1u << 16 || h > 1u << 16) throw ValidationError("grid size out of range: " + s);
    return {static_cast<int>(w), static_cast<int>(h)};
}

struct MethodFlags {
    std::string method = "pca";
    Index dims = 2;
    std::optional<double> perplexity;
    std::optional<int> iterations;
    std::optional<double> step_size;
    std::optional<int> oos_iters;
    std::string init = "nn";
    std::optional<double> pairwise_cap_mb;

    void add(CLI::App* app) {
        app->add_option("--method", method, "pca, mds or tsne")->check(CLI::IsMember({"pca", "mds", "tsne"}));
        app->add_option("--dims", dims, "output dimensionality");
        app->add_option("--perplexity", perplexity, "t-SNE perplexity (default 30)");
        app->add_option("--iterations", iterations, "fit iterations (MDS 500, t-SNE 750)");
        app->add_option("--step-size", step_size, "MDS step size (default 1e-4)");
        app->add_option("--oos-iters", oos_iters, "t-SNE per-point descent steps (0 = kNN init only)");
        app->add_option("--init", init, "MDS out-of-sample init")->check(CLI::IsMember({"nn", "mean"}));
        app->add_option("--pairwise-cap-mb", pairwise_cap_mb, "memory cap for the MDS/t-SNE distance table");
    }

    MethodConfig config(int threads) const {
        MethodConfig c;
        c.id = method;
        c.dims = dims;
        c.threads = threads;
        if (perplexity) c.tsne.perplexity = *perplexity;
        if (iterations) {
            c.mds.iterations = *iterations;
            c.tsne.iterations = *iterations;
            c.tsne.exaggeration_iterations = std::min(c.tsne.exaggeration_iterations, *iterations);
        }
        if (step_size) c.mds.step_size = *step_size;
        if (oos_iters) c.tsne.oos_iterations = *oos_iters;
        c.mds.oos_init = init == "mean" ? MdsInit::mean : MdsInit::nearest;
        if (pairwise_cap_mb) {
            if (!(*pairwise_cap_mb > 0)) throw ValidationError("--pairwise-cap-mb must be positive");
            const auto bytes = static_cast<std::size_t>(*pairwise_cap_mb * 1024 * 1024);
            c.mds.pairwise_cap_bytes = bytes;
            c.tsne.pairwise_cap_bytes = bytes;
        }
        return c;
    }
};

void print_kv(const KeyValues& kv) {
    for (const auto& [k, v] : kv) std::cout << k << '=' << v << '\n';
}

double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Out-of-core dimensionality reduction by reference set and batched out-of-sample projection"};
    app.require_subcommand(1);
    app.fallthrough();
    int threads = 0;
    app.add_option("--threads", threads, "worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);

    // generate blobs
    auto* gen = app.add_subcommand("generate", "synthetic datasets");
    gen->require_subcommand(1);
    auto* blobs = gen->add_subcommand("blobs", "isotropic Gaussian clusters");
    SyntheticSpec spec;
    std::string out_path;
    blobs->add_option("--n", spec.n, "rows")->required();
    blobs->add_option("--dim", spec.d, "dimensions")->required();
    blobs->add_option("--clusters", spec.k_clusters, "cluster count");
    blobs->add_option("--std", spec.cluster_std, "cluster standard deviation");
    blobs->add_option("--seed", spec.seed, "random seed");
    blobs->add_option("--out", out_path, "output matrix file")->required();

    // import-csv
    auto* imp = app.add_subcommand("import-csv", "convert a numeric CSV to the matrix format");
    std::string csv_in, csv_labels = "none";
    imp->add_option("--in", csv_in, "CSV file")->required();
    imp->add_option("--out", out_path, "output matrix file")->required();
    imp->add_option("--labels", csv_labels, "label column")->check(CLI::IsMember({"none", "last"}));

    // project
    auto* proj = app.add_subcommand("project", "fit a reference sample and stream the rest");
    std::string data_path, model_prefix;
    ProjectOptions popt;
    popt.n_batch = 100000;
    MethodFlags mflags;
    proj->add_option("--data", data_path, "input matrix file")->required();
    proj->add_option("--out", out_path, "output projection file")->required();
    proj->add_option("--ref-size", popt.n_ref, "reference sample size")->required();
    proj->add_option("--batch-size", popt.n_batch, "rows per out-of-sample batch");
    proj->add_option("--seed", popt.seed, "sampling and initialization seed");
    proj->add_option("--save-model", model_prefix, "also write the fitted parameters under this prefix");
    mflags.add(proj);

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "quality metrics of a projection");
    std::string proj_path, metrics_list = "stress,pearson,knn,trust", scope = "all", csv_out;
    MetricParams mparams;
    ev->add_option("--projection", proj_path, "projection file")->required();
    ev->add_option("--data", data_path, "source matrix file")->required();
    ev->add_option("--metrics", metrics_list, "comma list of stress, pearson, knn, trust");
    ev->add_option("--k", mparams.k, "neighborhood size");
    ev->add_option("--block", mparams.block, "rows per distance tile");
    ev->add_option("--scope", scope, "all, reference or oos")->check(CLI::IsMember({"all", "reference", "oos"}));
    ev->add_option("--csv", csv_out, "append a CSV row here (header added to new files)");

    // bench
    auto* bench = app.add_subcommand("bench", "runtime sweep over reference sizes");
    std::string ref_sizes;
    std::optional<std::size_t> bench_batch;
    std::uint64_t bench_seed = 0;
    MethodFlags bflags;
    bench->add_option("--data", data_path, "input matrix file")->required();
    bench->add_option("--ref-sizes", ref_sizes, "comma list of reference sizes")->required();
    bench->add_option("--batch-size", bench_batch, "rows per batch (default 100000, MDS 1000)");
    bench->add_option("--seed", bench_seed, "seed");
    bench->add_option("--out", out_path, "CSV report")->required();
    bflags.add(bench);

    // plot
    auto* plot = app.add_subcommand("plot", "raster images of a 2-D projection");
    plot->require_subcommand(1);
    auto* scatter = plot->add_subcommand("scatter", "points colored by label");
    std::string labels_from;
    ScatterSpec sspec;
    scatter->add_option("--projection", proj_path, "projection file")->required();
    scatter->add_option("--out", out_path, "output PPM")->required();
    scatter->add_option("--labels-from", labels_from, "matrix file whose label column colors the points");
    scatter->add_option("--width", sspec.width, "image width");
    scatter->add_option("--height", sspec.height, "image height");
    scatter->add_option("--radius", sspec.point_radius, "point radius in pixels");
    auto* heat = plot->add_subcommand("heatmap", "point density per tile");
    std::string grid = "64x64";
    bool log_scale = false, linear_scale = false;
    HeatmapSpec hspec;
    heat->add_option("--projection", proj_path, "projection file")->required();
    heat->add_option("--out", out_path, "output PPM")->required();
    heat->add_option("--grid", grid, "tiles as WxH");
    heat->add_flag("--log", log_scale, "log1p color scale (default)");
    heat->add_flag("--linear", linear_scale, "linear color scale");
    heat->add_option("--width", hspec.width, "image width");
    heat->add_option("--height", hspec.height, "image height");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (blobs->parsed()) {
            const auto h = write_blobs(out_path, spec);
            std::cout << "rows=" << h.rows << "\ndims=" << h.dims << '\n';
        } else if (imp->parsed()) {
            const auto h = import_csv(csv_in, out_path, csv_labels == "last" ? CsvLabels::last_column : CsvLabels::none);
            std::cout << "rows=" << h.rows << "\ndims=" << h.dims << '\n';
        } else if (proj->parsed()) {
            popt.threads = threads;
            const auto method = make_method(mflags.config(threads));
            const auto r = project(data_path, *method, popt);
            write_projection(r, out_path);
            if (!model_prefix.empty()) r.reference.params->save(model_prefix);
            std::cout << "rows=" << r.coords.rows() << "\nbatches=" << r.batch_seconds.size()
                      << "\nfit_seconds=" << format_double(r.fit_seconds)
                      << "\nmean_batch_seconds=" << format_double(mean_of(r.batch_seconds))
                      << "\ntotal_seconds=" << format_double(r.total_seconds) << '\n';
        } else if (ev->parsed()) {
            mparams.metrics = split_list(metrics_list);
            mparams.scope = parse_scope(scope);
            const auto rep = evaluate(proj_path, data_path, mparams);
            print_kv(rep.key_values());
            if (!csv_out.empty()) {
                const bool fresh = !std::filesystem::exists(csv_out) || std::filesystem::file_size(csv_out) == 0;
                std::ofstream out(csv_out, std::ios::app);
                if (!out) throw IoError("cannot open for writing (" + csv_out + ")");
                if (fresh) out << rep.csv_header() << '\n';
                out << rep.csv_row() << '\n';
            }
        } else if (bench->parsed()) {
            std::vector<std::uint64_t> sizes;
            for (const auto& s : split_list(ref_sizes)) sizes.push_back(parse_u64(s, "reference size"));
            if (sizes.size() < 2) throw ValidationError("bench needs at least 2 reference sizes");
            const auto method = make_method(bflags.config(threads));
            ProjectOptions bopt;
            bopt.n_batch = bench_batch.value_or(bflags.method == "mds" ? 1000 : 100000);
            bopt.seed = bench_seed;
            bopt.threads = threads;
            std::vector<TimingSample> samples;
            for (auto n : sizes) {
                bopt.n_ref = n;
                const auto r = project(data_path, *method, bopt);
                samples.push_back({n, r.fit_seconds, r.batch_seconds, r.batch_sizes, r.total_seconds});
                std::cout << timing_csv_row(samples.back()) << std::endl;
            }
            write_timing_csv(out_path, samples);
            if (samples.size() >= 3) {
                const auto rep = timing_model_check(samples);
                std::cout << "per_point_slope=" << format_double(rep.slope)
                          << "\nper_point_intercept=" << format_double(rep.intercept)
                          << "\nper_point_r_squared=" << format_double(rep.r_squared)
                          << "\nper_point_max_over_min=" << format_double(rep.per_point_ratio) << '\n';
                for (const auto& row : rep.rows)
                    std::cout << "accounted_fraction[" << row.n_ref << "]=" << format_double(row.accounted_fraction)
                              << '\n';
            }
        } else if (scatter->parsed()) {
            const auto p = read_matrix(proj_path);
            std::optional<Labels> labels;
            if (!labels_from.empty()) {
                labels = read_labels(labels_from);
                if (!labels) throw ValidationError(labels_from + " has no label column");
            }
            write_ppm(render_scatter(p.data, labels ? &*labels : nullptr, sspec), out_path);
            std::cout << "points=" << p.rows() << '\n';
        } else if (heat->parsed()) {
            if (log_scale && linear_scale) throw ValidationError("--log and --linear are exclusive");
            const auto [w, h] = parse_grid(grid);
            hspec.grid_w = w;
            hspec.grid_h = h;
            hspec.scale = linear_scale ? ColorScale::linear : ColorScale::log;
            const auto p = read_matrix(proj_path);
            const auto bins = bin_points(p.data, hspec);
            write_ppm(render_heatmap(bins, hspec), out_path);
            std::cout << "points=" << bins.total() << "\nmax_count=" << bins.max_count << '\n';
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const CapacityError& e) {
        std::cerr << "capacity error: " << e.what() << '\n';
        return 3;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
