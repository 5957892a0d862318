#include "oocdr/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <numeric>
#include <sstream>

namespace oocdr {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string join_doubles(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += format_double(v[i]);
    }
    return s;
}

std::vector<double> split_doubles(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(parse_double(item, "batch seconds"));
    return out;
}

}  // namespace

ProjectionResult project(const std::filesystem::path& dataset, const DrMethod& method, const ProjectOptions& options) {
    const auto t_start = Clock::now();
    const auto header = read_header(dataset);
    if (options.n_ref < 1 || options.n_ref > header.rows)
        throw ValidationError("reference size must be in [1, " + std::to_string(header.rows) + "], got " +
                              std::to_string(options.n_ref));
    if (options.n_batch < 1) throw ValidationError("batch size must be at least 1");

    ProjectionResult result;
    result.method = method.id();
    result.n_ref = options.n_ref;
    result.n_batch = options.n_batch;
    result.seed = options.seed;
    result.input_dims = header.dims;

    auto sample = sample_reference(dataset, options.n_ref, options.seed);
    result.sample_seconds = seconds_since(t_start);

    const auto t_fit = Clock::now();
    auto fitted = method.fit(sample.points.data, options.seed);
    auto& ref = result.reference;
    ref.method = method.id();
    ref.params = std::move(fitted.model);
    ref.embedding = std::move(fitted.embedding);
    ref.rows = std::move(sample.rows);
    ref.fit_seconds = seconds_since(t_fit);
    result.fit_seconds = result.sample_seconds + ref.fit_seconds;
    sample.points = {};

    const Index m = ref.embedding.cols();
    if (ref.embedding.rows() != static_cast<Index>(options.n_ref) || !ref.embedding.allFinite())
        throw Error(method.id() + ": fit produced an invalid reference embedding");

    result.coords.resize(static_cast<Index>(header.rows), m);
    result.provenance.assign(header.rows, kReferenceRow);
    for (std::size_t i = 0; i < ref.rows.size(); ++i)
        result.coords.row(static_cast<Index>(ref.rows[i])) = ref.embedding.row(static_cast<Index>(i));

    const auto params_hash = fnv1a(ref.params->serialize());
    BatchStream stream(dataset, options.n_batch, ref.rows);
    const auto total_batches = stream.batch_count();
    while (true) {
        const auto t_batch = Clock::now();
        auto batch = stream.next();
        if (!batch) break;
        const auto y = ref.params->transform(batch->points.data, options.threads);
        for (std::size_t i = 0; i < batch->rows.size(); ++i) {
            const auto row = static_cast<Index>(batch->rows[i]);
            result.coords.row(row) = y.row(static_cast<Index>(i));
            result.provenance[static_cast<std::size_t>(row)] = static_cast<std::int32_t>(batch->id);
        }
        result.batch_seconds.push_back(seconds_since(t_batch));
        result.batch_sizes.push_back(batch->rows.size());
        if (options.on_batch) options.on_batch({batch->id, batch->rows.size(), total_batches});
    }
    if (fnv1a(ref.params->serialize()) != params_hash)
        throw Error(method.id() + ": model parameters changed during out-of-sample projection");
    result.total_seconds = seconds_since(t_start);
    return result;
}

std::filesystem::path metadata_path(const std::filesystem::path& projection_path) {
    return projection_path.string() + ".meta";
}

void write_projection(const ProjectionResult& result, const std::filesystem::path& path, const KeyValues& extra) {
    DataMatrixD m;
    m.data = result.coords;
    m.labels = result.provenance;
    write_matrix(path, m);

    KeyValues kv{{"method", result.method},
                 {"n_ref", std::to_string(result.n_ref)},
                 {"n_batch", std::to_string(result.n_batch)},
                 {"seed", std::to_string(result.seed)},
                 {"rows", std::to_string(result.coords.rows())},
                 {"input_dims", std::to_string(result.input_dims)},
                 {"output_dims", std::to_string(result.coords.cols())},
                 {"fit_seconds", format_double(result.fit_seconds)},
                 {"batch_count", std::to_string(result.batch_seconds.size())},
                 {"batch_seconds", join_doubles(result.batch_seconds)},
                 {"total_seconds", format_double(result.total_seconds)}};
    if (result.reference.params)
        for (auto& [k, v] : result.reference.params->hyperparameters()) kv.emplace_back("param." + k, v);
    kv.insert(kv.end(), extra.begin(), extra.end());
    write_key_values(metadata_path(path), kv);
}

RunMetadata read_run_metadata(const std::filesystem::path& projection_path) {
    RunMetadata md;
    md.all = read_key_values(metadata_path(projection_path));
    md.method = require_key(md.all, "method");
    md.n_ref = parse_u64(require_key(md.all, "n_ref"), "n_ref");
    md.n_batch = parse_u64(require_key(md.all, "n_batch"), "n_batch");
    md.seed = parse_u64(require_key(md.all, "seed"), "seed");
    md.rows = parse_u64(require_key(md.all, "rows"), "rows");
    md.fit_seconds = parse_double(require_key(md.all, "fit_seconds"), "fit_seconds");
    md.total_seconds = parse_double(require_key(md.all, "total_seconds"), "total_seconds");
    md.batch_seconds = split_doubles(require_key(md.all, "batch_seconds"));
    return md;
}

std::string timing_csv_header() { return "n_ref,fit_seconds,oos_seconds,oos_points,total_seconds"; }

std::string timing_csv_row(const TimingSample& s) {
    const double oos = std::accumulate(s.batch_seconds.begin(), s.batch_seconds.end(), 0.0);
    const auto points = std::accumulate(s.batch_sizes.begin(), s.batch_sizes.end(), std::size_t{0});
    return std::to_string(s.n_ref) + "," + format_double(s.fit_seconds) + "," + format_double(oos) + "," +
           std::to_string(points) + "," + format_double(s.total_seconds);
}

void write_timing_csv(const std::filesystem::path& path, std::span<const TimingSample> samples) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing (" + path.string() + ")");
    out << timing_csv_header() << '\n';
    for (const auto& s : samples) out << timing_csv_row(s) << '\n';
    if (!out) throw IoError("write failed (" + path.string() + ")");
}

std::vector<TimingSample> read_timing_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open (" + path.string() + ")");
    std::string line;
    if (!std::getline(in, line) || line != timing_csv_header())
        throw ValidationError("unexpected timing CSV header in " + path.string());
    std::vector<TimingSample> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        for (std::string item; std::getline(ss, item, ',');) f.push_back(item);
        if (f.size() != 5) throw ValidationError("timing CSV row needs 5 fields: " + line);
        TimingSample s;
        s.n_ref = parse_u64(f[0], "n_ref");
        s.fit_seconds = parse_double(f[1], "fit_seconds");
        s.batch_seconds = {parse_double(f[2], "oos_seconds")};
        s.batch_sizes = {static_cast<std::size_t>(parse_u64(f[3], "oos_points"))};
        s.total_seconds = parse_double(f[4], "total_seconds");
        out.push_back(std::move(s));
    }
    return out;
}

TimingReport timing_model_check(std::span<const TimingSample> samples) {
    if (samples.size() < 3) throw ValidationError("timing model check needs at least 3 reference sizes");
    TimingReport report;
    for (const auto& s : samples) {
        TimingRow r{};
        r.n_ref = s.n_ref;
        r.fit_seconds = s.fit_seconds;
        r.oos_seconds = std::accumulate(s.batch_seconds.begin(), s.batch_seconds.end(), 0.0);
        r.oos_points = std::accumulate(s.batch_sizes.begin(), s.batch_sizes.end(), std::size_t{0});
        r.per_point_seconds = r.oos_points ? r.oos_seconds / static_cast<double>(r.oos_points) : 0.0;
        r.total_seconds = s.total_seconds;
        r.accounted_fraction = s.total_seconds > 0 ? (r.fit_seconds + r.oos_seconds) / s.total_seconds : 1.0;
        report.rows.push_back(r);
    }
    // Least squares of per-point time against n_ref.
    const double n = static_cast<double>(report.rows.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (const auto& r : report.rows) {
        const double x = static_cast<double>(r.n_ref), y = r.per_point_seconds;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    const double vx = sxx - sx * sx / n, vy = syy - sy * sy / n, cxy = sxy - sx * sy / n;
    report.slope = vx > 0 ? cxy / vx : 0.0;
    report.intercept = (sy - report.slope * sx) / n;
    report.r_squared = (vx > 0 && vy > 0) ? (cxy * cxy) / (vx * vy) : 0.0;
    const auto [lo, hi] = std::minmax_element(report.rows.begin(), report.rows.end(), [](const auto& a, const auto& b) {
        return a.per_point_seconds < b.per_point_seconds;
    });
    report.per_point_ratio = lo->per_point_seconds > 0 ? hi->per_point_seconds / lo->per_point_seconds : 0.0;
    return report;
}

}  // namespace oocdr
