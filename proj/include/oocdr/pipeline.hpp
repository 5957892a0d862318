#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "oocdr/io.hpp"
#include "oocdr/method.hpp"
#include "oocdr/types.hpp"

namespace oocdr {

inline constexpr std::int32_t kReferenceRow = -1;

/// Parameters learned on the reference set plus its embedding.
struct ReferenceModel {
    std::string method;
    std::shared_ptr<const FittedModel> params;
    RowMatrix<double> embedding;        // n_ref x m, rows follow `rows`
    std::vector<std::uint64_t> rows;    // ascending source row indices
    double fit_seconds = 0;
};

/// Complete projection aligned to source row order. `provenance[i]` is
/// kReferenceRow for reference rows, else the id of the OOS batch.
struct ProjectionResult {
    RowMatrix<double> coords;
    std::vector<std::int32_t> provenance;
    ReferenceModel reference;
    std::string method;
    std::uint64_t n_ref = 0;
    std::size_t n_batch = 0;
    std::uint64_t seed = 0;
    Index input_dims = 0;
    double sample_seconds = 0;
    double fit_seconds = 0;  // includes sampling
    std::vector<double> batch_seconds;
    std::vector<std::size_t> batch_sizes;
    double total_seconds = 0;
};

struct BatchProgress {
    std::size_t batch_id;
    std::size_t batch_rows;
    std::size_t batches_total;
};

struct ProjectOptions {
    std::uint64_t n_ref = 0;
    std::size_t n_batch = 1;
    std::uint64_t seed = 0;
    int threads = 1;
    std::function<void(const BatchProgress&)> on_batch;
};

/// Samples the reference set, fits once, then streams every remaining row
/// in batches through the frozen model. Throws if the model bytes change.
ProjectionResult project(const std::filesystem::path& dataset, const DrMethod& method, const ProjectOptions& options);

/// Matrix file with provenance as labels, plus `<path>.meta`.
void write_projection(const ProjectionResult& result, const std::filesystem::path& path,
                      const KeyValues& extra = {});

struct RunMetadata {
    std::string method;
    std::uint64_t n_ref = 0;
    std::size_t n_batch = 0;
    std::uint64_t seed = 0;
    std::uint64_t rows = 0;
    double fit_seconds = 0;
    double total_seconds = 0;
    std::vector<double> batch_seconds;
    std::map<std::string, std::string> all;
};

RunMetadata read_run_metadata(const std::filesystem::path& projection_path);

std::filesystem::path metadata_path(const std::filesystem::path& projection_path);

/// One measured run for the runtime model fit + batch_time x batch_count.
struct TimingSample {
    std::uint64_t n_ref = 0;
    double fit_seconds = 0;
    std::vector<double> batch_seconds;
    std::vector<std::size_t> batch_sizes;
    double total_seconds = 0;
};

struct TimingRow {
    std::uint64_t n_ref;
    double fit_seconds;
    double oos_seconds;
    std::size_t oos_points;
    double per_point_seconds;
    double total_seconds;
    double accounted_fraction;  // (fit + sum of batches) / total
};

struct TimingReport {
    std::vector<TimingRow> rows;
    double slope = 0;  // per-point seconds per reference point
    double intercept = 0;
    double r_squared = 0;
    double per_point_ratio = 0;  // max / min over sizes
};

/// One CSV row per sample with aggregated OOS time, lossless on read-back.
std::string timing_csv_header();
std::string timing_csv_row(const TimingSample& s);
void write_timing_csv(const std::filesystem::path& path, std::span<const TimingSample> samples);
std::vector<TimingSample> read_timing_csv(const std::filesystem::path& path);

TimingReport timing_model_check(std::span<const TimingSample> samples);

}  // namespace oocdr
