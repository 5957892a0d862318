#pragma once

#include <cstdint>
#include <filesystem>
#include <random>

#include "oocdr/io.hpp"
#include "oocdr/types.hpp"

namespace oocdr {

struct SyntheticSpec {
    std::uint64_t n = 0;
    std::uint32_t d = 0;
    std::uint32_t k_clusters = 4;
    double cluster_std = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Isotropic Gaussian blobs. Centers are uniform in [-10, 10]^d; point i
/// belongs to cluster i mod k. Chunks are produced in row order from a
/// single engine, so any chunking yields the same rows.
class BlobGenerator {
public:
    explicit BlobGenerator(const SyntheticSpec& spec);

    /// Next `count` rows (fewer at the end, empty when exhausted).
    DataMatrixD next(std::uint64_t count);
    const RowMatrix<double>& centers() const { return centers_; }
    std::uint64_t produced() const { return produced_; }

private:
    SyntheticSpec spec_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> noise_;
    RowMatrix<double> centers_;
    std::uint64_t produced_ = 0;
};

DataMatrixD generate_blobs(const SyntheticSpec& spec);

/// Streams the generated rows to disk in fixed-size chunks.
MatrixHeader write_blobs(const std::filesystem::path& path, const SyntheticSpec& spec,
                         std::uint64_t chunk_rows = 65536);

}  // namespace oocdr
