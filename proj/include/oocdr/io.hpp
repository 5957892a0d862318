#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <vector>

#include "oocdr/types.hpp"

namespace oocdr {

inline constexpr std::array<char, 8> kMatrixMagic = {'O', 'O', 'C', 'D', 'R', '1', '\0', '\0'};
inline constexpr std::size_t kHeaderBytes = 24;

/// Fixed 24-byte little-endian header: magic, rows (u64), dims (u32),
/// has_labels (u8), 3 pad bytes. Payload follows as row-major f32, then
/// optional i32 labels.
struct MatrixHeader {
    std::uint64_t rows = 0;
    std::uint32_t dims = 0;
    bool has_labels = false;

    std::uint64_t payload_bytes() const { return rows * dims * 4; }
    std::uint64_t file_bytes() const {
        return kHeaderBytes + payload_bytes() + (has_labels ? rows * 4 : 0);
    }
    bool operator==(const MatrixHeader&) const = default;
};

MatrixHeader read_header(const std::filesystem::path& path);

/// Appends row blocks to a matrix file; the row count is patched into the
/// header on finish(). All blocks must agree on width and label presence.
class MatrixWriter {
public:
    MatrixWriter(const std::filesystem::path& path, std::uint32_t dims, bool has_labels);
    ~MatrixWriter();
    MatrixWriter(const MatrixWriter&) = delete;
    MatrixWriter& operator=(const MatrixWriter&) = delete;

    void append(const DataMatrixD& block);
    MatrixHeader finish();

private:
    std::filesystem::path path_;
    std::ofstream out_;
    Labels labels_;
    MatrixHeader header_;
    bool finished_ = false;
};

MatrixHeader write_matrix(const std::filesystem::path& path, const DataMatrixD& m);
DataMatrixD read_matrix(const std::filesystem::path& path);

/// Reads the given rows (strictly ascending) in one forward pass.
/// Label column only, without touching the payload.
std::optional<Labels> read_labels(const std::filesystem::path& path);

DataMatrixD read_rows(const std::filesystem::path& path, std::span<const std::uint64_t> rows);

struct Batch {
    DataMatrixD points;
    std::vector<std::uint64_t> rows;  // original row index of every point
    std::size_t id = 0;
};

/// Pull-based sequential reader over all rows not in `exclusion`.
class BatchStream {
public:
    BatchStream(const std::filesystem::path& path, std::size_t batch_size,
                std::vector<std::uint64_t> exclusion = {});

    std::optional<Batch> next();

    const MatrixHeader& header() const { return header_; }
    std::size_t batch_size() const { return batch_size_; }
    std::uint64_t remaining_rows() const;
    std::size_t batch_count() const;
    /// Largest number of scalar elements held by the stream's buffers.
    std::size_t peak_buffer_elements() const { return peak_elements_; }

private:
    std::ifstream in_;
    MatrixHeader header_;
    std::size_t batch_size_;
    std::vector<std::uint64_t> exclusion_;
    std::size_t excl_pos_ = 0;
    std::uint64_t cursor_ = 0;
    std::size_t next_id_ = 0;
    std::size_t peak_elements_ = 0;
    std::vector<float> buffer_;
};

/// Uniform sample of `n_ref` distinct indices from [0, rows), sorted ascending.
/// Skip-based reservoir sampling, so cost is independent of `rows` apart
/// from the logarithmic skip count.
std::vector<std::uint64_t> reservoir_indices(std::uint64_t rows, std::uint64_t n_ref,
                                             std::uint64_t seed);

struct ReferenceSample {
    DataMatrixD points;
    std::vector<std::uint64_t> rows;
};

ReferenceSample sample_reference(const std::filesystem::path& path, std::uint64_t n_ref,
                                 std::uint64_t seed);

enum class CsvLabels { none, last_column };

/// One-way CSV converter into the matrix format. A header row is detected
/// when any field of the first line is not numeric.
MatrixHeader import_csv(const std::filesystem::path& csv, const std::filesystem::path& out,
                        CsvLabels labels);

}  // namespace oocdr
