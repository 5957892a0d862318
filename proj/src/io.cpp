#include "oocdr/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <random>
#include <sstream>
#include <string>

namespace oocdr {
namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
T byteswap_if_big(T v) {
    if constexpr (std::endian::native == std::endian::big) {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    } else {
        return v;
    }
}

template <typename T>
void put_le(std::ostream& out, T v) {
    v = byteswap_if_big(v);
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get_le(const unsigned char* p) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return byteswap_if_big(v);
}

void write_header(std::ostream& out, const MatrixHeader& h) {
    out.write(kMatrixMagic.data(), kMatrixMagic.size());
    put_le<std::uint64_t>(out, h.rows);
    put_le<std::uint32_t>(out, h.dims);
    put_le<std::uint8_t>(out, h.has_labels ? 1 : 0);
    const char pad[3] = {0, 0, 0};
    out.write(pad, 3);
}

std::string where(const std::filesystem::path& p) { return " (" + p.string() + ")"; }

void read_exact(std::istream& in, void* dst, std::size_t bytes, const std::filesystem::path& p) {
    in.read(static_cast<char*>(dst), static_cast<std::streamsize>(bytes));
    if (static_cast<std::size_t>(in.gcount()) != bytes) throw IoError("short read" + where(p));
}

void decode_floats(std::span<float> v) {
    if constexpr (std::endian::native == std::endian::big) {
        for (auto& x : v) x = byteswap_if_big(x);
    }
}

void check_finite_row(const float* row, std::uint32_t dims, std::uint64_t r) {
    for (std::uint32_t c = 0; c < dims; ++c) {
        if (!std::isfinite(row[c])) {
            throw ValidationError("non-finite element at (" + std::to_string(r) + "," +
                                  std::to_string(c) + ")");
        }
    }
}

std::ifstream open_checked(const std::filesystem::path& path, MatrixHeader& header) {
    header = read_header(path);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open" + where(path));
    return in;
}

Labels read_labels_for(std::ifstream& in, const MatrixHeader& h, std::uint64_t first,
                       std::uint64_t count, const std::filesystem::path& path) {
    Labels out(count);
    in.seekg(static_cast<std::streamoff>(kHeaderBytes + h.payload_bytes() + first * 4));
    read_exact(in, out.data(), count * 4, path);
    if constexpr (std::endian::native == std::endian::big) {
        for (auto& l : out) l = byteswap_if_big(l);
    }
    return out;
}

}  // namespace

MatrixHeader read_header(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open" + where(path));
    std::array<unsigned char, kHeaderBytes> raw{};
    in.read(reinterpret_cast<char*>(raw.data()), raw.size());
    if (static_cast<std::size_t>(in.gcount()) != raw.size())
        throw IoError("corrupt header: file too short" + where(path));
    if (!std::equal(kMatrixMagic.begin(), kMatrixMagic.end(), reinterpret_cast<const char*>(raw.data())))
        throw IoError("corrupt header: bad magic" + where(path));
    MatrixHeader h;
    h.rows = get_le<std::uint64_t>(raw.data() + 8);
    h.dims = get_le<std::uint32_t>(raw.data() + 16);
    h.has_labels = raw[20] != 0;
    if (h.rows < 1 || h.dims < 1) throw IoError("corrupt header: empty matrix" + where(path));
    std::error_code ec;
    const auto size = std::filesystem::file_size(path, ec);
    if (ec || size != h.file_bytes())
        throw IoError("corrupt header: size mismatch, expected " + std::to_string(h.file_bytes()) +
                      " bytes" + where(path));
    return h;
}

MatrixWriter::MatrixWriter(const std::filesystem::path& path, std::uint32_t dims, bool has_labels)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IoError("cannot open for writing" + where(path));
    if (dims < 1) throw ValidationError("matrix must have at least one column");
    header_.dims = dims;
    header_.has_labels = has_labels;
    write_header(out_, header_);
}

MatrixWriter::~MatrixWriter() = default;

void MatrixWriter::append(const DataMatrixD& block) {
    if (finished_) throw Error("MatrixWriter: append after finish");
    if (block.dims() != static_cast<Index>(header_.dims))
        throw ValidationError("inconsistent row width: expected " + std::to_string(header_.dims) +
                              ", got " + std::to_string(block.dims()));
    if (block.labels.has_value() != header_.has_labels)
        throw ValidationError("label presence differs between blocks");
    if (block.labels && block.labels->size() != static_cast<std::size_t>(block.rows()))
        throw ValidationError("label count does not match row count");
    std::vector<float> buf(static_cast<std::size_t>(block.rows()) * header_.dims);
    for (Index r = 0; r < block.rows(); ++r) {
        for (Index c = 0; c < block.dims(); ++c) {
            const double v = block.data(r, c);
            if (!std::isfinite(v))
                throw ValidationError("non-finite element at (" + std::to_string(header_.rows + r) +
                                      "," + std::to_string(c) + ")");
            buf[static_cast<std::size_t>(r) * header_.dims + c] = byteswap_if_big(static_cast<float>(v));
        }
    }
    out_.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
    if (block.labels) labels_.insert(labels_.end(), block.labels->begin(), block.labels->end());
    header_.rows += static_cast<std::uint64_t>(block.rows());
    if (!out_) throw IoError("write failed" + where(path_));
}

MatrixHeader MatrixWriter::finish() {
    if (finished_) return header_;
    if (header_.rows < 1) throw ValidationError("matrix must have at least one row");
    for (auto l : labels_) put_le<std::int32_t>(out_, l);
    out_.seekp(0);
    write_header(out_, header_);
    out_.close();
    if (!out_) throw IoError("write failed" + where(path_));
    finished_ = true;
    return header_;
}

MatrixHeader write_matrix(const std::filesystem::path& path, const DataMatrixD& m) {
    MatrixWriter w(path, static_cast<std::uint32_t>(m.dims()), m.labels.has_value());
    w.append(m);
    return w.finish();
}

DataMatrixD read_matrix(const std::filesystem::path& path) {
    BatchStream s(path, static_cast<std::size_t>(read_header(path).rows));
    auto b = s.next();
    return std::move(b->points);
}

DataMatrixD read_rows(const std::filesystem::path& path, std::span<const std::uint64_t> rows) {
    MatrixHeader h;
    auto in = open_checked(path, h);
    DataMatrixD out;
    out.data.resize(static_cast<Index>(rows.size()), h.dims);
    std::vector<float> row(h.dims);
    std::uint64_t prev = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto r = rows[i];
        if (r >= h.rows) throw ValidationError("row index " + std::to_string(r) + " out of range");
        if (i > 0 && r <= prev) throw ValidationError("row indices must be strictly ascending");
        prev = r;
        in.seekg(static_cast<std::streamoff>(kHeaderBytes + r * h.dims * 4));
        read_exact(in, row.data(), row.size() * 4, path);
        decode_floats(row);
        check_finite_row(row.data(), h.dims, r);
        for (std::uint32_t c = 0; c < h.dims; ++c) out.data(static_cast<Index>(i), c) = row[c];
    }
    if (h.has_labels) {
        out.labels.emplace(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i)
            (*out.labels)[i] = read_labels_for(in, h, rows[i], 1, path)[0];
    }
    out.row_offset = rows.empty() ? 0 : rows.front();
    return out;
}

std::optional<Labels> read_labels(const std::filesystem::path& path) {
    MatrixHeader h;
    auto in = open_checked(path, h);
    if (!h.has_labels) return std::nullopt;
    return read_labels_for(in, h, 0, h.rows, path);
}

BatchStream::BatchStream(const std::filesystem::path& path, std::size_t batch_size,
                         std::vector<std::uint64_t> exclusion)
    : batch_size_(batch_size), exclusion_(std::move(exclusion)) {
    if (batch_size_ < 1) throw ValidationError("batch size must be at least 1");
    in_ = open_checked(path, header_);
    std::sort(exclusion_.begin(), exclusion_.end());
    exclusion_.erase(std::unique(exclusion_.begin(), exclusion_.end()), exclusion_.end());
    if (!exclusion_.empty() && exclusion_.back() >= header_.rows)
        throw ValidationError("exclusion index " + std::to_string(exclusion_.back()) +
                              " >= rows " + std::to_string(header_.rows));
}

std::uint64_t BatchStream::remaining_rows() const {
    const auto excluded_ahead = static_cast<std::uint64_t>(exclusion_.size() - excl_pos_);
    return header_.rows - cursor_ - excluded_ahead;
}

std::size_t BatchStream::batch_count() const {
    const auto rem = remaining_rows();
    return static_cast<std::size_t>((rem + batch_size_ - 1) / batch_size_);
}

std::optional<Batch> BatchStream::next() {
    const auto remaining = remaining_rows();
    if (remaining == 0) return std::nullopt;
    const auto n = static_cast<std::size_t>(std::min<std::uint64_t>(remaining, batch_size_));
    const auto dims = header_.dims;

    Batch b;
    b.id = next_id_++;
    b.points.data.resize(static_cast<Index>(n), dims);
    b.rows.reserve(n);

    std::size_t filled = 0;
    while (filled < n) {
        while (excl_pos_ < exclusion_.size() && exclusion_[excl_pos_] == cursor_) {
            ++cursor_;
            ++excl_pos_;
        }
        std::uint64_t run_end = excl_pos_ < exclusion_.size() ? exclusion_[excl_pos_] : header_.rows;
        const auto run = static_cast<std::size_t>(std::min<std::uint64_t>(run_end - cursor_, n - filled));
        buffer_.resize(run * dims);
        in_.seekg(static_cast<std::streamoff>(kHeaderBytes + cursor_ * dims * 4));
        read_exact(in_, buffer_.data(), buffer_.size() * 4, "batch stream");
        decode_floats(buffer_);
        for (std::size_t i = 0; i < run; ++i) {
            check_finite_row(buffer_.data() + i * dims, dims, cursor_ + i);
            for (std::uint32_t c = 0; c < dims; ++c)
                b.points.data(static_cast<Index>(filled + i), c) = buffer_[i * dims + c];
            b.rows.push_back(cursor_ + i);
        }
        filled += run;
        cursor_ += run;
    }
    peak_elements_ = std::max(peak_elements_, buffer_.capacity() + n * dims);

    if (header_.has_labels) {
        b.points.labels.emplace();
        b.points.labels->reserve(n);
        // Labels for contiguous runs are read together.
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i + 1;
            while (j < n && b.rows[j] == b.rows[j - 1] + 1) ++j;
            auto part = read_labels_for(in_, header_, b.rows[i], j - i, "batch stream");
            b.points.labels->insert(b.points.labels->end(), part.begin(), part.end());
            i = j;
        }
    }
    b.points.row_offset = b.rows.front();
    return b;
}

namespace {

// Uniform double in the open interval (0, 1), independent of the standard
// library's distribution implementations.
double open_unit(std::mt19937_64& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

std::vector<std::uint64_t> reservoir_indices(std::uint64_t rows, std::uint64_t n_ref,
                                             std::uint64_t seed) {
    if (n_ref < 1) throw ValidationError("reference size must be at least 1");
    if (n_ref > rows)
        throw ValidationError("reference size " + std::to_string(n_ref) + " exceeds row count " +
                              std::to_string(rows));
    std::vector<std::uint64_t> reservoir(n_ref);
    for (std::uint64_t i = 0; i < n_ref; ++i) reservoir[i] = i;
    if (n_ref < rows) {
        std::mt19937_64 rng(seed);
        const double k = static_cast<double>(n_ref);
        double w = std::exp(std::log(open_unit(rng)) / k);
        std::uint64_t i = n_ref - 1;
        while (true) {
            const double skip = std::floor(std::log(open_unit(rng)) / std::log1p(-w));
            if (!(skip < static_cast<double>(rows - i))) break;
            i += static_cast<std::uint64_t>(skip) + 1;
            if (i >= rows) break;
            reservoir[rng() % n_ref] = i;
            w *= std::exp(std::log(open_unit(rng)) / k);
        }
    }
    std::sort(reservoir.begin(), reservoir.end());
    return reservoir;
}

ReferenceSample sample_reference(const std::filesystem::path& path, std::uint64_t n_ref,
                                 std::uint64_t seed) {
    const auto h = read_header(path);
    ReferenceSample s;
    s.rows = reservoir_indices(h.rows, n_ref, seed);
    s.points = read_rows(path, s.rows);
    return s;
}

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        auto f = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
        while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
        while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
        out.push_back(f);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::optional<double> parse_number(std::string_view f) {
    double v = 0;
    if (!f.empty() && f.front() == '+') f.remove_prefix(1);
    auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (ec != std::errc{} || p != f.data() + f.size() || f.empty()) return std::nullopt;
    return v;
}

}  // namespace

MatrixHeader import_csv(const std::filesystem::path& csv, const std::filesystem::path& out,
                        CsvLabels labels) {
    std::ifstream in(csv);
    if (!in) throw IoError("cannot open" + where(csv));
    std::optional<MatrixWriter> writer;
    std::string line;
    std::uint64_t line_no = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv(line);
        std::vector<double> values;
        values.reserve(fields.size());
        bool numeric = true;
        for (auto f : fields) {
            auto v = parse_number(f);
            if (!v) {
                numeric = false;
                break;
            }
            values.push_back(*v);
        }
        if (!numeric) {
            if (!writer && line_no == 1) continue;  // header row
            throw ValidationError("non-numeric field on line " + std::to_string(line_no));
        }
        const bool has_label = labels == CsvLabels::last_column;
        if (!writer) {
            width = values.size();
            if (has_label && width < 2) throw ValidationError("label column needs at least one feature");
            writer.emplace(out, static_cast<std::uint32_t>(width - (has_label ? 1 : 0)), has_label);
        }
        if (values.size() != width)
            throw ValidationError("inconsistent row width on line " + std::to_string(line_no));
        DataMatrixD row;
        const auto dims = static_cast<Index>(width - (has_label ? 1 : 0));
        row.data.resize(1, dims);
        for (Index c = 0; c < dims; ++c) row.data(0, c) = values[static_cast<std::size_t>(c)];
        if (has_label) {
            const double l = values.back();
            if (l != std::floor(l)) throw ValidationError("label is not an integer on line " + std::to_string(line_no));
            row.labels = Labels{static_cast<std::int32_t>(l)};
        }
        writer->append(row);
    }
    if (!writer) throw ValidationError("CSV contains no data rows" + where(csv));
    return writer->finish();
}

}  // namespace oocdr
