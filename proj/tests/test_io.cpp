#include <malloc.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "doctest.h"
#include "oocdr/blobs.hpp"
#include "oocdr/io.hpp"
#include "test_support.hpp"

using namespace oocdr;

namespace {

DataMatrixD small_matrix() {
    DataMatrixD m;
    m.data.resize(3, 2);
    m.data << 1, 2, 3, 4, 5, 6;
    return m;
}

DataMatrixD counting_matrix(Index rows, Index dims, bool labels = true) {
    DataMatrixD m;
    m.data.resize(rows, dims);
    for (Index i = 0; i < rows; ++i)
        for (Index c = 0; c < dims; ++c) m.data(i, c) = static_cast<double>(i * dims + c);
    if (labels) {
        m.labels.emplace(static_cast<std::size_t>(rows));
        std::iota(m.labels->begin(), m.labels->end(), 100);
    }
    return m;
}

std::vector<std::size_t> batch_sizes(BatchStream& s, std::vector<std::uint64_t>* rows = nullptr) {
    std::vector<std::size_t> out;
    while (auto b = s.next()) {
        out.push_back(b->rows.size());
        if (rows) rows->insert(rows->end(), b->rows.begin(), b->rows.end());
    }
    return out;
}

}  // namespace

TEST_CASE("write_matrix produces header plus payload") {
    test::TempDir dir("io");
    const auto h = write_matrix(dir / "m.mat", small_matrix());
    CHECK(h.rows == 3);
    CHECK(h.dims == 2);
    CHECK_FALSE(h.has_labels);
    CHECK(std::filesystem::file_size(dir / "m.mat") == kHeaderBytes + 24);

    std::ifstream in(dir / "m.mat", std::ios::binary);
    std::array<unsigned char, kHeaderBytes> raw{};
    in.read(reinterpret_cast<char*>(raw.data()), raw.size());
    CHECK(std::equal(kMatrixMagic.begin(), kMatrixMagic.end(), reinterpret_cast<const char*>(raw.data())));
    CHECK(raw[8] == 3);  // rows, little-endian
    CHECK(raw[16] == 2);
    CHECK(raw[20] == 0);
    float first = 0;
    in.read(reinterpret_cast<char*>(&first), 4);
    CHECK(first == 1.0f);
}

TEST_CASE("write then read round-trips every element") {
    test::TempDir dir("io");
    const auto m = counting_matrix(17, 3);
    write_matrix(dir / "m.mat", m);
    const auto back = read_matrix(dir / "m.mat");
    CHECK(back.data == m.data);
    REQUIRE(back.labels.has_value());
    CHECK(*back.labels == *m.labels);
}

TEST_CASE("non-finite elements are rejected with their position") {
    test::TempDir dir("io");
    auto m = small_matrix();
    m.data(1, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_WITH_AS(write_matrix(dir / "m.mat", m), "non-finite element at (1,0)", ValidationError);
}

TEST_CASE("writer rejects inconsistent widths") {
    test::TempDir dir("io");
    MatrixWriter w(dir / "m.mat", 2, false);
    w.append(small_matrix());
    DataMatrixD wide;
    wide.data = RowMatrix<double>::Zero(1, 3);
    CHECK_THROWS_AS(w.append(wide), ValidationError);
}

TEST_CASE("corrupt headers are detected") {
    test::TempDir dir("io");
    write_matrix(dir / "m.mat", small_matrix());
    SUBCASE("bad magic") {
        std::fstream f(dir / "m.mat", std::ios::binary | std::ios::in | std::ios::out);
        f.put('X');
        f.close();
        CHECK_THROWS_WITH_AS(read_header(dir / "m.mat"), doctest::Contains("bad magic"), IoError);
    }
    SUBCASE("size mismatch") {
        std::filesystem::resize_file(dir / "m.mat", kHeaderBytes + 20);
        CHECK_THROWS_WITH_AS(BatchStream(dir / "m.mat", 2), doctest::Contains("size mismatch"), IoError);
    }
}

TEST_CASE("stream_batches follows ceiling division and exclusions") {
    test::TempDir dir("io");
    write_matrix(dir / "m.mat", counting_matrix(10, 2));

    SUBCASE("no exclusion") {
        BatchStream s(dir / "m.mat", 4);
        CHECK(s.batch_count() == 3);
        CHECK(batch_sizes(s) == std::vector<std::size_t>{4, 4, 2});
    }
    SUBCASE("excluding rows 0 and 5") {
        BatchStream s(dir / "m.mat", 4, {5, 0});
        std::vector<std::uint64_t> rows;
        CHECK(batch_sizes(s, &rows) == std::vector<std::size_t>{4, 4});
        CHECK(rows == std::vector<std::uint64_t>{1, 2, 3, 4, 6, 7, 8, 9});
    }
    SUBCASE("batch larger than file") {
        BatchStream s(dir / "m.mat", 100);
        CHECK(batch_sizes(s) == std::vector<std::size_t>{10});
    }
    SUBCASE("batch content and labels follow the source rows") {
        BatchStream s(dir / "m.mat", 3, {1});
        auto b = s.next();
        REQUIRE(b);
        CHECK(b->rows == std::vector<std::uint64_t>{0, 2, 3});
        CHECK(b->points.data(1, 0) == 4.0);
        CHECK(*b->points.labels == Labels{100, 102, 103});
    }
    SUBCASE("exclusion out of range") {
        CHECK_THROWS_AS(BatchStream(dir / "m.mat", 4, {10}), ValidationError);
    }
    SUBCASE("zero batch size") {
        CHECK_THROWS_AS(BatchStream(dir / "m.mat", 0), ValidationError);
    }
}

TEST_CASE("sample_reference contracts") {
    test::TempDir dir("io");
    write_matrix(dir / "m.mat", counting_matrix(50, 2));

    SUBCASE("whole file when n_ref equals rows") {
        const auto s = sample_reference(dir / "m.mat", 50, 3);
        std::vector<std::uint64_t> all(50);
        std::iota(all.begin(), all.end(), 0);
        CHECK(s.rows == all);
        CHECK(s.points.data == counting_matrix(50, 2).data);
    }
    SUBCASE("deterministic per seed, distinct and sorted") {
        const auto a = sample_reference(dir / "m.mat", 12, 99);
        const auto b = sample_reference(dir / "m.mat", 12, 99);
        CHECK(a.rows == b.rows);
        CHECK(std::is_sorted(a.rows.begin(), a.rows.end()));
        CHECK(std::adjacent_find(a.rows.begin(), a.rows.end()) == a.rows.end());
        for (std::size_t i = 0; i < a.rows.size(); ++i)
            CHECK(a.points.data(static_cast<Index>(i), 0) == static_cast<double>(a.rows[i] * 2));
        CHECK(sample_reference(dir / "m.mat", 12, 100).rows != a.rows);
    }
    SUBCASE("too large") {
        CHECK_THROWS_AS(sample_reference(dir / "m.mat", 51, 1), ValidationError);
    }
}

TEST_CASE("reservoir sampling is uniform over indices (chi-square, 1000 seeds)") {
    constexpr std::uint64_t rows = 1'000'000, n_ref = 4096;
    constexpr int bins = 100;
    std::vector<double> counts(bins, 0.0);
    for (std::uint64_t seed = 0; seed < 1000; ++seed)
        for (auto r : reservoir_indices(rows, n_ref, seed)) counts[r * bins / rows] += 1;
    const double expected = 1000.0 * n_ref / bins;
    double chi2 = 0;
    for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
    // 99th percentile of chi-square with 99 degrees of freedom (scipy.stats.chi2.ppf).
    CHECK(chi2 < 134.64161685578915);
}

TEST_CASE("streaming identity: reference plus batches rebuilds the file") {
    test::TempDir dir("io");
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
        std::mt19937_64 rng(trial);
        const Index rows = 1 + static_cast<Index>(rng() % 200);
        const auto n_ref = 1 + rng() % static_cast<std::uint64_t>(rows);
        const auto n_batch = 1 + rng() % 50;
        const auto m = counting_matrix(rows, 3);
        write_matrix(dir / "m.mat", m);

        const auto ref = sample_reference(dir / "m.mat", n_ref, trial);
        RowMatrix<double> rebuilt = RowMatrix<double>::Constant(rows, 3, -1);
        std::vector<int> seen(static_cast<std::size_t>(rows), 0);
        for (std::size_t i = 0; i < ref.rows.size(); ++i) {
            rebuilt.row(static_cast<Index>(ref.rows[i])) = ref.points.data.row(static_cast<Index>(i));
            ++seen[ref.rows[i]];
        }
        BatchStream s(dir / "m.mat", n_batch, ref.rows);
        std::uint64_t last = 0;
        bool first = true;
        while (auto b = s.next()) {
            CHECK((b->rows.size() == n_batch || s.remaining_rows() == 0));
            for (std::size_t i = 0; i < b->rows.size(); ++i) {
                CHECK((first || b->rows[i] > last));
                first = false;
                last = b->rows[i];
                rebuilt.row(static_cast<Index>(b->rows[i])) = b->points.data.row(static_cast<Index>(i));
                ++seen[b->rows[i]];
            }
        }
        CHECK(rebuilt == m.data);
        CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
    }
}

TEST_CASE("streaming memory stays proportional to the batch") {
    test::TempDir dir("io");
    SyntheticSpec spec{200'000, 16, 4, 1.0, 5};
    write_blobs(dir / "big.mat", spec, 4096);
    constexpr std::size_t batch = 1000;
    const std::size_t bound_elements = 4 * batch * 16;

    const auto before = mallinfo2();
    std::size_t peak_in_use = 0;
    std::size_t rows = 0;
    {
        BatchStream s(dir / "big.mat", batch);
        while (auto b = s.next()) {
            rows += b->rows.size();
            const auto now = mallinfo2();
            peak_in_use = std::max(peak_in_use, (now.uordblks + now.hblkhd) - (before.uordblks + before.hblkhd));
        }
        CHECK(s.peak_buffer_elements() <= bound_elements);
    }
    CHECK(rows == spec.n);
    // Whole file would be 200k x 16 doubles = 25.6 MB; batches are ~128 KB.
    CHECK(peak_in_use < bound_elements * sizeof(double) + (1u << 20));
}

TEST_CASE("CSV import detects headers and label columns") {
    test::TempDir dir("io");
    {
        std::ofstream f(dir / "a.csv");
        f << "x,y,label\n1.5,2,0\n3,4.25,1\n-1e-3,6,2\n";
    }
    const auto h = import_csv(dir / "a.csv", dir / "a.mat", CsvLabels::last_column);
    CHECK(h.rows == 3);
    CHECK(h.dims == 2);
    const auto m = read_matrix(dir / "a.mat");
    CHECK(m.data(0, 0) == 1.5);
    CHECK(m.data(2, 0) == doctest::Approx(-1e-3f));
    CHECK(*m.labels == Labels{0, 1, 2});

    {
        std::ofstream f(dir / "b.csv");
        f << "1,2,3\n4,5,6\n";
    }
    const auto hb = import_csv(dir / "b.csv", dir / "b.mat", CsvLabels::none);
    CHECK(hb.rows == 2);
    CHECK(hb.dims == 3);

    {
        std::ofstream f(dir / "c.csv");
        f << "1,2\n4\n";
    }
    CHECK_THROWS_AS(import_csv(dir / "c.csv", dir / "c.mat", CsvLabels::none), ValidationError);
}
