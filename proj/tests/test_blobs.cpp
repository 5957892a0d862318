#include <cmath>

#include "doctest.h"
#include "oocdr/blobs.hpp"
#include "test_support.hpp"

using namespace oocdr;

TEST_CASE("round-robin labels give equal cluster sizes") {
    const auto m = generate_blobs({4000, 8, 4, 1.0, 11});
    std::array<int, 4> counts{};
    for (auto l : *m.labels) ++counts[static_cast<std::size_t>(l)];
    CHECK(counts == std::array<int, 4>{1000, 1000, 1000, 1000});
    CHECK((*m.labels)[5] == 1);
}

TEST_CASE("vanishing noise collapses onto the single center") {
    const SyntheticSpec spec{50, 3, 1, 1e-12, 2};
    BlobGenerator gen(spec);
    const auto center = gen.centers().row(0).eval();
    CHECK(center.cwiseAbs().maxCoeff() <= 10.0);
    const auto m = gen.next(spec.n);
    for (Index i = 0; i < m.rows(); ++i) CHECK((m.data.row(i) - center).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("cluster means converge to their centers") {
    const SyntheticSpec spec{100'000, 4, 4, 2.0, 3};
    BlobGenerator gen(spec);
    const RowMatrix<double> centers = gen.centers();
    const auto m = gen.next(spec.n);
    RowMatrix<double> sums = RowMatrix<double>::Zero(4, 4);
    for (Index i = 0; i < m.rows(); ++i) sums.row((*m.labels)[static_cast<std::size_t>(i)]) += m.data.row(i);
    const double per = spec.n / 4.0;
    const double tol = 5 * spec.cluster_std / std::sqrt(per);
    CHECK(((sums / per) - centers).cwiseAbs().maxCoeff() < tol);
}

TEST_CASE("chunked generation matches one-shot generation and is seeded") {
    const SyntheticSpec spec{1001, 5, 3, 0.7, 42};
    const auto whole = generate_blobs(spec);
    BlobGenerator gen(spec);
    RowMatrix<double> stitched(1001, 5);
    Index at = 0;
    while (gen.produced() < spec.n) {
        const auto part = gen.next(97);
        stitched.middleRows(at, part.rows()) = part.data;
        at += part.rows();
    }
    CHECK(stitched == whole.data);
    CHECK(generate_blobs(spec).data == whole.data);
    auto other = spec;
    other.seed = 43;
    CHECK(generate_blobs(other).data != whole.data);
}

TEST_CASE("spec validation") {
    CHECK_THROWS_AS(generate_blobs({3, 2, 4, 1.0, 0}), ValidationError);
    CHECK_THROWS_AS(generate_blobs({10, 2, 2, 0.0, 0}), ValidationError);
    CHECK_THROWS_AS(generate_blobs({10, 0, 2, 1.0, 0}), ValidationError);
}
