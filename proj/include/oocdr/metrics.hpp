#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "oocdr/distance.hpp"
#include "oocdr/keyvalue.hpp"
#include "oocdr/types.hpp"

namespace oocdr {

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0;
    double comp_ = 0;
};

namespace detail {

inline void check_pair(Index nx, Index ny, Index block) {
    if (nx != ny) throw ValidationError("metric inputs differ in row count: " + std::to_string(nx) + " vs " + std::to_string(ny));
    if (nx < 2) throw ValidationError("metrics need at least 2 points");
    if (block < 1) throw ValidationError("metric block size must be at least 1");
}

// Column-major copy of rows [begin, end) so per-coordinate passes run over
// contiguous memory.
template <typename Derived>
Eigen::MatrixXd column_tile(const Eigen::MatrixBase<Derived>& points, Index begin, Index end) {
    return points.middleRows(begin, end - begin).template cast<double>();
}

// out(j) = |x - tile.row(j)|^2, coordinates accumulated in ascending order.
template <typename Row>
void tile_squared_distances(const Eigen::MatrixXd& tile, const Row& x, Eigen::ArrayXd& out) {
    out.setZero(tile.rows());
    for (Index c = 0; c < tile.cols(); ++c) out += (tile.col(c).array() - static_cast<double>(x(c))).square();
}

// Calls visit(i, j, dx2, dy2) for every pair i < j, tile by tile.
template <typename DX, typename DY, typename Visit>
void for_each_pair_tiled(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y, Index block, Visit&& visit) {
    const Index n = x.rows();
    Eigen::ArrayXd dx, dy;
    for (Index j0 = 0; j0 < n; j0 += block) {
        const Index j1 = std::min(n, j0 + block);
        const auto tx = column_tile(x, j0, j1);
        const auto ty = column_tile(y, j0, j1);
        for (Index i = 0; i < j1 - 1; ++i) {
            tile_squared_distances(tx, x.row(i), dx);
            tile_squared_distances(ty, y.row(i), dy);
            for (Index jj = std::max<Index>(0, i + 1 - j0); jj < j1 - j0; ++jj) visit(i, j0 + jj, dx(jj), dy(jj));
        }
    }
}

// For each row block: k nearest neighbors (self excluded) in both spaces.
template <typename DX, typename DY, typename Consume>
void for_each_knn_block(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y, Index k, Index block,
                        Consume&& consume) {
    const Index n = x.rows();
    std::vector<NeighborHeap> hx, hy;
    Eigen::ArrayXd dx, dy;
    for (Index i0 = 0; i0 < n; i0 += block) {
        const Index i1 = std::min(n, i0 + block);
        hx.assign(static_cast<std::size_t>(i1 - i0), NeighborHeap(k));
        hy.assign(static_cast<std::size_t>(i1 - i0), NeighborHeap(k));
        for (Index j0 = 0; j0 < n; j0 += block) {
            const Index j1 = std::min(n, j0 + block);
            const auto tx = column_tile(x, j0, j1);
            const auto ty = column_tile(y, j0, j1);
            for (Index i = i0; i < i1; ++i) {
                tile_squared_distances(tx, x.row(i), dx);
                tile_squared_distances(ty, y.row(i), dy);
                auto& a = hx[static_cast<std::size_t>(i - i0)];
                auto& b = hy[static_cast<std::size_t>(i - i0)];
                for (Index jj = 0; jj < j1 - j0; ++jj) {
                    if (j0 + jj == i) continue;
                    a.offer(dx(jj), j0 + jj);
                    b.offer(dy(jj), j0 + jj);
                }
            }
        }
        consume(i0, i1, hx, hy);
    }
}

}  // namespace detail

/// Normalized stress sqrt(sum (d_ij - |y_i - y_j|)^2 / sum d_ij^2) over all
/// pairs, evaluated tile by tile.
template <typename DX, typename DY>
double stress(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y, Index block = 1024) {
    detail::check_pair(x.rows(), y.rows(), block);
    CompensatedSum num, den;
    detail::for_each_pair_tiled(x, y, block, [&](Index, Index, double dx2, double dy2) {
        const double t = std::sqrt(dx2) - std::sqrt(dy2);
        num.add(t * t);
        den.add(dx2);
    });
    if (den.value() == 0) throw ValidationError("stress undefined: all high-dimensional points coincide");
    return std::sqrt(num.value() / den.value());
}

/// Pearson correlation of the paired high/low pairwise-distance vectors,
/// from five compensated sufficient statistics in one pass.
template <typename DX, typename DY>
double pearson_distance_correlation(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y,
                                    Index block = 1024) {
    detail::check_pair(x.rows(), y.rows(), block);
    CompensatedSum sa, sb, saa, sbb, sab;
    double count = 0;
    detail::for_each_pair_tiled(x, y, block, [&](Index, Index, double dx2, double dy2) {
        const double a = std::sqrt(dx2), b = std::sqrt(dy2);
        sa.add(a);
        sb.add(b);
        saa.add(a * a);
        sbb.add(b * b);
        sab.add(a * b);
        count += 1;
    });
    const double va = count * saa.value() - sa.value() * sa.value();
    const double vb = count * sbb.value() - sb.value() * sb.value();
    if (!(va > 0) || !(vb > 0)) throw ValidationError("pearson undefined: a distance vector has zero variance");
    const double r = (count * sab.value() - sa.value() * sb.value()) / std::sqrt(va * vb);
    return std::clamp(r, -1.0, 1.0);
}

/// Mean fraction of shared k-nearest neighbors between the two spaces.
template <typename DX, typename DY>
double knn_precision(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y, Index k, Index block = 1024) {
    detail::check_pair(x.rows(), y.rows(), block);
    const Index n = x.rows();
    if (k < 1 || k >= n) throw ValidationError("knn precision needs 1 <= k < n (k=" + std::to_string(k) + ", n=" + std::to_string(n) + ")");
    CompensatedSum total;
    std::vector<Index> a, b;
    detail::for_each_knn_block(x, y, k, block, [&](Index i0, Index i1, auto& hx, auto& hy) {
        for (Index i = i0; i < i1; ++i) {
            a.clear();
            b.clear();
            for (const auto& nb : hx[static_cast<std::size_t>(i - i0)].sorted()) a.push_back(nb.index);
            for (const auto& nb : hy[static_cast<std::size_t>(i - i0)].sorted()) b.push_back(nb.index);
            std::sort(a.begin(), a.end());
            std::sort(b.begin(), b.end());
            std::vector<Index> common;
            std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
            total.add(static_cast<double>(common.size()) / static_cast<double>(k));
        }
    });
    return total.value() / static_cast<double>(n);
}

/// Trustworthiness with r(i, j) the rank of j among i's high-dimensional
/// neighbors (1 = nearest, ties by ascending index), summed over the
/// low-dimensional k-neighbors of i that are not high-dimensional ones.
template <typename DX, typename DY>
double trustworthiness(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y, Index k, Index block = 1024) {
    detail::check_pair(x.rows(), y.rows(), block);
    const Index n = x.rows();
    if (k < 1 || 2 * k >= n)
        throw ValidationError("trustworthiness needs 1 <= k < n/2 (k=" + std::to_string(k) + ", n=" + std::to_string(n) + ")");

    CompensatedSum penalty;
    // Per row: intruder keys sorted ascending, and a difference array whose
    // prefix sums give how many points rank ahead of each intruder.
    struct RowIntruders {
        Index row;
        std::vector<Neighbor> targets;
        std::vector<Index> ahead;
    };
    std::vector<RowIntruders> rows;
    std::vector<Index> high;
    Eigen::ArrayXd dx;
    detail::for_each_knn_block(x, y, k, block, [&](Index i0, Index i1, auto& hx, auto& hy) {
        rows.clear();
        for (Index i = i0; i < i1; ++i) {
            high.clear();
            for (const auto& nb : hx[static_cast<std::size_t>(i - i0)].sorted()) high.push_back(nb.index);
            std::sort(high.begin(), high.end());
            RowIntruders r{i, {}, {}};
            for (const auto& nb : hy[static_cast<std::size_t>(i - i0)].sorted())
                if (!std::binary_search(high.begin(), high.end(), nb.index))
                    r.targets.push_back({squared_distance(x.row(i), x.row(nb.index)), nb.index});
            if (r.targets.empty()) continue;
            std::sort(r.targets.begin(), r.targets.end());
            r.ahead.assign(r.targets.size() + 1, 0);
            rows.push_back(std::move(r));
        }
        if (rows.empty()) return;
        for (Index j0 = 0; j0 < n; j0 += block) {
            const Index j1 = std::min(n, j0 + block);
            const auto tx = detail::column_tile(x, j0, j1);
            for (auto& r : rows) {
                detail::tile_squared_distances(tx, x.row(r.row), dx);
                const Neighbor last = r.targets.back();
                for (Index jj = 0; jj < j1 - j0; ++jj) {
                    const Index l = j0 + jj;
                    const Neighbor key{dx(jj), l};
                    if (l == r.row || !(key < last)) continue;
                    const auto p = std::upper_bound(r.targets.begin(), r.targets.end(), key) - r.targets.begin();
                    ++r.ahead[static_cast<std::size_t>(p)];
                }
            }
        }
        for (const auto& r : rows) {
            Index ahead = 0;
            for (std::size_t t = 0; t < r.targets.size(); ++t) {
                ahead += r.ahead[t];
                penalty.add(static_cast<double>(ahead + 1 - k));
            }
        }
    });
    const double nn = static_cast<double>(n), kk = static_cast<double>(k);
    return 1.0 - 2.0 / (nn * kk * (2.0 * nn - 3.0 * kk - 1.0)) * penalty.value();
}

// ---- file-level evaluation -------------------------------------------------

enum class MetricScope { all, reference, oos };

struct MetricParams {
    Index k = 100;
    Index block = 1024;
    std::vector<std::string> metrics{"stress", "pearson", "knn", "trust"};
    MetricScope scope = MetricScope::all;
};

struct MetricValue {
    std::string name;
    double value = 0;
    double seconds = 0;
};

struct MetricReport {
    std::vector<MetricValue> values;
    Index k = 0;
    Index block = 0;
    Index n = 0;
    MetricScope scope = MetricScope::all;

    const MetricValue* find(const std::string& name) const;
    KeyValues key_values() const;
    std::string csv_header() const;
    std::string csv_row() const;
};

std::string scope_name(MetricScope s);
MetricScope parse_scope(const std::string& s);

/// Runs the selected metrics on in-memory data (rows aligned).
MetricReport evaluate_matrices(const RowMatrix<double>& x, const RowMatrix<double>& y, const MetricParams& params);

/// Loads a projection file and its source dataset, selects rows by scope
/// through the provenance column and evaluates them.
MetricReport evaluate(const std::filesystem::path& projection, const std::filesystem::path& dataset,
                      const MetricParams& params);

}  // namespace oocdr
