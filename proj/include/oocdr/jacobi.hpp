#pragma once

#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Core>

#include "oocdr/types.hpp"

namespace oocdr {

template <typename Scalar>
struct SymmetricEigen {
    Vector<Scalar> values;      // descending
    ColMatrix<Scalar> vectors;  // column j pairs with values(j)
    int sweeps = 0;
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Throws when the
/// off-diagonal mass has not vanished after `max_sweeps` full sweeps.
template <typename Derived>
SymmetricEigen<typename Derived::Scalar> jacobi_eigen(const Eigen::MatrixBase<Derived>& input,
                                                      int max_sweeps = 50) {
    using Scalar = typename Derived::Scalar;
    const Index n = input.rows();
    if (input.cols() != n) throw ValidationError("jacobi_eigen: matrix must be square");

    ColMatrix<Scalar> a = input;
    ColMatrix<Scalar> v = ColMatrix<Scalar>::Identity(n, n);
    const Scalar eps = std::numeric_limits<Scalar>::epsilon();
    const Scalar scale = a.norm();

    auto off_diagonal = [&] {
        Scalar s = 0;
        for (Index q = 0; q < n; ++q)
            for (Index p = 0; p < q; ++p) s += a(p, q) * a(p, q);
        return std::sqrt(2 * s);
    };

    int sweep = 0;
    for (; sweep <= max_sweeps; ++sweep) {
        if (off_diagonal() <= eps * scale) break;
        if (sweep == max_sweeps) throw Error("jacobi_eigen: no convergence after " + std::to_string(max_sweeps) + " sweeps");
        for (Index p = 0; p + 1 < n; ++p) {
            for (Index q = p + 1; q < n; ++q) {
                const Scalar apq = a(p, q);
                if (apq == Scalar(0)) continue;
                const Scalar theta = (a(q, q) - a(p, p)) / (2 * apq);
                const Scalar t = (theta >= 0 ? Scalar(1) : Scalar(-1)) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1));
                const Scalar c = 1 / std::sqrt(t * t + 1);
                const Scalar s = t * c;
                for (Index k = 0; k < n; ++k) {
                    const Scalar akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Index k = 0; k < n; ++k) {
                    const Scalar apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = a(q, p) = 0;
                for (Index k = 0; k < n; ++k) {
                    const Scalar vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index i, Index j) { return a(i, i) > a(j, j); });

    SymmetricEigen<Scalar> out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (Index j = 0; j < n; ++j) {
        out.values(j) = a(order[j], order[j]);
        out.vectors.col(j) = v.col(order[j]);
    }
    out.sweeps = sweep;
    return out;
}

}  // namespace oocdr
