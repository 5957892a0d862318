#pragma once

#include <cmath>

#include <Eigen/Core>

#include "oocdr/jacobi.hpp"
#include "oocdr/parallel.hpp"
#include "oocdr/types.hpp"

namespace oocdr {

/// Learned PCA parameters: reference mean and the top-m principal axes.
template <typename Scalar>
struct PcaModel {
    Vector<Scalar> mean;
    ColMatrix<Scalar> components;  // d x m, orthonormal columns
    Vector<Scalar> eigenvalues;    // m, descending, non-negative
};

template <typename Scalar>
struct PcaFit {
    RowMatrix<Scalar> embedding;
    PcaModel<Scalar> model;
};

namespace detail {

// y = (x - mean) V with a fixed summation order, so a row projects to the
// same bits whether it arrives alone or inside a batch.
template <typename Scalar, typename Row, typename Out>
void pca_project_row(const PcaModel<Scalar>& model, const Row& x, Out&& y, Vector<Scalar>& centered) {
    const Index d = model.mean.size();
    for (Index c = 0; c < d; ++c) centered(c) = static_cast<Scalar>(x(c)) - model.mean(c);
    for (Index j = 0; j < model.components.cols(); ++j) {
        Scalar s = 0;
        for (Index c = 0; c < d; ++c) s += centered(c) * model.components(c, j);
        y(j) = s;
    }
}

}  // namespace detail

template <typename Scalar, typename Derived>
RowMatrix<Scalar> pca_transform(const PcaModel<Scalar>& model, const Eigen::MatrixBase<Derived>& points,
                                int threads = 1) {
    if (points.cols() != model.mean.size())
        throw ValidationError("pca_transform: expected " + std::to_string(model.mean.size()) +
                              " columns, got " + std::to_string(points.cols()));
    RowMatrix<Scalar> out(points.rows(), model.components.cols());
    parallel_for(static_cast<std::size_t>(points.rows()), threads, [&](std::size_t b, std::size_t e) {
        Vector<Scalar> centered(model.mean.size());
        for (auto i = static_cast<Index>(b); i < static_cast<Index>(e); ++i)
            detail::pca_project_row(model, points.row(i), out.row(i), centered);
    });
    return out;
}

/// Fits mean and top-m covariance eigenvectors (normalized by n-1). Each
/// axis is signed so that its largest-magnitude entry is positive.
template <typename Derived>
PcaFit<typename Derived::Scalar> pca_fit(const Eigen::MatrixBase<Derived>& points, Index m) {
    using Scalar = typename Derived::Scalar;
    const Index n = points.rows();
    const Index d = points.cols();
    if (n < 2) throw ValidationError("pca_fit: at least 2 reference points required");
    if (m < 1 || m > d) throw ValidationError("pca_fit: output dims must be in [1, " + std::to_string(d) + "]");

    PcaFit<Scalar> fit;
    auto& model = fit.model;
    model.mean = points.colwise().mean().transpose();
    const ColMatrix<Scalar> centered = points.rowwise() - model.mean.transpose();
    const ColMatrix<Scalar> cov = (centered.transpose() * centered) / static_cast<Scalar>(n - 1);
    const auto eig = jacobi_eigen(cov);

    model.components = eig.vectors.leftCols(m);
    model.eigenvalues = eig.values.head(m);
    for (Index j = 0; j < m; ++j) {
        if (model.eigenvalues(j) < 0) model.eigenvalues(j) = 0;
        Index arg = 0;
        model.components.col(j).cwiseAbs().maxCoeff(&arg);
        if (model.components(arg, j) < 0) model.components.col(j) *= Scalar(-1);
    }
    fit.embedding = pca_transform(model, points);
    return fit;
}

}  // namespace oocdr
