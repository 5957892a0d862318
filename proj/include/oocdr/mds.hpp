#pragma once

#include <cmath>
#include <random>

#include <Eigen/Core>

#include "oocdr/distance.hpp"
#include "oocdr/pairwise.hpp"
#include "oocdr/parallel.hpp"
#include "oocdr/types.hpp"

namespace oocdr {

enum class MdsInit { nearest, mean };

struct MdsOptions {
    Index dims = 2;
    int iterations = 500;
    double step_size = 1e-4;
    double distance_floor = 1e-9;
    double init_scale = 1e-2;
    MdsInit oos_init = MdsInit::nearest;
    std::size_t pairwise_cap_bytes = kDefaultPairwiseCapBytes;

    void validate() const {
        if (dims < 1) throw ValidationError("mds: output dims must be positive");
        if (iterations < 1) throw ValidationError("mds: iterations must be at least 1");
        if (!(step_size > 0)) throw ValidationError("mds: step size must be positive");
        if (!(distance_floor > 0)) throw ValidationError("mds: distance floor must be positive");
    }
};

/// Frozen reference mapping X_a -> Y_a plus the descent hyperparameters.
template <typename Scalar>
struct MdsModel {
    RowMatrix<Scalar> reference;  // n_ref x d
    ColMatrix<Scalar> embedding;  // n_ref x m
    MdsOptions options;
};

template <typename Scalar>
struct MdsFit {
    RowMatrix<Scalar> embedding;
    MdsModel<Scalar> model;
    double initial_raw_stress = 0;
    double final_raw_stress = 0;
};

/// Raw stress sum_{i<j} (d_ij - |y_i - y_j|)^2 against a full distance table.
template <typename Derived>
double mds_raw_stress(const PairwiseStore& distances, const Eigen::MatrixBase<Derived>& y) {
    double s = 0;
    for (Index j = 0; j < y.rows(); ++j)
        for (Index i = 0; i < j; ++i) {
            const double r = std::sqrt(squared_distance(y.row(i), y.row(j)));
            const double t = static_cast<double>(distances(i, j)) - r;
            s += t * t;
        }
    return s;
}

template <typename Scalar>
PairwiseStore mds_distance_table(const RowMatrix<Scalar>& points) {
    const Index n = points.rows();
    PairwiseStore d(n, n);
    for (Index j = 0; j < n; ++j) {
        d(j, j) = 0;
        for (Index i = 0; i < j; ++i) {
            const auto v = static_cast<float>(std::sqrt(squared_distance(points.row(i), points.row(j))));
            d(i, j) = v;
            d(j, i) = v;
        }
    }
    return d;
}

/// Full-gradient descent on raw stress. Every point moves by
///   y_i <- y_i - eta * sum_j (1 - d_ij / max(|y_i - y_j|, eps)) (y_i - y_j)
/// with all updates of an iteration computed from the same Y.
template <typename Derived>
MdsFit<typename Derived::Scalar> mds_fit(const Eigen::MatrixBase<Derived>& points, const MdsOptions& options,
                                         std::uint64_t seed) {
    using Scalar = typename Derived::Scalar;
    options.validate();
    const Index n = points.rows();
    const Index m = options.dims;
    if (n < 2) throw ValidationError("mds_fit: at least 2 reference points required");
    check_pairwise_capacity(n, options.pairwise_cap_bytes, "mds");

    MdsFit<Scalar> fit;
    fit.model.options = options;
    fit.model.reference = points;
    const PairwiseStore dist = mds_distance_table(fit.model.reference);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd y(n, m);
    for (Index i = 0; i < n; ++i)
        for (Index c = 0; c < m; ++c) y(i, c) = options.init_scale * gauss(rng);
    fit.initial_raw_stress = mds_raw_stress(dist, y);

    // The pair factor is symmetric, so each pair j > i is evaluated once and
    // added to row i and subtracted from row j.
    Eigen::MatrixXd grad(n, m);
    Eigen::ArrayXXd diff(n, m);
    Eigen::ArrayXd r2(n), factor(n);
    for (int it = 0; it < options.iterations; ++it) {
        grad.setZero();
        for (Index i = 0; i + 1 < n; ++i) {
            const Index len = n - i - 1;
            auto r = r2.head(len);
            r.setZero();
            for (Index c = 0; c < m; ++c) {
                diff.col(c).head(len) = y(i, c) - y.col(c).array().tail(len);
                r += diff.col(c).head(len).square();
            }
            auto f = factor.head(len);
            f = 1.0 - dist.col(i).tail(len).cast<double>().array() / r.sqrt().max(options.distance_floor);
            for (Index c = 0; c < m; ++c) {
                grad(i, c) += (f * diff.col(c).head(len)).sum();
                grad.col(c).array().tail(len) -= f * diff.col(c).head(len);
            }
        }
        y -= options.step_size * grad;
    }
    fit.final_raw_stress = mds_raw_stress(dist, y);
    fit.model.embedding = y.cast<Scalar>();
    fit.embedding = fit.model.embedding;
    return fit;
}

/// Single-scaling gradient for one out-of-sample point against the frozen
/// reference: sum_i (1 - d(x', x_i) / max(|y' - y_i|, eps)) (y' - y_i).
template <typename Scalar>
Vector<double> mds_point_gradient(const MdsModel<Scalar>& model, const Eigen::ArrayXd& distances,
                                  const Vector<double>& y) {
    const auto& ref = model.embedding;
    const Index m = ref.cols();
    Eigen::ArrayXd r2 = Eigen::ArrayXd::Zero(ref.rows());
    for (Index c = 0; c < m; ++c) r2 += (ref.col(c).template cast<double>().array() - y(c)).square();
    const Eigen::ArrayXd factor = 1.0 - distances / r2.sqrt().max(model.options.distance_floor);
    Vector<double> g(m);
    for (Index c = 0; c < m; ++c) g(c) = (factor * (y(c) - ref.col(c).template cast<double>().array())).sum();
    return g;
}

/// Stress of one point against the fixed reference, sum_i (d_i - |y - y_i|)^2.
template <typename Scalar>
double mds_point_stress(const MdsModel<Scalar>& model, const Eigen::ArrayXd& distances, const Vector<double>& y) {
    double s = 0;
    for (Index i = 0; i < model.embedding.rows(); ++i) {
        const double r = std::sqrt(squared_distance(y, model.embedding.row(i)));
        s += (distances(i) - r) * (distances(i) - r);
    }
    return s;
}

template <typename Scalar, typename Row>
Eigen::ArrayXd mds_point_distances(const MdsModel<Scalar>& model, const Row& x) {
    return squared_distances_to_rows(x, model.reference).array().sqrt();
}

template <typename Scalar>
Vector<double> mds_point_init(const MdsModel<Scalar>& model, const Eigen::ArrayXd& distances) {
    if (model.options.oos_init == MdsInit::mean) return model.embedding.colwise().mean().transpose().template cast<double>();
    Index nearest = 0;
    for (Index i = 1; i < distances.size(); ++i)
        if (distances(i) < distances(nearest)) nearest = i;
    return model.embedding.row(nearest).transpose().template cast<double>();
}

/// Descends the single-point stress from the configured initialization;
/// `ref` is the reference embedding in double precision.
template <typename Scalar, typename Row>
Vector<double> mds_project_point(const MdsModel<Scalar>& model, const Eigen::MatrixXd& ref, const Row& x) {
    const Eigen::ArrayXd dist = mds_point_distances(model, x);
    Vector<double> y = mds_point_init(model, dist);
    const Index m = ref.cols();
    Eigen::ArrayXd r2(ref.rows()), factor(ref.rows());
    Vector<double> g(m);
    for (int it = 0; it < model.options.iterations; ++it) {
        r2.setZero();
        for (Index c = 0; c < m; ++c) r2 += (ref.col(c).array() - y(c)).square();
        factor = 1.0 - dist / r2.sqrt().max(model.options.distance_floor);
        for (Index c = 0; c < m; ++c) g(c) = (factor * (y(c) - ref.col(c).array())).sum();
        y -= model.options.step_size * g;
    }
    return y;
}

template <typename Scalar, typename Row>
Vector<double> mds_project_point(const MdsModel<Scalar>& model, const Row& x) {
    const Eigen::MatrixXd ref = model.embedding.template cast<double>();
    return mds_project_point(model, ref, x);
}

template <typename Scalar, typename Derived>
RowMatrix<double> mds_transform(const MdsModel<Scalar>& model, const Eigen::MatrixBase<Derived>& points,
                                int threads = 1) {
    if (points.cols() != model.reference.cols())
        throw ValidationError("mds_transform: expected " + std::to_string(model.reference.cols()) +
                              " columns, got " + std::to_string(points.cols()));
    const Eigen::MatrixXd ref = model.embedding.template cast<double>();
    RowMatrix<double> out(points.rows(), ref.cols());
    parallel_for(static_cast<std::size_t>(points.rows()), threads, [&](std::size_t b, std::size_t e) {
        for (auto i = static_cast<Index>(b); i < static_cast<Index>(e); ++i)
            out.row(i) = mds_project_point(model, ref, points.row(i)).transpose();
    });
    return out;
}

}  // namespace oocdr
