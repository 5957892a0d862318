#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>

#include <Eigen/Core>

#include "oocdr/distance.hpp"
#include "oocdr/pairwise.hpp"
#include "oocdr/parallel.hpp"
#include "oocdr/types.hpp"

namespace oocdr {

/// Bisection settings for matching a row's entropy to log(perplexity).
struct PerplexityCalibration {
    double target = 30;
    double tolerance = 1e-5;  // on natural-log perplexity
    int max_steps = 64;
    double precision_lo = 1e-12;
    double precision_hi = 1e12;
};

struct CalibratedRow {
    double precision = 0;   // 1 / (2 sigma^2)
    double perplexity = 0;  // achieved exp(H)
    int steps = 0;
    bool bracket_hit = false;  // tolerance not reached inside the bracket
};

/// Fills `p` with p_j proportional to exp(-precision * sqd_j), normalized
/// over j != skip, with the precision bisected geometrically until the
/// entropy matches the target. Exponents are clamped at -700.
inline CalibratedRow calibrate_row(const Eigen::ArrayXd& sqd, Index skip, const PerplexityCalibration& cal,
                                   Eigen::ArrayXd& p) {
    const Index n = sqd.size();
    p.resize(n);
    double dmin = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < n; ++j)
        if (j != skip) dmin = std::min(dmin, sqd(j));
    const double target = std::log(cal.target);

    double lo = std::log(cal.precision_lo), hi = std::log(cal.precision_hi);
    CalibratedRow out;
    double entropy = 0;
    for (out.steps = 1; out.steps <= cal.max_steps; ++out.steps) {
        out.precision = std::exp(0.5 * (lo + hi));
        p = (-out.precision * (sqd - dmin)).max(-700.0).exp();
        if (skip >= 0) p(skip) = 0;
        p /= p.sum();
        entropy = 0;
        for (Index j = 0; j < n; ++j)
            if (p(j) > 0) entropy -= p(j) * std::log(p(j));
        if (std::abs(entropy - target) < cal.tolerance) break;
        if (entropy > target)
            lo = std::log(out.precision);
        else
            hi = std::log(out.precision);
    }
    out.bracket_hit = out.steps > cal.max_steps;
    out.steps = std::min(out.steps, cal.max_steps);
    out.perplexity = std::exp(entropy);
    return out;
}

struct TsneOptions {
    Index dims = 2;
    double perplexity = 30;
    int iterations = 750;
    int exaggeration_iterations = 250;
    double exaggeration = 12;
    double momentum_early = 0.5;
    double momentum_late = 0.8;
    std::optional<double> learning_rate;  // default max(n_ref / 12, 50)
    double init_scale = 1e-4;
    int oos_iterations = 100;
    Index k_init = 25;
    double oos_momentum = 0.8;
    double oos_learning_rate_factor = 0.1;  // times n_ref * max(p')
    std::size_t pairwise_cap_bytes = kDefaultPairwiseCapBytes;
    int threads = 1;

    void validate() const {
        if (dims < 1) throw ValidationError("tsne: output dims must be positive");
        if (!(perplexity > 0)) throw ValidationError("tsne: perplexity must be positive");
        if (iterations < 0 || oos_iterations < 0) throw ValidationError("tsne: iterations must be non-negative");
        if (k_init < 1) throw ValidationError("tsne: k_init must be positive");
    }
};

template <typename Scalar>
struct TsneModel {
    RowMatrix<Scalar> reference;  // n_ref x d
    ColMatrix<Scalar> embedding;  // n_ref x m
    Vector<double> sigma;         // calibrated bandwidth per reference point
    TsneOptions options;
};

template <typename Scalar>
struct TsneFit {
    RowMatrix<Scalar> embedding;
    TsneModel<Scalar> model;
    std::size_t bracket_failures = 0;
    double final_kl = 0;
};

/// Symmetrized joint affinities (p_{j|i} + p_{i|j}) / 2n. Also returns the
/// calibrated bandwidths through `sigma`.
template <typename Scalar>
PairwiseStore tsne_joint_affinities(const RowMatrix<Scalar>& points, const PerplexityCalibration& cal,
                                    Vector<double>& sigma, std::size_t& bracket_failures, int threads = 1) {
    const Index n = points.rows();
    PairwiseStore p(n, n);
    sigma.resize(n);
    std::vector<char> failed(static_cast<std::size_t>(n), 0);
    parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t b, std::size_t e) {
        Eigen::ArrayXd sqd(n), row(n);
        for (auto i = static_cast<Index>(b); i < static_cast<Index>(e); ++i) {
            for (Index j = 0; j < n; ++j) sqd(j) = squared_distance(points.row(i), points.row(j));
            const auto c = calibrate_row(sqd, i, cal, row);
            sigma(i) = std::sqrt(0.5 / c.precision);
            failed[static_cast<std::size_t>(i)] = c.bracket_hit;
            p.col(i) = row.cast<float>().matrix();  // p(j, i) = p_{j|i}
        }
    });
    bracket_failures = static_cast<std::size_t>(std::count(failed.begin(), failed.end(), 1));
    const double norm = 1.0 / (2.0 * static_cast<double>(n));
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < j; ++i) {
            const auto v = static_cast<float>((static_cast<double>(p(i, j)) + p(j, i)) * norm);
            p(i, j) = v;
            p(j, i) = v;
        }
    return p;
}

/// KL(P || Q) with student-t Q over all ordered pairs.
inline double tsne_kl(const PairwiseStore& p, const Eigen::MatrixXd& y) {
    const Index n = y.rows();
    double z = 0, cross = 0, self = 0;
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) {
            if (i == j) continue;
            const double w = 1.0 / (1.0 + squared_distance(y.row(i), y.row(j)));
            const double pij = p(i, j);
            z += w;
            if (pij > 0) {
                self += pij * std::log(pij);
                cross += pij * std::log(w);
            }
        }
    double psum = 0;
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
            if (i != j) psum += p(i, j);
    return self - cross + psum * std::log(z);
}

/// 4 sum_j (e P_ij - Q_ij) (y_i - y_j) / (1 + |y_i - y_j|^2), e = exaggeration.
/// Attractive and repulsive sums are gathered in one pass and combined once
/// the normalizer Z is known.
inline Eigen::MatrixXd tsne_gradient(const PairwiseStore& p, const Eigen::MatrixXd& y, double exaggeration = 1.0) {
    const Index n = y.rows(), m = y.cols();
    // Pair terms are symmetric: each j > i is evaluated once and applied to
    // both rows with opposite signs.
    Eigen::MatrixXd attract = Eigen::MatrixXd::Zero(n, m), repulse = Eigen::MatrixXd::Zero(n, m);
    Eigen::ArrayXXd diff(n, m);
    Eigen::ArrayXd r2(n), w(n), pw(n), ww(n);
    double z = 0;
    for (Index i = 0; i + 1 < n; ++i) {
        const Index len = n - i - 1;
        auto r = r2.head(len);
        r.setZero();
        for (Index c = 0; c < m; ++c) {
            diff.col(c).head(len) = y(i, c) - y.col(c).array().tail(len);
            r += diff.col(c).head(len).square();
        }
        auto wi = w.head(len);
        wi = 1.0 / (1.0 + r);
        z += 2.0 * wi.sum();
        auto pwi = pw.head(len);
        pwi = exaggeration * p.col(i).tail(len).cast<double>().array() * wi;
        auto wwi = ww.head(len);
        wwi = wi * wi;
        for (Index c = 0; c < m; ++c) {
            const auto d = diff.col(c).head(len);
            attract(i, c) += (pwi * d).sum();
            attract.col(c).array().tail(len) -= pwi * d;
            repulse(i, c) += (wwi * d).sum();
            repulse.col(c).array().tail(len) -= wwi * d;
        }
    }
    return 4.0 * (attract - repulse / z);
}

template <typename Derived>
TsneFit<typename Derived::Scalar> tsne_fit(const Eigen::MatrixBase<Derived>& points, const TsneOptions& options,
                                           std::uint64_t seed) {
    using Scalar = typename Derived::Scalar;
    options.validate();
    const Index n = points.rows();
    if (static_cast<double>(n) < 3.0 * options.perplexity)
        throw ValidationError("tsne_fit: reference size " + std::to_string(n) +
                              " is below 3 x perplexity (" + std::to_string(options.perplexity) + ")");
    check_pairwise_capacity(n, options.pairwise_cap_bytes, "tsne");

    TsneFit<Scalar> fit;
    fit.model.options = options;
    fit.model.reference = points;
    PerplexityCalibration cal;
    cal.target = options.perplexity;
    const PairwiseStore p =
        tsne_joint_affinities(fit.model.reference, cal, fit.model.sigma, fit.bracket_failures, options.threads);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd y(n, options.dims);
    for (Index i = 0; i < n; ++i)
        for (Index c = 0; c < options.dims; ++c) y(i, c) = options.init_scale * gauss(rng);

    const double lr = options.learning_rate.value_or(std::max(static_cast<double>(n) / 12.0, 50.0));
    Eigen::MatrixXd update = Eigen::MatrixXd::Zero(n, options.dims);
    for (int it = 0; it < options.iterations; ++it) {
        const bool early = it < options.exaggeration_iterations;
        const double momentum = early ? options.momentum_early : options.momentum_late;
        update = momentum * update - lr * tsne_gradient(p, y, early ? options.exaggeration : 1.0);
        y += update;
    }
    fit.model.embedding = y.cast<Scalar>();
    fit.embedding = fit.model.embedding;
    return fit;
}

/// Per-point outcome of the out-of-sample optimizer.
struct TsnePointResult {
    Vector<double> y;
    double perplexity = 0;
    bool bracket_hit = false;
    double kl_initial = 0;
    double kl_final = 0;
};

/// KL(p' || q') of one point against the frozen reference embedding.
inline double tsne_point_kl(const Eigen::ArrayXd& p, const Eigen::MatrixXd& ref, const Vector<double>& y) {
    Eigen::ArrayXd r2 = Eigen::ArrayXd::Zero(ref.rows());
    for (Index c = 0; c < ref.cols(); ++c) r2 += (ref.col(c).array() - y(c)).square();
    const Eigen::ArrayXd w = 1.0 / (1.0 + r2);
    const double log_z = std::log(w.sum());
    double kl = 0;
    for (Index j = 0; j < p.size(); ++j)
        if (p(j) > 0) kl += p(j) * (std::log(p(j)) - std::log(w(j)) + log_z);
    return kl;
}

/// Gradient of tsne_point_kl: 2 sum_j (p_j - q_j) (y - y_j) / (1 + |y - y_j|^2).
/// Writes the KL at `y` to `kl` when given, from the same pass.
inline Vector<double> tsne_point_gradient(const Eigen::ArrayXd& p, const Eigen::MatrixXd& ref,
                                          const Vector<double>& y, double* kl = nullptr) {
    Eigen::ArrayXd r2 = Eigen::ArrayXd::Zero(ref.rows());
    for (Index c = 0; c < ref.cols(); ++c) r2 += (ref.col(c).array() - y(c)).square();
    const Eigen::ArrayXd w = 1.0 / (1.0 + r2);
    const double z = w.sum();
    const Eigen::ArrayXd coeff = (p - w / z) * w;
    Vector<double> g(ref.cols());
    for (Index c = 0; c < ref.cols(); ++c) g(c) = 2.0 * (coeff * (y(c) - ref.col(c).array())).sum();
    if (kl) {
        // Zero p_j contribute nothing; max() keeps log() finite there.
        const Eigen::ArrayXd pos = p.max(std::numeric_limits<double>::min());
        *kl = (p * (pos.log() + (1.0 + r2).log())).sum() + p.sum() * std::log(z);
    }
    return g;
}

template <typename Scalar, typename Row>
TsnePointResult tsne_project_point(const TsneModel<Scalar>& model, const Eigen::MatrixXd& ref, const Row& x) {
    const auto& opt = model.options;
    const Index n = ref.rows();
    const Eigen::ArrayXd sqd = squared_distances_to_rows(x, model.reference).array();

    TsnePointResult out;
    PerplexityCalibration cal;
    cal.target = opt.perplexity;
    Eigen::ArrayXd p;
    const auto c = calibrate_row(sqd, -1, cal, p);
    out.perplexity = c.perplexity;
    out.bracket_hit = c.bracket_hit;

    out.y = Vector<double>::Zero(ref.cols());
    const auto nearest = k_smallest(sqd.matrix(), std::min(opt.k_init, n));
    for (const auto& nb : nearest) out.y += ref.row(nb.index).transpose();
    out.y /= static_cast<double>(nearest.size());
    out.kl_initial = tsne_point_kl(p, ref, out.y);
    out.kl_final = out.kl_initial;

    // The momentum iteration can overshoot on tight neighborhoods, so the
    // lowest-KL iterate is returned rather than the last one.
    const double lr = opt.oos_learning_rate_factor * static_cast<double>(n) * p.maxCoeff();
    Vector<double> y = out.y;
    Vector<double> update = Vector<double>::Zero(ref.cols());
    for (int it = 0; it < opt.oos_iterations; ++it) {
        double kl = 0;
        const Vector<double> g = tsne_point_gradient(p, ref, y, &kl);
        if (kl < out.kl_final) {
            out.kl_final = kl;
            out.y = y;
        }
        update = opt.oos_momentum * update - lr * g;
        y += update;
    }
    if (opt.oos_iterations > 0) {
        const double kl = tsne_point_kl(p, ref, y);
        if (kl < out.kl_final) {
            out.kl_final = kl;
            out.y = y;
        }
    }
    return out;
}

template <typename Scalar, typename Row>
TsnePointResult tsne_project_point(const TsneModel<Scalar>& model, const Row& x) {
    const Eigen::MatrixXd ref = model.embedding.template cast<double>();
    return tsne_project_point(model, ref, x);
}

template <typename Scalar, typename Derived>
RowMatrix<double> tsne_transform(const TsneModel<Scalar>& model, const Eigen::MatrixBase<Derived>& points,
                                 int threads = 1) {
    if (points.cols() != model.reference.cols())
        throw ValidationError("tsne_transform: expected " + std::to_string(model.reference.cols()) +
                              " columns, got " + std::to_string(points.cols()));
    const Eigen::MatrixXd ref = model.embedding.template cast<double>();
    RowMatrix<double> out(points.rows(), ref.cols());
    parallel_for(static_cast<std::size_t>(points.rows()), threads, [&](std::size_t b, std::size_t e) {
        for (auto i = static_cast<Index>(b); i < static_cast<Index>(e); ++i)
            out.row(i) = tsne_project_point(model, ref, points.row(i)).y.transpose();
    });
    return out;
}

}  // namespace oocdr
