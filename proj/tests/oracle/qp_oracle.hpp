#pragma once

// Log-barrier interior point on the primal soft-margin QP
//   min ½‖w‖² + C Σ ξ   s.t.  yᵢ(w·xᵢ + b) ≥ 1 − ξᵢ,  ξ ≥ 0
// over z = (w, b, ξ), dense Newton steps.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <vector>

namespace oracle {

struct QpSolution {
    Eigen::VectorXd w;
    double b = 0.0;
    double objective = 0.0;
};

inline QpSolution soft_margin_qp(const Eigen::MatrixXd& x, const std::vector<int>& labels, double c) {
    const auto n = x.rows();
    const auto d = x.cols();
    const auto dim = d + 1 + n;
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = labels[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;

    // rows of a: gradient of slack sᵢ = yᵢ(w·xᵢ + b) − 1 + ξᵢ
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, dim);
    for (Eigen::Index i = 0; i < n; ++i) {
        a.row(i).head(d) = y(i) * x.row(i);
        a(i, d) = y(i);
        a(i, d + 1 + i) = 1.0;
    }
    auto slack = [&](const Eigen::VectorXd& z) { return Eigen::VectorXd(a * z - Eigen::VectorXd::Ones(n)); };
    auto objective = [&](const Eigen::VectorXd& z) { return 0.5 * z.head(d).squaredNorm() + c * z.tail(n).sum(); };
    auto barrier = [&](const Eigen::VectorXd& z, double t) {
        const Eigen::VectorXd s = slack(z);
        const Eigen::VectorXd xi = z.tail(n);
        if (s.minCoeff() <= 0.0 || xi.minCoeff() <= 0.0) return std::numeric_limits<double>::infinity();
        return t * objective(z) - s.array().log().sum() - xi.array().log().sum();
    };

    Eigen::VectorXd z = Eigen::VectorXd::Zero(dim);
    z.tail(n).setConstant(2.0);
    for (double t = 1.0; t <= 1e11; t *= 8.0) {
        for (int it = 0; it < 200; ++it) {
            const Eigen::VectorXd s = slack(z);
            const Eigen::VectorXd xi = z.tail(n);
            Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
            g.head(d) = t * z.head(d);
            g.tail(n).setConstant(t * c);
            g -= a.transpose() * s.cwiseInverse();
            g.tail(n) -= xi.cwiseInverse();
            Eigen::MatrixXd h = a.transpose() * s.array().square().inverse().matrix().asDiagonal() * a;
            for (Eigen::Index k = 0; k < d; ++k) h(k, k) += t;
            for (Eigen::Index k = 0; k < n; ++k) h(d + 1 + k, d + 1 + k) += 1.0 / (xi(k) * xi(k));
            const Eigen::VectorXd step = -h.ldlt().solve(g);
            const double decrement = -g.dot(step);
            if (decrement < 1e-14) break;
            const double f0 = barrier(z, t);
            double alpha = 1.0;
            while (barrier(z + alpha * step, t) > f0 - 0.25 * alpha * decrement && alpha > 1e-14) alpha *= 0.5;
            z += alpha * step;
        }
    }
    return {z.head(d), z(d), objective(z)};
}

/// Midpoint of the minimizing set of the hinge sum in b, by evaluating the
/// piecewise-linear objective at every kink.
inline double canonical_bias(const Eigen::MatrixXd& x, const std::vector<int>& labels, const Eigen::VectorXd& w) {
    const Eigen::VectorXd f = x * w;
    auto hinge = [&](double b) {
        double h = 0.0;
        for (Eigen::Index i = 0; i < f.size(); ++i) {
            const double yi = labels[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;
            h += std::max(0.0, 1.0 - yi * (f(i) + b));
        }
        return h;
    };
    std::vector<double> kinks;
    for (Eigen::Index i = 0; i < f.size(); ++i) kinks.push_back((labels[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0) - f(i));
    double best = std::numeric_limits<double>::infinity();
    for (double k : kinks) best = std::min(best, hinge(k));
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double k : kinks) {
        if (hinge(k) <= best + 1e-9 * (1.0 + best)) {
            lo = std::min(lo, k);
            hi = std::max(hi, k);
        }
    }
    return 0.5 * (lo + hi);
}

/// Logistic regression of soft targets on one regressor by iteratively
/// reweighted least squares.
inline std::pair<double, double> logistic_irls(const std::vector<double>& f, const std::vector<double>& target) {
    const auto n = static_cast<Eigen::Index>(f.size());
    Eigen::MatrixXd design(n, 2);
    Eigen::VectorXd t(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        design(i, 0) = f[static_cast<std::size_t>(i)];
        design(i, 1) = 1.0;
        t(i) = target[static_cast<std::size_t>(i)];
    }
    Eigen::Vector2d beta = Eigen::Vector2d::Zero();
    for (int it = 0; it < 100; ++it) {
        const Eigen::VectorXd eta = design * beta;
        const Eigen::VectorXd p = (1.0 + (-eta.array()).exp()).inverse().matrix();
        const Eigen::VectorXd wt = (p.array() * (1.0 - p.array())).matrix();
        const Eigen::VectorXd working = eta + ((t - p).array() / wt.array()).matrix();
        const Eigen::MatrixXd xtw = design.transpose() * wt.asDiagonal();
        const Eigen::Vector2d next = (xtw * design).ldlt().solve(xtw * working);
        const double change = (next - beta).cwiseAbs().maxCoeff();
        beta = next;
        if (change < 1e-14) break;
    }
    return {beta(0), beta(1)};
}

} // namespace oracle
