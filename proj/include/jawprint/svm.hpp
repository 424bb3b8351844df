#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "jawprint/error.hpp"
#include "jawprint/features.hpp"
#include "jawprint/score.hpp"

namespace jawprint {

struct SvmConfig {
    double c_penalty = 1.0;
    std::uint64_t seed = 42;
    std::size_t max_iterations = 1'000'000;
    double tolerance = 1e-9;  // maximal KKT violation at exit
};

struct SvmModel {
    Eigen::VectorXd weights;
    double bias = 0.0;
    double platt_a = 1.0;
    double platt_b = 0.0;
    NormalizerState normalizer;
};

/// ½‖w‖² + C Σ max(0, 1 − yᵢ(w·xᵢ + b)), labels in {0, 1}.
inline double svm_primal_objective(const Eigen::VectorXd& w, double b, const Eigen::MatrixXd& x,
                                   const std::vector<int>& y, double c) {
    double hinge = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double yi = y[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;
        hinge += std::max(0.0, 1.0 - yi * (x.row(i).dot(w) + b));
    }
    return 0.5 * w.squaredNorm() + c * hinge;
}

struct PlattFit {
    double a = 1.0;
    double b = 0.0;
};

namespace detail {
inline double platt_loss(const std::vector<double>& f, const std::vector<double>& t, double a, double b) {
    double loss = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double z = a * f[i] + b;
        // -t log σ(z) - (1-t) log(1-σ(z)) = log(1+e^z) - t z
        const double softplus = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
        loss += softplus - t[i] * z;
    }
    return loss;
}
} // namespace detail

/// Logistic fit of prior-smoothed labels on margins by damped Newton steps.
/// The slope is kept strictly positive so probability stays increasing in the margin.
inline PlattFit fit_platt(const std::vector<double>& margins, const std::vector<int>& labels) {
    std::size_t pos = 0;
    for (int l : labels) pos += static_cast<std::size_t>(l == 1);
    const std::size_t neg = labels.size() - pos;
    const double hi = (static_cast<double>(pos) + 1.0) / (static_cast<double>(pos) + 2.0);
    const double lo = 1.0 / (static_cast<double>(neg) + 2.0);
    std::vector<double> t(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) t[i] = labels[i] == 1 ? hi : lo;

    constexpr double min_slope = 1e-6;
    PlattFit fit{0.0, std::log((static_cast<double>(pos) + 1.0) / (static_cast<double>(neg) + 1.0))};
    double loss = detail::platt_loss(margins, t, fit.a, fit.b);
    for (int iter = 0; iter < 200; ++iter) {
        double ga = 0.0, gb = 0.0, haa = 1e-12, hab = 0.0, hbb = 1e-12;
        for (std::size_t i = 0; i < margins.size(); ++i) {
            const double p = logistic(fit.a * margins[i] + fit.b);
            const double r = p - t[i];
            const double w = p * (1.0 - p);
            ga += r * margins[i];
            gb += r;
            haa += w * margins[i] * margins[i];
            hab += w * margins[i];
            hbb += w;
        }
        if (std::abs(ga) < 1e-13 && std::abs(gb) < 1e-13) break;
        const double det = haa * hbb - hab * hab;
        const double da = -(hbb * ga - hab * gb) / det;
        const double db = -(-hab * ga + haa * gb) / det;
        double step = 1.0;
        bool moved = false;
        while (step >= 1e-10) {
            const double na = fit.a + step * da;
            const double nb = fit.b + step * db;
            const double nl = detail::platt_loss(margins, t, na, nb);
            if (nl < loss + 1e-4 * step * (ga * da + gb * db)) {
                fit = {na, nb};
                loss = nl;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;
    }
    if (!(fit.a >= min_slope)) {
        // Uninformative margins: pin the slope and refit the intercept alone.
        fit.a = min_slope;
        for (int iter = 0; iter < 100; ++iter) {
            double g = 0.0, h = 1e-12;
            for (std::size_t i = 0; i < margins.size(); ++i) {
                const double p = logistic(fit.a * margins[i] + fit.b);
                g += p - t[i];
                h += p * (1.0 - p);
            }
            fit.b -= g / h;
            if (std::abs(g) < 1e-13) break;
        }
    }
    return fit;
}

namespace detail {
/// Midpoint of the set of b minimizing Σ hinge(1 − yᵢ(fᵢ + b)) for fixed
/// scores f. The set is a single point whenever a free support vector exists.
inline double centered_bias(const Eigen::VectorXd& f, const std::vector<int>& labels) {
    const auto n = static_cast<std::size_t>(f.size());
    // kinks at b = yᵢ − fᵢ; slope = #neg kinks left of b − #pos kinks right of b
    std::vector<std::pair<double, int>> kinks(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double yi = labels[i] == 1 ? 1.0 : -1.0;
        kinks[i] = {yi - f(static_cast<Eigen::Index>(i)), labels[i] == 1 ? 1 : -1};
    }
    std::sort(kinks.begin(), kinks.end());
    long pos_right = 0;
    for (const auto& k : kinks) pos_right += k.second > 0;
    long neg_left = 0;
    // slope just left of kinks[0] is −pos_right (< 0); walk until it turns non-negative
    double lo = kinks.front().first, hi = kinks.back().first;
    for (std::size_t i = 0; i < n; ++i) {
        (kinks[i].second > 0 ? pos_right : neg_left) += kinks[i].second > 0 ? -1 : 1;
        const long slope = neg_left - pos_right;  // on (kinks[i], kinks[i+1])
        if (slope >= 0) {
            lo = kinks[i].first;
            hi = slope == 0 && i + 1 < n ? kinks[i + 1].first : lo;
            break;
        }
    }
    return 0.5 * (lo + hi);
}
} // namespace detail

/// Soft-margin linear SVM with an unregularized bias, solved in the dual by
/// two-coordinate descent steps (maximal-violating pair, second-order
/// selection). The equality constraint Σ αᵢyᵢ = 0 forces pairwise updates.
/// Labels are 0 (impostor) / 1 (genuine).
inline SvmModel train_svm(const Eigen::MatrixXd& x, const std::vector<int>& labels, const SvmConfig& cfg = {}) {
    if (!(cfg.c_penalty > 0.0)) throw Error(ErrorKind::InvalidArgument, "C must be positive");
    const auto n = x.rows();
    if (static_cast<std::size_t>(n) != labels.size()) throw Error(ErrorKind::DimensionMismatch, "labels vs rows");
    bool has_pos = false, has_neg = false;
    for (int l : labels) (l == 1 ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) throw Error(ErrorKind::SingleClass, "both classes required");

    const double c = cfg.c_penalty;
    constexpr double tau = 1e-12;
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = labels[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;
    const Eigen::VectorXd diag = x.rowwise().squaredNorm();
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(x.cols());
    Eigen::VectorXd grad = Eigen::VectorXd::Constant(n, -1.0);  // Qα − 1

    auto upper = [&](Eigen::Index t) { return alpha(t) >= c; };
    auto lower = [&](Eigen::Index t) { return alpha(t) <= 0.0; };

    std::size_t iter = 0;
    for (;; ++iter) {
        if (iter >= cfg.max_iterations) throw Error(ErrorKind::NonConvergence, std::to_string(iter) + " iterations");
        double gmax = -std::numeric_limits<double>::infinity();
        Eigen::Index i = -1;
        for (Eigen::Index t = 0; t < n; ++t) {
            if (y(t) > 0 ? !upper(t) : !lower(t)) {
                const double v = -y(t) * grad(t);
                if (v >= gmax) {
                    gmax = v;
                    i = t;
                }
            }
        }
        if (i < 0) break;
        const Eigen::VectorXd ki = x * x.row(i).transpose();
        double gmax2 = -std::numeric_limits<double>::infinity();
        double best = std::numeric_limits<double>::infinity();
        Eigen::Index j = -1;
        for (Eigen::Index t = 0; t < n; ++t) {
            if (y(t) > 0 ? !lower(t) : !upper(t)) {
                const double v = y(t) * grad(t);
                gmax2 = std::max(gmax2, v);
                const double gdiff = gmax + v;
                if (gdiff > 0.0) {
                    double quad = diag(i) + diag(t) - 2.0 * ki(t);
                    if (quad <= 0.0) quad = tau;
                    const double obj = -(gdiff * gdiff) / quad;
                    if (obj <= best) {
                        best = obj;
                        j = t;
                    }
                }
            }
        }
        if (gmax + gmax2 < cfg.tolerance || j < 0) break;

        const double qij = y(i) * y(j) * ki(j);
        const double old_i = alpha(i), old_j = alpha(j);
        if (y(i) != y(j)) {
            double quad = diag(i) + diag(j) + 2.0 * qij;
            if (quad <= 0.0) quad = tau;
            const double delta = (-grad(i) - grad(j)) / quad;
            const double diff = alpha(i) - alpha(j);
            alpha(i) += delta;
            alpha(j) += delta;
            if (diff > 0.0) {
                if (alpha(j) < 0.0) { alpha(j) = 0.0; alpha(i) = diff; }
            } else if (alpha(i) < 0.0) {
                alpha(i) = 0.0; alpha(j) = -diff;
            }
            if (diff > 0.0) {
                if (alpha(i) > c) { alpha(i) = c; alpha(j) = c - diff; }
            } else if (alpha(j) > c) {
                alpha(j) = c; alpha(i) = c + diff;
            }
        } else {
            double quad = diag(i) + diag(j) - 2.0 * qij;
            if (quad <= 0.0) quad = tau;
            const double delta = (grad(i) - grad(j)) / quad;
            const double sum = alpha(i) + alpha(j);
            alpha(i) -= delta;
            alpha(j) += delta;
            if (sum > c) {
                if (alpha(i) > c) { alpha(i) = c; alpha(j) = sum - c; }
            } else if (alpha(j) < 0.0) {
                alpha(j) = 0.0; alpha(i) = sum;
            }
            if (sum > c) {
                if (alpha(j) > c) { alpha(j) = c; alpha(i) = sum - c; }
            } else if (alpha(i) < 0.0) {
                alpha(i) = 0.0; alpha(j) = sum;
            }
        }
        const double di = alpha(i) - old_i, dj = alpha(j) - old_j;
        w += (di * y(i)) * x.row(i).transpose() + (dj * y(j)) * x.row(j).transpose();
        // grad_t = y_t (w · x_t) − 1
        grad = y.cwiseProduct(x * w) - Eigen::VectorXd::Ones(n);
    }

    SvmModel model;
    model.weights = w;
    model.bias = detail::centered_bias(x * w, labels);
    std::vector<double> margins(static_cast<std::size_t>(n));
    for (Eigen::Index t = 0; t < n; ++t) margins[static_cast<std::size_t>(t)] = x.row(t).dot(w) + model.bias;
    const auto platt = fit_platt(margins, labels);
    model.platt_a = platt.a;
    model.platt_b = platt.b;
    return model;
}

inline double svm_margin(const SvmModel& model, const Eigen::VectorXd& x) {
    if (x.size() != model.weights.size())
        throw Error(ErrorKind::DimensionMismatch,
                    std::to_string(x.size()) + " vs " + std::to_string(model.weights.size()));
    return model.weights.dot(x) + model.bias;
}

/// Calibrated genuine-class probability for an already-normalized vector.
inline Score svm_score(const SvmModel& model, const Eigen::VectorXd& x) {
    return {logistic(model.platt_a * svm_margin(model, x) + model.platt_b), {}};
}

} // namespace jawprint
