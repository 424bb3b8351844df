#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "jawprint/error.hpp"
#include "jawprint/features.hpp"
#include "jawprint/parallel.hpp"
#include "jawprint/score.hpp"

namespace jawprint {

struct LstmConfig {
    std::size_t units_per_layer = 64;
    std::size_t layers = 2;
    double dropout = 0.3;
    double learning_rate = 5e-4;
    std::size_t max_epochs = 200;
    std::size_t early_stop_patience = 10;
    double lr_reduce_factor = 0.2;
    std::size_t lr_reduce_patience = 5;
    std::size_t batch_size = 32;
    std::uint64_t seed = 42;
    bool class_weighting = true;
    double validation_fraction = 0.2;  // tail of each class, in the order given
};

/// Gate rows are stacked [input; forget; cell; output].
struct LstmLayer {
    Eigen::MatrixXd w;  // 4H × D
    Eigen::MatrixXd u;  // 4H × H
    Eigen::VectorXd b;  // 4H
};

struct LstmParams {
    std::vector<LstmLayer> layers;
    Eigen::VectorXd head_w;
    double head_b = 0.0;
};

struct LstmHistory {
    std::size_t epochs_run = 0;
    std::size_t best_epoch = 0;
    double best_monitor = 0.0;
    double final_learning_rate = 0.0;
};

struct LstmModel {
    LstmConfig config;
    std::size_t input_dim = 0;
    LstmParams params;
    NormalizerState normalizer;  // per input channel
    LstmHistory history;
};

using Sequence = Eigen::MatrixXd;  // T × D

inline std::size_t parameter_count(const LstmParams& p) {
    std::size_t n = static_cast<std::size_t>(p.head_w.size()) + 1;
    for (const auto& l : p.layers) n += static_cast<std::size_t>(l.w.size() + l.u.size() + l.b.size());
    return n;
}

inline Eigen::VectorXd flatten(const LstmParams& p) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(parameter_count(p)));
    Eigen::Index at = 0;
    auto put = [&](const auto& m) {
        out.segment(at, m.size()) = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
        at += m.size();
    };
    for (const auto& l : p.layers) {
        put(l.w);
        put(l.u);
        put(l.b);
    }
    put(p.head_w);
    out(at) = p.head_b;
    return out;
}

inline void unflatten(const Eigen::VectorXd& v, LstmParams& p) {
    Eigen::Index at = 0;
    auto take = [&](auto& m) {
        Eigen::Map<Eigen::VectorXd>(m.data(), m.size()) = v.segment(at, m.size());
        at += m.size();
    };
    for (auto& l : p.layers) {
        take(l.w);
        take(l.u);
        take(l.b);
    }
    take(p.head_w);
    p.head_b = v(at);
}

/// Glorot-uniform input kernels, orthogonal recurrent kernels, forget-gate
/// bias 1, zero output head.
inline LstmParams init_lstm_params(std::size_t input_dim, const LstmConfig& cfg, std::mt19937_64& rng) {
    const auto h = static_cast<Eigen::Index>(cfg.units_per_layer);
    LstmParams p;
    std::normal_distribution<double> gauss;
    auto d = static_cast<Eigen::Index>(input_dim);
    for (std::size_t layer = 0; layer < cfg.layers; ++layer) {
        LstmLayer l;
        const double limit = std::sqrt(6.0 / static_cast<double>(d + 4 * h));
        std::uniform_real_distribution<double> uni(-limit, limit);
        l.w.resize(4 * h, d);
        for (Eigen::Index c = 0; c < d; ++c)
            for (Eigen::Index r = 0; r < 4 * h; ++r) l.w(r, c) = uni(rng);
        Eigen::MatrixXd a(4 * h, h);
        for (Eigen::Index c = 0; c < h; ++c)
            for (Eigen::Index r = 0; r < 4 * h; ++r) a(r, c) = gauss(rng);
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
        Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(4 * h, h);
        const Eigen::VectorXd rd = qr.matrixQR().diagonal();
        for (Eigen::Index c = 0; c < h; ++c)
            if (rd(c) < 0.0) q.col(c) *= -1.0;
        l.u = q;
        l.b = Eigen::VectorXd::Zero(4 * h);
        l.b.segment(h, h).setOnes();
        p.layers.push_back(std::move(l));
        d = h;
    }
    p.head_w = Eigen::VectorXd::Zero(h);
    p.head_b = 0.0;
    return p;
}

namespace detail {

/// Inverted-dropout masks: entries are 0 or 1/(1-rate). Empty = no dropout.
struct DropoutMasks {
    std::vector<Eigen::MatrixXd> layers;  // H × (T·B) for sequence layers, H × B for the last
};

struct LayerCache {
    Eigen::MatrixXd input;  // D × (T·B), column t·B + n
    Eigen::MatrixXd gates;  // 4H × (T·B), post-activation
    Eigen::MatrixXd cell;   // H × (T·B)
    Eigen::MatrixXd tanh_cell;
    Eigen::MatrixXd hidden;  // H × (T·B)
};

struct ForwardCache {
    std::vector<LayerCache> layers;
    Eigen::MatrixXd last;     // H × B, final hidden after dropout
    Eigen::RowVectorXd logit;  // 1 × B
    Eigen::Index steps = 0;
    Eigen::Index batch = 0;
};

// Both activations go through the vectorized exp; saturated tails resolve to 0/±1 via inf.
inline void sigmoid_inplace(Eigen::Ref<Eigen::MatrixXd> m) { m = (1.0 / (1.0 + (-m.array()).exp())).matrix(); }

inline void tanh_inplace(Eigen::Ref<Eigen::MatrixXd> m) { m = (1.0 - 2.0 / (1.0 + (2.0 * m.array()).exp())).matrix(); }

/// Batch forward pass; every sequence in `batch` must be T × D already standardized.
inline void forward(const LstmParams& p, const std::vector<const Sequence*>& batch, const DropoutMasks* masks,
                    ForwardCache& cache) {
    const auto nb = static_cast<Eigen::Index>(batch.size());
    const Eigen::Index steps = batch.front()->rows();
    const Eigen::Index d = batch.front()->cols();
    cache.steps = steps;
    cache.batch = nb;
    cache.layers.resize(p.layers.size());

    Eigen::MatrixXd input(d, steps * nb);
    for (Eigen::Index n = 0; n < nb; ++n) {
        const Sequence& s = *batch[static_cast<std::size_t>(n)];
        for (Eigen::Index t = 0; t < steps; ++t) input.col(t * nb + n) = s.row(t).transpose();
    }
    for (std::size_t li = 0; li < p.layers.size(); ++li) {
        const LstmLayer& l = p.layers[li];
        const Eigen::Index h = l.u.cols();
        LayerCache& lc = cache.layers[li];
        lc.input = std::move(input);
        lc.gates.resize(4 * h, steps * nb);
        lc.gates.noalias() = l.w * lc.input;
        lc.gates.colwise() += l.b;
        lc.cell.resize(h, steps * nb);
        lc.tanh_cell.resize(h, steps * nb);
        lc.hidden.resize(h, steps * nb);
        Eigen::MatrixXd rec(4 * h, nb);
        for (Eigen::Index t = 0; t < steps; ++t) {
            auto z = lc.gates.middleCols(t * nb, nb);
            if (t > 0) {
                rec.noalias() = l.u * lc.hidden.middleCols((t - 1) * nb, nb);
                z += rec;
            }
            sigmoid_inplace(z.topRows(2 * h));
            tanh_inplace(z.middleRows(2 * h, h));
            sigmoid_inplace(z.bottomRows(h));
            auto c = lc.cell.middleCols(t * nb, nb);
            c = z.topRows(h).cwiseProduct(z.middleRows(2 * h, h));
            if (t > 0) c += z.middleRows(h, h).cwiseProduct(lc.cell.middleCols((t - 1) * nb, nb));
            lc.tanh_cell.middleCols(t * nb, nb) = c;
            tanh_inplace(lc.tanh_cell.middleCols(t * nb, nb));
            lc.hidden.middleCols(t * nb, nb) = z.bottomRows(h).cwiseProduct(lc.tanh_cell.middleCols(t * nb, nb));
        }
        const bool last_layer = li + 1 == p.layers.size();
        if (!last_layer) {
            input = lc.hidden;
            if (masks) input.array() *= masks->layers[li].array();
        }
    }
    const auto& top = cache.layers.back();
    cache.last = top.hidden.middleCols((steps - 1) * nb, nb);
    if (masks) cache.last.array() *= masks->layers.back().array();
    cache.logit = p.head_w.transpose() * cache.last;
    cache.logit.array() += p.head_b;
}

inline double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

/// Mean over the batch of wₙ·BCE(σ(zₙ), yₙ).
inline double batch_loss(const Eigen::RowVectorXd& logit, const std::vector<double>& y, const std::vector<double>& w) {
    double loss = 0.0;
    for (Eigen::Index n = 0; n < logit.size(); ++n) {
        const auto k = static_cast<std::size_t>(n);
        loss += w[k] * (softplus(logit(n)) - y[k] * logit(n));
    }
    return loss / static_cast<double>(logit.size());
}

inline void backward(const LstmParams& p, const ForwardCache& cache, const DropoutMasks* masks,
                     const std::vector<double>& y, const std::vector<double>& w, LstmParams& grad) {
    const Eigen::Index nb = cache.batch, steps = cache.steps;
    Eigen::RowVectorXd dlogit(nb);
    for (Eigen::Index n = 0; n < nb; ++n) {
        const auto k = static_cast<std::size_t>(n);
        dlogit(n) = w[k] * (logistic(cache.logit(n)) - y[k]) / static_cast<double>(nb);
    }
    grad.head_w = cache.last * dlogit.transpose();
    grad.head_b = dlogit.sum();
    grad.layers.resize(p.layers.size());

    Eigen::MatrixXd d_last = p.head_w * dlogit;  // H × B
    if (masks) d_last.array() *= masks->layers.back().array();
    Eigen::MatrixXd d_seq;  // gradient w.r.t. the layer's hidden sequence (from above)

    for (std::size_t li = p.layers.size(); li-- > 0;) {
        const LstmLayer& l = p.layers[li];
        const LayerCache& lc = cache.layers[li];
        const Eigen::Index h = l.u.cols();
        const bool last_layer = li + 1 == p.layers.size();
        Eigen::MatrixXd dz(4 * h, steps * nb);
        Eigen::MatrixXd dh_next = Eigen::MatrixXd::Zero(h, nb);
        Eigen::MatrixXd dc_next = Eigen::MatrixXd::Zero(h, nb);
        Eigen::MatrixXd dh(h, nb), dc(h, nb);
        for (Eigen::Index t = steps; t-- > 0;) {
            dh = dh_next;
            if (last_layer) {
                if (t == steps - 1) dh += d_last;
            } else {
                dh += d_seq.middleCols(t * nb, nb);
            }
            const auto g = lc.gates.middleCols(t * nb, nb);
            const auto gi = g.topRows(h).array();
            const auto gf = g.middleRows(h, h).array();
            const auto gg = g.middleRows(2 * h, h).array();
            const auto go = g.bottomRows(h).array();
            const auto tc = lc.tanh_cell.middleCols(t * nb, nb).array();
            dc = dc_next.array() + dh.array() * go * (1.0 - tc.square());
            auto dzt = dz.middleCols(t * nb, nb);
            dzt.topRows(h) = (dc.array() * gg * gi * (1.0 - gi)).matrix();
            if (t > 0)
                dzt.middleRows(h, h) =
                    (dc.array() * lc.cell.middleCols((t - 1) * nb, nb).array() * gf * (1.0 - gf)).matrix();
            else
                dzt.middleRows(h, h).setZero();
            dzt.middleRows(2 * h, h) = (dc.array() * gi * (1.0 - gg.square())).matrix();
            dzt.bottomRows(h) = (dh.array() * tc * go * (1.0 - go)).matrix();
            dc_next = (dc.array() * gf).matrix();
            dh_next.noalias() = l.u.transpose() * dzt;
        }
        LstmLayer& gl = grad.layers[li];
        gl.w.noalias() = dz * lc.input.transpose();
        gl.b = dz.rowwise().sum();
        gl.u = Eigen::MatrixXd::Zero(4 * h, h);
        if (steps > 1)
            gl.u.noalias() = dz.rightCols((steps - 1) * nb) * lc.hidden.leftCols((steps - 1) * nb).transpose();
        if (li > 0) {
            d_seq.noalias() = l.w.transpose() * dz;
            if (masks) d_seq.array() *= masks->layers[li - 1].array();
        }
    }
}

inline DropoutMasks draw_masks(const LstmParams& p, double rate, Eigen::Index steps, Eigen::Index nb,
                               std::mt19937_64& rng) {
    DropoutMasks m;
    const double keep = 1.0 - rate;
    const double scale = 1.0 / keep;
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (std::size_t li = 0; li < p.layers.size(); ++li) {
        const Eigen::Index h = p.layers[li].u.cols();
        const Eigen::Index cols = li + 1 == p.layers.size() ? nb : steps * nb;
        Eigen::MatrixXd mask(h, cols);
        for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = uni(rng) < keep ? scale : 0.0;
        m.layers.push_back(std::move(mask));
    }
    return m;
}

inline void check_sequences(const std::vector<Sequence>& seqs, std::size_t dim) {
    for (std::size_t i = 0; i < seqs.size(); ++i) {
        if (seqs[i].rows() == 0) throw Error(ErrorKind::ShapeMismatch, "sequence " + std::to_string(i) + " is empty");
        if (static_cast<std::size_t>(seqs[i].cols()) != dim)
            throw Error(ErrorKind::ShapeMismatch, "sequence " + std::to_string(i) + " has width " +
                                                      std::to_string(seqs[i].cols()) + ", expected " +
                                                      std::to_string(dim));
    }
}

inline Sequence standardize(const NormalizerState& norm, const Sequence& s) {
    Sequence out = s;
    for (Eigen::Index c = 0; c < s.cols(); ++c) {
        const double sd = norm.stddev(c);
        if (sd > 0.0)
            out.col(c) = (s.col(c).array() - norm.mean(c)) / sd;
        else
            out.col(c).setZero();
    }
    return out;
}

inline NormalizerState fit_channel_normalizer(const std::vector<Sequence>& seqs) {
    const Eigen::Index d = seqs.front().cols();
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(d), sq = Eigen::VectorXd::Zero(d);
    double count = 0.0;
    for (const auto& s : seqs) {
        sum += s.colwise().sum().transpose();
        count += static_cast<double>(s.rows());
    }
    const Eigen::VectorXd mean = sum / count;
    for (const auto& s : seqs) sq += (s.rowwise() - mean.transpose()).array().square().colwise().sum().matrix().transpose();
    NormalizerState n;
    n.mean = mean;
    n.stddev = (sq / count).cwiseSqrt();
    return n;
}

} // namespace detail

/// Loss and flattened gradient on one batch with dropout off. Inputs are used as given.
inline std::pair<double, Eigen::VectorXd> lstm_loss_and_gradient(const LstmParams& p,
                                                                 const std::vector<Sequence>& batch,
                                                                 const std::vector<double>& y,
                                                                 const std::vector<double>& w) {
    std::vector<const Sequence*> ptrs;
    for (const auto& s : batch) ptrs.push_back(&s);
    detail::ForwardCache cache;
    detail::forward(p, ptrs, nullptr, cache);
    LstmParams grad;
    detail::backward(p, cache, nullptr, y, w, grad);
    return {detail::batch_loss(cache.logit, y, w), flatten(grad)};
}

inline double lstm_loss(const LstmParams& p, const std::vector<Sequence>& batch, const std::vector<double>& y,
                        const std::vector<double>& w) {
    std::vector<const Sequence*> ptrs;
    for (const auto& s : batch) ptrs.push_back(&s);
    detail::ForwardCache cache;
    detail::forward(p, ptrs, nullptr, cache);
    return detail::batch_loss(cache.logit, y, w);
}

/// Per-class weights N / (2·N_c), or all ones.
inline std::vector<double> class_weights(const std::vector<int>& labels, bool enabled) {
    std::vector<double> w(labels.size(), 1.0);
    if (!enabled) return w;
    const double n = static_cast<double>(labels.size());
    const double pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
    for (std::size_t i = 0; i < labels.size(); ++i) w[i] = labels[i] == 1 ? n / (2.0 * pos) : n / (2.0 * (n - pos));
    return w;
}

/// Stratified tail split: the last `fraction` of each class (in input order) is held out.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> validation_split(const std::vector<int>& labels,
                                                                                      double fraction) {
    std::vector<std::size_t> fit, val;
    for (int cls : {0, 1}) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == cls) members.push_back(i);
        const auto held = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(members.size())));
        const std::size_t keep = members.size() - std::min(held, members.size() > 0 ? members.size() - 1 : 0);
        fit.insert(fit.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(keep));
        val.insert(val.end(), members.begin() + static_cast<std::ptrdiff_t>(keep), members.end());
    }
    std::sort(fit.begin(), fit.end());
    std::sort(val.begin(), val.end());
    return {fit, val};
}

inline LstmModel train_lstm(const std::vector<Sequence>& sequences, const std::vector<int>& labels,
                            const LstmConfig& cfg = {}) {
    if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) throw Error(ErrorKind::InvalidArgument, "dropout outside [0,1)");
    if (!(cfg.learning_rate > 0.0)) throw Error(ErrorKind::InvalidArgument, "learning rate must be positive");
    if (cfg.layers == 0 || cfg.units_per_layer == 0 || cfg.batch_size == 0)
        throw Error(ErrorKind::InvalidArgument, "layers, units and batch size must be positive");
    if (sequences.size() != labels.size()) throw Error(ErrorKind::DimensionMismatch, "labels vs sequences");
    if (sequences.empty()) throw Error(ErrorKind::SingleClass, "no training sequences");
    const auto pos = std::count(labels.begin(), labels.end(), 1);
    if (pos == 0 || pos == static_cast<std::ptrdiff_t>(labels.size()))
        throw Error(ErrorKind::SingleClass, "both classes required");
    const auto dim = static_cast<std::size_t>(sequences.front().cols());
    detail::check_sequences(sequences, dim);
    for (const auto& s : sequences)
        if (s.rows() != sequences.front().rows())
            throw Error(ErrorKind::ShapeMismatch, "training sequences must share one length");

    LstmModel model;
    model.config = cfg;
    model.input_dim = dim;
    std::mt19937_64 rng(cfg.seed);
    model.params = init_lstm_params(dim, cfg, rng);

    auto [fit_idx, val_idx] = validation_split(labels, cfg.validation_fraction);
    std::vector<Sequence> fit_raw;
    for (auto i : fit_idx) fit_raw.push_back(sequences[i]);
    model.normalizer = detail::fit_channel_normalizer(fit_raw);
    std::vector<Sequence> data;
    data.reserve(sequences.size());
    for (const auto& s : sequences) data.push_back(detail::standardize(model.normalizer, s));
    const auto weights = class_weights(labels, cfg.class_weighting);
    std::vector<double> target(labels.begin(), labels.end());

    auto val_loss = [&](const LstmParams& p) {
        if (val_idx.empty()) return 0.0;
        double total = 0.0;
        for (std::size_t start = 0; start < val_idx.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(val_idx.size(), start + cfg.batch_size);
            std::vector<const Sequence*> ptrs;
            std::vector<double> y, w;
            for (std::size_t k = start; k < end; ++k) {
                ptrs.push_back(&data[val_idx[k]]);
                y.push_back(target[val_idx[k]]);
                w.push_back(weights[val_idx[k]]);
            }
            detail::ForwardCache cache;
            detail::forward(p, ptrs, nullptr, cache);
            total += detail::batch_loss(cache.logit, y, w) * static_cast<double>(end - start);
        }
        return total / static_cast<double>(val_idx.size());
    };

    // Adam
    Eigen::VectorXd theta = flatten(model.params);
    Eigen::VectorXd m1 = Eigen::VectorXd::Zero(theta.size()), m2 = Eigen::VectorXd::Zero(theta.size());
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-7;
    double lr = cfg.learning_rate;
    std::size_t step = 0;

    double best = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_theta = theta;
    std::size_t since_best = 0, since_reduce = 0;
    LstmParams grad;
    detail::ForwardCache cache;
    std::vector<std::size_t> order = fit_idx;
    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double train_total = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            std::vector<const Sequence*> ptrs;
            std::vector<double> y, w;
            for (std::size_t k = start; k < end; ++k) {
                ptrs.push_back(&data[order[k]]);
                y.push_back(target[order[k]]);
                w.push_back(weights[order[k]]);
            }
            const auto nb = static_cast<Eigen::Index>(ptrs.size());
            detail::DropoutMasks masks;
            const bool drop = cfg.dropout > 0.0;
            if (drop) masks = detail::draw_masks(model.params, cfg.dropout, ptrs.front()->rows(), nb, rng);
            detail::forward(model.params, ptrs, drop ? &masks : nullptr, cache);
            detail::backward(model.params, cache, drop ? &masks : nullptr, y, w, grad);
            train_total += detail::batch_loss(cache.logit, y, w) * static_cast<double>(end - start);

            const Eigen::VectorXd g = flatten(grad);
            ++step;
            m1 = beta1 * m1 + (1.0 - beta1) * g;
            m2 = beta2 * m2 + (1.0 - beta2) * g.cwiseAbs2();
            const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
            theta.array() -= lr * (m1.array() / c1) / ((m2.array() / c2).sqrt() + eps);
            unflatten(theta, model.params);
        }
        const double monitor = val_idx.empty() ? train_total / static_cast<double>(order.size()) : val_loss(model.params);
        model.history.epochs_run = epoch + 1;
        if (monitor < best) {
            best = monitor;
            best_theta = theta;
            model.history.best_epoch = epoch + 1;
            since_best = 0;
            since_reduce = 0;
        } else {
            ++since_best;
            ++since_reduce;
            if (since_best >= cfg.early_stop_patience) break;
            if (since_reduce >= cfg.lr_reduce_patience) {
                lr *= cfg.lr_reduce_factor;
                since_reduce = 0;
            }
        }
    }
    unflatten(best_theta, model.params);
    model.history.best_monitor = best;
    model.history.final_learning_rate = lr;
    return model;
}

/// Dropout-free forward pass on one raw (unstandardized) sequence.
inline Score lstm_score(const LstmModel& model, const Sequence& sequence) {
    if (sequence.rows() == 0) throw Error(ErrorKind::ShapeMismatch, "empty sequence");
    if (static_cast<std::size_t>(sequence.cols()) != model.input_dim)
        throw Error(ErrorKind::ShapeMismatch, "sequence width " + std::to_string(sequence.cols()) + ", model expects " +
                                                  std::to_string(model.input_dim));
    const Sequence s = detail::standardize(model.normalizer, sequence);
    detail::ForwardCache cache;
    detail::forward(model.params, {&s}, nullptr, cache);
    return {logistic(cache.logit(0)), {}};
}

inline std::vector<Score> lstm_score_all(const LstmModel& model, const std::vector<Sequence>& sequences,
                                         unsigned workers = default_workers()) {
    std::vector<Score> out(sequences.size());
    parallel_for(sequences.size(), [&](std::size_t i) { out[i] = lstm_score(model, sequences[i]); }, workers);
    return out;
}

} // namespace jawprint
