#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "jawprint/csv.hpp"
#include "jawprint/error.hpp"
#include "jawprint/features.hpp"

namespace jawprint {

struct SelectionConfig {
    std::size_t k_top = 50;
    std::size_t relieff_neighbors = 10;
    std::size_t relieff_iterations = 0;  // 0 = every instance
    std::uint64_t seed = 42;
};

struct RankedFeature {
    FeatureDescriptor descriptor;
    std::size_t column = 0;  // position in the ranked matrix
    double score = 0.0;
};

using RankedFeatures = std::vector<RankedFeature>;

/// ReliefF for binary labels (Kononenko 1997): Manhattan distance over
/// features scaled by their max-min range, k nearest hits and misses per
/// sampled instance. Instances are visited in a seeded permutation.
inline RankedFeatures relieff_rank(const Eigen::MatrixXd& x, const std::vector<int>& y,
                                   const std::vector<FeatureDescriptor>& columns, const SelectionConfig& cfg) {
    const auto n = static_cast<std::size_t>(x.rows());
    const auto d = static_cast<std::size_t>(x.cols());
    if (n == 0 || d == 0) throw Error(ErrorKind::EmptyMatrix, "relieff on empty matrix");
    if (y.size() != n) throw Error(ErrorKind::DimensionMismatch, "labels vs rows");
    if (columns.size() != d) throw Error(ErrorKind::DimensionMismatch, "descriptors vs columns");
    const std::size_t k = cfg.relieff_neighbors;
    if (k == 0) throw Error(ErrorKind::InvalidArgument, "relieff needs k >= 1");

    std::size_t positives = 0;
    for (int label : y) {
        if (label != 0 && label != 1) throw Error(ErrorKind::InvalidArgument, "labels must be 0/1");
        positives += static_cast<std::size_t>(label);
    }
    const std::size_t negatives = n - positives;
    if (positives < k + 1 || negatives < k + 1)
        throw Error(ErrorKind::DegenerateClass, "each class needs at least k+1 = " + std::to_string(k + 1) +
                                                    " members (have " + std::to_string(positives) + "/" +
                                                    std::to_string(negatives) + ")");

    Eigen::MatrixXd scaled(x.rows(), x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        const double lo = x.col(c).minCoeff();
        const double range = x.col(c).maxCoeff() - lo;
        if (range > 0.0)
            scaled.col(c) = (x.col(c).array() - lo) / range;
        else
            scaled.col(c).setZero();
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(cfg.seed);
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t m = cfg.relieff_iterations == 0 ? n : std::min(cfg.relieff_iterations, n);
    const double norm = static_cast<double>(m) * static_cast<double>(k);

    Eigen::VectorXd weights = Eigen::VectorXd::Zero(x.cols());
    std::vector<std::pair<double, std::size_t>> hits, misses;
    for (std::size_t it = 0; it < m; ++it) {
        const std::size_t i = order[it];
        hits.clear();
        misses.clear();
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double dist = (scaled.row(static_cast<Eigen::Index>(i)) - scaled.row(static_cast<Eigen::Index>(j)))
                                    .cwiseAbs()
                                    .sum();
            (y[j] == y[i] ? hits : misses).emplace_back(dist, j);
        }
        std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(k), hits.end());
        std::partial_sort(misses.begin(), misses.begin() + static_cast<std::ptrdiff_t>(k), misses.end());
        const auto xi = scaled.row(static_cast<Eigen::Index>(i));
        for (std::size_t q = 0; q < k; ++q) {
            const auto hit = scaled.row(static_cast<Eigen::Index>(hits[q].second));
            const auto miss = scaled.row(static_cast<Eigen::Index>(misses[q].second));
            weights -= ((xi - hit).cwiseAbs() / norm).transpose();
            weights += ((xi - miss).cwiseAbs() / norm).transpose();
        }
    }

    RankedFeatures ranked(d);
    for (std::size_t c = 0; c < d; ++c) ranked[c] = {columns[c], c, weights(static_cast<Eigen::Index>(c))};
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const RankedFeature& a, const RankedFeature& b) { return a.score > b.score; });
    return ranked;
}

inline std::vector<RankedFeature> select_top(const RankedFeatures& ranked, std::size_t k = 50) {
    if (k > ranked.size())
        throw Error(ErrorKind::KTooLarge, std::to_string(k) + " > " + std::to_string(ranked.size()));
    return {ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k)};
}

/// `rank,feature,axis,location,score`; rank starts at 1.
inline void write_ranking(std::ostream& out, const std::vector<RankedFeature>& ranked) {
    out << "rank,feature,axis,location,score\n";
    for (std::size_t r = 0; r < ranked.size(); ++r) {
        const auto& d = ranked[r].descriptor;
        out << (r + 1) << ',' << d.display() << ',' << kAxisNames[static_cast<std::size_t>(d.axis)] << ','
            << short_label(d.location) << ',' << csv::format_fixed(ranked[r].score, 6) << '\n';
    }
}

} // namespace jawprint
