#pragma once

#include <cmath>
#include <numbers>
#include <vector>

namespace oracle {

/// Averaged periodogram over non-overlapping mean-removed segments, by direct DFT.
inline std::vector<double> averaged_power(const std::vector<double>& x, std::size_t segment) {
    std::vector<double> power(segment / 2 + 1, 0.0);
    const std::size_t count = x.size() / segment;
    for (std::size_t s = 0; s < count; ++s) {
        double mean = 0.0;
        for (std::size_t i = 0; i < segment; ++i) mean += x[s * segment + i];
        mean /= static_cast<double>(segment);
        for (std::size_t k = 0; k < power.size(); ++k) {
            double re = 0.0, im = 0.0;
            for (std::size_t i = 0; i < segment; ++i) {
                const double ang = 2 * std::numbers::pi * static_cast<double>(k * i % segment) / static_cast<double>(segment);
                re += (x[s * segment + i] - mean) * std::cos(ang);
                im -= (x[s * segment + i] - mean) * std::sin(ang);
            }
            power[k] += (re * re + im * im) / static_cast<double>(count);
        }
    }
    return power;
}

inline double peak_frequency(const std::vector<double>& power, double rate, std::size_t segment, double min_freq = 0.5) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < power.size(); ++k) {
        const double f = static_cast<double>(k) * rate / static_cast<double>(segment);
        if (f >= min_freq && (best == 0 || power[k] > power[best])) best = k;
    }
    return static_cast<double>(best) * rate / static_cast<double>(segment);
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) ma += a[i], mb += b[i];
    ma /= static_cast<double>(a.size());
    mb /= static_cast<double>(b.size());
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

} // namespace oracle
