#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <unordered_map>
#include <vector>

namespace jawprint {

/// One-sided magnitude spectrum of an untapered real series.
struct Spectrum {
    std::vector<double> freq;       // k * rate / N, k = 0 .. N/2
    std::vector<double> magnitude;  // |X_k|
    std::vector<double> power;      // |X_k|^2

    std::size_t size() const { return freq.size(); }
};

namespace detail {

struct TwiddleTable {
    std::vector<double> cos_table;
    std::vector<double> sin_table;
};

inline const TwiddleTable& twiddles(std::size_t n) {
    thread_local std::unordered_map<std::size_t, TwiddleTable> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    TwiddleTable table;
    table.cos_table.resize(n);
    table.sin_table.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double angle = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
        table.cos_table[i] = std::cos(angle);
        table.sin_table[i] = std::sin(angle);
    }
    return cache.emplace(n, std::move(table)).first->second;
}

} // namespace detail

/// Plain O(N^2) DFT over bins 0..N/2; N is small (a 250-sample window).
inline Spectrum magnitude_spectrum(std::span<const double> x, double rate) {
    const std::size_t n = x.size();
    const std::size_t bins = n / 2 + 1;
    const auto& tw = detail::twiddles(n);
    Spectrum s;
    s.freq.resize(bins);
    s.magnitude.resize(bins);
    s.power.resize(bins);
    for (std::size_t k = 0; k < bins; ++k) {
        double re = 0.0;
        double im = 0.0;
        std::size_t idx = 0;
        for (std::size_t i = 0; i < n; ++i) {
            re += x[i] * tw.cos_table[idx];
            im -= x[i] * tw.sin_table[idx];
            idx += k;
            if (idx >= n) idx -= n;
        }
        s.freq[k] = static_cast<double>(k) * rate / static_cast<double>(n);
        s.power[k] = re * re + im * im;
        s.magnitude[k] = std::sqrt(s.power[k]);
    }
    return s;
}

} // namespace jawprint
