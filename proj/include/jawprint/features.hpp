#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jawprint/error.hpp"
#include "jawprint/parallel.hpp"
#include "jawprint/signal.hpp"
#include "jawprint/spectrum.hpp"

namespace jawprint {

enum class FeatureDomain { Statistical, Temporal, Spectral };

inline std::string_view to_string(FeatureDomain d) {
    switch (d) {
    case FeatureDomain::Statistical: return "statistical";
    case FeatureDomain::Temporal: return "temporal";
    case FeatureDomain::Spectral: return "spectral";
    }
    return "?";
}

struct FeatureInfo {
    std::string_view key;      // column-name token
    std::string_view display;  // human-readable name used in ranking files
    FeatureDomain domain;
};

inline constexpr std::size_t kFeaturesPerAxis = 54;
inline constexpr std::size_t kFeaturesPerWindow = kFeaturesPerAxis * 3;
inline constexpr std::size_t kFusedFeatures = kFeaturesPerWindow * 3;

/// The closed per-axis catalog. Definitions live in docs/feature_catalog.md;
/// the first 27 entries are the features that appear in the published ranking.
inline constexpr std::array<FeatureInfo, kFeaturesPerAxis> kFeatureCatalog{{
    {"standard_deviation", "Standard Deviation", FeatureDomain::Statistical},
    {"minimum", "Minimum Value", FeatureDomain::Statistical},
    {"mean_absolute_deviation", "Mean Absolute Deviation", FeatureDomain::Statistical},
    {"median_absolute_deviation", "Median Absolute Deviation", FeatureDomain::Statistical},
    {"mean_absolute_diff", "Mean Absolute Difference", FeatureDomain::Temporal},
    {"sum_absolute_diff", "Sum of Absolute Differences", FeatureDomain::Temporal},
    {"signal_distance", "Signal Distance", FeatureDomain::Temporal},
    {"peak_to_peak", "Peak-to-Peak Distance", FeatureDomain::Statistical},
    {"absolute_energy", "Absolute Energy", FeatureDomain::Temporal},
    {"average_power", "Average Power", FeatureDomain::Temporal},
    {"mean_squared_error", "Mean Squared Error", FeatureDomain::Statistical},
    {"histogram_mode", "Histogram Mode", FeatureDomain::Statistical},
    {"ecdf_slope", "ECDF Slope", FeatureDomain::Statistical},
    {"temporal_centroid", "Temporal Centroid", FeatureDomain::Temporal},
    {"petrosian_fd", "Petrosian Fractal Dimension", FeatureDomain::Temporal},
    {"higuchi_fd", "Higuchi Fractal Dimension", FeatureDomain::Temporal},
    {"dfa", "Detrended Fluctuation Analysis", FeatureDomain::Temporal},
    {"lempel_ziv", "Lempel-Ziv Complexity", FeatureDomain::Temporal},
    {"wavelet_entropy", "Wavelet Entropy", FeatureDomain::Spectral},
    {"spectral_entropy", "Spectral Entropy", FeatureDomain::Spectral},
    {"spectral_slope", "Spectral Slope", FeatureDomain::Spectral},
    {"spectral_skewness", "Spectral Skewness", FeatureDomain::Spectral},
    {"spectral_kurtosis", "Spectral Kurtosis", FeatureDomain::Spectral},
    {"spectral_rolloff", "Spectral Roll-Off", FeatureDomain::Spectral},
    {"spectral_variation", "Spectral Variation", FeatureDomain::Spectral},
    {"spectral_positive_turning", "Spectral Positive Turning", FeatureDomain::Spectral},
    {"human_range_energy", "Human Range Energy", FeatureDomain::Spectral},
    {"mean", "Mean", FeatureDomain::Statistical},
    {"median", "Median", FeatureDomain::Statistical},
    {"maximum", "Maximum Value", FeatureDomain::Statistical},
    {"variance", "Variance", FeatureDomain::Statistical},
    {"root_mean_square", "Root Mean Square", FeatureDomain::Statistical},
    {"skewness", "Skewness", FeatureDomain::Statistical},
    {"kurtosis", "Kurtosis", FeatureDomain::Statistical},
    {"interquartile_range", "Interquartile Range", FeatureDomain::Statistical},
    {"zero_crossings", "Zero Crossing Count", FeatureDomain::Temporal},
    {"positive_turning", "Positive Turning Count", FeatureDomain::Temporal},
    {"negative_turning", "Negative Turning Count", FeatureDomain::Temporal},
    {"autocorrelation", "Lag-1 Autocorrelation", FeatureDomain::Temporal},
    {"slope", "Linear Trend Slope", FeatureDomain::Temporal},
    {"total_energy", "Total Energy", FeatureDomain::Temporal},
    {"histogram_entropy", "Histogram Entropy", FeatureDomain::Statistical},
    {"area_under_curve", "Area Under Curve", FeatureDomain::Temporal},
    {"mean_diff", "Mean of Differences", FeatureDomain::Temporal},
    {"median_diff", "Median of Differences", FeatureDomain::Temporal},
    {"neighbourhood_peaks", "Neighbourhood Peaks", FeatureDomain::Temporal},
    {"spectral_centroid", "Spectral Centroid", FeatureDomain::Spectral},
    {"spectral_spread", "Spectral Spread", FeatureDomain::Spectral},
    {"spectral_decrease", "Spectral Decrease", FeatureDomain::Spectral},
    {"median_frequency", "Median Frequency", FeatureDomain::Spectral},
    {"max_frequency", "Maximum Frequency", FeatureDomain::Spectral},
    {"fundamental_frequency", "Fundamental Frequency", FeatureDomain::Spectral},
    {"max_power_spectrum", "Maximum Power Spectrum", FeatureDomain::Spectral},
    {"power_bandwidth", "Power Bandwidth", FeatureDomain::Spectral},
}};

/// Index into kFeatureCatalog.
enum Feature : std::size_t {
    StandardDeviation, Minimum, MeanAbsoluteDeviation, MedianAbsoluteDeviation, MeanAbsoluteDiff,
    SumAbsoluteDiff, SignalDistance, PeakToPeak, AbsoluteEnergy, AveragePower, MeanSquaredError,
    HistogramMode, EcdfSlope, TemporalCentroid, PetrosianFd, HiguchiFd, Dfa, LempelZiv, WaveletEntropy,
    SpectralEntropy, SpectralSlope, SpectralSkewness, SpectralKurtosis, SpectralRolloff, SpectralVariation,
    SpectralPositiveTurning, HumanRangeEnergy, Mean, Median, Maximum, Variance, RootMeanSquare, Skewness,
    Kurtosis, InterquartileRange, ZeroCrossings, PositiveTurning, NegativeTurning, Autocorrelation, Slope,
    TotalEnergy, HistogramEntropy, AreaUnderCurve, MeanDiff, MedianDiff, NeighbourhoodPeaks,
    SpectralCentroid, SpectralSpread, SpectralDecrease, MedianFrequency, MaxFrequency, FundamentalFrequency,
    MaxPowerSpectrum, PowerBandwidth,
};

inline std::size_t feature_index(std::string_view key) {
    for (std::size_t i = 0; i < kFeatureCatalog.size(); ++i)
        if (kFeatureCatalog[i].key == key) return i;
    throw Error(ErrorKind::InvalidArgument, "unknown feature '" + std::string(key) + "'");
}

using AxisFeatures = std::array<double, kFeaturesPerAxis>;

inline constexpr std::array<char, 3> kAxisNames{'X', 'Y', 'Z'};

struct FeatureDescriptor {
    std::size_t feature = 0;  // catalog index
    int axis = 0;             // 0 = X, 1 = Y, 2 = Z
    SensorLocation location = SensorLocation::BelowChin;

    std::string_view name() const { return kFeatureCatalog[feature].key; }
    std::string_view display() const { return kFeatureCatalog[feature].display; }
    FeatureDomain domain() const { return kFeatureCatalog[feature].domain; }
    std::string column_name() const {
        return std::string(name()) + "__" + kAxisNames[static_cast<std::size_t>(axis)] + "__" +
               std::string(file_stem(location));
    }
    bool operator==(const FeatureDescriptor&) const = default;
};

struct FeatureVector {
    std::vector<double> values;
    std::vector<FeatureDescriptor> columns;
    WindowOrigin origin;

    std::size_t size() const { return values.size(); }
};

/// Column layout for one location: feature-major, axis X -> Y -> Z.
inline std::vector<FeatureDescriptor> window_columns(SensorLocation loc) {
    std::vector<FeatureDescriptor> cols;
    cols.reserve(kFeaturesPerWindow);
    for (std::size_t f = 0; f < kFeaturesPerAxis; ++f)
        for (int a = 0; a < 3; ++a) cols.push_back({f, a, loc});
    return cols;
}

/// Column layout of the fused vector: BelowChin, UpperLeftCheek, LowerRightCheek.
inline std::vector<FeatureDescriptor> fused_columns(std::span<const SensorLocation> locations = kAllLocations) {
    std::vector<FeatureDescriptor> cols;
    for (auto loc : locations) {
        auto c = window_columns(loc);
        cols.insert(cols.end(), c.begin(), c.end());
    }
    return cols;
}

namespace detail {

inline double sorted_median(const std::vector<double>& sorted) {
    const auto n = sorted.size();
    return n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

inline double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return sorted_median(v);
}

/// Linear-interpolated percentile on a sorted sample (position p * (N - 1)).
inline double percentile_sorted(const std::vector<double>& sorted, double p) {
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - static_cast<double>(lo));
}

/// Least-squares slope of y against x.
inline double regression_slope(std::span<const double> x, std::span<const double> y) {
    const auto n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxx > 0.0 ? sxy / sxx : 0.0;
}

struct Histogram10 {
    std::array<std::size_t, 10> counts{};
    double lo = 0.0;
    double width = 0.0;
};

inline Histogram10 histogram10(std::span<const double> x, double lo, double hi) {
    Histogram10 h;
    h.lo = lo;
    h.width = (hi - lo) / 10.0;
    // Bin j covers [lo + j*w, lo + (j+1)*w); the last bin also takes hi.
    std::array<double, 9> edges{};
    for (std::size_t j = 0; j < 9; ++j) edges[j] = lo + static_cast<double>(j + 1) * h.width;
    for (double v : x) {
        const auto bin = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), v) - edges.begin());
        h.counts[bin]++;
    }
    return h;
}

inline double higuchi(std::span<const double> x) {
    const std::size_t n = x.size();
    const std::size_t kmax = std::min<std::size_t>(10, n / 2);
    std::vector<double> log_inv_k;
    std::vector<double> log_l;
    for (std::size_t k = 1; k <= kmax; ++k) {
        double sum_lm = 0.0;
        std::size_t used = 0;
        for (std::size_t m = 1; m <= k; ++m) {
            const std::size_t steps = (n - m) / k;
            if (steps < 1) continue;
            double len = 0.0;
            for (std::size_t i = 1; i <= steps; ++i) len += std::abs(x[m - 1 + i * k] - x[m - 1 + (i - 1) * k]);
            len *= static_cast<double>(n - 1) / (static_cast<double>(steps * k)) / static_cast<double>(k);
            sum_lm += len;
            ++used;
        }
        if (used == 0) continue;
        const double lk = sum_lm / static_cast<double>(used);
        if (!(lk > 0.0)) return 0.0;
        log_inv_k.push_back(std::log(1.0 / static_cast<double>(k)));
        log_l.push_back(std::log(lk));
    }
    if (log_l.size() < 2) return 0.0;
    return regression_slope(log_inv_k, log_l);
}

/// Box sizes round(4 * (smax/4)^(j/9)), j = 0..9, deduplicated; smax = N/4.
inline std::vector<std::size_t> dfa_box_sizes(std::size_t n) {
    const std::size_t smax = n / 4;
    std::vector<std::size_t> sizes;
    if (smax < 4) return sizes;
    const double ratio = static_cast<double>(smax) / 4.0;
    for (int j = 0; j < 10; ++j) {
        const auto s = static_cast<std::size_t>(std::llround(4.0 * std::pow(ratio, j / 9.0)));
        if (s >= 4 && s <= smax && (sizes.empty() || sizes.back() != s)) sizes.push_back(s);
    }
    return sizes;
}

inline double dfa(std::span<const double> x, double mean) {
    const std::size_t n = x.size();
    const auto sizes = dfa_box_sizes(n);
    if (sizes.size() < 2) return 0.0;
    std::vector<double> profile(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += x[i] - mean;
        profile[i] = acc;
    }
    std::vector<double> log_s;
    std::vector<double> log_f;
    for (std::size_t s : sizes) {
        const std::size_t boxes = n / s;
        // Local index 0..s-1 has closed-form moments, so each box fit is O(s).
        const double sd = static_cast<double>(s);
        const double tm = (sd - 1.0) / 2.0;
        const double stt = sd * (sd * sd - 1.0) / 12.0;
        double total = 0.0;
        for (std::size_t b = 0; b < boxes; ++b) {
            const double* y = profile.data() + b * s;
            double ym = 0.0;
            for (std::size_t i = 0; i < s; ++i) ym += y[i];
            ym /= sd;
            double sty = 0.0;
            for (std::size_t i = 0; i < s; ++i) sty += (static_cast<double>(i) - tm) * (y[i] - ym);
            const double beta = sty / stt;
            double rss = 0.0;
            for (std::size_t i = 0; i < s; ++i) {
                const double r = y[i] - ym - beta * (static_cast<double>(i) - tm);
                rss += r * r;
            }
            total += rss / sd;
        }
        const double f = std::sqrt(total / static_cast<double>(boxes));
        if (!(f > 0.0)) return 0.0;
        log_s.push_back(std::log(sd));
        log_f.push_back(std::log(f));
    }
    return regression_slope(log_s, log_f);
}

/// LZ76 phrase count (Kaspar-Schuster scan).
inline std::size_t lz76_phrases(const std::vector<unsigned char>& s) {
    const std::size_t n = s.size();
    if (n <= 1) return n;
    std::size_t i = 0, k = 1, l = 1, c = 1, k_max = 1;
    while (true) {
        if (s[i + k - 1] == s[l + k - 1]) {
            ++k;
            if (l + k > n) {
                ++c;
                break;
            }
        } else {
            k_max = std::max(k, k_max);
            ++i;
            if (i == l) {
                ++c;
                l += k_max;
                if (l + 1 > n) break;
                i = 0;
                k = 1;
                k_max = 1;
            } else {
                k = 1;
            }
        }
    }
    return c;
}

inline double wavelet_entropy(std::span<const double> x) {
    const std::size_t n = x.size();
    std::array<double, 10> energy{};
    double total = 0.0;
    for (std::size_t a = 1; a <= 10; ++a) {
        const std::size_t len = std::min<std::size_t>(10 * a, n);
        const double ad = static_cast<double>(a);
        const double amp = 2.0 / (std::sqrt(3.0 * ad) * std::pow(std::numbers::pi, 0.25));
        std::vector<double> w(len);
        for (std::size_t j = 0; j < len; ++j) {
            const double tau = static_cast<double>(j) - (static_cast<double>(len) - 1.0) / 2.0;
            w[j] = amp * (1.0 - tau * tau / (ad * ad)) * std::exp(-tau * tau / (2.0 * ad * ad));
        }
        // 'same' convolution: full index m = i + (len - 1) / 2.
        const std::size_t offset = (len - 1) / 2;
        double e = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t m = i + offset;
            double c = 0.0;
            const std::size_t jlo = m >= n - 1 ? m - (n - 1) : 0;
            const std::size_t jhi = std::min(len - 1, m);
            for (std::size_t j = jlo; j <= jhi; ++j) c += w[j] * x[m - j];
            e += c * c;
        }
        energy[a - 1] = e;
        total += e;
    }
    if (!(total > 0.0)) return 0.0;
    double h = 0.0;
    for (double e : energy) {
        if (e > 0.0) {
            const double p = e / total;
            h -= p * std::log(p);
        }
    }
    return h;
}

/// Lowest bin frequency whose cumulative weight reaches frac of the total.
inline double cumulative_frequency(const std::vector<double>& freq, const std::vector<double>& weight,
                                   double frac) {
    const double total = std::accumulate(weight.begin(), weight.end(), 0.0);
    if (!(total > 0.0)) return 0.0;
    double cum = 0.0;
    for (std::size_t k = 0; k < weight.size(); ++k) {
        cum += weight[k];
        if (cum >= frac * total) return freq[k];
    }
    return freq.back();
}

inline void spectral_features(std::span<const double> x, double rate, AxisFeatures& out) {
    const Spectrum sp = magnitude_spectrum(x, rate);
    const auto& f = sp.freq;
    const auto& mag = sp.magnitude;
    const auto& pow = sp.power;
    const std::size_t bins = sp.size();
    const double sum_mag = std::accumulate(mag.begin(), mag.end(), 0.0);
    const double sum_pow = std::accumulate(pow.begin(), pow.end(), 0.0);

    double entropy = 0.0;
    if (sum_pow > 0.0 && bins > 1) {
        for (double p : pow) {
            if (p > 0.0) {
                const double q = p / sum_pow;
                entropy -= q * std::log2(q);
            }
        }
        entropy /= std::log2(static_cast<double>(bins));
    }
    out[SpectralEntropy] = entropy;
    out[SpectralSlope] = regression_slope(f, mag);

    double centroid = 0.0, spread = 0.0, skew = 0.0, kurt = 0.0;
    if (sum_mag > 0.0) {
        for (std::size_t k = 0; k < bins; ++k) centroid += f[k] * mag[k] / sum_mag;
        double m2 = 0.0, m3 = 0.0, m4 = 0.0;
        for (std::size_t k = 0; k < bins; ++k) {
            const double d = f[k] - centroid;
            const double w = mag[k] / sum_mag;
            m2 += d * d * w;
            m3 += d * d * d * w;
            m4 += d * d * d * d * w;
        }
        spread = std::sqrt(m2);
        if (m2 > 0.0) {
            skew = m3 / (spread * m2);
            kurt = m4 / (m2 * m2);
        }
    }
    out[SpectralCentroid] = centroid;
    out[SpectralSpread] = spread;
    out[SpectralSkewness] = skew;
    out[SpectralKurtosis] = kurt;

    out[SpectralRolloff] = cumulative_frequency(f, pow, 0.95);
    out[MedianFrequency] = cumulative_frequency(f, mag, 0.5);
    out[MaxFrequency] = cumulative_frequency(f, mag, 0.95);
    out[PowerBandwidth] = sum_pow > 0.0
                              ? cumulative_frequency(f, pow, 0.975) - cumulative_frequency(f, pow, 0.025)
                              : 0.0;

    double turning = 0.0;
    for (std::size_t k = 1; k + 1 < bins; ++k)
        if (mag[k - 1] < mag[k] && mag[k] > mag[k + 1]) turning += 1.0;
    out[SpectralPositiveTurning] = turning;

    double human = 0.0;
    if (sum_pow > 0.0) {
        for (std::size_t k = 0; k < bins; ++k)
            if (f[k] >= 0.6 && f[k] <= 2.5) human += pow[k];
        human /= sum_pow;
    }
    out[HumanRangeEnergy] = human;

    double dec_num = 0.0, dec_den = 0.0;
    for (std::size_t k = 1; k < bins; ++k) {
        dec_num += (mag[k] - mag[0]) / static_cast<double>(k);
        dec_den += mag[k];
    }
    out[SpectralDecrease] = dec_den > 0.0 ? dec_num / dec_den : 0.0;

    double fundamental = 0.0, best = 0.0;
    for (std::size_t k = 1; k < bins; ++k) {
        if (pow[k] > best) {
            best = pow[k];
            fundamental = f[k];
        }
    }
    out[FundamentalFrequency] = fundamental;
    out[MaxPowerSpectrum] = *std::max_element(pow.begin(), pow.end());

    // Halves compared on their own one-sided spectra.
    const std::size_t half = x.size() / 2;
    const Spectrum a = magnitude_spectrum(x.subspan(0, half), rate);
    const Spectrum b = magnitude_spectrum(x.subspan(half, half), rate);
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        dot += a.magnitude[k] * b.magnitude[k];
        na += a.power[k];
        nb += b.power[k];
    }
    out[SpectralVariation] = (na > 0.0 && nb > 0.0) ? 1.0 - dot / (std::sqrt(na) * std::sqrt(nb)) : 0.0;
}

} // namespace detail

/// All 54 per-axis features of a real series sampled at `rate` Hz.
/// Degenerate definitions (constant or all-zero input) fall back to 0.
inline AxisFeatures compute_axis_features(std::span<const double> x, double rate) {
    if (x.size() < 2) throw Error(ErrorKind::SeriesTooShort, std::to_string(x.size()) + " samples");
    if (!(rate > 0.0)) throw Error(ErrorKind::InvalidArgument, "rate must be positive");
    for (double v : x)
        if (!std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, "non-finite sample");

    using namespace detail;
    const std::size_t n = x.size();
    const double nd = static_cast<double>(n);
    const double dt = 1.0 / rate;
    AxisFeatures out{};

    std::vector<double> sorted(x.begin(), x.end());
    std::sort(sorted.begin(), sorted.end());
    const double lo = sorted.front();
    const double hi = sorted.back();
    const bool constant = lo == hi;
    const double mean = constant ? lo : std::accumulate(x.begin(), x.end(), 0.0) / nd;
    const double median = sorted_median(sorted);

    double m2 = 0.0, m3 = 0.0, m4 = 0.0, mad = 0.0, energy = 0.0, weighted_t = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = x[i] - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
        mad += std::abs(d);
        energy += x[i] * x[i];
        weighted_t += static_cast<double>(i) * dt * x[i] * x[i];
    }
    m2 /= nd;
    m3 /= nd;
    m4 /= nd;

    std::vector<double> diffs(n - 1);
    double sum_abs_diff = 0.0, distance = 0.0, sum_diff = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        diffs[i] = x[i + 1] - x[i];
        sum_abs_diff += std::abs(diffs[i]);
        distance += std::sqrt(1.0 + diffs[i] * diffs[i]);
        sum_diff += diffs[i];
    }

    out[StandardDeviation] = std::sqrt(m2);
    out[Minimum] = lo;
    out[Maximum] = hi;
    out[Mean] = mean;
    out[Median] = median;
    out[MeanAbsoluteDeviation] = mad / nd;
    {
        std::vector<double> dev(n);
        for (std::size_t i = 0; i < n; ++i) dev[i] = std::abs(x[i] - median);
        out[MedianAbsoluteDeviation] = median_of(std::move(dev));
    }
    out[MeanAbsoluteDiff] = sum_abs_diff / static_cast<double>(n - 1);
    out[SumAbsoluteDiff] = sum_abs_diff;
    out[SignalDistance] = distance;
    out[PeakToPeak] = hi - lo;
    out[AbsoluteEnergy] = energy;
    out[AveragePower] = energy / (static_cast<double>(n - 1) * dt);
    out[MeanSquaredError] = m2;
    out[Variance] = m2 * nd / (nd - 1.0);
    out[RootMeanSquare] = std::sqrt(energy / nd);
    out[Skewness] = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
    out[Kurtosis] = m2 > 0.0 ? m4 / (m2 * m2) - 3.0 : 0.0;
    out[InterquartileRange] = percentile_sorted(sorted, 0.75) - percentile_sorted(sorted, 0.25);

    if (constant) {
        out[HistogramMode] = lo;
        out[HistogramEntropy] = 0.0;
    } else {
        const auto h = histogram10(x, lo, hi);
        const auto best = static_cast<std::size_t>(
            std::distance(h.counts.begin(), std::max_element(h.counts.begin(), h.counts.end())));
        out[HistogramMode] = lo + (static_cast<double>(best) + 0.5) * h.width;
        double ent = 0.0;
        for (auto c : h.counts) {
            if (c > 0) {
                const double p = static_cast<double>(c) / nd;
                ent -= p * std::log(p);
            }
        }
        out[HistogramEntropy] = ent;
    }

    {
        const auto q50 = sorted[static_cast<std::size_t>(std::ceil(0.5 * nd)) - 1];
        const auto q75 = sorted[static_cast<std::size_t>(std::ceil(0.75 * nd)) - 1];
        out[EcdfSlope] = q75 != q50 ? 0.25 / (q75 - q50) : 0.0;
    }
    out[TemporalCentroid] = energy > 0.0 ? weighted_t / energy : 0.0;

    {
        double sign_changes = 0.0;
        for (std::size_t i = 0; i + 1 < diffs.size(); ++i)
            if (diffs[i] * diffs[i + 1] < 0.0) sign_changes += 1.0;
        const double l = std::log10(nd);
        out[PetrosianFd] = l / (l + std::log10(nd / (nd + 0.4 * sign_changes)));
    }
    out[HiguchiFd] = constant ? 0.0 : higuchi(x);
    out[Dfa] = constant ? 0.0 : dfa(x, mean);
    {
        std::vector<unsigned char> bits(n);
        for (std::size_t i = 0; i < n; ++i) bits[i] = x[i] > median ? 1 : 0;
        out[LempelZiv] = static_cast<double>(lz76_phrases(bits)) * std::log2(nd) / nd;
    }
    out[WaveletEntropy] = wavelet_entropy(x);

    {
        double zc = 0.0, pos = 0.0, neg = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i)
            if ((x[i] >= 0.0) != (x[i + 1] >= 0.0)) zc += 1.0;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (x[i - 1] < x[i] && x[i] > x[i + 1]) pos += 1.0;
            if (x[i - 1] > x[i] && x[i] < x[i + 1]) neg += 1.0;
        }
        out[ZeroCrossings] = zc;
        out[PositiveTurning] = pos;
        out[NegativeTurning] = neg;
    }
    {
        double num = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) num += (x[i] - mean) * (x[i + 1] - mean);
        const double den = m2 * nd;
        out[Autocorrelation] = den > 0.0 ? num / den : 0.0;
    }
    {
        std::vector<double> t(n);
        for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<double>(i) * dt;
        out[Slope] = regression_slope(t, x);
    }
    {
        double te = 0.0, auc = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            te += 0.5 * (x[i] * x[i] + x[i + 1] * x[i + 1]) * dt;
            auc += 0.5 * (x[i] + x[i + 1]) * dt;
        }
        out[TotalEnergy] = te;
        out[AreaUnderCurve] = auc;
    }
    out[MeanDiff] = sum_diff / static_cast<double>(n - 1);
    out[MedianDiff] = median_of(diffs);
    {
        constexpr std::size_t reach = 10;
        double peaks = 0.0;
        if (n >= 2 * reach + 1) {
            for (std::size_t i = reach; i + reach < n; ++i) {
                bool peak = true;
                for (std::size_t j = i - reach; j <= i + reach && peak; ++j)
                    if (j != i && !(x[i] > x[j])) peak = false;
                if (peak) peaks += 1.0;
            }
        }
        out[NeighbourhoodPeaks] = peaks;
    }
    spectral_features(x, rate, out);
    return out;
}

/// 162 values, feature-major with axes X, Y, Z.
inline FeatureVector compute_window_features(const Window& window) {
    if (window.data.rows() < 2) throw Error(ErrorKind::SeriesTooShort, "window shorter than 2 samples");
    FeatureVector fv;
    fv.origin = window.origin;
    fv.columns = window_columns(window.location);
    fv.values.resize(kFeaturesPerWindow);
    std::array<AxisFeatures, 3> per_axis;
    for (int a = 0; a < 3; ++a) {
        std::vector<double> series(static_cast<std::size_t>(window.data.rows()));
        for (Eigen::Index r = 0; r < window.data.rows(); ++r) series[static_cast<std::size_t>(r)] = window.data(r, a);
        per_axis[static_cast<std::size_t>(a)] = compute_axis_features(series, window.rate);
    }
    for (std::size_t f = 0; f < kFeaturesPerAxis; ++f)
        for (std::size_t a = 0; a < 3; ++a) fv.values[f * 3 + a] = per_axis[a][f];
    return fv;
}

/// Parallel over windows; output order matches input order.
inline std::vector<FeatureVector> compute_features(const std::vector<Window>& windows,
                                                   unsigned workers = default_workers()) {
    std::vector<FeatureVector> out(windows.size());
    parallel_for(windows.size(), [&](std::size_t i) { out[i] = compute_window_features(windows[i]); }, workers);
    return out;
}

/// Concatenation in fixed location order regardless of map iteration order.
inline FeatureVector fuse(const std::map<SensorLocation, FeatureVector>& per_location) {
    FeatureVector out;
    bool first = true;
    for (auto loc : kAllLocations) {
        auto it = per_location.find(loc);
        if (it == per_location.end()) throw Error(ErrorKind::MissingLocation, std::string(file_stem(loc)));
        const auto& v = it->second;
        if (first) {
            out.origin = v.origin;
            first = false;
        } else if (!(v.origin == out.origin)) {
            throw Error(ErrorKind::InvalidArgument, "fusing vectors from different windows");
        }
        out.values.insert(out.values.end(), v.values.begin(), v.values.end());
        out.columns.insert(out.columns.end(), v.columns.begin(), v.columns.end());
    }
    return out;
}

/// Z-score statistics fitted on training rows only.
struct NormalizerState {
    Eigen::VectorXd mean;
    Eigen::VectorXd stddev;

    Eigen::Index dims() const { return mean.size(); }
};

inline NormalizerState fit_normalizer(const Eigen::MatrixXd& train) {
    if (train.rows() == 0 || train.cols() == 0) throw Error(ErrorKind::EmptyMatrix, "cannot fit on empty matrix");
    NormalizerState s;
    s.mean = train.colwise().mean().transpose();
    s.stddev.resize(train.cols());
    for (Eigen::Index c = 0; c < train.cols(); ++c) {
        const double var = (train.col(c).array() - s.mean(c)).square().mean();
        s.stddev(c) = std::sqrt(var);
    }
    return s;
}

inline Eigen::MatrixXd apply_normalizer(const NormalizerState& state, const Eigen::MatrixXd& m) {
    if (m.cols() != state.dims())
        throw Error(ErrorKind::DimensionMismatch,
                    std::to_string(m.cols()) + " columns vs normalizer " + std::to_string(state.dims()));
    Eigen::MatrixXd out(m.rows(), m.cols());
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        if (state.stddev(c) > 0.0)
            out.col(c) = (m.col(c).array() - state.mean(c)) / state.stddev(c);
        else
            out.col(c).setZero();
    }
    return out;
}

inline Eigen::VectorXd normalize_row(const NormalizerState& state, const Eigen::VectorXd& v) {
    Eigen::MatrixXd row = v.transpose();
    return apply_normalizer(state, row).row(0).transpose();
}

/// Stacks feature vectors into a rows = windows matrix.
inline Eigen::MatrixXd to_matrix(const std::vector<FeatureVector>& rows) {
    if (rows.empty()) return {};
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows.front().size()) throw Error(ErrorKind::DimensionMismatch, "ragged feature rows");
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r].values[c];
    }
    return m;
}

} // namespace jawprint
