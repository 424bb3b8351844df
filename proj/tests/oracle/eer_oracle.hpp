#pragma once

// Brute-force EER: FAR/FRR counted directly at each knot (distinct score or
// just above the max), FAR−FRR joined linearly between knots, the first sign
// change located on a dense grid and refined by bisection.

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

namespace oracle {

inline std::pair<double, double> eer_dense(const std::vector<double>& genuine, const std::vector<double>& impostor) {
    std::vector<double> knots = genuine;
    knots.insert(knots.end(), impostor.begin(), impostor.end());
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    knots.push_back(std::nextafter(knots.back(), std::numeric_limits<double>::infinity()));
    std::vector<double> far(knots.size()), frr(knots.size());
    for (std::size_t k = 0; k < knots.size(); ++k) {
        double fa = 0, fr = 0;
        for (double s : impostor) fa += s >= knots[k] ? 1.0 : 0.0;
        for (double s : genuine) fr += s < knots[k] ? 1.0 : 0.0;
        far[k] = fa / static_cast<double>(impostor.size());
        frr[k] = fr / static_cast<double>(genuine.size());
    }
    auto interp = [&](const std::vector<double>& v, double t) {
        for (std::size_t k = 1; k < knots.size(); ++k) {
            if (t <= knots[k]) {
                const double lam = (t - knots[k - 1]) / (knots[k] - knots[k - 1]);
                return v[k - 1] + lam * (v[k] - v[k - 1]);
            }
        }
        return v.back();
    };
    auto diff = [&](double t) { return interp(far, t) - interp(frr, t); };
    const double lo0 = knots.front(), hi0 = knots.back();
    const int grid = 20000;
    double prev = lo0;
    if (diff(lo0) <= 0.0) return {far.front(), lo0};
    for (int g = 1; g <= grid; ++g) {
        const double t = g == grid ? hi0 : lo0 + (hi0 - lo0) * g / grid;
        if (diff(t) <= 0.0) {
            double a = prev, b = t;
            for (int it = 0; it < 400 && b > a; ++it) {
                const double m = 0.5 * (a + b);
                if (m <= a || m >= b) break;
                (diff(m) <= 0.0 ? b : a) = m;
            }
            // a has diff > 0, b has diff <= 0; pick the exact linear root on b's segment
            double t_star = b;
            if (diff(b) < 0.0) {
                const double da = diff(a), db = diff(b);
                t_star = a + (b - a) * da / (da - db);
            }
            return {interp(far, t_star), t_star};
        }
        prev = t;
    }
    return {far.back(), hi0};
}

} // namespace oracle
