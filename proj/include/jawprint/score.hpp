#pragma once

#include <cmath>
#include <string>

namespace jawprint {

struct Score {
    double probability = 0.5;
    std::string origin;
};

inline double logistic(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

} // namespace jawprint
