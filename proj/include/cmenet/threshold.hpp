#pragma once

#include <algorithm>
#include <cmath>

namespace cmenet {

/// Inputs of the two-penalty threshold operator. `z` is x_j'r_{-j}/n; delta1/delta2
/// are the current slopes of the two groups containing the coordinate, paired
/// with lambda1/lambda2 (sibling first, cousin second).
struct ThresholdInputs {
    double z = 0.0;
    double lambda1 = 1.0;
    double lambda2 = 1.0;
    double gamma = 3.0;
    double delta1 = 1.0;
    double delta2 = 1.0;
};

enum class ThresholdSegment {
    zero,       ///< |z| below delta_(1) + delta_(2)
    both,       ///< both MC+ terms still shrinking
    larger,     ///< only the larger-lambda term shrinking
    identity,   ///< |z| >= lambda_(1) * gamma
};

/// Minimizer of b -> (b - z)^2/2 + delta1 g_{lambda1,gamma}(b) + delta2 g_{lambda2,gamma}(b).
/// Continuous, odd and piecewise linear with four segments.
/// Throws InvalidParams when a segment denominator is not positive.
double threshold(const ThresholdInputs& in);

ThresholdSegment threshold_segment(const ThresholdInputs& in);

/// sgn(z)(|z| - t)_+
inline double soft_threshold(double z, double t) noexcept {
    const double a = std::abs(z) - t;
    if (a <= 0.0) return 0.0;
    return z > 0.0 ? a : -a;
}

namespace detail {

/// Breakpoints and slopes after ordering by lambda. Ties give index (1) to the first penalty.
struct OrderedThreshold {
    double lam1, lam2, d1, d2, gamma;
    double c_identity;  ///< lambda_(1) gamma
    double c_larger;    ///< lambda_(2) gamma + delta_(1)(1 - lambda_(2)/lambda_(1))
    double c_both;      ///< delta_(1) + delta_(2)
};

inline OrderedThreshold order_threshold(const ThresholdInputs& in) noexcept {
    OrderedThreshold t{};
    if (in.lambda1 >= in.lambda2) {
        t.lam1 = in.lambda1; t.lam2 = in.lambda2; t.d1 = in.delta1; t.d2 = in.delta2;
    } else {
        t.lam1 = in.lambda2; t.lam2 = in.lambda1; t.d1 = in.delta2; t.d2 = in.delta1;
    }
    t.gamma = in.gamma;
    t.c_identity = t.lam1 * in.gamma;
    t.c_larger = t.lam2 * in.gamma + t.d1 * (1.0 - t.lam2 / t.lam1);
    t.c_both = t.d1 + t.d2;
    return t;
}

/// Unvalidated evaluation for the coordinate-descent inner loop.
inline double threshold_fast(const ThresholdInputs& in) noexcept {
    const auto t = order_threshold(in);
    const double a = std::abs(in.z);
    const double s = in.z < 0.0 ? -1.0 : 1.0;
    if (a >= t.c_identity) return in.z;
    if (a >= t.c_larger) {
        return s * (a - t.d1) / (1.0 - t.d1 / (t.lam1 * t.gamma));
    }
    // zero on the closed interval [0, c_both], so |z| = lambda_1 + lambda_2 gives exactly 0
    if (a > t.c_both) {
        return s * std::max(0.0, a - t.d1 - t.d2) /
               (1.0 - t.d1 / (t.lam1 * t.gamma) - t.d2 / (t.lam2 * t.gamma));
    }
    return 0.0;
}

} // namespace detail

} // namespace cmenet
