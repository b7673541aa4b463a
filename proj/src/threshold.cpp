#include <cmenet/threshold.hpp>
#include <cmenet/error.hpp>

namespace cmenet {

namespace {

void validate(const ThresholdInputs& in) {
    if (!(in.lambda1 > 0.0 && in.lambda2 > 0.0)) {
        throw Error(ErrorCode::invalid_params, "threshold lambdas must be positive");
    }
    if (!(in.gamma > 1.0)) throw Error(ErrorCode::invalid_params, "gamma must exceed 1");
    if (!(in.delta1 > 0.0 && in.delta2 > 0.0)) {
        throw Error(ErrorCode::invalid_params, "threshold slopes must be positive");
    }
    const auto t = detail::order_threshold(in);
    const double den_larger = 1.0 - t.d1 / (t.lam1 * t.gamma);
    const double den_both = den_larger - t.d2 / (t.lam2 * t.gamma);
    if (!(den_larger > 0.0 && den_both > 0.0)) {
        throw Error(ErrorCode::invalid_params,
                    "threshold denominators not positive (coordinate-wise convexity violated)");
    }
}

} // namespace

double threshold(const ThresholdInputs& in) {
    validate(in);
    return detail::threshold_fast(in);
}

ThresholdSegment threshold_segment(const ThresholdInputs& in) {
    validate(in);
    const auto t = detail::order_threshold(in);
    const double a = std::abs(in.z);
    if (a >= t.c_identity) return ThresholdSegment::identity;
    if (a >= t.c_larger) return ThresholdSegment::larger;
    if (a > t.c_both) return ThresholdSegment::both;
    return ThresholdSegment::zero;
}

} // namespace cmenet
