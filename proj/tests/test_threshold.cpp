#include "doctest.h"
#include "oracles.hpp"

#include <cmenet/penalty.hpp>
#include <cmenet/threshold.hpp>

#include <random>

using namespace cmenet;

namespace {

ThresholdInputs baseline(double z) { return {z, 1.0, 0.5, 3.0, 1.0, 0.5}; }

double majorized(const ThresholdInputs& in, double b) {
    auto g = [](double x, double lam, double gam) {
        const double a = std::abs(x);
        return a <= lam * gam ? a - x * x / (2 * lam * gam) : lam * gam / 2;
    };
    return 0.5 * (b - in.z) * (b - in.z) + in.delta1 * g(b, in.lambda1, in.gamma) +
           in.delta2 * g(b, in.lambda2, in.gamma);
}

ThresholdInputs random_inputs(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ThresholdInputs in;
    in.lambda1 = 0.05 + 2.0 * u(rng);
    in.lambda2 = u(rng) < 0.1 ? in.lambda1 : 0.05 + 2.0 * u(rng);
    in.gamma = 2.05 + 8.0 * u(rng);
    in.delta1 = in.lambda1 * (0.01 + 0.99 * u(rng));
    in.delta2 = in.lambda2 * (0.01 + 0.99 * u(rng));
    const double reach = 1.3 * std::max(in.lambda1, in.lambda2) * in.gamma;
    in.z = reach * (2.0 * u(rng) - 1.0);
    return in;
}

} // namespace

TEST_CASE("baseline setting examples") {
    CHECK(threshold(baseline(0.3)) == 0.0);
    CHECK(threshold_segment(baseline(0.3)) == ThresholdSegment::zero);
    CHECK(threshold(baseline(5.0)) == 5.0);
    CHECK(threshold_segment(baseline(5.0)) == ThresholdSegment::identity);
    CHECK(threshold(baseline(2.0)) == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(threshold(baseline(-2.0)) == doctest::Approx(-1.5).epsilon(1e-14));
    // segment 3 formula at the shared boundary |z| = 2 gives the same value
    const double seg3 = (2.0 - 1.0 - 0.5) / (1.0 - 1.0 / 3.0 - 0.5 / 1.5);
    CHECK(seg3 == doctest::Approx(1.5).epsilon(1e-14));
    const double oracle_b =
        oracle::minimize_1d([](double b) { return majorized(baseline(2.0), b); }, -0.5, 2.5);
    CHECK(std::abs(oracle_b - 1.5) < 1e-6);
}

TEST_CASE("threshold matches the numerical minimizer") {
    std::mt19937_64 rng(20240601);
    for (int k = 0; k < 300; ++k) {
        const auto in = random_inputs(rng);
        const double lo = std::min(0.0, in.z) - 0.01;
        const double hi = std::max(0.0, in.z) + 0.01;
        const double ref = oracle::minimize_1d([&](double b) { return majorized(in, b); }, lo, hi);
        const double got = threshold(in);
        CHECK_MESSAGE(std::abs(got - ref) < 1e-6, "z=" << in.z << " l1=" << in.lambda1
                                                       << " l2=" << in.lambda2
                                                       << " g=" << in.gamma);
    }
}

TEST_CASE("continuity, symmetry and shrinkage") {
    std::mt19937_64 rng(99);
    for (int k = 0; k < 100; ++k) {
        auto in = random_inputs(rng);
        const auto t = detail::order_threshold(in);
        for (double edge : {t.c_both, t.c_larger, t.c_identity}) {
            auto lo = in, hi = in;
            lo.z = edge - 1e-9;
            hi.z = edge + 1e-9;
            CHECK(std::abs(threshold(hi) - threshold(lo)) < 1e-7);
        }
        auto neg = in;
        neg.z = -in.z;
        CHECK(threshold(neg) == -threshold(in));
        CHECK(std::abs(threshold(in)) <= std::abs(in.z));
        double prev = -1e300;
        for (double z = -2.0 * t.c_identity; z <= 2.0 * t.c_identity; z += t.c_identity / 97.0) {
            auto s = in;
            s.z = z;
            const double v = threshold(s);
            CHECK(v >= prev);
            prev = v;
        }
    }
}

TEST_CASE("segment boundaries") {
    const auto t = detail::order_threshold(baseline(0.0));
    // the zero segment is closed; the others are closed on the left
    CHECK(threshold_segment(baseline(t.c_both)) == ThresholdSegment::zero);
    CHECK(threshold(baseline(t.c_both)) == 0.0);
    CHECK(threshold_segment(baseline(std::nextafter(t.c_both, 10.0))) == ThresholdSegment::both);
    CHECK(threshold_segment(baseline(t.c_larger)) == ThresholdSegment::larger);
    CHECK(threshold_segment(baseline(t.c_identity)) == ThresholdSegment::identity);
}

TEST_CASE("soft-threshold limit") {
    for (double z : {-3.0, -1.2, -0.1, 0.0, 0.4, 0.9, 2.5, 7.0}) {
        ThresholdInputs in{z, 0.4, 0.3, 1e9, 0.4, 0.3};
        CHECK(std::abs(threshold(in) - soft_threshold(z, 0.7)) < 1e-6);
    }
    CHECK(soft_threshold(-2.0, 0.5) == -1.5);
    CHECK(soft_threshold(0.2, 0.5) == 0.0);
}

TEST_CASE("outputs satisfy the coordinate stationarity condition") {
    std::mt19937_64 rng(7);
    for (int k = 0; k < 200; ++k) {
        const auto in = random_inputs(rng);
        const double b = threshold(in);
        if (b == 0.0) {
            CHECK(std::abs(in.z) <= in.delta1 + in.delta2 + 1e-12);
        } else {
            const double g = b - in.z + in.delta1 * detail::mcp_inner_derivative(b, in.lambda1, in.gamma) +
                             in.delta2 * detail::mcp_inner_derivative(b, in.lambda2, in.gamma);
            CHECK(std::abs(g) < 1e-10 * std::max(1.0, std::abs(in.z)));
        }
    }
}

TEST_CASE("equal lambdas and degenerate orderings") {
    // equal lambdas: the larger-only segment is empty
    ThresholdInputs tie{0.0, 0.8, 0.8, 4.0, 0.6, 0.3};
    const auto t = detail::order_threshold(tie);
    CHECK(t.d1 == 0.6);
    CHECK(t.c_larger == doctest::Approx(t.c_identity));
    for (double z = 0.0; z < 5.0; z += 0.05) {
        tie.z = z;
        const double ref = oracle::minimize_1d([&](double b) { return majorized(tie, b); },
                                               -0.01, z + 0.01);
        CHECK(std::abs(threshold(tie) - ref) < 1e-6);
    }
    // with delta_i <= lambda_i and gamma > 2 the breakpoints stay ordered
    std::mt19937_64 rng(3);
    for (int k = 0; k < 1000; ++k) {
        const auto o = detail::order_threshold(random_inputs(rng));
        CHECK(o.c_both <= o.c_larger);
        CHECK(o.c_larger <= o.c_identity + 1e-12);
    }
}

TEST_CASE("invalid inputs") {
    CHECK_THROWS_AS(threshold({1.0, 1.0, 1.0, 1.5, 1.0, 1.0}), Error);
    CHECK_THROWS_AS(threshold({1.0, 0.0, 1.0, 3.0, 1.0, 1.0}), Error);
    CHECK_THROWS_AS(threshold({1.0, 1.0, 1.0, 3.0, 0.0, 1.0}), Error);
}
