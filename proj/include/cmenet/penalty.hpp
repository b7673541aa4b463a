#pragma once

#include <cmenet/design.hpp>

#include <cmath>
#include <span>

namespace cmenet {

/// Penalty parameters (lambda_s, lambda_c, gamma, tau) of the exponential-MC+ criterion.
struct PenaltyParams {
    double lambda_s = 0.0;
    double lambda_c = 0.0;
    double gamma = 3.0;
    double tau = 0.05;

    /// Validates positivity, gamma > 1 and the coordinate-wise convexity
    /// condition tau + 1/gamma < 1/2.
    static PenaltyParams checked(double lambda_s, double lambda_c, double gamma, double tau);

    /// Validates positivity and gamma > 1 only. For diagnostics.
    static PenaltyParams unchecked(double lambda_s, double lambda_c, double gamma, double tau);

    bool coordinatewise_convex() const noexcept { return tau + 1.0 / gamma < 0.5; }
};

namespace detail {

inline double mcp_inner(double beta, double lambda, double gamma) noexcept {
    const double a = std::abs(beta);
    const double lg = lambda * gamma;
    return a <= lg ? a - beta * beta / (2.0 * lg) : 0.5 * lg;
}

/// Derivative of mcp_inner on beta != 0; the kink at |beta| = lambda*gamma uses the right limit 0.
inline double mcp_inner_derivative(double beta, double lambda, double gamma) noexcept {
    const double m = 1.0 - std::abs(beta) / (lambda * gamma);
    const double s = beta > 0.0 ? 1.0 : (beta < 0.0 ? -1.0 : 0.0);
    return m > 0.0 ? s * m : 0.0;
}

inline double exp_outer(double theta, double lambda, double tau) noexcept {
    return lambda * lambda / tau * -std::expm1(-tau * theta / lambda);
}

inline double slope(double norm, double lambda, double tau) noexcept {
    return lambda * std::exp(-tau * norm / lambda);
}

} // namespace detail

/// Inner MC+ penalty without the lambda factor: the integral of (1 - x/(lambda*gamma))_+ over [0,|beta|].
double mcp_inner(double beta, double lambda, double gamma);

/// Outer exponential penalty (lambda^2/tau)(1 - exp(-tau*theta/lambda)).
double exp_outer(double theta, double lambda, double tau);

/// Sum of mcp_inner over the group members.
double group_norm(std::span<const double> betas, double lambda, double gamma);

/// Linearized slope lambda * exp(-tau * norm / lambda), in (0, lambda].
double slope(double group_norm, double lambda, double tau);

/// Group norms and slopes for every sibling group S(j) and cousin group C(j).
struct GroupState {
    Vector norm_s;
    Vector norm_c;
    Vector slope_s;
    Vector slope_c;
};

GroupState compute_group_state(const CmeDesign& design, const Vector& beta,
                               const PenaltyParams& params);

/// Q(beta) = ||y - X beta||^2 / (2n) + P_S(beta) + P_C(beta).
/// y is centered internally. Only the first design.size() entries of beta are used.
double objective(const CmeDesign& design, const Vector& y, const Vector& beta,
                 const PenaltyParams& params);

struct KktReport {
    double max_violation = 0.0;
    IndexSet violating; ///< indices whose violation exceeds the tolerance
    Vector violation;   ///< per-effect distance from 0 to the subgradient set
};

/// Distance of 0 from -x_e'r/n + D_S * dg_S(beta_e) + D_C * dg_C(beta_e), per effect.
/// `inner` holds x_e'r/n for r = y_c - X beta.
KktReport kkt_from_inner_products(const CmeDesign& design, const Vector& inner,
                                  const Vector& beta, const GroupState& groups,
                                  const PenaltyParams& params, double tol);

KktReport kkt_residual(const CmeDesign& design, const Vector& y, const Vector& beta,
                       const PenaltyParams& params, double tol = 1e-6);

/// Centered copy of y.
Vector centered(const Vector& y);

/// x_e'r/n for every design column.
Vector inner_products(const CmeDesign& design, const Vector& residual);

/// y_c - X beta, using only the nonzero coefficients.
Vector residual_of(const CmeDesign& design, const Vector& y_centered, const Vector& beta);

} // namespace cmenet
