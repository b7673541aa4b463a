#include <cmenet/penalty.hpp>

#include <algorithm>
#include <string>

namespace cmenet {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::invalid_params, what);
}

void check_dims(const CmeDesign& design, const Vector& y, const Vector& beta) {
    if (y.size() != design.n()) {
        throw Error(ErrorCode::dimension_mismatch,
                    "response has " + std::to_string(y.size()) + " entries, design has " +
                        std::to_string(design.n()) + " rows");
    }
    if (beta.size() < design.size()) {
        throw Error(ErrorCode::dimension_mismatch,
                    "coefficient vector shorter than the number of design columns");
    }
}

} // namespace

PenaltyParams PenaltyParams::unchecked(double lambda_s, double lambda_c, double gamma,
                                       double tau) {
    require(lambda_s > 0.0 && std::isfinite(lambda_s), "lambda_s must be positive");
    require(lambda_c > 0.0 && std::isfinite(lambda_c), "lambda_c must be positive");
    require(gamma > 1.0, "gamma must exceed 1");
    require(tau > 0.0, "tau must be positive");
    return {lambda_s, lambda_c, gamma, tau};
}

PenaltyParams PenaltyParams::checked(double lambda_s, double lambda_c, double gamma, double tau) {
    auto params = unchecked(lambda_s, lambda_c, gamma, tau);
    require(params.coordinatewise_convex(), "tau + 1/gamma must be below 1/2");
    return params;
}

double mcp_inner(double beta, double lambda, double gamma) {
    require(lambda > 0.0, "lambda must be positive");
    require(gamma > 1.0, "gamma must exceed 1");
    return detail::mcp_inner(beta, lambda, gamma);
}

double exp_outer(double theta, double lambda, double tau) {
    require(lambda > 0.0, "lambda must be positive");
    require(tau > 0.0, "tau must be positive");
    require(theta >= 0.0, "theta must be nonnegative");
    return detail::exp_outer(theta, lambda, tau);
}

double group_norm(std::span<const double> betas, double lambda, double gamma) {
    double norm = 0.0;
    for (double b : betas) norm += mcp_inner(b, lambda, gamma);
    return norm;
}

double slope(double group_norm, double lambda, double tau) {
    require(group_norm >= 0.0, "group norm must be nonnegative");
    return detail::slope(group_norm, lambda, tau);
}

GroupState compute_group_state(const CmeDesign& design, const Vector& beta,
                               const PenaltyParams& params) {
    const Index p = design.p();
    GroupState gs{Vector::Zero(p), Vector::Zero(p), Vector(p), Vector(p)};
    for (Index e = 0; e < design.size(); ++e) {
        const double b = beta[e];
        if (b == 0.0) continue;
        gs.norm_s[design.sibling_of(e)] += detail::mcp_inner(b, params.lambda_s, params.gamma);
        gs.norm_c[design.cousin_of(e)] += detail::mcp_inner(b, params.lambda_c, params.gamma);
    }
    for (Index j = 0; j < p; ++j) {
        gs.slope_s[j] = detail::slope(gs.norm_s[j], params.lambda_s, params.tau);
        gs.slope_c[j] = detail::slope(gs.norm_c[j], params.lambda_c, params.tau);
    }
    return gs;
}

Vector centered(const Vector& y) {
    return (y.array() - y.mean()).matrix();
}

Vector residual_of(const CmeDesign& design, const Vector& y_centered, const Vector& beta) {
    Vector r = y_centered;
    for (Index e = 0; e < design.size(); ++e) {
        if (beta[e] != 0.0) r.noalias() -= design.column(e) * beta[e];
    }
    return r;
}

Vector inner_products(const CmeDesign& design, const Vector& residual) {
    // column by column, in the same form as the solver's update, so the two agree bitwise
    const double inv_n = 1.0 / static_cast<double>(design.n());
    Vector c(design.size());
    for (Index e = 0; e < design.size(); ++e) c[e] = design.column(e).dot(residual) * inv_n;
    return c;
}

double objective(const CmeDesign& design, const Vector& y, const Vector& beta,
                 const PenaltyParams& params) {
    check_dims(design, y, beta);
    const Vector r = residual_of(design, centered(y), beta);
    const auto gs = compute_group_state(design, beta, params);
    double q = r.squaredNorm() / (2.0 * static_cast<double>(design.n()));
    for (Index j = 0; j < design.p(); ++j) {
        q += detail::exp_outer(gs.norm_s[j], params.lambda_s, params.tau);
        q += detail::exp_outer(gs.norm_c[j], params.lambda_c, params.tau);
    }
    return q;
}

KktReport kkt_from_inner_products(const CmeDesign& design, const Vector& inner,
                                  const Vector& beta, const GroupState& groups,
                                  const PenaltyParams& params, double tol) {
    KktReport report;
    report.violation = Vector::Zero(design.size());
    for (Index e = 0; e < design.size(); ++e) {
        if (!design.usable(e)) continue;
        const double ds = groups.slope_s[design.sibling_of(e)];
        const double dc = groups.slope_c[design.cousin_of(e)];
        const double b = beta[e];
        double v;
        if (b == 0.0) {
            v = std::max(0.0, std::abs(inner[e]) - ds - dc);
        } else {
            v = std::abs(-inner[e] +
                         ds * detail::mcp_inner_derivative(b, params.lambda_s, params.gamma) +
                         dc * detail::mcp_inner_derivative(b, params.lambda_c, params.gamma));
        }
        report.violation[e] = v;
        report.max_violation = std::max(report.max_violation, v);
        if (v > tol) report.violating.push_back(e);
    }
    return report;
}

KktReport kkt_residual(const CmeDesign& design, const Vector& y, const Vector& beta,
                       const PenaltyParams& params, double tol) {
    check_dims(design, y, beta);
    const Vector r = residual_of(design, centered(y), beta);
    return kkt_from_inner_products(design, inner_products(design, r), beta,
                                   compute_group_state(design, beta, params), params, tol);
}

} // namespace cmenet
