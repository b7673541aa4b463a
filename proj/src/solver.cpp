#include <cmenet/solver.hpp>
#include <cmenet/threshold.hpp>

#include <algorithm>
#include <cmath>

namespace cmenet {

namespace {

IndexSet nonzero(const Vector& beta, std::span<const Index> coords) {
    IndexSet out;
    for (Index e : coords) {
        if (beta[e] != 0.0) out.push_back(e);
    }
    return out;
}

void check_fit_inputs(const CmeDesign& design, const Vector& y, const PenaltyParams& params,
                      const Vector& beta_init, Index expected, const SolverOptions& opts) {
    if (y.size() != design.n()) {
        throw Error(ErrorCode::dimension_mismatch, "response length differs from design rows");
    }
    if (beta_init.size() != 0 && beta_init.size() != expected) {
        throw Error(ErrorCode::dimension_mismatch, "initial coefficients have the wrong length");
    }
    if (!params.coordinatewise_convex()) {
        throw Error(ErrorCode::invalid_params, "tau + 1/gamma must be below 1/2");
    }
    if (!(params.lambda_s > 0.0 && params.lambda_c > 0.0)) {
        throw Error(ErrorCode::invalid_params, "lambdas must be positive");
    }
    if (!(opts.tol > 0.0)) throw Error(ErrorCode::invalid_params, "tol must be positive");
}

} // namespace

CoordinateDescent::CoordinateDescent(const CmeDesign& design, const Vector& y,
                                     const PenaltyParams& params, const Vector& beta_init,
                                     const Matrix* extra, double l1_penalty)
    : design_(design), extra_(extra), params_(params), l1_(l1_penalty),
      p_design_(design.size()), inv_n_(1.0 / static_cast<double>(design.n())),
      y_(centered(y)) {
    const Index total = p_design_ + (extra_ ? extra_->cols() : 0);
    beta_ = beta_init.size() == 0 ? Vector::Zero(total) : beta_init;
    for (Index e = 0; e < p_design_; ++e) {
        if (!design_.usable(e)) beta_[e] = 0.0;
    }
    refresh();
    residual_drift_ = 0.0;
    slope_drift_ = 0.0;
}

void CoordinateDescent::refresh() {
    Vector r = y_;
    for (Index e = 0; e < beta_.size(); ++e) {
        if (beta_[e] != 0.0) r.noalias() -= column(e) * beta_[e];
    }
    if (r_.size() == r.size()) {
        residual_drift_ = std::max(residual_drift_, (r - r_).cwiseAbs().maxCoeff());
    }
    r_ = std::move(r);

    GroupState gs = compute_group_state(design_, beta_, params_);
    if (gs_.slope_s.size() == gs.slope_s.size()) {
        slope_drift_ = std::max({slope_drift_, (gs.slope_s - gs_.slope_s).cwiseAbs().maxCoeff(),
                                 (gs.slope_c - gs_.slope_c).cwiseAbs().maxCoeff()});
    }
    gs_ = std::move(gs);
}

double CoordinateDescent::objective() const {
    double q = 0.5 * r_.squaredNorm() * inv_n_;
    for (Index j = 0; j < design_.p(); ++j) {
        q += detail::exp_outer(gs_.norm_s[j], params_.lambda_s, params_.tau);
        q += detail::exp_outer(gs_.norm_c[j], params_.lambda_c, params_.tau);
    }
    if (extra_) q += l1_ * beta_.tail(extra_->cols()).lpNorm<1>();
    return q;
}

void CoordinateDescent::record() {
    if (recording_) trace_.push_back(objective());
}

double CoordinateDescent::update(Index e) {
    const auto x = column(e);
    const double old = beta_[e];
    const double z = x.dot(r_) * inv_n_ + old;
    double next;
    if (e >= p_design_) {
        next = soft_threshold(z, l1_);
    } else {
        const Index s = design_.sibling_of(e);
        const Index c = design_.cousin_of(e);
        next = detail::threshold_fast(
            {z, params_.lambda_s, params_.lambda_c, params_.gamma, gs_.slope_s[s], gs_.slope_c[c]});
        if (next != old) {
            const double ds = detail::mcp_inner(next, params_.lambda_s, params_.gamma) -
                              detail::mcp_inner(old, params_.lambda_s, params_.gamma);
            const double dc = detail::mcp_inner(next, params_.lambda_c, params_.gamma) -
                              detail::mcp_inner(old, params_.lambda_c, params_.gamma);
            gs_.norm_s[s] += ds;
            gs_.norm_c[c] += dc;
            gs_.slope_s[s] *= std::exp(-params_.tau / params_.lambda_s * ds);
            gs_.slope_c[c] *= std::exp(-params_.tau / params_.lambda_c * dc);
        }
    }
    if (next == old) return 0.0;
    r_.noalias() += x * (old - next);
    beta_[e] = next;
    record();
    return std::abs(next - old);
}

double CoordinateDescent::sweep(std::span<const Index> coords) {
    double change = 0.0;
    for (Index e : coords) change = std::max(change, update(e));
    return change;
}

FitState CoordinateDescent::run(std::span<const Index> eligible, const SolverOptions& opts) {
    recording_ = opts.record_objective;
    trace_.clear();
    record();

    int sweeps = 0;
    int full_sweeps = 0;
    bool converged = false;
    auto full_sweep = [&] {
        const double change = sweep(eligible);
        refresh();
        ++sweeps;
        ++full_sweeps;
        return change;
    };

    if (!opts.use_active_set) {
        while (sweeps < opts.max_sweeps) {
            if (full_sweep() < opts.tol) {
                converged = true;
                break;
            }
        }
    } else {
        for (int s = 0; s < opts.active_set_init_sweeps && sweeps < opts.max_sweeps; ++s) {
            if (full_sweep() < opts.tol) {
                converged = true;
                break;
            }
        }
        while (!converged && sweeps < opts.max_sweeps) {
            const IndexSet active = nonzero(beta_, eligible);
            while (sweeps < opts.max_sweeps) {
                ++sweeps;
                if (sweep(active) < opts.tol) break;
            }
            if (sweeps >= opts.max_sweeps) break;
            const double change = full_sweep();
            if (change < opts.tol && nonzero(beta_, eligible) == active) converged = true;
        }
    }

    FitState st;
    st.beta = beta_;
    st.residual = r_;
    st.groups = gs_;
    st.n_sweeps = sweeps;
    st.n_full_sweeps = full_sweeps;
    st.converged = converged;
    st.objective_trace = std::move(trace_);
    st.active_set = nonzero(beta_, eligible);
    st.max_residual_drift = residual_drift_;
    st.max_slope_drift = slope_drift_;
    trace_.clear();
    recording_ = false;
    if (opts.verify_kkt) {
        if (extra_) {
            st.kkt_violation = kkt_residual_extended(design_, *extra_, y_, beta_, params_, l1_,
                                                     opts.tol)
                                   .max_violation;
        } else {
            st.kkt_violation =
                kkt_from_inner_products(design_, inner_products(design_, r_), beta_, gs_,
                                        params_, opts.tol)
                    .max_violation;
        }
    }
    return st;
}

FitState fit(const CmeDesign& design, const Vector& y, const PenaltyParams& params,
             const Vector& beta_init, const SolverOptions& opts) {
    return fit_subset(design, y, params, beta_init, design.usable_columns(), opts);
}

FitState fit_subset(const CmeDesign& design, const Vector& y, const PenaltyParams& params,
                    const Vector& beta_init, std::span<const Index> eligible,
                    const SolverOptions& opts) {
    check_fit_inputs(design, y, params, beta_init, design.size(), opts);
    IndexSet coords;
    coords.reserve(eligible.size());
    for (Index e : eligible) {
        if (e < 0 || e >= design.size()) {
            throw Error(ErrorCode::index_out_of_range, "eligible index out of range");
        }
        if (design.usable(e)) coords.push_back(e);
    }
    std::sort(coords.begin(), coords.end());
    coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
    CoordinateDescent cd(design, y, params, beta_init);
    return cd.run(coords, opts);
}

FitState fit_extended(const CmeDesign& design, const Matrix& extra, const Vector& y,
                      const PenaltyParams& params, double l1_penalty, const Vector& beta_init,
                      const SolverOptions& opts) {
    if (extra.rows() != design.n()) {
        throw Error(ErrorCode::dimension_mismatch, "extra covariates have the wrong row count");
    }
    if (!(l1_penalty >= 0.0)) throw Error(ErrorCode::invalid_params, "l1 penalty must be >= 0");
    check_fit_inputs(design, y, params, beta_init, design.size() + extra.cols(), opts);
    IndexSet coords = design.usable_columns();
    for (Index k = 0; k < extra.cols(); ++k) coords.push_back(design.size() + k);
    CoordinateDescent cd(design, y, params, beta_init, &extra, l1_penalty);
    return cd.run(coords, opts);
}

KktReport kkt_residual_extended(const CmeDesign& design, const Matrix& extra, const Vector& y,
                                const Vector& beta, const PenaltyParams& params,
                                double l1_penalty, double tol) {
    const Index p = design.size();
    const Index q = extra.cols();
    if (beta.size() != p + q || extra.rows() != design.n() || y.size() != design.n()) {
        throw Error(ErrorCode::dimension_mismatch, "extended KKT inputs disagree in size");
    }
    Vector r = residual_of(design, centered(y), beta);
    for (Index k = 0; k < q; ++k) {
        if (beta[p + k] != 0.0) r.noalias() -= extra.col(k) * beta[p + k];
    }
    KktReport report = kkt_from_inner_products(design, inner_products(design, r), beta,
                                               compute_group_state(design, beta, params),
                                               params, tol);
    report.violation.conservativeResize(p + q);
    const double inv_n = 1.0 / static_cast<double>(design.n());
    for (Index k = 0; k < q; ++k) {
        const double c = extra.col(k).dot(r) * inv_n;
        const double b = beta[p + k];
        const double v = b == 0.0 ? std::max(0.0, std::abs(c) - l1_penalty)
                                   : std::abs(-c + l1_penalty * (b > 0.0 ? 1.0 : -1.0));
        report.violation[p + k] = v;
        report.max_violation = std::max(report.max_violation, v);
        if (v > tol) report.violating.push_back(p + k);
    }
    return report;
}

} // namespace cmenet
