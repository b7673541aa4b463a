#pragma once

#include <cmenet/design.hpp>
#include <cmenet/penalty.hpp>

#include <limits>
#include <span>
#include <vector>

namespace cmenet {

struct SolverOptions {
    double tol = 1e-6;              ///< stop when a full sweep moves no coefficient by more than tol
    int max_sweeps = 1000;          ///< cap on full + active-set sweeps
    int active_set_init_sweeps = 25;
    bool use_active_set = true;
    bool record_objective = false;  ///< objective after every coordinate update
    bool verify_kkt = true;         ///< compute the KKT residual of the returned state
};

struct FitState {
    Vector beta;     ///< design coefficients, followed by extra covariates if any
    Vector residual; ///< y_c - X beta
    GroupState groups;
    int n_sweeps = 0;
    int n_full_sweeps = 0;
    bool converged = false;
    std::vector<double> objective_trace;
    IndexSet active_set;
    double kkt_violation = std::numeric_limits<double>::quiet_NaN();
    double max_residual_drift = 0.0; ///< largest |r_incremental - r_recomputed| seen at a full sweep
    double max_slope_drift = 0.0;    ///< same for the group slopes
};

/// Cyclic coordinate descent on the exponential-MC+ criterion.
///
/// Each coordinate update replaces beta_e by the threshold of x_e'r/n + beta_e
/// with the slopes of its sibling and cousin groups, then updates the residual
/// and the two slopes multiplicatively. Group norms, slopes and the residual
/// are recomputed from beta after every full sweep.
///
/// Extra covariates (columns appended after the design) get plain soft-threshold
/// updates with a fixed l1 penalty.
class CoordinateDescent {
public:
    CoordinateDescent(const CmeDesign& design, const Vector& y, const PenaltyParams& params,
                      const Vector& beta_init, const Matrix* extra = nullptr,
                      double l1_penalty = 0.0);

    Index size() const noexcept { return beta_.size(); }

    /// Updates one coordinate; returns |beta_new - beta_old|.
    double update(Index e);

    /// Updates the given coordinates in order; returns the largest change.
    double sweep(std::span<const Index> coords);

    /// Recomputes residual, norms and slopes from beta.
    void refresh();

    double objective() const;

    /// Runs to convergence over `eligible` (ascending). Coordinates outside it stay fixed.
    FitState run(std::span<const Index> eligible, const SolverOptions& opts);

    const Vector& beta() const noexcept { return beta_; }
    const Vector& residual() const noexcept { return r_; }
    const GroupState& groups() const noexcept { return gs_; }

private:
    auto column(Index e) const {
        return e < p_design_ ? design_.columns().col(e) : extra_->col(e - p_design_);
    }
    void record();

    const CmeDesign& design_;
    const Matrix* extra_;
    PenaltyParams params_;
    double l1_;
    Index p_design_;
    double inv_n_;
    Vector y_;
    Vector beta_;
    Vector r_;
    GroupState gs_;
    bool recording_ = false;
    std::vector<double> trace_;
    double residual_drift_ = 0.0;
    double slope_drift_ = 0.0;
};

/// Fits the full design. An empty beta_init means a zero start.
/// Non-convergence is reported through FitState::converged with the partial state.
FitState fit(const CmeDesign& design, const Vector& y, const PenaltyParams& params,
             const Vector& beta_init = {}, const SolverOptions& opts = {});

/// Fits only the coordinates in `eligible`; the others keep their beta_init values.
FitState fit_subset(const CmeDesign& design, const Vector& y, const PenaltyParams& params,
                    const Vector& beta_init, std::span<const Index> eligible,
                    const SolverOptions& opts = {});

/// Fits the design together with extra normalized covariates under an l1 penalty.
/// The returned beta has design.size() + extra.cols() entries.
FitState fit_extended(const CmeDesign& design, const Matrix& extra, const Vector& y,
                      const PenaltyParams& params, double l1_penalty,
                      const Vector& beta_init = {}, const SolverOptions& opts = {});

/// KKT residual of an extended fit: design coordinates as in kkt_residual,
/// extra coordinates against the l1 subgradient.
KktReport kkt_residual_extended(const CmeDesign& design, const Matrix& extra, const Vector& y,
                                const Vector& beta, const PenaltyParams& params,
                                double l1_penalty, double tol = 1e-6);

} // namespace cmenet
