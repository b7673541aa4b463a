#pragma once

#include <cmenet/design.hpp>
#include <cmenet/penalty.hpp>
#include <cmenet/solver.hpp>

#include <cstdint>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

namespace cmenet {

/// max_e |x_e' y_c| / n. Above this (lambda_s + lambda_c) the fit is identically zero.
double lambda_max(const CmeDesign& design, const Vector& y);

/// `count` log-spaced values from hi down to lo.
std::vector<double> log_grid(double hi, double lo, Index count);

struct CvGrid {
    std::vector<double> lambda_s;
    std::vector<double> lambda_c;
    std::vector<double> gamma;
    std::vector<double> tau;
    int folds = 10;
    std::uint64_t seed = 1;
    double lambda_max = 0.0; ///< full-data guard: only pairs with lambda_s + lambda_c below it are fit
};

/// The tau values usable with this gamma (tau + 1/gamma < 1/2), in grid order.
std::vector<double> tau_grid_for(const std::vector<double>& tau, double gamma);

/// Lambda grids log-spaced from 0.95 lambda_max/2 to 0.01 lambda_max/2,
/// gamma in {3, 4.5, 6, 9}, tau in {0.01, 0.05, 0.1, 0.25}.
/// Throws DegenerateResponse when lambda_max is zero.
CvGrid default_grid(const CmeDesign& design, const Vector& y, Index L = 20, Index M = 20);

struct PathPoint {
    Index l = 0;
    Index m = 0;
    double lambda_s = 0.0;
    double lambda_c = 0.0;
    bool solved = false; ///< false when lambda_s + lambda_c >= lambda_max
    bool converged = false;
    bool screened = false;
    int n_sweeps = 0;
    double kkt_violation = std::numeric_limits<double>::quiet_NaN();
    Index n_active = 0;
    Index n_candidates = 0;
    Index n_discarded = 0;  ///< screened out and not reinstated
    Index n_reinstated = 0; ///< screened out, then brought back by the KKT check
    double screened_fraction = std::numeric_limits<double>::quiet_NaN(); ///< of inactive effects
};

struct PathOptions {
    SolverOptions solver;
    bool screen = true;
};

using PathVisitor = std::function<void(const PathPoint&, const FitState&)>;

/// Solves the (lambda_s, lambda_c) grid at fixed (gamma, tau): lambda_c outer,
/// lambda_s inner, warm starts along lambda_s and a zero start for each lambda_c.
/// With screening, each point after the first solves on the strong-rule
/// candidates and then runs the KKT repair loop.
std::vector<PathPoint> fit_path(const CmeDesign& design, const Vector& y, double gamma,
                                double tau, const std::vector<double>& lambda_s,
                                const std::vector<double>& lambda_c, double lambda_max,
                                const PathOptions& opts = {}, const PathVisitor& visit = {});

struct CvOptions {
    SolverOptions solver;
    bool screen = true;
    int threads = 1;
    bool include_cmes = true;
};

struct CvCell {
    PenaltyParams params;
    double error = std::numeric_limits<double>::quiet_NaN(); ///< summed held-out squared error
    int failed_folds = 0;
    bool evaluated = false;
    double screened_fraction = std::numeric_limits<double>::quiet_NaN(); ///< mean over folds
    Index reinstated = 0;

    bool usable() const noexcept { return evaluated && failed_folds == 0; }
};

struct SelectedEffect {
    EffectId effect;
    std::string name;
    double coefficient = 0.0;
};

struct CvResult {
    CvGrid grid;
    PenaltyParams pilot;
    PenaltyParams best;
    std::vector<CvCell> pilot_surface; ///< symmetric lambda sweep, one cell per (gamma, lambda)
    std::vector<CvCell> stage_a;       ///< (gamma, tau) at the pilot lambdas
    std::vector<CvCell> stage_b;       ///< (lambda_s, lambda_c) at the chosen (gamma, tau), then the null cell
    std::vector<int> fold_of;
    FitState final_fit;
    std::vector<SelectedEffect> selected;
    double y_mean = 0.0;
};

/// Assigns each of n observations to one of K folds: a seeded shuffle, then
/// position modulo K. Fold sizes differ by at most one.
std::vector<int> assign_folds(Index n, int folds, std::uint64_t seed);

/// Two-stage K-fold tuning followed by a full-data refit. `design` must be built
/// from `factors`; each training fold gets its own normalization, applied to
/// the held-out rows. Ties go to larger lambda_s + lambda_c, then larger gamma.
/// The last stage_b cell is the null model (training-mean prediction), placed just
/// above lambda_max so it wins ties. The refit follows the warm-started lambda_s
/// chain at the chosen lambda_c from zero, as the fold fits did.
CvResult cv_cmenet(const FactorMatrix& factors, const CmeDesign& design, const Vector& y,
                   const CvGrid& grid, const CvOptions& opts = {});

/// Near-l1 baseline: gamma = 1e6, tau = 1e-6 and lambda_s = lambda_c over the
/// lambda_s grid, tuned by the same K-fold protocol, with the same null cell.
CvResult cv_lasso_limit(const FactorMatrix& factors, const CmeDesign& design, const Vector& y,
                        const CvGrid& grid, const CvOptions& opts = {});

/// Nonzero coefficients of `beta` with their effect ids and names.
std::vector<SelectedEffect> selected_effects(const CmeDesign& design, const Vector& beta);

} // namespace cmenet
