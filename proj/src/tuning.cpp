#include <cmenet/detail/parallel.hpp>
#include <cmenet/screening.hpp>
#include <cmenet/tuning.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>

namespace cmenet {

double lambda_max(const CmeDesign& design, const Vector& y) {
    if (y.size() != design.n()) {
        throw Error(ErrorCode::dimension_mismatch, "response length differs from design rows");
    }
    const Vector c = inner_products(design, centered(y));
    return c.size() == 0 ? 0.0 : c.cwiseAbs().maxCoeff();
}

std::vector<double> log_grid(double hi, double lo, Index count) {
    if (!(hi > lo && lo > 0.0) || count < 1) {
        throw Error(ErrorCode::invalid_argument, "log grid needs hi > lo > 0 and count >= 1");
    }
    std::vector<double> g(static_cast<std::size_t>(count));
    if (count == 1) {
        g[0] = hi;
        return g;
    }
    const double a = std::log(hi);
    const double b = std::log(lo);
    for (Index i = 0; i < count; ++i) {
        g[static_cast<std::size_t>(i)] =
            std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
    }
    return g;
}

std::vector<double> tau_grid_for(const std::vector<double>& tau, double gamma) {
    std::vector<double> out;
    for (double t : tau) {
        if (t > 0.0 && t + 1.0 / gamma < 0.5) out.push_back(t);
    }
    return out;
}

CvGrid default_grid(const CmeDesign& design, const Vector& y, Index L, Index M) {
    const double lmax = lambda_max(design, y);
    if (!(lmax > 0.0)) {
        throw Error(ErrorCode::degenerate_response, "response is constant or orthogonal to every effect");
    }
    CvGrid g;
    g.lambda_max = lmax;
    g.lambda_s = log_grid(0.95 * lmax / 2.0, 0.01 * lmax / 2.0, L);
    g.lambda_c = log_grid(0.95 * lmax / 2.0, 0.01 * lmax / 2.0, M);
    g.gamma = {3.0, 4.5, 6.0, 9.0};
    g.tau = {0.01, 0.05, 0.1, 0.25};
    return g;
}

std::vector<PathPoint> fit_path(const CmeDesign& design, const Vector& y, double gamma,
                                double tau, const std::vector<double>& lambda_s,
                                const std::vector<double>& lambda_c, double lmax,
                                const PathOptions& opts, const PathVisitor& visit) {
    if (!(gamma > 1.0 && tau > 0.0 && tau + 1.0 / gamma < 0.5)) {
        throw Error(ErrorCode::invalid_params, "tau + 1/gamma must be below 1/2");
    }
    PathContext ctx(lambda_s, lambda_c);
    SolverOptions so = opts.solver;
    so.verify_kkt = false;
    const IndexSet usable = design.usable_columns();

    std::vector<PathPoint> points;
    points.reserve(lambda_s.size() * lambda_c.size());
    for (Index m = 0; m < ctx.M(); ++m) {
        Vector prev = Vector::Zero(design.size());
        for (Index l = 0; l < ctx.L(); ++l) {
            PathPoint pt;
            pt.l = l;
            pt.m = m;
            pt.lambda_s = lambda_s[static_cast<std::size_t>(l)];
            pt.lambda_c = lambda_c[static_cast<std::size_t>(m)];
            if (!(pt.lambda_s + pt.lambda_c < lmax)) {
                points.push_back(pt);
                continue;
            }
            pt.solved = true;
            const PenaltyParams params{pt.lambda_s, pt.lambda_c, gamma, tau};

            FitState st;
            Vector inner;
            const bool has_pred = (l > 0 && ctx.find(l - 1, m)) || (m > 0 && ctx.find(l, m - 1));
            if (opts.screen && has_pred) {
                ScreenResult sr = screen(ctx, design, l, m, gamma, tau);
                IndexSet cand = sr.candidates;
                IndexSet excluded;
                for (Index e : sr.discarded) {
                    if (prev[e] != 0.0) {
                        cand.push_back(e);
                    } else {
                        excluded.push_back(e);
                    }
                }
                std::sort(cand.begin(), cand.end());
                CoordinateDescent cd(design, y, params, prev);
                RepairResult rep =
                    kkt_recheck_and_repair(design, y, params, cd.run(cand, so), excluded, so);
                st = std::move(rep.state);
                inner = std::move(rep.inner);
                pt.screened = !sr.disabled;
                pt.n_candidates = static_cast<Index>(cand.size());
                pt.n_reinstated = static_cast<Index>(rep.reinstated.size());
                pt.n_discarded = static_cast<Index>(excluded.size()) - pt.n_reinstated;
            } else {
                st = fit_subset(design, y, params, prev, usable, so);
                inner = inner_products(design, st.residual);
                st.kkt_violation = kkt_from_inner_products(design, inner, st.beta, st.groups,
                                                           params, so.tol)
                                       .max_violation;
                pt.n_candidates = static_cast<Index>(usable.size());
            }
            pt.converged = st.converged;
            pt.n_sweeps = st.n_sweeps;
            pt.kkt_violation = st.kkt_violation;
            pt.n_active = static_cast<Index>(st.active_set.size());
            const Index inactive = static_cast<Index>(usable.size()) - pt.n_active;
            if (pt.screened && inactive > 0) {
                pt.screened_fraction =
                    static_cast<double>(pt.n_discarded) / static_cast<double>(inactive);
            }
            prev = st.beta;
            ctx.store(l, m, PointRecord{st.beta, std::move(inner), st.groups});
            if (visit) visit(pt, st);
            points.push_back(pt);
        }
    }
    return points;
}

std::vector<int> assign_folds(Index n, int folds, std::uint64_t seed) {
    if (folds < 2) throw Error(ErrorCode::invalid_argument, "need at least 2 folds");
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> fold_of(static_cast<std::size_t>(n));
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        fold_of[static_cast<std::size_t>(order[pos])] = static_cast<int>(pos % static_cast<std::size_t>(folds));
    }
    return fold_of;
}

std::vector<SelectedEffect> selected_effects(const CmeDesign& design, const Vector& beta) {
    std::vector<SelectedEffect> out;
    for (Index e = 0; e < design.size(); ++e) {
        if (beta[e] != 0.0) out.push_back({design.effect(e), design.effect_name(e), beta[e]});
    }
    return out;
}

namespace {

struct Fold {
    std::optional<CmeDesign> design;
    Vector y_train;
    Matrix x_test;
    Vector y_test;
    double y_mean = 0.0;

    double null_sse() const { return (y_test.array() - y_mean).square().sum(); }

    double sse(const Vector& beta) const {
        Vector pred = Vector::Constant(y_test.size(), y_mean);
        for (Index e = 0; e < design->size(); ++e) {
            if (beta[e] != 0.0) pred.noalias() += x_test.col(e) * beta[e];
        }
        return (y_test - pred).squaredNorm();
    }
};

Fold make_fold(const FactorMatrix& factors, const Vector& y, const std::vector<int>& fold_of,
               int k, bool include_cmes) {
    IndexSet train;
    IndexSet test;
    for (std::size_t i = 0; i < fold_of.size(); ++i) {
        (fold_of[i] == k ? test : train).push_back(static_cast<Index>(i));
    }
    Fold f;
    DesignOptions o;
    o.include_cmes = include_cmes;
    o.degenerate = DegeneratePolicy::zero;
    o.keep_raw = false;
    f.design.emplace(build_cme_design(factors.rows(train), o));
    f.y_train = y(train);
    f.y_test = y(test);
    f.y_mean = f.y_train.mean();
    f.x_test = f.design->transform(factors.rows(test));
    return f;
}

/// Per-fold results for a list of cells.
struct FoldTable {
    std::vector<std::vector<double>> err;
    std::vector<std::vector<char>> ok;
    std::vector<std::vector<char>> evaluated;
    std::vector<std::vector<double>> screened;
    std::vector<std::vector<Index>> reinstated;

    FoldTable(int folds, std::size_t cells)
        : err(folds, std::vector<double>(cells, 0.0)), ok(folds, std::vector<char>(cells, 0)),
          evaluated(folds, std::vector<char>(cells, 0)),
          screened(folds, std::vector<double>(cells, std::nan(""))),
          reinstated(folds, std::vector<Index>(cells, 0)) {}

    void combine(std::vector<CvCell>& cells) const {
        for (std::size_t c = 0; c < cells.size(); ++c) {
            double total = 0.0;
            double frac = 0.0;
            int n_frac = 0;
            bool any = false;
            for (std::size_t k = 0; k < err.size(); ++k) {
                if (!evaluated[k][c]) continue;
                any = true;
                total += err[k][c];
                if (!ok[k][c]) ++cells[c].failed_folds;
                if (!std::isnan(screened[k][c])) {
                    frac += screened[k][c];
                    ++n_frac;
                }
                cells[c].reinstated += reinstated[k][c];
            }
            // a cell counts only if every fold evaluated it
            bool all = any;
            for (std::size_t k = 0; k < err.size(); ++k) all = all && evaluated[k][c];
            cells[c].evaluated = all;
            cells[c].error = all ? total : std::nan("");
            if (n_frac > 0) cells[c].screened_fraction = frac / n_frac;
        }
    }
};

bool better(const CvCell& a, const CvCell& b) {
    const double scale = std::max(std::abs(a.error), std::abs(b.error));
    if (a.error < b.error - 1e-12 * scale) return true;
    if (a.error > b.error + 1e-12 * scale) return false;
    const double sa = a.params.lambda_s + a.params.lambda_c;
    const double sb = b.params.lambda_s + b.params.lambda_c;
    if (sa != sb) return sa > sb;
    return a.params.gamma > b.params.gamma;
}

const CvCell& pick(const std::vector<CvCell>& cells, const char* stage) {
    const CvCell* best = nullptr;
    for (const auto& c : cells) {
        if (!c.usable()) continue;
        if (!best || better(c, *best)) best = &c;
    }
    if (!best) {
        throw Error(ErrorCode::all_fits_failed, std::string("no grid point converged in ") + stage);
    }
    return *best;
}

void check_inputs(const FactorMatrix& factors, const CmeDesign& design, const Vector& y,
                  const CvGrid& grid) {
    if (factors.n() != design.n() || y.size() != design.n()) {
        throw Error(ErrorCode::dimension_mismatch, "factors, design and response disagree in rows");
    }
    if (grid.folds < 2) throw Error(ErrorCode::invalid_argument, "need at least 2 folds");
    if (design.n() < 2 * grid.folds) {
        throw Error(ErrorCode::invalid_argument, "need at least two observations per fold");
    }
    if (grid.lambda_s.empty() || grid.lambda_c.empty() || grid.gamma.empty() || grid.tau.empty()) {
        throw Error(ErrorCode::invalid_argument, "empty tuning grid");
    }
    if (!(grid.lambda_max > 0.0)) {
        throw Error(ErrorCode::degenerate_response, "lambda_max must be positive");
    }
}

/// Symmetric lambda_s = lambda_c sweep with warm starts along the lambda grid.
void symmetric_sweep(const Fold& f, double gamma, double tau, const std::vector<double>& lam,
                     double lmax, const SolverOptions& so, FoldTable& t, int k,
                     std::size_t offset) {
    Vector prev = Vector::Zero(f.design->size());
    for (std::size_t l = 0; l < lam.size(); ++l) {
        if (!(2.0 * lam[l] < lmax)) continue;
        FitState st = fit(*f.design, f.y_train, {lam[l], lam[l], gamma, tau}, prev, so);
        t.evaluated[k][offset + l] = 1;
        t.ok[k][offset + l] = st.converged;
        t.err[k][offset + l] = f.sse(st.beta);
        prev = std::move(st.beta);
    }
}

/// Parameters of the null-model cell: lambda_s + lambda_c just above lambda_max, where
/// the fit is identically zero. Scored without fitting.
PenaltyParams null_params(double lmax, double gamma, double tau) {
    const double l = 0.5 * lmax * (1.0 + 1e-9);
    return {l, l, gamma, tau};
}

void score_null(const Fold& f, FoldTable& t, int k, std::size_t c) {
    t.evaluated[k][c] = 1;
    t.ok[k][c] = 1;
    t.err[k][c] = f.null_sse();
}

/// Full-data refit at r.best. The chosen point is reached along its warm-started
/// lambda_s chain (or the symmetric chain), as in the fold fits that scored it.
void finish(CvResult& r, const CmeDesign& design, const Vector& y, const SolverOptions& so,
            bool symmetric) {
    SolverOptions chain = so;
    chain.verify_kkt = false;
    Vector prev = Vector::Zero(design.size());
    const auto& b = r.best;
    if (b.lambda_s + b.lambda_c < r.grid.lambda_max) {
        for (double ls : r.grid.lambda_s) {
            if (!(ls > b.lambda_s)) break;
            const double lc = symmetric ? ls : b.lambda_c;
            if (!(ls + lc < r.grid.lambda_max)) continue;
            prev = fit(design, y, {ls, lc, b.gamma, b.tau}, prev, chain).beta;
        }
    }
    r.final_fit = fit(design, y, b, prev, so);
    r.selected = selected_effects(design, r.final_fit.beta);
    r.y_mean = y.mean();
}

} // namespace

CvResult cv_cmenet(const FactorMatrix& factors, const CmeDesign& design, const Vector& y,
                   const CvGrid& grid, const CvOptions& opts) {
    check_inputs(factors, design, y, grid);
    CvResult r;
    r.grid = grid;
    r.fold_of = assign_folds(design.n(), grid.folds, grid.seed);
    const int K = grid.folds;
    SolverOptions so = opts.solver;
    so.verify_kkt = false;
    const double tau_min = *std::min_element(grid.tau.begin(), grid.tau.end());
    const auto& lam = grid.lambda_s;

    // pilot: symmetric sweep over (gamma, lambda) with tau at its grid minimum
    for (double g : grid.gamma) {
        for (double l : lam) r.pilot_surface.push_back({{l, l, g, tau_min}});
    }
    {
        FoldTable t(K, r.pilot_surface.size());
        detail::parallel_for(K, opts.threads, [&](int k) {
            const Fold f = make_fold(factors, y, r.fold_of, k, opts.include_cmes);
            for (std::size_t gi = 0; gi < grid.gamma.size(); ++gi) {
                if (!(tau_min + 1.0 / grid.gamma[gi] < 0.5)) continue;
                symmetric_sweep(f, grid.gamma[gi], tau_min, lam, grid.lambda_max, so, t, k,
                                gi * lam.size());
            }
        });
        t.combine(r.pilot_surface);
    }
    const CvCell& pilot = pick(r.pilot_surface, "the pilot sweep");
    r.pilot = pilot.params;

    // stage A: (gamma, tau) at the pilot lambdas, warm starts across tau, reset per gamma
    std::vector<std::size_t> a_offset;
    for (double g : grid.gamma) {
        a_offset.push_back(r.stage_a.size());
        for (double t : tau_grid_for(grid.tau, g)) {
            r.stage_a.push_back({{r.pilot.lambda_s, r.pilot.lambda_c, g, t}});
        }
    }
    {
        FoldTable t(K, r.stage_a.size());
        detail::parallel_for(K, opts.threads, [&](int k) {
            const Fold f = make_fold(factors, y, r.fold_of, k, opts.include_cmes);
            for (std::size_t gi = 0; gi < grid.gamma.size(); ++gi) {
                Vector prev = Vector::Zero(f.design->size());
                const auto taus = tau_grid_for(grid.tau, grid.gamma[gi]);
                for (std::size_t ti = 0; ti < taus.size(); ++ti) {
                    const std::size_t c = a_offset[gi] + ti;
                    FitState st = fit(*f.design, f.y_train, r.stage_a[c].params, prev, so);
                    t.evaluated[k][c] = 1;
                    t.ok[k][c] = st.converged;
                    t.err[k][c] = f.sse(st.beta);
                    prev = std::move(st.beta);
                }
            }
        });
        t.combine(r.stage_a);
    }
    const CvCell& a_best = pick(r.stage_a, "the (gamma, tau) stage");
    const double gamma = a_best.params.gamma;
    const double tau = a_best.params.tau;

    // stage B: (lambda_s, lambda_c) path at (gamma*, tau*)
    const std::size_t L = grid.lambda_s.size();
    for (double lc : grid.lambda_c) {
        for (double ls : grid.lambda_s) r.stage_b.push_back({{ls, lc, gamma, tau}});
    }
    const std::size_t null_cell = r.stage_b.size();
    r.stage_b.push_back({null_params(grid.lambda_max, gamma, tau)});
    {
        FoldTable t(K, r.stage_b.size());
        PathOptions po;
        po.solver = so;
        po.screen = opts.screen;
        detail::parallel_for(K, opts.threads, [&](int k) {
            const Fold f = make_fold(factors, y, r.fold_of, k, opts.include_cmes);
            score_null(f, t, k, null_cell);
            fit_path(*f.design, f.y_train, gamma, tau, grid.lambda_s, grid.lambda_c,
                     grid.lambda_max, po, [&](const PathPoint& pt, const FitState& st) {
                         const std::size_t c = static_cast<std::size_t>(pt.m) * L +
                                               static_cast<std::size_t>(pt.l);
                         t.evaluated[k][c] = 1;
                         t.ok[k][c] = st.converged;
                         t.err[k][c] = f.sse(st.beta);
                         t.screened[k][c] = pt.screened_fraction;
                         t.reinstated[k][c] = pt.n_reinstated;
                     });
        });
        t.combine(r.stage_b);
    }
    r.best = pick(r.stage_b, "the (lambda_s, lambda_c) stage").params;
    finish(r, design, y, opts.solver, false);
    return r;
}

CvResult cv_lasso_limit(const FactorMatrix& factors, const CmeDesign& design, const Vector& y,
                        const CvGrid& grid, const CvOptions& opts) {
    check_inputs(factors, design, y, grid);
    constexpr double gamma = 1e6;
    constexpr double tau = 1e-6;
    CvResult r;
    r.grid = grid;
    r.fold_of = assign_folds(design.n(), grid.folds, grid.seed);
    SolverOptions so = opts.solver;
    so.verify_kkt = false;
    const auto& lam = grid.lambda_s;
    for (double l : lam) r.stage_b.push_back({{l, l, gamma, tau}});
    r.stage_b.push_back({null_params(grid.lambda_max, gamma, tau)});
    FoldTable t(grid.folds, r.stage_b.size());
    detail::parallel_for(grid.folds, opts.threads, [&](int k) {
        const Fold f = make_fold(factors, y, r.fold_of, k, opts.include_cmes);
        score_null(f, t, k, lam.size());
        symmetric_sweep(f, gamma, tau, lam, grid.lambda_max, so, t, k, 0);
    });
    t.combine(r.stage_b);
    r.best = pick(r.stage_b, "the lambda sweep").params;
    r.pilot = r.best;
    finish(r, design, y, opts.solver, true);
    return r;
}

} // namespace cmenet
