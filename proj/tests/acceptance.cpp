// Acceptance checks. Each criterion prints one PASS/FAIL line followed by
// indented detail lines. Usage: cmenet_acceptance [c1 ... c10]; no argument runs all.

#include "oracles.hpp"

#include <cmenet/cli.hpp>
#include <cmenet/io.hpp>
#include <cmenet/screening.hpp>
#include <cmenet/simlab.hpp>
#include <cmenet/threshold.hpp>
#include <cmenet/tuning.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace cmenet;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string summary;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::string fmt(double v, int prec = 4) {
    std::ostringstream s;
    s << std::setprecision(prec) << v;
    return s.str();
}

double mcp(double b, double lam, double gam) {
    const double a = std::abs(b);
    return a <= lam * gam ? a - b * b / (2 * lam * gam) : lam * gam / 2;
}

struct Instance {
    FactorMatrix factors;
    CmeDesign design;
    Vector y;
};

Instance random_instance(std::mt19937_64& rng, Index n, Index p) {
    FactorMatrix f(oracle::random_signs(n, p, rng()));
    auto d = build_cme_design(f);
    std::normal_distribution<double> z;
    Vector y(n);
    for (Index i = 0; i < n; ++i) y[i] = z(rng);
    for (int k = 0; k < 3; ++k) {
        const Index e = static_cast<Index>(rng() % static_cast<std::uint64_t>(d.size()));
        y += (1.0 + k) * d.column(e);
    }
    return {std::move(f), std::move(d), y};
}

// ---------------------------------------------------------------------------

Outcome c1(std::ostream& log) {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int cases = 2000;
    int bad = 0;
    double worst = 0.0;
    for (int k = 0; k < cases; ++k) {
        ThresholdInputs in;
        in.lambda1 = 0.05 + 2.0 * u(rng);
        in.lambda2 = u(rng) < 0.1 ? in.lambda1 : 0.05 + 2.0 * u(rng);
        in.gamma = 2.05 + 8.0 * u(rng);
        in.delta1 = in.lambda1 * (0.01 + 0.99 * u(rng));
        in.delta2 = in.lambda2 * (0.01 + 0.99 * u(rng));
        in.z = 1.3 * std::max(in.lambda1, in.lambda2) * in.gamma * (2.0 * u(rng) - 1.0);
        auto f = [&](double b) {
            return 0.5 * (b - in.z) * (b - in.z) + in.delta1 * mcp(b, in.lambda1, in.gamma) +
                   in.delta2 * mcp(b, in.lambda2, in.gamma);
        };
        const double ref = oracle::minimize_1d(f, std::min(0.0, in.z) - 0.01, std::max(0.0, in.z) + 0.01);
        const double err = std::abs(threshold(in) - ref);
        worst = std::max(worst, err);
        bad += err >= 1e-6;
    }
    const double t = seconds_since(t0);
    log << "  cases " << cases << ", mismatches " << bad << ", worst |diff| " << fmt(worst, 3)
        << ", time " << fmt(t, 3) << " s\n";
    return {bad == 0 && t < 10.0, std::to_string(cases) + " cases, worst " + fmt(worst, 3) +
                                      ", " + fmt(t, 3) + " s"};
}

Outcome c2(std::ostream& log) {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(202);
    const std::vector<double> gammas{3.0, 4.5, 6.0, 9.0};
    int bad_descent = 0, bad_kkt = 0, unconverged = 0;
    double worst_rise = 0.0, worst_kkt = 0.0;
    for (int k = 0; k < 50; ++k) {
        const Index n = 50 + static_cast<Index>(rng() % 151);
        const Index p = 3 + static_cast<Index>(rng() % 18);
        const auto in = random_instance(rng, n, p);
        const double lm = lambda_max(in.design, in.y);
        std::uniform_real_distribution<double> u(0.03, 0.25);
        const double g = gammas[rng() % gammas.size()];
        const auto taus = tau_grid_for({0.01, 0.05, 0.1, 0.25}, g);
        const double tau = taus[rng() % taus.size()];
        const auto pp = PenaltyParams::checked(u(rng) * lm, u(rng) * lm, g, tau);
        SolverOptions opts;
        opts.record_objective = true;
        const auto st = fit(in.design, in.y, pp, {}, opts);
        unconverged += !st.converged;
        double rise = 0.0;
        for (std::size_t i = 1; i < st.objective_trace.size(); ++i) {
            rise = std::max(rise, st.objective_trace[i] - st.objective_trace[i - 1]);
        }
        worst_rise = std::max(worst_rise, rise);
        bad_descent += rise > 1e-10;
        const double kkt = kkt_residual(in.design, in.y, st.beta, pp).max_violation;
        worst_kkt = std::max(worst_kkt, kkt);
        bad_kkt += kkt > 1e-5;
    }
    const double t = seconds_since(t0);
    log << "  instances 50 (n in [50,200], p in [3,20]); unconverged " << unconverged
        << "; largest per-update rise " << fmt(worst_rise, 3) << "; worst KKT " << fmt(worst_kkt, 3)
        << "; time " << fmt(t, 3) << " s\n";
    const bool ok = bad_descent == 0 && bad_kkt == 0 && unconverged == 0 && t < 60.0;
    return {ok, "descent failures " + std::to_string(bad_descent) + ", KKT failures " +
                    std::to_string(bad_kkt) + ", " + fmt(t, 3) + " s"};
}

Outcome c3(std::ostream& log) {
    std::mt19937_64 rng(303);
    int bad = 0;
    for (int k = 0; k < 20; ++k) {
        const Index n = 30 + static_cast<Index>(rng() % 171);
        const Index p = 2 + static_cast<Index>(rng() % 12);
        const auto in = random_instance(rng, n, p);
        const double lm = lambda_max(in.design, in.y);
        std::uniform_real_distribution<double> u(0.05, 0.95);
        // half the instances sit exactly on the bound
        const double total = k % 2 == 0 ? lm : lm * (1.0 + u(rng));
        const double ls = u(rng) * total;
        double lc = total - ls;
        while (ls + lc < lm) lc = std::nextafter(lc, 2 * lc);
        const auto st = fit(in.design, in.y, PenaltyParams::checked(ls, lc, 3.0, 0.05));
        const bool zero = st.beta.isZero(0.0);
        const bool kkt0 = st.kkt_violation == 0.0 &&
                          kkt_residual(in.design, in.y, st.beta, PenaltyParams::checked(ls, lc, 3.0, 0.05))
                                  .max_violation == 0.0;
        if (!zero || !kkt0) {
            ++bad;
            log << "  instance " << k << ": max |beta| " << st.beta.cwiseAbs().maxCoeff()
                << ", kkt " << st.kkt_violation << "\n";
        }
    }
    log << "  20 instances, 10 with lambda_s + lambda_c = lambda_max exactly; failures " << bad << "\n";
    return {bad == 0, "failures " + std::to_string(bad) + " of 20"};
}

Outcome c4(std::ostream& log) {
    std::mt19937_64 rng(404);
    double worst = 0.0;
    int bad = 0;
    for (int k = 0; k < 20; ++k) {
        const Index n = 40 + static_cast<Index>(rng() % 61);
        const Index p = 2 + static_cast<Index>(rng() % 9);
        const auto in = random_instance(rng, n, p);
        const double lm = lambda_max(in.design, in.y);
        std::uniform_real_distribution<double> u(0.02, 0.2);
        const double ls = u(rng) * lm, lc = u(rng) * lm;
        SolverOptions opts;
        opts.tol = 1e-10;
        opts.max_sweeps = 100000;
        const auto st = fit(in.design, in.y, PenaltyParams::checked(ls, lc, 1e6, 1e-6), {}, opts);
        const Vector ref = oracle::lasso_cd(in.design.columns(), in.y, ls + lc);
        const double d = (st.beta - ref).cwiseAbs().maxCoeff();
        worst = std::max(worst, d);
        if (!(d <= 1e-4) || !st.converged) {
            ++bad;
            const Vector yc = centered(in.y);
            auto lasso_obj = [&](const Vector& b) {
                return (yc - in.design.columns() * b).squaredNorm() / (2.0 * static_cast<double>(n)) +
                       (ls + lc) * b.lpNorm<1>();
            };
            const Eigen::FullPivLU<Matrix> lu(in.design.columns());
            log << "  instance " << k << " (n " << n << ", p' " << in.design.size() << ", rank "
                << lu.rank() << "): max |diff| " << fmt(d, 3) << "; lasso objective "
                << fmt(lasso_obj(st.beta), 10) << " vs " << fmt(lasso_obj(ref), 10) << "; l1 "
                << fmt(st.beta.lpNorm<1>(), 8) << " vs " << fmt(ref.lpNorm<1>(), 8)
                << "; max fitted-value diff " << fmt((in.design.columns() * (st.beta - ref)).cwiseAbs().maxCoeff(), 3)
                << "\n";
        }
    }
    log << "  20 instances (n <= 100, p <= 10); worst coefficient difference " << fmt(worst, 3) << "\n";
    if (bad > 0) {
        log << "      the CME columns are linearly dependent, so the l1 problem can have a set of\n"
               "      minimizers; a mismatch with equal objective, l1 norm and fit is a different\n"
               "      point of that set rather than a different optimum.\n";
    }
    return {bad == 0, "worst difference " + fmt(worst, 3) + ", failures " + std::to_string(bad)};
}

Outcome c5(std::ostream& log) {
    const auto t0 = Clock::now();
    int bad = 0;
    for (double rho : {0.0, 0.3, 1.0 / std::sqrt(2.0)}) {
        for (auto kind : all_group_kinds) {
            const auto est = empirical_group_correlation(kind, rho, 100000, 1);
            const double th = theoretical_correlation(kind, rho);
            const double zs = (est.r - th) / est.se;
            const bool ok = std::abs(zs) <= 3.0;
            bad += !ok;
            log << "  " << (ok ? "ok  " : "OUT ") << std::setw(16) << to_string(kind) << " rho "
                << std::setw(6) << fmt(rho, 4) << "  closed " << std::setw(8) << fmt(th, 5)
                << "  empirical " << std::setw(8) << fmt(est.r, 5) << "  z " << fmt(zs, 3) << "\n";
        }
    }
    const bool anchors =
        std::abs(theoretical_correlation(GroupKind::sibling_pair, 0.0) - 0.5) < 1e-12 &&
        std::abs(theoretical_correlation(GroupKind::parent_child, 0.0) - 1.0 / std::sqrt(2.0)) < 1e-12;
    const double t = seconds_since(t0);
    log << "  anchors sibling = 0.5, parent-child = 1/sqrt(2) at rho = 0: " << (anchors ? "ok" : "off")
        << "; n = 100000, seed 1; time " << fmt(t, 3) << " s\n";
    return {bad == 0 && anchors && t < 30.0,
            std::to_string(15 - bad) + "/15 within 3 SE, " + fmt(t, 3) + " s"};
}

Outcome c6(std::ostream& log) {
    const Index n = 100000;
    const std::uint64_t seed = 1;
    const double a = irrep_stat_empirical(IrrepCase::siblings, 3, 0.0, n, seed);
    const bool ok_a = a >= 1.0;
    log << "  (a) q=3 siblings, rho=0: empirical " << fmt(a, 5) << ", exact "
        << fmt(irrep_stat_exact(IrrepCase::siblings, 3, 0.0), 5) << " -> " << (ok_a ? "ok" : "FAIL") << "\n";

    double crossing = std::numeric_limits<double>::quiet_NaN();
    log << "  (b) q=2 main effects A, -B; inactive A|B-:\n";
    log << "      rho    empirical  exact      published-blocks\n";
    for (int k = 0; k <= 20; ++k) {
        const double rho = 0.15 + 0.01 * k;
        const double e = irrep_stat_empirical(IrrepCase::main_effects, 2, rho, n, seed);
        if (std::isnan(crossing) && e >= 1.0) crossing = rho;
        if (k % 2 == 0 || (rho > 0.245 && rho < 0.305)) {
            log << "      " << std::setw(5) << fmt(rho, 3) << "  " << std::setw(9) << fmt(e, 5) << "  "
                << std::setw(9) << fmt(irrep_stat_exact(IrrepCase::main_effects, 2, rho), 5) << "  "
                << fmt(irrep_stat_published_blocks(IrrepCase::main_effects, 2, rho), 5) << "\n";
        }
    }
    const bool ok_b = !std::isnan(crossing) && crossing >= 0.25 && crossing <= 0.30 &&
                      std::abs(crossing - 0.27) <= 0.02 + 1e-12;
    log << "      empirical crossing in [0.15, 0.35]: "
        << (std::isnan(crossing) ? std::string("none") : fmt(crossing, 3)) << " -> "
        << (ok_b ? "ok" : "FAIL") << "\n";
    if (!ok_b) {
        log << "      the empirical and exact statistics stay near 0.71 for every rho: the inactive\n"
               "      A|B- column correlates 0.71 with A and is orthogonal to B at rho = 0, and the\n"
               "      ratio barely moves with rho. Only the block layout built from the pairwise\n"
               "      closed forms crosses 1 (between 0.26 and 0.27).\n";
    }

    const double c = irrep_stat_empirical(IrrepCase::cousins, 5, 0.25, n, seed);
    const bool ok_c = c < 1.0;
    log << "  (c) q=5 cousins, rho=0.25: empirical " << fmt(c, 5) << ", exact "
        << fmt(irrep_stat_exact(IrrepCase::cousins, 5, 0.25), 5) << ", published-blocks "
        << fmt(irrep_stat_published_blocks(IrrepCase::cousins, 5, 0.25), 5) << " -> "
        << (ok_c ? "ok" : "FAIL") << "\n";
    log << "      the exact value sits 0.002 below 1; the n = 1e5 Monte Carlo spread is about 0.004\n";
    return {ok_a && ok_b && ok_c, std::string("(a) ") + (ok_a ? "ok" : "fail") + ", (b) " +
                                      (ok_b ? "ok" : "fail") + ", (c) " + (ok_c ? "ok" : "fail")};
}

struct PathRun {
    std::vector<PathPoint> points;
    std::vector<Vector> beta;
    double seconds = 0.0;
};

PathRun run_path(const CmeDesign& d, const Vector& y, const CvGrid& g, bool screen) {
    PathRun out;
    PathOptions po;
    po.screen = screen;
    const auto t0 = Clock::now();
    out.points = fit_path(d, y, 3.0, 0.05, g.lambda_s, g.lambda_c, g.lambda_max, po,
                          [&](const PathPoint&, const FitState& st) { out.beta.push_back(st.beta); });
    out.seconds = seconds_since(t0);
    return out;
}

struct Scenario7 {
    FactorMatrix x;
    CmeDesign d;
    Vector y;
    CvGrid g;
};

Scenario7 g2a6(Index p) {
    auto x = gen_factors({200, p, 0.0, 1});
    TrueModelSpec spec;
    spec.n_groups = 2;
    spec.n_per_group = 6;
    const auto truth = draw_true_model(p, spec, 101);
    Vector y = gen_response(x, truth, 1.0, 201);
    auto d = build_cme_design(x);
    auto g = default_grid(d, y, 20, 20);
    return {std::move(x), std::move(d), std::move(y), std::move(g)};
}

Outcome c7(std::ostream& log) {
    const double tol = SolverOptions{}.tol;

    // (i) path equality at p = 30
    const auto s30 = g2a6(30);
    const auto off = run_path(s30.d, s30.y, s30.g, false);
    const auto on = run_path(s30.d, s30.y, s30.g, true);
    int mismatched = 0, both_stationary = 0, with_reinstatement = 0;
    double worst = 0.0;
    for (std::size_t i = 0; i < off.beta.size(); ++i) {
        const double diff = (off.beta[i] - on.beta[i]).cwiseAbs().maxCoeff();
        worst = std::max(worst, diff);
        if (diff > 10 * tol) {
            ++mismatched;
            both_stationary += off.points[i].kkt_violation <= 1e-5 && on.points[i].kkt_violation <= 1e-5;
        }
    }
    Index reinstated = 0;
    for (const auto& pt : on.points) {
        reinstated += pt.n_reinstated;
        with_reinstatement += pt.n_reinstated > 0;
    }
    // same warm start at every point: screened+repaired vs unscreened from the unscreened predecessor
    int pointwise_bad = 0, pointwise_n = 0;
    {
        PathContext ctx(s30.g.lambda_s, s30.g.lambda_c);
        std::map<std::pair<Index, Index>, std::size_t> at;
        for (std::size_t i = 0; i < off.points.size(); ++i) at[{off.points[i].l, off.points[i].m}] = i;
        for (std::size_t i = 0; i < off.points.size(); ++i) {
            const auto& pt = off.points[i];
            const auto pp = PenaltyParams::checked(pt.lambda_s, pt.lambda_c, 3.0, 0.05);
            if (pt.l > 0 && at.count({pt.l - 1, pt.m})) {
                const std::size_t j = at[{pt.l - 1, pt.m}];
                const auto& q = off.points[j];
                const auto qp = PenaltyParams::checked(q.lambda_s, q.lambda_c, 3.0, 0.05);
                const Vector& warm = off.beta[j];
                const Vector r = residual_of(s30.d, centered(s30.y), warm);
                ctx.store(q.l, q.m, {warm, inner_products(s30.d, r), compute_group_state(s30.d, warm, qp)});
                const auto sr = screen(ctx, s30.d, pt.l, pt.m, 3.0, 0.05);
                SolverOptions so;
                so.verify_kkt = false;
                const auto part = fit_subset(s30.d, s30.y, pp, warm, sr.candidates, so);
                const auto rep = kkt_recheck_and_repair(s30.d, s30.y, pp, part, sr.discarded);
                const auto full = fit(s30.d, s30.y, pp, warm);
                ++pointwise_n;
                pointwise_bad += (rep.state.beta - full.beta).cwiseAbs().maxCoeff() > 10 * tol;
            }
        }
    }
    const bool ok_i = mismatched == 0;
    log << "  (i) p=30, p'=" << s30.d.size() << ", " << off.beta.size() << " solved points: "
        << mismatched << " differ by more than 10*tol (worst " << fmt(worst, 3) << "); "
        << both_stationary << " of those are KKT-stationary in both runs -> " << (ok_i ? "ok" : "FAIL") << "\n";
    log << "      KKT reinstatements along the screened path: " << reinstated << " effects at "
        << with_reinstatement << " points\n";
    log << "      same warm start at each point (lambda_s predecessor of the unscreened path): "
        << pointwise_bad << " of " << pointwise_n << " differ by more than 10*tol\n";
    if (!ok_i) {
        log << "      the penalty is nonconvex and the CME columns are exactly collinear, so the two\n"
               "      paths can settle in different stationary points once they part; both remain\n"
               "      KKT points of the full problem.\n";
    }

    // (ii) and (iii) at p = 150
    const auto s150 = g2a6(150);
    std::vector<double> t_on, t_off;
    double mid = std::numeric_limits<double>::quiet_NaN();
    for (int r = 0; r < 5; ++r) {
        const auto a = run_path(s150.d, s150.y, s150.g, true);
        const auto b = run_path(s150.d, s150.y, s150.g, false);
        t_on.push_back(a.seconds);
        t_off.push_back(b.seconds);
        if (r == 0) {
            for (const auto& pt : a.points) {
                if (pt.l == 10 && pt.m == 10) mid = pt.screened_fraction;
            }
        }
    }
    const bool ok_ii = mid >= 0.5;
    const double ratio = median(t_on) / median(t_off);
    const bool ok_iii = ratio <= 0.9;
    log << "  (ii) p=150, p'=" << s150.d.size() << ": screened share of inactive effects at grid point (10,10) "
        << fmt(mid, 3) << " -> " << (ok_ii ? "ok" : "FAIL") << "\n";
    log << "  (iii) median path time over 5 runs: screened " << fmt(median(t_on), 4) << " s, unscreened "
        << fmt(median(t_off), 4) << " s, ratio " << fmt(ratio, 3) << " -> " << (ok_iii ? "ok" : "FAIL") << "\n";
    return {ok_i && ok_ii && ok_iii, std::string("(i) ") + (ok_i ? "ok" : "fail") + " [" +
                                         std::to_string(mismatched) + " points differ], (ii) " +
                                         fmt(mid, 3) + ", (iii) ratio " + fmt(ratio, 3)};
}

Outcome c8(std::ostream& log) {
    const auto t0 = Clock::now();
    int leq = 0, strict = 0;
    bool mspe_ok = true;
    for (auto st : {Structure::sibling, Structure::cousin}) {
        for (double rho : {0.0, 1.0 / std::sqrt(2.0)}) {
            Scenario sc;
            sc.n = 50;
            sc.p = 50;
            sc.rho = rho;
            sc.model.structure = st;
            sc.model.n_groups = 4;
            sc.model.n_per_group = 2;
            sc.reps = 20;
            sc.seed = 1;
            sc.folds = 10;
            const auto r = run_benchmark(sc);
            const auto& cm = r.summaries[0];
            const auto& la = r.summaries[1];
            const double m1 = cm.misspecified_q[2], m2 = la.misspecified_q[2];
            const double e1 = cm.mspe_q[2], e2 = la.mspe_q[2];
            leq += m1 <= m2;
            strict += m1 < m2;
            mspe_ok = mspe_ok && e1 <= 1.2 * e2;
            log << "  " << std::setw(7) << to_string(st) << " rho " << std::setw(6) << fmt(rho, 4)
                << ": median misspecified cmenet " << fmt(m1, 4) << " vs lasso_limit " << fmt(m2, 4)
                << "; median MSPE " << fmt(e1, 4) << " vs " << fmt(e2, 4) << "\n";
        }
    }
    const double t = seconds_since(t0);
    log << "  time " << fmt(t, 4) << " s\n";
    const bool ok = leq == 4 && strict >= 3 && mspe_ok;
    return {ok, "cmenet <= lasso_limit in " + std::to_string(leq) + "/4 cells, strictly in " +
                    std::to_string(strict) + ", MSPE " + (mspe_ok ? "ok" : "over 1.2x")};
}

Outcome c9(std::ostream& log) {
    // p'(50) = 4950, p'(71) = 10011
    auto per_sweep = [](Index p) {
        auto x = gen_factors({200, p, 0.0, 9});
        const auto d = build_cme_design(x);
        std::mt19937_64 rng(5);
        std::normal_distribution<double> z;
        Vector y(200);
        for (Index i = 0; i < 200; ++i) y[i] = z(rng);
        const double lm = lambda_max(d, y);
        SolverOptions so;
        so.use_active_set = false;
        so.max_sweeps = 6;
        so.tol = std::numeric_limits<double>::min();
        so.verify_kkt = false;
        std::vector<double> t;
        for (int r = 0; r < 5; ++r) {
            const auto t0 = Clock::now();
            const auto st = fit(d, y, PenaltyParams::checked(0.05 * lm, 0.05 * lm, 3.0, 0.05), {}, so);
            t.push_back(seconds_since(t0) / st.n_sweeps);
        }
        return std::pair{d.size(), median(t)};
    };
    const auto [p1, t1] = per_sweep(50);
    const auto [p2, t2] = per_sweep(71);
    const double ratio = t2 / t1;
    log << "  p'=" << p1 << ": " << fmt(t1 * 1e3, 4) << " ms/sweep; p'=" << p2 << ": " << fmt(t2 * 1e3, 4)
        << " ms/sweep; ratio " << fmt(ratio, 3) << " for a size ratio of " << fmt(double(p2) / p1, 3) << "\n";
    return {ratio <= 3.0, "ratio " + fmt(ratio, 3)};
}

Outcome c10(std::ostream& log) {
    const fs::path dir = fs::temp_directory_path() / "cmenet_acceptance_c10";
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto path = [&](const std::string& name) { return (dir / name).string(); };
    auto run = [&](std::vector<std::string> args) {
        args.insert(args.begin(), "cmenet");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    };
    bool ok = run({"simulate", "--n", "80", "--p", "8", "--seed", "4", "--output", path("data.csv")}) == 0;
    {
        std::ofstream(path("scenario.json")) << R"({"n": 40, "p": 10, "reps": 2, "seed": 3, "grid_size": 8, "folds": 5})";
    }
    const std::vector<std::pair<std::string, std::vector<std::string>>> cmds{
        {"fit", {"fit", "--input", path("data.csv"), "--lambda-s", "0.1", "--lambda-c", "0.08",
                 "--gamma", "3", "--tau", "0.05"}},
        {"cv", {"cv", "--input", path("data.csv"), "--seed", "7", "--grid-size", "10"}},
        {"bench", {"bench", "--scenario", path("scenario.json"), "--methods", "cmenet,lasso_limit,oracle"}},
    };
    for (const auto& [name, args] : cmds) {
        auto a = args, b = args;
        a.insert(a.end(), {"--output", path(name + "_a.json")});
        b.insert(b.end(), {"--output", path(name + "_b.json")});
        const int ca = run(a), cb = run(b);
        const std::string ra = read_file(path(name + "_a.json")), rb = read_file(path(name + "_b.json"));
        const bool same = ca == 0 && cb == 0 && !ra.empty() && ra == rb;
        ok = ok && same;
        log << "  " << std::setw(5) << name << ": exit " << ca << "/" << cb << ", " << ra.size()
            << " bytes, " << (same ? "identical" : "DIFFERENT") << " (fnv1a " << hex64(fnv1a(ra)) << ")\n";
    }
    fs::remove_all(dir);
    return {ok, ok ? "fit, cv and bench reports byte-identical" : "reports differ"};
}

struct Entry {
    const char* id;
    const char* title;
    std::function<Outcome(std::ostream&)> run;
};

} // namespace

int main(int argc, char** argv) {
    const std::vector<Entry> all{
        {"c1", "threshold vs numerical minimizer", c1},
        {"c2", "descent and stationarity", c2},
        {"c3", "null model exactness", c3},
        {"c4", "lasso limit vs soft-threshold descent", c4},
        {"c5", "group correlations, Monte Carlo", c5},
        {"c6", "irrepresentability cases", c6},
        {"c7", "screening safety and yield", c7},
        {"c8", "selection benchmark G4A2", c8},
        {"c9", "per-sweep cost scaling", c9},
        {"c10", "report determinism", c10},
    };
    std::vector<std::string> want(argv + 1, argv + argc);
    int failed = 0, ran = 0;
    for (const auto& e : all) {
        if (!want.empty() && std::find(want.begin(), want.end(), e.id) == want.end()) continue;
        ++ran;
        std::ostringstream log;
        Outcome o;
        try {
            o = e.run(log);
        } catch (const std::exception& ex) {
            o = {false, std::string("exception: ") + ex.what()};
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS " : "FAIL ") << e.id << " " << e.title << ": " << o.summary << "\n"
                  << log.str() << std::flush;
    }
    if (ran == 0) {
        std::cerr << "unknown criterion\n";
        return 2;
    }
    return failed == 0 ? 0 : 1;
}
