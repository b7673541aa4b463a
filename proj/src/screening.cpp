#include <cmenet/screening.hpp>

#include <algorithm>
#include <cmath>
#include <iterator>

namespace cmenet {

PathContext::PathContext(std::vector<double> lambda_s_grid, std::vector<double> lambda_c_grid)
    : ls_(std::move(lambda_s_grid)), lc_(std::move(lambda_c_grid)) {
    for (const auto* grid : {&ls_, &lc_}) {
        if (grid->empty()) throw Error(ErrorCode::invalid_argument, "empty lambda grid");
        for (std::size_t i = 0; i < grid->size(); ++i) {
            if (!((*grid)[i] > 0.0)) {
                throw Error(ErrorCode::invalid_argument, "lambda grid values must be positive");
            }
            if (i > 0 && !((*grid)[i] < (*grid)[i - 1])) {
                throw Error(ErrorCode::invalid_argument, "lambda grid must be strictly decreasing");
            }
        }
    }
}

void PathContext::store(Index l, Index m, PointRecord record) {
    if (l < 0 || l >= L() || m < 0 || m >= M()) {
        throw Error(ErrorCode::index_out_of_range, "grid point out of range");
    }
    solved_.insert_or_assign({l, m}, std::move(record));
    // rows older than m - 1 are never consulted again
    std::erase_if(solved_, [m](const auto& kv) { return kv.first.second < m - 1; });
}

const PointRecord* PathContext::find(Index l, Index m) const {
    auto it = solved_.find({l, m});
    return it == solved_.end() ? nullptr : &it->second;
}

ScreenResult screen(const PathContext& ctx, const CmeDesign& design, Index l, Index m,
                    double gamma, double tau) {
    const PointRecord* a = l > 0 ? ctx.find(l - 1, m) : nullptr; // (l-1, m)
    const PointRecord* b = m > 0 ? ctx.find(l, m - 1) : nullptr; // (l, m-1)
    if (!a && !b) {
        throw Error(ErrorCode::missing_predecessor,
                    "no solved predecessor for grid point (" + std::to_string(l) + "," +
                        std::to_string(m) + ")");
    }

    ScreenResult out;
    out.tags.assign(static_cast<std::size_t>(design.size()), ScreenTag::kept);
    if (!(gamma > 2.0)) {
        out.disabled = true;
        out.candidates = design.usable_columns();
        return out;
    }

    const double ls = ctx.lambda_s()[static_cast<std::size_t>(l)];
    const double lc = ctx.lambda_c()[static_cast<std::size_t>(m)];
    const double ls_prev = l > 0 ? ctx.lambda_s()[static_cast<std::size_t>(l - 1)] : 0.0;
    const double lc_prev = m > 0 ? ctx.lambda_c()[static_cast<std::size_t>(m - 1)] : 0.0;
    const double g1 = gamma / (gamma - 2.0);

    for (Index e = 0; e < design.size(); ++e) {
        if (!design.usable(e)) continue;
        const Index s = design.sibling_of(e);
        const Index c = design.cousin_of(e);

        bool any = false;
        bool discard_all = true;
        ScreenTag first = ScreenTag::kept;
        auto verdict = [&](bool discard, ScreenTag tag) {
            if (!any) first = tag;
            any = true;
            discard_all = discard_all && discard;
        };

        const bool s_off_a = a && a->groups.norm_s[s] == 0.0;
        const bool c_off_a = a && a->groups.norm_c[c] == 0.0;
        const bool s_off_b = b && b->groups.norm_s[s] == 0.0;
        const bool c_off_b = b && b->groups.norm_c[c] == 0.0;

        // rule 1
        const bool r1a = s_off_a && c_off_a;
        const bool r1b = s_off_b && c_off_b;
        if (r1a || r1b) {
            bool pass = false;
            if (r1a) pass = pass || std::abs(a->inner[e]) < ls + lc + g1 * (ls - ls_prev);
            if (r1b) pass = pass || std::abs(b->inner[e]) < ls + lc + g1 * (lc - lc_prev);
            verdict(pass, ScreenTag::rule1);
        }
        // rule 2
        if (s_off_a && !c_off_a) {
            const double d = lc * std::exp(-tau * a->groups.norm_c[c] / lc);
            const double den = gamma - (d / lc + 1.0);
            verdict(den > 0.0 &&
                        std::abs(a->inner[e]) < ls + d + gamma / den * (ls - ls_prev),
                    ScreenTag::rule2);
        }
        // rule 3
        if (c_off_b && !s_off_b) {
            const double d = ls * std::exp(-tau * b->groups.norm_s[s] / ls);
            const double den = gamma - (d / ls + 1.0);
            verdict(den > 0.0 &&
                        std::abs(b->inner[e]) < d + lc + gamma / den * (lc - lc_prev),
                    ScreenTag::rule3);
        }
        // both groups active at a predecessor: no rule applies there, always kept
        const bool both_on = (a && !s_off_a && !c_off_a) || (b && !s_off_b && !c_off_b);

        auto& tag = out.tags[static_cast<std::size_t>(e)];
        if (!any) {
            tag = ScreenTag::no_rule;
            out.candidates.push_back(e);
        } else if (both_on) {
            tag = ScreenTag::kept;
            out.candidates.push_back(e);
        } else if (discard_all) {
            tag = first;
            out.discarded.push_back(e);
        } else {
            tag = ScreenTag::kept;
            out.candidates.push_back(e);
        }
    }
    return out;
}

RepairResult kkt_recheck_and_repair(const CmeDesign& design, const Vector& y,
                                    const PenaltyParams& params, FitState state,
                                    const IndexSet& excluded, const SolverOptions& opts) {
    if (state.beta.size() != design.size()) {
        throw Error(ErrorCode::dimension_mismatch, "state does not match the design");
    }
    IndexSet out = excluded;
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    IndexSet eligible;
    for (Index e : design.usable_columns()) {
        if (!std::binary_search(out.begin(), out.end(), e)) eligible.push_back(e);
    }

    SolverOptions inner_opts = opts;
    inner_opts.verify_kkt = false;

    RepairResult res;
    res.state = std::move(state);
    for (;;) {
        res.inner = inner_products(design, res.state.residual);
        IndexSet violators;
        IndexSet still_out;
        for (Index e : out) {
            if (!design.usable(e)) continue;
            const double bound = res.state.groups.slope_s[design.sibling_of(e)] +
                                 res.state.groups.slope_c[design.cousin_of(e)];
            if (std::abs(res.inner[e]) - bound > opts.tol) {
                violators.push_back(e);
            } else {
                still_out.push_back(e);
            }
        }
        if (violators.empty()) break;
        ++res.rounds;
        res.reinstated.insert(res.reinstated.end(), violators.begin(), violators.end());
        out = std::move(still_out);
        IndexSet merged;
        std::merge(eligible.begin(), eligible.end(), violators.begin(), violators.end(),
                   std::back_inserter(merged));
        eligible = std::move(merged);

        const int used = res.state.n_sweeps;
        const double rd = res.state.max_residual_drift;
        const double sd = res.state.max_slope_drift;
        CoordinateDescent cd(design, y, params, res.state.beta);
        inner_opts.max_sweeps = std::max(1, opts.max_sweeps - used);
        FitState next = cd.run(eligible, inner_opts);
        next.n_sweeps += used;
        next.max_residual_drift = std::max(next.max_residual_drift, rd);
        next.max_slope_drift = std::max(next.max_slope_drift, sd);
        res.state = std::move(next);
        if (!res.state.converged) {
            res.inner = inner_products(design, res.state.residual);
            break;
        }
    }
    std::sort(res.reinstated.begin(), res.reinstated.end());
    res.state.active_set.clear();
    for (Index e = 0; e < design.size(); ++e) {
        if (res.state.beta[e] != 0.0) res.state.active_set.push_back(e);
    }
    res.state.kkt_violation = kkt_from_inner_products(design, res.inner, res.state.beta,
                                                      res.state.groups, params, opts.tol)
                                  .max_violation;
    return res;
}

} // namespace cmenet
