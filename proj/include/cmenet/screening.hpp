#pragma once

#include <cmenet/design.hpp>
#include <cmenet/penalty.hpp>
#include <cmenet/solver.hpp>

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

namespace cmenet {

/// State kept for a solved grid point: coefficients, x'r/n and group state.
struct PointRecord {
    Vector beta;
    Vector inner;
    GroupState groups;
};

/// Solved history of a (lambda_s, lambda_c) path. Grid indices are 0-based;
/// l indexes lambda_s, m indexes lambda_c. Only the two most recent lambda_c
/// rows are retained, which is all the strong rules look at.
class PathContext {
public:
    PathContext(std::vector<double> lambda_s_grid, std::vector<double> lambda_c_grid);

    const std::vector<double>& lambda_s() const noexcept { return ls_; }
    const std::vector<double>& lambda_c() const noexcept { return lc_; }
    Index L() const noexcept { return static_cast<Index>(ls_.size()); }
    Index M() const noexcept { return static_cast<Index>(lc_.size()); }

    void store(Index l, Index m, PointRecord record);
    const PointRecord* find(Index l, Index m) const;

private:
    std::vector<double> ls_;
    std::vector<double> lc_;
    std::map<std::pair<Index, Index>, PointRecord> solved_;
};

enum class ScreenTag : std::uint8_t {
    rule1,   ///< discarded: no active sibling or cousin at a predecessor
    rule2,   ///< discarded: no active sibling, active cousins
    rule3,   ///< discarded: no active cousin, active siblings
    no_rule, ///< no rule applies, e.g. both groups active at every available predecessor
    kept,    ///< some rule applied but did not discard, or both groups active at a predecessor
};

struct ScreenResult {
    IndexSet candidates;          ///< usable effects to optimize over, ascending
    IndexSet discarded;           ///< usable effects screened out, ascending
    std::vector<ScreenTag> tags;  ///< per design column
    bool disabled = false;        ///< gamma <= 2: no screening performed
};

/// Applies the three strong rules at grid point (l, m) using the solutions at
/// (l-1, m) and (l, m-1). An effect is discarded when at least one rule applies
/// to it, every applicable rule discards it, and neither predecessor has both
/// of its groups active. Rule 1 counts as one rule and
/// discards if either of its two branches passes. Rules 2 and 3 are skipped for
/// an effect (which is then kept) when gamma - (slope/lambda + 1) <= 0.
/// Throws MissingPredecessor when neither predecessor has been solved.
ScreenResult screen(const PathContext& ctx, const CmeDesign& design, Index l, Index m,
                    double gamma, double tau);

struct RepairResult {
    FitState state;
    Vector inner;        ///< x'r/n at the returned state
    IndexSet reinstated; ///< excluded effects brought back by the KKT check
    int rounds = 0;
};

/// Checks the KKT conditions of the excluded effects at `state` (which must
/// hold the full coefficient vector). Violators join the eligible set and the
/// fit resumes from `state`; repeats until no excluded effect violates.
RepairResult kkt_recheck_and_repair(const CmeDesign& design, const Vector& y,
                                    const PenaltyParams& params, FitState state,
                                    const IndexSet& excluded, const SolverOptions& opts = {});

} // namespace cmenet
