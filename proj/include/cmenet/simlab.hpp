#pragma once

#include <cmenet/design.hpp>
#include <cmenet/penalty.hpp>
#include <cmenet/tuning.hpp>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace cmenet {

struct LatentModelSpec {
    Index n = 0;
    Index p = 0;
    double rho = 0.0; ///< latent equicorrelation, in [0, 1)
    std::uint64_t seed = 1;
};

/// Rows drawn i.i.d. from N(0, rho J + (1 - rho) I), thresholded at zero to -1/+1.
FactorMatrix gen_factors(const LatentModelSpec& spec);

enum class GroupKind {
    main_effect_pair, ///< A, B
    sibling_pair,     ///< A|B+, A|C+
    parent_child,     ///< A|B+, A
    cousin_pair,      ///< A|C+, B|C+
    cme_conditioned,  ///< A|B+, B
};

const char* to_string(GroupKind kind) noexcept;
inline constexpr std::array<GroupKind, 5> all_group_kinds{
    GroupKind::main_effect_pair, GroupKind::sibling_pair, GroupKind::parent_child,
    GroupKind::cousin_pair, GroupKind::cme_conditioned};

/// The two effects a GroupKind refers to, over factors A=0, B=1, C=2.
std::array<EffectId, 2> representative_pair(GroupKind kind);

/// asin(rho)/pi: P(A = B) - 1/2 for two latent factors. Also the CME mean.
double latent_s(double rho);
/// Variance of a raw CME column: 1/2 - latent_s(rho)^2.
double cme_variance(double rho);

/// Closed-form population correlation between the two effects of `kind`.
double theoretical_correlation(GroupKind kind, double rho);

/// Population mean, second moment and correlation of arbitrary effects, computed
/// from sign-pattern probabilities of the latent model by numerical integration
/// over the common factor.
double population_mean(const EffectId& a, double rho);
double population_correlation(const EffectId& a, const EffectId& b, double rho);

struct CorrelationEstimate {
    double r = 0.0;
    double se = 0.0; ///< delta-method standard error
};

CorrelationEstimate empirical_correlation(const Vector& u, const Vector& v);

/// Correlation of the two effects of `kind` on factors drawn at (n, rho, seed).
CorrelationEstimate empirical_group_correlation(GroupKind kind, double rho, Index n,
                                                std::uint64_t seed);

/// |C21_j C11^{-1} zeta| where C11 = corr[active, active] and C21_j = corr[j, active].
/// Throws SingularBlock when C11 is numerically singular.
double irrepresentability_stat(const Matrix& corr, const IndexSet& active, const Vector& zeta,
                               Index j);

/// The three selection-inconsistency configurations on factors A=0, B=1, ...
enum class IrrepCase {
    siblings,     ///< A|B+, A|C-, A|D-, ...; inactive A
    main_effects, ///< A and -B; inactive A|B-
    cousins,      ///< B|A+, C|A-, D|A-, ...; inactive B
};

struct IrrepSetup {
    std::vector<EffectId> effects; ///< active effects followed by the inactive one
    Vector zeta;                   ///< signs for the active effects in design orientation
    Index p = 0;                   ///< number of factors involved
};

IrrepSetup irrep_setup(IrrepCase c, int q);

/// Statistic from the empirical correlation matrix of normalized effect columns.
double irrep_stat_empirical(IrrepCase c, int q, double rho, Index n, std::uint64_t seed);
/// Statistic from exact population correlations.
double irrep_stat_exact(IrrepCase c, int q, double rho);
/// Statistic from the published block descriptions (closed forms of the pairwise
/// correlations placed as printed). Kept for comparison with the exact values.
double irrep_stat_published_blocks(IrrepCase c, int q, double rho);

enum class Structure { sibling, cousin, main_effects };
const char* to_string(Structure s) noexcept;
Structure parse_structure(const std::string& text);

struct TrueModelSpec {
    Structure structure = Structure::sibling;
    int n_groups = 1;    ///< G in "GxAy"
    int n_per_group = 2; ///< A in "GxAy"
    double coefficient = 1.0;
    double noise_sd = 1.0;
};

struct TrueModel {
    std::vector<EffectId> effects;
    std::vector<double> coefficients;
};

/// Draws the active effects: sibling groups share a parent, cousin groups share a
/// conditioned factor. Group factors are distinct, partners within a group are
/// distinct, and each CME gets a random sign. Throws ModelNotRealizable.
TrueModel draw_true_model(Index p, const TrueModelSpec& spec, std::uint64_t seed);

/// y = sum_k coef_k * raw_column(effect_k) + noise_sd * eps.
Vector gen_response(const FactorMatrix& factors, const TrueModel& model, double noise_sd,
                    std::uint64_t seed);

/// |A \ S| + |S \ A|.
Index misspecification_count(const std::vector<EffectId>& truth,
                             const std::vector<EffectId>& selected);

/// Linear-interpolation quantile (type 7) of `values` at probability q.
double quantile(std::vector<double> values, double q);

enum class Method { cmenet, lasso_limit, oracle };
const char* to_string(Method m) noexcept;
Method parse_method(const std::string& text);

struct Scenario {
    Index n = 50;
    Index p = 50;
    double rho = 0.0;
    TrueModelSpec model;
    int reps = 20;
    std::uint64_t seed = 1;
    int folds = 10;
    Index grid_size = 20; ///< L = M
    Index n_new = 20;
};

struct BenchOptions {
    std::vector<Method> methods{Method::cmenet, Method::lasso_limit};
    CvOptions cv;
    int threads = 1; ///< parallel replications
};

struct RepRecord {
    int rep = 0;
    Method method = Method::cmenet;
    Index misspecified = 0;
    double mspe = 0.0;
    Index n_selected = 0;
    PenaltyParams params;
};

struct MethodSummary {
    Method method = Method::cmenet;
    std::array<double, 5> misspecified_q{}; ///< 10, 25, 50, 75, 90 %
    std::array<double, 5> mspe_q{};
};

inline constexpr std::array<double, 5> summary_levels{0.10, 0.25, 0.50, 0.75, 0.90};

struct BenchmarkReport {
    Scenario scenario;
    std::vector<RepRecord> records; ///< rep-major, methods in option order
    std::vector<MethodSummary> summaries;
};

BenchmarkReport run_benchmark(const Scenario& scenario, const BenchOptions& opts = {});

/// Stream seed for replication `rep` and purpose tag `stream`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t rep, std::uint64_t stream);

} // namespace cmenet
