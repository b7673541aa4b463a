#include <cmenet/detail/parallel.hpp>
#include <cmenet/simlab.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <set>

namespace cmenet {

namespace {

void check_rho(double rho) {
    if (!(rho >= 0.0 && rho < 1.0)) {
        throw Error(ErrorCode::invalid_rho, "rho must lie in [0, 1)");
    }
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// P(sign(Z_i) = signs_i for all i) for equicorrelated standard normals.
double orthant_probability(const std::vector<int>& signs, double rho) {
    const double k = static_cast<double>(signs.size());
    if (rho == 0.0) return std::pow(0.5, k);
    const double a = std::sqrt(rho / (1.0 - rho));
    // Simpson's rule over the common factor w
    constexpr int intervals = 4000;
    constexpr double lo = -10.0;
    constexpr double hi = 10.0;
    const double h = (hi - lo) / intervals;
    double sum = 0.0;
    for (int i = 0; i <= intervals; ++i) {
        const double w = lo + h * i;
        double f = std::exp(-0.5 * w * w) / std::sqrt(2.0 * std::numbers::pi);
        for (int s : signs) f *= normal_cdf(s * a * w);
        const double weight = (i == 0 || i == intervals) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        sum += weight * f;
    }
    return sum * h / 3.0;
}

double effect_value(const EffectId& e, const std::vector<int>& factors,
                    const std::vector<int>& signs) {
    auto value_of = [&](int factor) {
        const auto it = std::find(factors.begin(), factors.end(), factor);
        return signs[static_cast<std::size_t>(it - factors.begin())];
    };
    if (e.is_main()) return value_of(e.parent);
    return value_of(e.conditioned) == e.sign ? value_of(e.parent) : 0.0;
}

struct Moments {
    double ea = 0.0, eb = 0.0, eaa = 0.0, ebb = 0.0, eab = 0.0;
};

Moments population_moments(const EffectId& a, const EffectId& b, double rho) {
    check_rho(rho);
    std::vector<int> factors;
    for (const EffectId* e : {&a, &b}) {
        factors.push_back(e->parent);
        if (!e->is_main()) factors.push_back(e->conditioned);
    }
    std::sort(factors.begin(), factors.end());
    factors.erase(std::unique(factors.begin(), factors.end()), factors.end());
    const std::size_t k = factors.size();
    Moments m;
    std::vector<int> signs(k);
    for (unsigned pattern = 0; pattern < (1u << k); ++pattern) {
        for (std::size_t i = 0; i < k; ++i) signs[i] = (pattern >> i) & 1u ? 1 : -1;
        const double prob = orthant_probability(signs, rho);
        const double va = effect_value(a, factors, signs);
        const double vb = effect_value(b, factors, signs);
        m.ea += prob * va;
        m.eb += prob * vb;
        m.eaa += prob * va * va;
        m.ebb += prob * vb * vb;
        m.eab += prob * va * vb;
    }
    return m;
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

Vector normalized(const Eigen::VectorXi& raw) {
    Vector v = raw.cast<double>();
    v.array() -= v.mean();
    const double scale = std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
    if (!(scale > 0.0)) throw Error(ErrorCode::constant_column, "constant effect column");
    return v / scale;
}

} // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t rep, std::uint64_t stream) {
    return mix(seed, rep, stream);
}

FactorMatrix gen_factors(const LatentModelSpec& spec) {
    check_rho(spec.rho);
    if (spec.n < 1 || spec.p < 1) throw Error(ErrorCode::invalid_argument, "n and p must be positive");
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double a = std::sqrt(spec.rho);
    const double b = std::sqrt(1.0 - spec.rho);
    Eigen::MatrixXi x(spec.n, spec.p);
    for (Index i = 0; i < spec.n; ++i) {
        const double w = normal(rng);
        for (Index j = 0; j < spec.p; ++j) {
            const double z = a * w + b * normal(rng);
            x(i, j) = z > 0.0 ? 1 : -1;
        }
    }
    return FactorMatrix(std::move(x));
}

const char* to_string(GroupKind kind) noexcept {
    switch (kind) {
    case GroupKind::main_effect_pair: return "main_effects";
    case GroupKind::sibling_pair: return "siblings";
    case GroupKind::parent_child: return "parent_child";
    case GroupKind::cousin_pair: return "cousins";
    case GroupKind::cme_conditioned: return "cme_conditioned";
    }
    return "?";
}

std::array<EffectId, 2> representative_pair(GroupKind kind) {
    switch (kind) {
    case GroupKind::main_effect_pair: return {EffectId::main_effect(0), EffectId::main_effect(1)};
    case GroupKind::sibling_pair: return {EffectId::cme(0, 1, 1), EffectId::cme(0, 2, 1)};
    case GroupKind::parent_child: return {EffectId::cme(0, 1, 1), EffectId::main_effect(0)};
    case GroupKind::cousin_pair: return {EffectId::cme(0, 2, 1), EffectId::cme(1, 2, 1)};
    case GroupKind::cme_conditioned: return {EffectId::cme(0, 1, 1), EffectId::main_effect(1)};
    }
    throw Error(ErrorCode::invalid_argument, "unknown group kind");
}

double latent_s(double rho) {
    check_rho(rho);
    return std::asin(rho) / std::numbers::pi;
}

double cme_variance(double rho) {
    const double s = latent_s(rho);
    return 0.5 - s * s;
}

double theoretical_correlation(GroupKind kind, double rho) {
    const double s = latent_s(rho);
    const double v = 0.5 - s * s;
    switch (kind) {
    case GroupKind::main_effect_pair: return 2.0 * s;
    case GroupKind::sibling_pair: return (0.25 + 0.5 * s - s * s) / v;
    case GroupKind::parent_child: return 1.0 / (2.0 * std::sqrt(v));
    case GroupKind::cousin_pair: return (s - s * s) / v;
    case GroupKind::cme_conditioned: return s / std::sqrt(v);
    }
    throw Error(ErrorCode::invalid_argument, "unknown group kind");
}

double population_mean(const EffectId& a, double rho) {
    return population_moments(a, a, rho).ea;
}

double population_correlation(const EffectId& a, const EffectId& b, double rho) {
    const Moments m = population_moments(a, b, rho);
    const double va = m.eaa - m.ea * m.ea;
    const double vb = m.ebb - m.eb * m.eb;
    return (m.eab - m.ea * m.eb) / std::sqrt(va * vb);
}

CorrelationEstimate empirical_correlation(const Vector& u, const Vector& v) {
    if (u.size() != v.size() || u.size() < 3) {
        throw Error(ErrorCode::dimension_mismatch, "correlation needs two equal-length samples");
    }
    const double n = static_cast<double>(u.size());
    Vector a = u.array() - u.mean();
    Vector b = v.array() - v.mean();
    const double sa = std::sqrt(a.squaredNorm() / n);
    const double sb = std::sqrt(b.squaredNorm() / n);
    if (!(sa > 0.0 && sb > 0.0)) throw Error(ErrorCode::constant_column, "constant sample");
    a /= sa;
    b /= sb;
    CorrelationEstimate est;
    est.r = a.dot(b) / n;
    const Eigen::ArrayXd inf = a.array() * b.array() - 0.5 * est.r * (a.array().square() + b.array().square());
    const double var = (inf - inf.mean()).square().sum() / (n - 1.0);
    est.se = std::sqrt(var / n);
    return est;
}

CorrelationEstimate empirical_group_correlation(GroupKind kind, double rho, Index n,
                                                std::uint64_t seed) {
    const FactorMatrix f = gen_factors({n, 3, rho, seed});
    const auto pair = representative_pair(kind);
    return empirical_correlation(raw_effect_column(f, pair[0]).cast<double>(),
                                 raw_effect_column(f, pair[1]).cast<double>());
}

double irrepresentability_stat(const Matrix& corr, const IndexSet& active, const Vector& zeta,
                               Index j) {
    const Index q = static_cast<Index>(active.size());
    if (corr.rows() != corr.cols() || zeta.size() != q || q == 0) {
        throw Error(ErrorCode::dimension_mismatch, "irrepresentability inputs disagree in size");
    }
    for (Index a : active) {
        if (a < 0 || a >= corr.rows()) throw Error(ErrorCode::index_out_of_range, "active index out of range");
        if (a == j) throw Error(ErrorCode::invalid_argument, "j must be inactive");
    }
    if (j < 0 || j >= corr.rows()) throw Error(ErrorCode::index_out_of_range, "j out of range");
    const Matrix c11 = corr(active, active);
    const Eigen::RowVectorXd c21 = corr(j, active);
    Eigen::FullPivLU<Matrix> lu(c11);
    lu.setThreshold(1e-10);
    if (!lu.isInvertible()) throw Error(ErrorCode::singular_block, "active correlation block is singular");
    return std::abs(c21.dot(lu.solve(zeta)));
}

IrrepSetup irrep_setup(IrrepCase c, int q) {
    IrrepSetup s;
    switch (c) {
    case IrrepCase::siblings:
        if (q < 2) throw Error(ErrorCode::invalid_argument, "need at least two siblings");
        for (int k = 1; k <= q; ++k) s.effects.push_back(EffectId::cme(0, k, k == 1 ? 1 : -1));
        s.effects.push_back(EffectId::main_effect(0));
        s.zeta = Vector::Ones(q);
        s.p = q + 1;
        break;
    case IrrepCase::main_effects:
        if (q != 2) throw Error(ErrorCode::invalid_argument, "the main-effect case has q = 2");
        s.effects = {EffectId::main_effect(0), EffectId::main_effect(1), EffectId::cme(0, 1, -1)};
        s.zeta = Vector(2);
        s.zeta << 1.0, -1.0; // coefficient on B is negative
        s.p = 2;
        break;
    case IrrepCase::cousins:
        if (q < 2) throw Error(ErrorCode::invalid_argument, "need at least two cousins");
        for (int k = 1; k <= q; ++k) s.effects.push_back(EffectId::cme(k, 0, k == 1 ? 1 : -1));
        s.effects.push_back(EffectId::main_effect(1));
        s.zeta = Vector::Ones(q);
        s.p = q + 1;
        break;
    }
    return s;
}

namespace {

double stat_from(const Matrix& corr, const IrrepSetup& s) {
    const Index q = s.zeta.size();
    IndexSet active(static_cast<std::size_t>(q));
    for (Index i = 0; i < q; ++i) active[static_cast<std::size_t>(i)] = i;
    return irrepresentability_stat(corr, active, s.zeta, q);
}

} // namespace

double irrep_stat_empirical(IrrepCase c, int q, double rho, Index n, std::uint64_t seed) {
    const IrrepSetup s = irrep_setup(c, q);
    const FactorMatrix f = gen_factors({n, s.p, rho, seed});
    const Index k = static_cast<Index>(s.effects.size());
    Matrix x(n, k);
    for (Index e = 0; e < k; ++e) {
        x.col(e) = normalized(raw_effect_column(f, s.effects[static_cast<std::size_t>(e)]));
    }
    const Matrix corr = x.transpose() * x / static_cast<double>(n);
    return stat_from(corr, s);
}

double irrep_stat_exact(IrrepCase c, int q, double rho) {
    const IrrepSetup s = irrep_setup(c, q);
    const Index k = static_cast<Index>(s.effects.size());
    Matrix corr = Matrix::Identity(k, k);
    for (Index a = 0; a < k; ++a) {
        for (Index b = a + 1; b < k; ++b) {
            corr(a, b) = corr(b, a) = population_correlation(
                s.effects[static_cast<std::size_t>(a)], s.effects[static_cast<std::size_t>(b)], rho);
        }
    }
    return stat_from(corr, s);
}

double irrep_stat_published_blocks(IrrepCase c, int q, double rho) {
    const double sv = latent_s(rho);
    const double var = cme_variance(rho);
    const double mu = sv;
    const double p2 = std::asin(rho) / (2.0 * std::numbers::pi) + 0.25;
    const double me = theoretical_correlation(GroupKind::main_effect_pair, rho);
    const double sib = theoretical_correlation(GroupKind::sibling_pair, rho);
    const double pc = theoretical_correlation(GroupKind::parent_child, rho);
    const double cou = theoretical_correlation(GroupKind::cousin_pair, rho);
    const double tilde = theoretical_correlation(GroupKind::cme_conditioned, rho);

    Matrix c11;
    Vector c21;
    Vector zeta;
    switch (c) {
    case IrrepCase::siblings:
    case IrrepCase::cousins: {
        const bool sibs = c == IrrepCase::siblings;
        const double first = sibs ? ((0.5 - p2) - mu * mu) / var : -mu * mu / var;
        c11 = Matrix::Constant(q, q, sibs ? sib : cou);
        c11.row(0).setConstant(first);
        c11.col(0).setConstant(first);
        c11.diagonal().setOnes();
        c21 = sibs ? Vector::Constant(q, pc) : Vector::Constant(q, tilde);
        if (!sibs) c21[0] = sib;
        zeta = Vector::Ones(q);
        break;
    }
    case IrrepCase::main_effects:
        if (q != 2) throw Error(ErrorCode::invalid_argument, "the main-effect case has q = 2");
        c11 = Matrix(2, 2);
        c11 << 1.0, -me, -me, 1.0;
        c21 = Vector(2);
        c21 << pc, tilde;
        zeta = Vector::Ones(2);
        break;
    }
    Eigen::FullPivLU<Matrix> lu(c11);
    if (!lu.isInvertible()) throw Error(ErrorCode::singular_block, "active correlation block is singular");
    return std::abs(c21.dot(lu.solve(zeta)));
}

const char* to_string(Structure s) noexcept {
    switch (s) {
    case Structure::sibling: return "sibling";
    case Structure::cousin: return "cousin";
    case Structure::main_effects: return "main_effects";
    }
    return "?";
}

Structure parse_structure(const std::string& text) {
    if (text == "sibling") return Structure::sibling;
    if (text == "cousin") return Structure::cousin;
    if (text == "main_effects") return Structure::main_effects;
    throw Error(ErrorCode::parse_error, "unknown model structure '" + text + "'");
}

TrueModel draw_true_model(Index p, const TrueModelSpec& spec, std::uint64_t seed) {
    const int g = spec.n_groups;
    const int a = spec.n_per_group;
    if (g < 1 || a < 1) throw Error(ErrorCode::model_not_realizable, "need at least one group and one effect per group");
    std::mt19937_64 rng(seed);
    std::vector<int> factors(static_cast<std::size_t>(p));
    for (int j = 0; j < p; ++j) factors[static_cast<std::size_t>(j)] = j;
    std::shuffle(factors.begin(), factors.end(), rng);

    TrueModel m;
    if (spec.structure == Structure::main_effects) {
        if (static_cast<Index>(g) * a > p) {
            throw Error(ErrorCode::model_not_realizable, "more main effects requested than factors");
        }
        std::vector<int> chosen(factors.begin(), factors.begin() + g * a);
        std::sort(chosen.begin(), chosen.end());
        for (int j : chosen) m.effects.push_back(EffectId::main_effect(j));
    } else {
        if (g > p || a > p - 1) {
            throw Error(ErrorCode::model_not_realizable,
                        "not enough factors for " + std::to_string(g) + " groups of " + std::to_string(a));
        }
        std::bernoulli_distribution coin(0.5);
        for (int gi = 0; gi < g; ++gi) {
            const int anchor = factors[static_cast<std::size_t>(gi)];
            std::vector<int> partners;
            for (int j = 0; j < p; ++j) {
                if (j != anchor) partners.push_back(j);
            }
            std::shuffle(partners.begin(), partners.end(), rng);
            for (int k = 0; k < a; ++k) {
                const int other = partners[static_cast<std::size_t>(k)];
                const int sign = coin(rng) ? 1 : -1;
                m.effects.push_back(spec.structure == Structure::sibling
                                        ? EffectId::cme(anchor, other, sign)
                                        : EffectId::cme(other, anchor, sign));
            }
        }
        std::sort(m.effects.begin(), m.effects.end());
    }
    m.coefficients.assign(m.effects.size(), spec.coefficient);
    return m;
}

Vector gen_response(const FactorMatrix& factors, const TrueModel& model, double noise_sd,
                    std::uint64_t seed) {
    if (model.effects.size() != model.coefficients.size()) {
        throw Error(ErrorCode::dimension_mismatch, "effects and coefficients disagree in length");
    }
    if (!(noise_sd >= 0.0)) throw Error(ErrorCode::invalid_argument, "noise_sd must be >= 0");
    Vector y = Vector::Zero(factors.n());
    for (std::size_t k = 0; k < model.effects.size(); ++k) {
        const EffectId& e = model.effects[k];
        const int hi = std::max(e.parent, e.conditioned);
        if (e.parent < 0 || hi >= factors.p()) {
            throw Error(ErrorCode::model_not_realizable, "effect refers to a missing factor");
        }
        y += model.coefficients[k] * raw_effect_column(factors, e).cast<double>();
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Index i = 0; i < y.size(); ++i) y[i] += noise_sd * normal(rng);
    return y;
}

Index misspecification_count(const std::vector<EffectId>& truth,
                             const std::vector<EffectId>& selected) {
    const std::set<EffectId> a(truth.begin(), truth.end());
    const std::set<EffectId> s(selected.begin(), selected.end());
    Index count = 0;
    for (const auto& e : a) count += s.count(e) ? 0 : 1;
    for (const auto& e : s) count += a.count(e) ? 0 : 1;
    return count;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw Error(ErrorCode::invalid_argument, "quantile of an empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw Error(ErrorCode::invalid_argument, "quantile level outside [0, 1]");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

const char* to_string(Method m) noexcept {
    switch (m) {
    case Method::cmenet: return "cmenet";
    case Method::lasso_limit: return "lasso_limit";
    case Method::oracle: return "oracle";
    }
    return "?";
}

Method parse_method(const std::string& text) {
    if (text == "cmenet") return Method::cmenet;
    if (text == "lasso_limit") return Method::lasso_limit;
    if (text == "oracle") return Method::oracle;
    throw Error(ErrorCode::parse_error, "unknown method '" + text + "'");
}

BenchmarkReport run_benchmark(const Scenario& sc, const BenchOptions& opts) {
    if (sc.reps < 1) throw Error(ErrorCode::invalid_argument, "reps must be positive");
    if (opts.methods.empty()) throw Error(ErrorCode::invalid_argument, "no methods requested");
    check_rho(sc.rho);
    // validate realizability up front
    draw_true_model(sc.p, sc.model, 0);

    const std::size_t nm = opts.methods.size();
    BenchmarkReport report;
    report.scenario = sc;
    report.records.resize(static_cast<std::size_t>(sc.reps) * nm);

    detail::parallel_for(sc.reps, opts.threads, [&](int rep) {
        const auto r = static_cast<std::uint64_t>(rep);
        const FactorMatrix x = gen_factors({sc.n, sc.p, sc.rho, derive_seed(sc.seed, r, 1)});
        const TrueModel truth = draw_true_model(sc.p, sc.model, derive_seed(sc.seed, r, 2));
        const Vector y = gen_response(x, truth, sc.model.noise_sd, derive_seed(sc.seed, r, 3));
        const FactorMatrix x_new = gen_factors({sc.n_new, sc.p, sc.rho, derive_seed(sc.seed, r, 4)});
        const Vector y_new =
            gen_response(x_new, truth, sc.model.noise_sd, derive_seed(sc.seed, r, 5));

        DesignOptions dopt;
        dopt.degenerate = DegeneratePolicy::drop;
        dopt.keep_raw = false;
        const CmeDesign design = build_cme_design(x, dopt);
        CvGrid grid = default_grid(design, y, sc.grid_size, sc.grid_size);
        grid.folds = sc.folds;
        grid.seed = derive_seed(sc.seed, r, 6);

        std::optional<Matrix> x_new_t;
        for (std::size_t mi = 0; mi < nm; ++mi) {
            RepRecord rec;
            rec.rep = rep;
            rec.method = opts.methods[mi];
            std::vector<EffectId> selected;
            Vector pred;
            if (rec.method == Method::oracle) {
                selected = truth.effects;
                pred = Vector::Zero(sc.n_new);
                for (std::size_t k = 0; k < truth.effects.size(); ++k) {
                    pred += truth.coefficients[k] *
                            raw_effect_column(x_new, truth.effects[k]).cast<double>();
                }
            } else {
                const CvResult cv = rec.method == Method::cmenet
                                        ? cv_cmenet(x, design, y, grid, opts.cv)
                                        : cv_lasso_limit(x, design, y, grid, opts.cv);
                for (const auto& s : cv.selected) selected.push_back(s.effect);
                if (!x_new_t) x_new_t = design.transform(x_new);
                pred = Vector::Constant(sc.n_new, cv.y_mean);
                for (Index e = 0; e < design.size(); ++e) {
                    if (cv.final_fit.beta[e] != 0.0) pred += x_new_t->col(e) * cv.final_fit.beta[e];
                }
                rec.params = cv.best;
            }
            rec.misspecified = misspecification_count(truth.effects, selected);
            rec.n_selected = static_cast<Index>(selected.size());
            rec.mspe = (y_new - pred).squaredNorm() / static_cast<double>(sc.n_new);
            report.records[static_cast<std::size_t>(rep) * nm + mi] = rec;
        }
    });

    for (std::size_t mi = 0; mi < nm; ++mi) {
        MethodSummary s;
        s.method = opts.methods[mi];
        std::vector<double> mis;
        std::vector<double> mspe;
        for (int rep = 0; rep < sc.reps; ++rep) {
            const auto& rec = report.records[static_cast<std::size_t>(rep) * nm + mi];
            mis.push_back(static_cast<double>(rec.misspecified));
            mspe.push_back(rec.mspe);
        }
        for (std::size_t k = 0; k < summary_levels.size(); ++k) {
            s.misspecified_q[k] = quantile(mis, summary_levels[k]);
            s.mspe_q[k] = quantile(mspe, summary_levels[k]);
        }
        report.summaries.push_back(s);
    }
    return report;
}

} // namespace cmenet
