#include <cmenet/design.hpp>

#include <algorithm>
#include <cmath>
#include <tuple>

namespace cmenet {

namespace {

void check_names(const std::vector<std::string>& names, Index p) {
    if (static_cast<Index>(names.size()) != p) {
        throw Error(ErrorCode::dimension_mismatch,
                    "expected " + std::to_string(p) + " factor names, got " +
                        std::to_string(names.size()));
    }
}

Index find_name(const std::vector<std::string>& names, const std::string& name) {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) {
        throw Error(ErrorCode::parse_error, "unknown factor name '" + name + "'");
    }
    return it - names.begin();
}

} // namespace

std::vector<std::string> default_factor_names(Index p) {
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(p));
    for (Index j = 0; j < p; ++j) names.push_back("g" + std::to_string(j + 1));
    return names;
}

FactorMatrix::FactorMatrix(Eigen::MatrixXi entries, std::vector<std::string> names)
    : entries_(std::move(entries)), names_(std::move(names)) {
    if (names_.empty()) names_ = default_factor_names(entries_.cols());
    check_names(names_, entries_.cols());
    for (Index j = 0; j < entries_.cols(); ++j) {
        for (Index i = 0; i < entries_.rows(); ++i) {
            const int v = entries_(i, j);
            if (v != 1 && v != -1) {
                throw Error(ErrorCode::parse_error,
                            "factor entry at row " + std::to_string(i + 1) + ", column '" +
                                names_[static_cast<std::size_t>(j)] +
                                "' is " + std::to_string(v) + " (expected -1 or +1)");
            }
        }
    }
}

FactorMatrix FactorMatrix::from_binary01(const Eigen::MatrixXi& entries,
                                         std::vector<std::string> names) {
    Eigen::MatrixXi mapped(entries.rows(), entries.cols());
    for (Index j = 0; j < entries.cols(); ++j) {
        for (Index i = 0; i < entries.rows(); ++i) {
            const int v = entries(i, j);
            if (v != 0 && v != 1) {
                throw Error(ErrorCode::parse_error,
                            "factor entry at row " + std::to_string(i + 1) + ", column " +
                                std::to_string(j + 1) + " is " + std::to_string(v) +
                                " (expected 0 or 1)");
            }
            mapped(i, j) = v == 1 ? 1 : -1;
        }
    }
    return FactorMatrix(std::move(mapped), std::move(names));
}

FactorMatrix FactorMatrix::rows(std::span<const Index> idx) const {
    Eigen::MatrixXi sub(static_cast<Index>(idx.size()), p());
    for (std::size_t r = 0; r < idx.size(); ++r) {
        if (idx[r] < 0 || idx[r] >= n()) {
            throw Error(ErrorCode::index_out_of_range, "row index out of range");
        }
        sub.row(static_cast<Index>(r)) = entries_.row(idx[r]);
    }
    return FactorMatrix(std::move(sub), names_);
}

EffectId EffectId::cme(int j, int k, int sign) {
    if (j == k) {
        throw Error(ErrorCode::invalid_argument, "a CME cannot condition a factor on itself");
    }
    if (sign != 1 && sign != -1) {
        throw Error(ErrorCode::invalid_argument, "CME sign must be +1 or -1");
    }
    return {EffectKind::conditional, j, k, sign};
}

std::string EffectId::name(const std::vector<std::string>& factor_names) const {
    const auto& parent_name = factor_names.at(static_cast<std::size_t>(parent));
    if (is_main()) return parent_name;
    return parent_name + "|" + factor_names.at(static_cast<std::size_t>(conditioned)) +
           (sign > 0 ? "+" : "-");
}

EffectId parse_effect(const std::string& text, const std::vector<std::string>& factor_names) {
    const auto bar = text.find('|');
    if (bar == std::string::npos) {
        return EffectId::main_effect(static_cast<int>(find_name(factor_names, text)));
    }
    if (text.size() < bar + 3 || (text.back() != '+' && text.back() != '-')) {
        throw Error(ErrorCode::parse_error, "malformed effect name '" + text + "'");
    }
    const auto parent = find_name(factor_names, text.substr(0, bar));
    const auto cond = find_name(factor_names, text.substr(bar + 1, text.size() - bar - 2));
    return EffectId::cme(static_cast<int>(parent), static_cast<int>(cond),
                         text.back() == '+' ? 1 : -1);
}

Eigen::VectorXi raw_effect_column(const FactorMatrix& factors, const EffectId& effect) {
    if (effect.parent < 0 || effect.parent >= factors.p() ||
        (!effect.is_main() && (effect.conditioned < 0 || effect.conditioned >= factors.p()))) {
        throw Error(ErrorCode::index_out_of_range, "effect refers to a missing factor");
    }
    const auto& x = factors.entries();
    if (effect.is_main()) return x.col(effect.parent);
    Eigen::VectorXi col(factors.n());
    for (Index i = 0; i < factors.n(); ++i) {
        col[i] = x(i, effect.conditioned) == effect.sign ? x(i, effect.parent) : 0;
    }
    return col;
}

std::span<const Index> CmeDesign::sibling_group(Index j) const {
    if (j < 0 || j >= p_) {
        throw Error(ErrorCode::index_out_of_range, "sibling group index out of range");
    }
    return sibling_groups_[static_cast<std::size_t>(j)];
}

std::span<const Index> CmeDesign::cousin_group(Index j) const {
    if (j < 0 || j >= p_) {
        throw Error(ErrorCode::index_out_of_range, "cousin group index out of range");
    }
    return cousin_groups_[static_cast<std::size_t>(j)];
}

IndexSet CmeDesign::usable_columns() const {
    IndexSet out;
    out.reserve(static_cast<std::size_t>(size()));
    for (Index e = 0; e < size(); ++e) {
        if (usable(e)) out.push_back(e);
    }
    return out;
}

std::optional<Index> CmeDesign::find(const EffectId& effect) const {
    // Column order sorts by (kind, parent, conditioned, '+' before '-').
    const auto key = [](const EffectId& e) {
        return std::make_tuple(e.kind, e.parent, e.conditioned, -e.sign);
    };
    auto it = std::lower_bound(effects_.begin(), effects_.end(), effect,
                               [&](const EffectId& a, const EffectId& b) { return key(a) < key(b); });
    if (it != effects_.end() && *it == effect) return it - effects_.begin();
    return std::nullopt;
}

Matrix CmeDesign::transform(const FactorMatrix& factors) const {
    if (factors.p() != p_) {
        throw Error(ErrorCode::dimension_mismatch, "factor count differs from the design");
    }
    Matrix out(factors.n(), size());
    for (Index e = 0; e < size(); ++e) {
        if (!usable(e)) {
            out.col(e).setZero();
            continue;
        }
        const Eigen::VectorXi raw = raw_effect_column(factors, effect(e));
        out.col(e) = (raw.cast<double>().array() - center_[e]) / scale_[e];
    }
    return out;
}

CmeDesign build_cme_design(const FactorMatrix& factors, const DesignOptions& options) {
    const Index n = factors.n();
    const Index p = factors.p();
    if (n < 2) throw Error(ErrorCode::invalid_argument, "need at least two observations");
    if (p < 1) throw Error(ErrorCode::invalid_argument, "need at least one factor");

    // Main effects first, then CMEs by (parent, conditioned, sign), '+' before '-'.
    std::vector<EffectId> candidates;
    candidates.reserve(static_cast<std::size_t>(options.include_cmes ? full_design_size(p) : p));
    for (int j = 0; j < p; ++j) candidates.push_back(EffectId::main_effect(j));
    if (options.include_cmes) {
        for (int j = 0; j < p; ++j) {
            for (int k = 0; k < p; ++k) {
                if (j == k) continue;
                candidates.push_back(EffectId::cme(j, k, 1));
                candidates.push_back(EffectId::cme(j, k, -1));
            }
        }
    }

    CmeDesign d;
    d.p_ = p;
    d.names_ = factors.names();
    const bool keep_raw = options.keep_raw.value_or(p < 200);

    std::vector<Eigen::VectorXi> raws;
    std::vector<double> centers;
    std::vector<double> scales;
    raws.reserve(candidates.size());
    for (const auto& effect : candidates) {
        Eigen::VectorXi raw = raw_effect_column(factors, effect);
        const double mean = raw.cast<double>().mean();
        const double ss = (raw.cast<double>().array() - mean).square().sum();
        const bool constant = (raw.array() == raw[0]).all();
        if (constant) {
            if (options.degenerate == DegeneratePolicy::reject) {
                throw Error(ErrorCode::constant_column,
                            "effect " + effect.name(d.names_) + " has a constant column");
            }
            if (options.degenerate == DegeneratePolicy::drop) continue;
        }
        d.effects_.push_back(effect);
        centers.push_back(mean);
        scales.push_back(constant ? 0.0 : std::sqrt(ss / static_cast<double>(n)));
        raws.push_back(std::move(raw));
    }

    const Index size = static_cast<Index>(d.effects_.size());
    d.columns_.resize(n, size);
    d.center_ = Eigen::Map<const Vector>(centers.data(), size);
    d.scale_ = Eigen::Map<const Vector>(scales.data(), size);
    if (keep_raw) d.raw_.emplace(n, size);
    for (Index e = 0; e < size; ++e) {
        const auto& raw = raws[static_cast<std::size_t>(e)];
        if (d.scale_[e] > 0.0) {
            d.columns_.col(e) = (raw.cast<double>().array() - d.center_[e]) / d.scale_[e];
        } else {
            d.columns_.col(e).setZero();
        }
        if (keep_raw) d.raw_->col(e) = raw.cast<std::int8_t>();
    }

    d.sibling_groups_.assign(static_cast<std::size_t>(p), {});
    d.cousin_groups_.assign(static_cast<std::size_t>(p), {});
    d.sibling_of_.resize(static_cast<std::size_t>(size));
    d.cousin_of_.resize(static_cast<std::size_t>(size));
    for (Index e = 0; e < size; ++e) {
        const auto& eff = d.effects_[static_cast<std::size_t>(e)];
        const Index sib = eff.parent;
        const Index cou = eff.is_main() ? eff.parent : eff.conditioned;
        d.sibling_groups_[static_cast<std::size_t>(sib)].push_back(e);
        d.cousin_groups_[static_cast<std::size_t>(cou)].push_back(e);
        d.sibling_of_[static_cast<std::size_t>(e)] = sib;
        d.cousin_of_[static_cast<std::size_t>(e)] = cou;
    }
    return d;
}

} // namespace cmenet
