#pragma once

#include <cmenet/error.hpp>

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cmenet {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using IndexSet = std::vector<Index>;
using RawMatrix = Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic>;

/// n x p matrix of binary factors coded -1/+1.
class FactorMatrix {
public:
    FactorMatrix() = default;

    /// Entries must all be -1 or +1. Names default to "g1".."gp".
    explicit FactorMatrix(Eigen::MatrixXi entries, std::vector<std::string> names = {});

    /// Maps 0 -> -1 and 1 -> +1. Any other value is rejected.
    static FactorMatrix from_binary01(const Eigen::MatrixXi& entries,
                                      std::vector<std::string> names = {});

    Index n() const noexcept { return entries_.rows(); }
    Index p() const noexcept { return entries_.cols(); }
    int operator()(Index i, Index j) const { return entries_(i, j); }
    const Eigen::MatrixXi& entries() const noexcept { return entries_; }
    const std::vector<std::string>& names() const noexcept { return names_; }

    /// Row subset in the given order.
    FactorMatrix rows(std::span<const Index> idx) const;

private:
    Eigen::MatrixXi entries_;
    std::vector<std::string> names_;
};

std::vector<std::string> default_factor_names(Index p);

enum class EffectKind : std::uint8_t { main, conditional };

/// A main effect J, or the conditional main effect J|K+ / J|K-.
struct EffectId {
    EffectKind kind = EffectKind::main;
    int parent = 0;
    int conditioned = -1; ///< -1 for main effects
    int sign = 0;         ///< +1 / -1 for CMEs, 0 for main effects

    static EffectId main_effect(int j) { return {EffectKind::main, j, -1, 0}; }
    static EffectId cme(int j, int k, int sign);

    bool is_main() const noexcept { return kind == EffectKind::main; }

    /// Canonical text form: "g3" or "g3|g7+" (using the given factor names).
    std::string name(const std::vector<std::string>& factor_names) const;

    friend bool operator==(const EffectId&, const EffectId&) = default;
    friend auto operator<=>(const EffectId&, const EffectId&) = default;
};

/// Parses the canonical form back into an EffectId.
EffectId parse_effect(const std::string& text, const std::vector<std::string>& factor_names);

/// Raw column of an effect over the factors: x_j, or x_j where x_k == sign and 0 elsewhere.
Eigen::VectorXi raw_effect_column(const FactorMatrix& factors, const EffectId& effect);

enum class DegeneratePolicy {
    reject, ///< throw ConstantColumn
    drop,   ///< remove the effect from the design
    zero,   ///< keep the effect as an all-zero column that is never updated
};

struct DesignOptions {
    bool include_cmes = true;
    DegeneratePolicy degenerate = DegeneratePolicy::reject;
    /// Keep the raw {-1,0,+1} columns. Defaults to on when p < 200.
    std::optional<bool> keep_raw;
};

/// Normalized ME + CME model matrix with sibling and cousin group structure.
///
/// Column order is the p main effects followed by the CMEs sorted by
/// (parent, conditioned, sign) with '+' before '-'. Immutable once built.
class CmeDesign {
public:
    Index n() const noexcept { return columns_.rows(); }
    Index p() const noexcept { return p_; }
    Index size() const noexcept { return columns_.cols(); }

    const Matrix& columns() const noexcept { return columns_; }
    auto column(Index e) const { return columns_.col(e); }
    const std::vector<EffectId>& effects() const noexcept { return effects_; }
    const EffectId& effect(Index e) const { return effects_.at(static_cast<std::size_t>(e)); }
    const std::optional<RawMatrix>& raw_columns() const noexcept { return raw_; }
    const Vector& column_center() const noexcept { return center_; }
    const Vector& column_scale() const noexcept { return scale_; }
    const std::vector<std::string>& factor_names() const noexcept { return names_; }

    /// Indices of ME j and every CME with parent j.
    std::span<const Index> sibling_group(Index j) const;
    /// Indices of ME j and every CME conditioned on j.
    std::span<const Index> cousin_group(Index j) const;

    Index sibling_of(Index e) const { return sibling_of_[static_cast<std::size_t>(e)]; }
    Index cousin_of(Index e) const { return cousin_of_[static_cast<std::size_t>(e)]; }

    /// False for zero-variance columns kept under DegeneratePolicy::zero.
    bool usable(Index e) const { return scale_[e] > 0.0; }
    IndexSet usable_columns() const;

    std::optional<Index> find(const EffectId& effect) const;
    std::string effect_name(Index e) const { return effect(e).name(names_); }

    /// Applies this design's effect list and normalization to other data.
    Matrix transform(const FactorMatrix& factors) const;

    friend CmeDesign build_cme_design(const FactorMatrix&, const DesignOptions&);

private:
    Index p_ = 0;
    Matrix columns_;
    std::vector<EffectId> effects_;
    std::optional<RawMatrix> raw_;
    Vector center_;
    Vector scale_;
    std::vector<std::string> names_;
    std::vector<IndexSet> sibling_groups_;
    std::vector<IndexSet> cousin_groups_;
    std::vector<Index> sibling_of_;
    std::vector<Index> cousin_of_;
};

/// Number of effects in a full design: p + 4 * C(p, 2).
constexpr Index full_design_size(Index p) noexcept { return p + 2 * p * (p - 1); }

CmeDesign build_cme_design(const FactorMatrix& factors, const DesignOptions& options = {});

/// Same as build_cme_design but with the include_cmes flag spelled out.
inline CmeDesign build_cme_design(const FactorMatrix& factors, bool include_cmes) {
    DesignOptions opts;
    opts.include_cmes = include_cmes;
    return build_cme_design(factors, opts);
}

} // namespace cmenet
