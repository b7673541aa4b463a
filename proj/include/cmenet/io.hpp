#pragma once

#include <cmenet/design.hpp>
#include <cmenet/penalty.hpp>
#include <cmenet/simlab.hpp>
#include <cmenet/solver.hpp>
#include <cmenet/tuning.hpp>

#include "json.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace cmenet {

inline constexpr int report_schema_version = 1;
inline constexpr const char* library_version = "0.1.0";

struct Dataset {
    FactorMatrix factors;
    Vector y;
    std::string response;
};

/// Reads a headered CSV. Every column other than `response` is a factor coded
/// -1/+1 (or 0/1 when map01 is set). Errors name the data row and column.
Dataset parse_csv(std::string_view text, const std::string& response, bool map01 = false);
Dataset read_csv(const std::string& path, const std::string& response, bool map01 = false);

void write_csv(std::ostream& out, const FactorMatrix& factors, const Vector& y,
               const std::string& response = "y");

std::string read_file(const std::string& path);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t v);

/// Fitted linear predictor on the original factor scale:
/// yhat = intercept + sum_k coef_k * (raw_k - center_k) / scale_k.
struct LinearModel {
    std::vector<std::string> factor_names;
    std::vector<EffectId> effects;
    std::vector<double> center;
    std::vector<double> scale;
    std::vector<double> coefficients;
    double intercept = 0.0;

    Vector predict(const FactorMatrix& factors) const;
};

/// Keeps the nonzero coefficients of `beta` together with their column statistics.
LinearModel make_model(const CmeDesign& design, const Vector& beta, double intercept);

nlohmann::json to_json(const PenaltyParams& p);
PenaltyParams params_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LinearModel& m);
LinearModel model_from_json(const nlohmann::json& j);

struct Provenance {
    std::string input_hash;
    std::uint64_t seed = 0;
};

nlohmann::json fit_report(const CmeDesign& design, const FitState& st, const PenaltyParams& params,
                          const LinearModel& model, const Provenance& prov);
nlohmann::json cv_report(const CmeDesign& design, const CvResult& cv, const LinearModel& model,
                         const Provenance& prov);
nlohmann::json bench_report(const BenchmarkReport& report);
std::string bench_quantile_csv(const BenchmarkReport& report);

/// Scenario fields: n, p, rho, structure, G, A, coefficient, noise_sd, reps, seed,
/// folds, grid_size, n_new. Missing fields keep their defaults; unknown fields are ignored.
Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Scenario& s);

/// Serialized form used for reports: two-space indent and a trailing newline.
std::string dump(const nlohmann::json& j);

} // namespace cmenet
