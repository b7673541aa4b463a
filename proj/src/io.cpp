#include <cmenet/io.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace cmenet {

using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

[[noreturn]] void parse_fail(std::size_t row, std::string_view column, const std::string& what) {
    throw Error(ErrorCode::parse_error, "row " + std::to_string(row) + ", column '" +
                                            std::string(column) + "': " + what);
}

} // namespace

Dataset parse_csv(std::string_view text, const std::string& response, bool map01) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto nl = text.find('\n', start);
        const auto line = trim(text.substr(start, nl == std::string_view::npos ? nl : nl - start));
        if (!line.empty()) lines.push_back(line);
        if (nl == std::string_view::npos) break;
        start = nl + 1;
    }
    if (lines.empty()) throw Error(ErrorCode::parse_error, "empty CSV input");

    const auto header = split(lines[0]);
    Index resp = -1;
    std::vector<std::string> names;
    std::vector<std::size_t> factor_cols;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c].empty()) throw Error(ErrorCode::parse_error, "empty column name in header");
        if (header[c] == response) {
            if (resp >= 0) throw Error(ErrorCode::parse_error, "response column appears twice");
            resp = static_cast<Index>(c);
        } else {
            if (header[c].find('|') != std::string_view::npos) {
                throw Error(ErrorCode::parse_error,
                            "factor name '" + std::string(header[c]) + "' contains '|'");
            }
            names.emplace_back(header[c]);
            factor_cols.push_back(c);
        }
    }
    if (resp < 0) throw Error(ErrorCode::parse_error, "response column '" + response + "' not found");
    if (names.empty()) throw Error(ErrorCode::parse_error, "no factor columns");

    const Index n = static_cast<Index>(lines.size()) - 1;
    if (n < 1) throw Error(ErrorCode::parse_error, "no data rows");
    Eigen::MatrixXi x(n, static_cast<Index>(names.size()));
    Vector y(n);
    for (Index i = 0; i < n; ++i) {
        const std::size_t row = static_cast<std::size_t>(i) + 1;
        const auto fields = split(lines[static_cast<std::size_t>(i) + 1]);
        if (fields.size() != header.size()) {
            throw Error(ErrorCode::parse_error, "row " + std::to_string(row) + " has " +
                                                    std::to_string(fields.size()) + " fields, expected " +
                                                    std::to_string(header.size()));
        }
        {
            const auto f = fields[static_cast<std::size_t>(resp)];
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v)) {
                parse_fail(row, response, "'" + std::string(f) + "' is not a finite number");
            }
            y[i] = v;
        }
        for (std::size_t k = 0; k < factor_cols.size(); ++k) {
            auto f = fields[factor_cols[k]];
            if (!f.empty() && f.front() == '+') f.remove_prefix(1);
            int v = 0;
            const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            const bool ok = ec == std::errc() && ptr == f.data() + f.size() &&
                            (map01 ? (v == 0 || v == 1) : (v == -1 || v == 1));
            if (!ok) {
                parse_fail(row, names[k], "'" + std::string(fields[factor_cols[k]]) + "' is not " +
                                              (map01 ? "0 or 1" : "-1 or +1"));
            }
            x(i, static_cast<Index>(k)) = map01 ? 2 * v - 1 : v;
        }
    }
    return {FactorMatrix(std::move(x), std::move(names)), std::move(y), response};
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::parse_error, "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Dataset read_csv(const std::string& path, const std::string& response, bool map01) {
    return parse_csv(read_file(path), response, map01);
}

void write_csv(std::ostream& out, const FactorMatrix& factors, const Vector& y,
               const std::string& response) {
    if (y.size() != factors.n()) {
        throw Error(ErrorCode::dimension_mismatch, "response length differs from factor rows");
    }
    for (const auto& name : factors.names()) out << name << ',';
    out << response << '\n';
    out << std::setprecision(17);
    for (Index i = 0; i < factors.n(); ++i) {
        for (Index j = 0; j < factors.p(); ++j) out << factors(i, j) << ',';
        out << y[i] << '\n';
    }
}

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    std::ostringstream ss;
    ss << std::hex << std::setw(16) << std::setfill('0') << v;
    return ss.str();
}

Vector LinearModel::predict(const FactorMatrix& factors) const {
    if (factors.names() != factor_names) {
        throw Error(ErrorCode::dimension_mismatch, "factor names differ from the model's");
    }
    Vector out = Vector::Constant(factors.n(), intercept);
    for (std::size_t k = 0; k < effects.size(); ++k) {
        const Eigen::VectorXi raw = raw_effect_column(factors, effects[k]);
        for (Index i = 0; i < factors.n(); ++i) {
            out[i] += coefficients[k] * ((static_cast<double>(raw[i]) - center[k]) / scale[k]);
        }
    }
    return out;
}

LinearModel make_model(const CmeDesign& design, const Vector& beta, double intercept) {
    LinearModel m;
    m.factor_names = design.factor_names();
    m.intercept = intercept;
    for (Index e = 0; e < design.size(); ++e) {
        if (beta[e] == 0.0) continue;
        m.effects.push_back(design.effect(e));
        m.center.push_back(design.column_center()[e]);
        m.scale.push_back(design.column_scale()[e]);
        m.coefficients.push_back(beta[e]);
    }
    return m;
}

json to_json(const PenaltyParams& p) {
    return {{"lambda_s", p.lambda_s}, {"lambda_c", p.lambda_c}, {"gamma", p.gamma}, {"tau", p.tau}};
}

PenaltyParams params_from_json(const json& j) {
    return {j.at("lambda_s").get<double>(), j.at("lambda_c").get<double>(),
            j.at("gamma").get<double>(), j.at("tau").get<double>()};
}

json to_json(const LinearModel& m) {
    json effects = json::array();
    for (std::size_t k = 0; k < m.effects.size(); ++k) {
        effects.push_back({{"effect", m.effects[k].name(m.factor_names)},
                           {"coefficient", m.coefficients[k]},
                           {"center", m.center[k]},
                           {"scale", m.scale[k]}});
    }
    return {{"factor_names", m.factor_names}, {"intercept", m.intercept}, {"effects", effects}};
}

LinearModel model_from_json(const json& j) {
    try {
        LinearModel m;
        m.factor_names = j.at("factor_names").get<std::vector<std::string>>();
        m.intercept = j.at("intercept").get<double>();
        for (const auto& e : j.at("effects")) {
            m.effects.push_back(parse_effect(e.at("effect").get<std::string>(), m.factor_names));
            m.coefficients.push_back(e.at("coefficient").get<double>());
            m.center.push_back(e.at("center").get<double>());
            m.scale.push_back(e.at("scale").get<double>());
        }
        return m;
    } catch (const json::exception& ex) {
        throw Error(ErrorCode::parse_error, std::string("malformed model: ") + ex.what());
    }
}

namespace {

json header(const char* command, const Provenance& prov) {
    return {{"schema_version", report_schema_version},
            {"version", library_version},
            {"command", command},
            {"provenance", {{"input_hash", prov.input_hash}, {"seed", prov.seed}}}};
}

json selected_json(const CmeDesign& design, const Vector& beta) {
    json sel = json::array();
    for (const auto& s : selected_effects(design, beta)) {
        sel.push_back({{"effect", s.name}, {"coefficient", s.coefficient}});
    }
    return sel;
}

json cells_json(const std::vector<CvCell>& cells, bool with_screening) {
    json out = json::array();
    for (const auto& c : cells) {
        json j = to_json(c.params);
        j["error"] = c.error;
        j["evaluated"] = c.evaluated;
        j["failed_folds"] = c.failed_folds;
        if (with_screening) {
            j["screened_fraction"] = c.screened_fraction;
            j["reinstated"] = c.reinstated;
        }
        out.push_back(std::move(j));
    }
    return out;
}

} // namespace

json fit_report(const CmeDesign& design, const FitState& st, const PenaltyParams& params,
                const LinearModel& model, const Provenance& prov) {
    json j = header("fit", prov);
    j["n"] = design.n();
    j["p"] = design.p();
    j["p_prime"] = design.size();
    j["params"] = to_json(params);
    j["selected"] = selected_json(design, st.beta);
    j["model"] = to_json(model);
    j["diagnostics"] = {{"converged", st.converged},
                        {"sweeps", st.n_sweeps},
                        {"full_sweeps", st.n_full_sweeps},
                        {"kkt_residual", st.kkt_violation}};
    return j;
}

json cv_report(const CmeDesign& design, const CvResult& cv, const LinearModel& model,
               const Provenance& prov) {
    json j = header("cv", prov);
    j["n"] = design.n();
    j["p"] = design.p();
    j["p_prime"] = design.size();
    j["params"] = to_json(cv.best);
    j["selected"] = selected_json(design, cv.final_fit.beta);
    j["model"] = to_json(model);
    j["diagnostics"] = {{"converged", cv.final_fit.converged},
                        {"sweeps", cv.final_fit.n_sweeps},
                        {"kkt_residual", cv.final_fit.kkt_violation}};
    double frac = 0.0;
    int n_frac = 0;
    Index reinstated = 0;
    for (const auto& c : cv.stage_b) {
        if (!std::isnan(c.screened_fraction)) {
            frac += c.screened_fraction;
            ++n_frac;
        }
        reinstated += c.reinstated;
    }
    j["screening"] = {{"mean_screened_fraction", n_frac ? frac / n_frac : 0.0},
                      {"reinstated_total", reinstated}};
    j["cv"] = {{"folds", cv.grid.folds},
               {"lambda_max", cv.grid.lambda_max},
               {"fold_assignments", cv.fold_of},
               {"pilot", to_json(cv.pilot)},
               {"pilot_surface", cells_json(cv.pilot_surface, false)},
               {"stage_a", cells_json(cv.stage_a, false)},
               {"stage_b", cells_json(cv.stage_b, true)}};
    return j;
}

json to_json(const Scenario& s) {
    return {{"n", s.n},
            {"p", s.p},
            {"rho", s.rho},
            {"structure", to_string(s.model.structure)},
            {"G", s.model.n_groups},
            {"A", s.model.n_per_group},
            {"coefficient", s.model.coefficient},
            {"noise_sd", s.model.noise_sd},
            {"reps", s.reps},
            {"seed", s.seed},
            {"folds", s.folds},
            {"grid_size", s.grid_size},
            {"n_new", s.n_new}};
}

Scenario scenario_from_json(const json& j) {
    try {
        Scenario s;
        s.n = j.value("n", s.n);
        s.p = j.value("p", s.p);
        s.rho = j.value("rho", s.rho);
        if (j.contains("structure")) s.model.structure = parse_structure(j.at("structure").get<std::string>());
        s.model.n_groups = j.value("G", s.model.n_groups);
        s.model.n_per_group = j.value("A", s.model.n_per_group);
        s.model.coefficient = j.value("coefficient", s.model.coefficient);
        s.model.noise_sd = j.value("noise_sd", s.model.noise_sd);
        s.reps = j.value("reps", s.reps);
        s.seed = j.value("seed", s.seed);
        s.folds = j.value("folds", s.folds);
        s.grid_size = j.value("grid_size", s.grid_size);
        s.n_new = j.value("n_new", s.n_new);
        return s;
    } catch (const json::exception& ex) {
        throw Error(ErrorCode::parse_error, std::string("malformed scenario: ") + ex.what());
    }
}

json bench_report(const BenchmarkReport& r) {
    json j = {{"schema_version", report_schema_version},
              {"version", library_version},
              {"command", "bench"},
              {"scenario", to_json(r.scenario)}};
    json recs = json::array();
    for (const auto& rec : r.records) {
        recs.push_back({{"rep", rec.rep},
                        {"method", to_string(rec.method)},
                        {"misspecified", rec.misspecified},
                        {"mspe", rec.mspe},
                        {"n_selected", rec.n_selected},
                        {"params", to_json(rec.params)}});
    }
    j["records"] = recs;
    json sums = json::array();
    for (const auto& s : r.summaries) {
        json q_mis = json::object();
        json q_mspe = json::object();
        for (std::size_t k = 0; k < summary_levels.size(); ++k) {
            const std::string key = "q" + std::to_string(static_cast<int>(std::lround(summary_levels[k] * 100)));
            q_mis[key] = s.misspecified_q[k];
            q_mspe[key] = s.mspe_q[k];
        }
        sums.push_back({{"method", to_string(s.method)}, {"misspecified", q_mis}, {"mspe", q_mspe}});
    }
    j["summaries"] = sums;
    return j;
}

std::string bench_quantile_csv(const BenchmarkReport& r) {
    std::ostringstream out;
    out << std::setprecision(10);
    out << "method,metric,q10,q25,q50,q75,q90\n";
    for (const auto& s : r.summaries) {
        out << to_string(s.method) << ",misspecified";
        for (double v : s.misspecified_q) out << ',' << v;
        out << '\n' << to_string(s.method) << ",mspe";
        for (double v : s.mspe_q) out << ',' << v;
        out << '\n';
    }
    return out.str();
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

} // namespace cmenet
