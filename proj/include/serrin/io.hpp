#pragma once

// Serialization: domain and scenario documents (JSON), verification reports
// (JSON tree and flat CSV row), and the columnar ScalarField file.

#include "serrin/domain.hpp"
#include "serrin/error.hpp"
#include "serrin/model.hpp"
#include "serrin/solver.hpp"
#include "serrin/verify.hpp"

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace serrin {

using json = nlohmann::json;

namespace detail {

[[noreturn]] inline void bad_config(const std::string& what) { throw Error(ErrorKind::invalid_input, what); }

inline double number_at(const json& j, const char* key)
{
    if (!j.contains(key) || !j.at(key).is_number()) bad_config(std::string("expected number '") + key + "'");
    return j.at(key).get<double>();
}

inline void reject_unknown(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where)
{
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || key == a;
        if (!ok) bad_config("unknown key '" + key + "' in " + where);
    }
}

inline std::vector<double> number_list(const json& j, const char* key)
{
    if (!j.contains(key)) return {};
    if (!j.at(key).is_array()) bad_config(std::string("'") + key + "' must be an array");
    std::vector<double> out;
    for (const auto& v : j.at(key)) {
        if (!v.is_number()) bad_config(std::string("'") + key + "' must contain numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

} // namespace detail

// ---- domains ---------------------------------------------------------------

inline json to_json(const FourierRadius& c) { return {{"c0", c.c0}, {"cos", c.cos_coeffs}, {"sin", c.sin_coeffs}}; }

inline json to_json(const DomainSpec& s) { return {{"inner", to_json(s.inner)}, {"outer", to_json(s.outer)}}; }

inline FourierRadius fourier_radius_from_json(const json& j)
{
    if (j.is_number()) return FourierRadius::circle(j.get<double>());
    if (!j.is_object()) detail::bad_config("curve must be a number (circle radius) or {c0, cos, sin}");
    detail::reject_unknown(j, {"c0", "cos", "sin"}, "curve");
    return {detail::number_at(j, "c0"), detail::number_list(j, "cos"), detail::number_list(j, "sin")};
}

inline DomainSpec domain_from_json(const json& j)
{
    if (!j.is_object() || !j.contains("inner") || !j.contains("outer"))
        detail::bad_config("domain needs 'inner' and 'outer' curves");
    detail::reject_unknown(j, {"inner", "outer"}, "domain");
    return {fourier_radius_from_json(j.at("inner")), fourier_radius_from_json(j.at("outer"))};
}

/// FNV-1a over the bit patterns of every coefficient, as 16 hex digits.
inline std::string spec_hash(const DomainSpec& s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&](double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        for (int i = 0; i < 8; ++i) {
            h ^= (bits >> (8 * i)) & 0xffU;
            h *= 0x100000001b3ULL;
        }
    };
    for (const FourierRadius* c : {&s.inner, &s.outer}) {
        mix(c->c0);
        mix(static_cast<double>(c->cos_coeffs.size()));
        for (double v : c->cos_coeffs) mix(v);
        mix(static_cast<double>(c->sin_coeffs.size()));
        for (double v : c->sin_coeffs) mix(v);
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---- scalar field files ----------------------------------------------------

inline constexpr std::string_view field_magic = "# serrin-field v1";

inline void write_field(std::ostream& os, const CurvGrid& g, const ScalarField& u)
{
    detail::check_shape(g, u);
    os << field_magic << '\n'
       << "# Ns " << g.ns() << " Ntheta " << g.ntheta() << " spec_hash " << spec_hash(g.spec()) << '\n'
       << "# s_index theta_index x1 x2 u\n";
    char line[160];
    for (int j = 0; j < g.ns(); ++j) {
        for (int k = 0; k < g.ntheta(); ++k) {
            const std::size_t i = g.node(j, k);
            std::snprintf(line, sizeof line, "%d %d %.17g %.17g %.17g\n", j, k, g.x1(i), g.x2(i), u.values[i]);
            os << line;
        }
    }
}

struct FieldFile {
    std::string spec_hash;
    ScalarField field;
    std::vector<double> x1;
    std::vector<double> x2;
};

inline FieldFile read_field(std::istream& is)
{
    auto fail = [](const std::string& what) -> FieldFile { throw Error(ErrorKind::invalid_input, "field file: " + what); };
    std::string line;
    if (!std::getline(is, line) || line != field_magic) return fail("missing header");
    FieldFile out;
    {
        if (!std::getline(is, line)) return fail("missing size line");
        std::istringstream hs(line);
        std::string hash_mark, ns_tag, nt_tag, hash_tag;
        if (!(hs >> hash_mark >> ns_tag >> out.field.ns >> nt_tag >> out.field.ntheta >> hash_tag >> out.spec_hash) ||
            ns_tag != "Ns" || nt_tag != "Ntheta" || hash_tag != "spec_hash")
            return fail("malformed size line");
    }
    if (!std::getline(is, line)) return fail("missing column line");
    if (out.field.ns <= 0 || out.field.ntheta <= 0) return fail("non-positive sizes");
    const std::size_t n = static_cast<std::size_t>(out.field.ns) * out.field.ntheta;
    out.field.values.assign(n, 0.0);
    out.x1.assign(n, 0.0);
    out.x2.assign(n, 0.0);
    std::vector<bool> seen(n, false);
    std::size_t rows = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream rs(line);
        int j, k;
        double x, y, v;
        if (!(rs >> j >> k >> x >> y >> v)) return fail("malformed row " + std::to_string(rows + 1));
        if (j < 0 || j >= out.field.ns || k < 0 || k >= out.field.ntheta) return fail("index out of range");
        const std::size_t i = static_cast<std::size_t>(j) * out.field.ntheta + k;
        if (seen[i]) return fail("duplicate node");
        seen[i] = true;
        out.field.values[i] = v, out.x1[i] = x, out.x2[i] = y;
        ++rows;
    }
    if (rows != n) return fail("expected " + std::to_string(n) + " rows, found " + std::to_string(rows));
    return out;
}

// ---- reports ---------------------------------------------------------------

inline json to_json(const BoundaryData& d)
{
    return {{"a", d.inner_value}, {"b", d.outer_value}, {"alpha", d.inner_flux}, {"beta", d.outer_flux}};
}

inline json to_json(const ModelParams& p)
{
    return {{"L", p.offset}, {"M", p.log_coeff}, {"r_i", p.r_inner}, {"r_o", p.r_outer}};
}

inline json to_json(const NeumannStats& s) { return {{"mean", s.mean}, {"sd", s.sd}, {"max_dev", s.max_dev}}; }

template <class T, class F>
json optional_json(const std::optional<T>& v, F&& fn)
{
    return v ? fn(*v) : json(nullptr);
}

inline json to_json(const CheckResult& c)
{
    return {{"name", c.name},     {"value", c.value},           {"threshold", c.threshold},
            {"passed", c.passed}, {"diagnostic", c.diagnostic}, {"bound", c.lower_bound ? "min" : "max"}};
}

/// Report document. Contains no timing, so identical inputs give identical documents.
inline json report_to_json(const VerificationReport& r, const std::vector<CheckResult>& checks)
{
    json j;
    j["case"] = std::string(to_string(r.problem_case));
    j["regime_tag"] = r.regime_tag.empty() ? json(nullptr) : json(r.regime_tag);
    j["hypotheses"] = r.hypotheses;
    j["range_hypothesis"] = r.range_hypothesis;
    j["prescribed"] = to_json(r.prescribed);
    j["measured"] = to_json(r.measured);
    j["model"] = optional_json(r.model, [](const ModelParams& p) { return to_json(p); });
    j["field_model"] = optional_json(r.field_model, [](const ModelParams& p) { return to_json(p); });
    j["field_model_source"] = r.field_model_source.empty() ? json(nullptr) : json(r.field_model_source);
    j["neumann"] = {{"inner", to_json(r.neumann_inner)}, {"outer", to_json(r.neumann_outer)}};
    j["pohozaev_residual"] = r.pohozaev;
    j["gradient_bound_margin"] = optional_json(
        r.gradient_margin, [](const GradientMargin& m) { return json{{"value", m.value}, {"x1", m.x1}, {"x2", m.x2}}; });
    j["area_bound_margins"] = optional_json(
        r.area_margins, [](const AreaMargins& m) { return json{{"inner", m.inner}, {"outer", m.outer}}; });
    j["divergence_identity"] = optional_json(r.divergence, [](const DivergenceIdentity& d) {
        return json{{"residual", d.residual},
                    {"interior", d.interior},
                    {"inner_term", d.inner_term},
                    {"outer_term", d.outer_term},
                    {"cutoff", d.cutoff ? json(*d.cutoff) : json(nullptr)}};
    });
    j["refined_pohozaev"] = optional_json(r.refined, [](const RefinedPohozaev& p) {
        return json{{"identity_residual", p.identity_residual},
                    {"case1_margin", p.case1_margin},
                    {"weighted_gap", p.weighted_gap},
                    {"k", p.k},
                    {"cutoff", p.cutoff ? json(*p.cutoff) : json(nullptr)}};
    });
    j["expansion"] = r.expansion_coefficient
                         ? json{{"coefficient", *r.expansion_coefficient},
                                {"boundary", std::string(to_string(*r.expansion_boundary))}}
                         : json(nullptr);
    j["notes"] = r.notes;
    j["resolution"] = {{"ns", r.resolution.ns}, {"ntheta", r.resolution.ntheta}};
    j["tolerances"] = {{"solver", r.solve_options.tolerance}, {"clip", r.clip_tolerance}};
    j["solve"] = {{"method", std::string(to_string(r.solve_stats.method))},
                  {"iterations", r.solve_stats.iterations},
                  {"residual", r.solve_stats.residual}};
    json cj = json::array();
    for (const auto& c : checks) cj.push_back(to_json(c));
    j["checks"] = cj;
    return j;
}

inline const std::vector<std::string>& csv_columns()
{
    static const std::vector<std::string> cols{
        "case",         "Ns",           "Ntheta",          "eps",
        "neumann_sd_inner", "neumann_sd_outer", "pohozaev_res", "grad_margin",
        "area_margin_in", "area_margin_out", "div_identity_res", "refined_identity_res",
        "case1_margin", "expansion_coeff", "status"};
    return cols;
}

inline std::string csv_header()
{
    std::string out;
    for (const auto& c : csv_columns()) out += (out.empty() ? "" : ",") + c;
    return out;
}

namespace detail {

inline std::string csv_number(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9e", v);
    return buf;
}

} // namespace detail

/// One CSV row; inapplicable fields are empty. `status` is "ok", "fail" or an error kind.
inline std::string csv_row(const VerificationReport& r, double eps, const std::string& status)
{
    using detail::csv_number;
    const std::string none;
    const auto& gm = r.gradient_margin;
    const auto& am = r.area_margins;
    const auto& dv = r.divergence;
    const auto& rp = r.refined;
    const auto& ex = r.expansion_coefficient;
    const std::vector<std::string> f{std::string(to_string(r.problem_case)),
                                     std::to_string(r.resolution.ns),
                                     std::to_string(r.resolution.ntheta),
                                     csv_number(eps),
                                     csv_number(r.neumann_inner.sd),
                                     csv_number(r.neumann_outer.sd),
                                     csv_number(r.pohozaev),
                                     gm ? csv_number(gm->value) : none,
                                     am ? csv_number(am->inner) : none,
                                     am ? csv_number(am->outer) : none,
                                     dv ? csv_number(dv->residual) : none,
                                     rp ? csv_number(rp->identity_residual) : none,
                                     rp ? csv_number(rp->case1_margin) : none,
                                     ex ? csv_number(*ex) : none,
                                     status};
    std::string out;
    for (std::size_t i = 0; i < f.size(); ++i) out += (i ? "," : "") + f[i];
    return out;
}

/// Row for a scenario that raised before producing a report.
inline std::string csv_error_row(const std::string& case_tag, Resolution res, double eps, const std::string& status)
{
    std::string out = case_tag + "," + std::to_string(res.ns) + "," + std::to_string(res.ntheta) + "," +
                      detail::csv_number(eps);
    for (int i = 0; i < 10; ++i) out += ",";
    return out + "," + status;
}

// ---- scenarios -------------------------------------------------------------

struct Perturbation {
    Boundary boundary = Boundary::inner;
    int mode = 3;
    double eps = 0.0;
};

struct SweepBlock {
    std::string parameter; // eps | ns | ntheta | resolution
    std::vector<double> values;
};

struct MmsBlock {
    std::string field = "model-a";
    std::vector<int> sizes{33, 65, 129};
};

struct OutputPaths {
    std::string field;
    std::string report;
    std::string csv;
};

struct ScenarioConfig {
    std::optional<BoundaryData> boundary_data;
    std::optional<ModelParams> model;
    std::optional<DomainSpec> domain;
    Resolution resolution;
    SolveOptions solver;
    std::optional<Perturbation> perturbation;
    std::optional<SweepBlock> sweep;
    MmsBlock mms;
    OutputPaths output;

    double source = -2.0; // right-hand side f of Δu = f, used by the solve command

    bool has_data() const { return boundary_data || model; }

    BoundaryData data() const
    {
        if (!has_data()) throw Error(ErrorKind::invalid_input, "scenario needs 'boundary_data' or 'model'");
        return boundary_data ? *boundary_data : boundary_data_of(*model);
    }

    /// Explicit domain, else the model's annulus, else the annulus of the model fitted to the data;
    /// then the perturbation eps·cos(mode θ) (eps from the argument when given).
    DomainSpec resolved_domain(std::optional<double> eps_override = std::nullopt) const
    {
        DomainSpec spec;
        if (domain) {
            spec = *domain;
        } else {
            if (!has_data()) throw Error(ErrorKind::invalid_input, "scenario needs a 'domain' or data to fit one");
            const ModelParams p = model ? *model : fit_model(*boundary_data);
            spec = DomainSpec::annulus(p.r_inner, p.r_outer);
        }
        const double eps = eps_override ? *eps_override : (perturbation ? perturbation->eps : 0.0);
        if (eps != 0.0) {
            const Perturbation pert = perturbation.value_or(Perturbation{});
            FourierRadius& c = pert.boundary == Boundary::inner ? spec.inner : spec.outer;
            if (c.cos_coeffs.size() < static_cast<std::size_t>(pert.mode)) c.cos_coeffs.resize(pert.mode, 0.0);
            c.cos_coeffs[pert.mode - 1] += eps;
        }
        return spec;
    }

    double eps() const { return perturbation ? perturbation->eps : 0.0; }
};

inline ScenarioConfig scenario_from_json(const json& j)
{
    using namespace detail;
    if (!j.is_object()) bad_config("scenario must be a JSON object");
    reject_unknown(j, {"name", "description", "boundary_data", "model", "domain", "resolution", "solver",
                       "perturbation", "sweep", "mms", "output", "source"},
                   "scenario");
    ScenarioConfig c;
    if (j.contains("boundary_data")) {
        const json& b = j.at("boundary_data");
        reject_unknown(b, {"a", "b", "alpha", "beta"}, "boundary_data");
        c.boundary_data = BoundaryData{number_at(b, "a"), number_at(b, "b"), number_at(b, "alpha"), number_at(b, "beta")};
    }
    if (j.contains("model")) {
        const json& m = j.at("model");
        reject_unknown(m, {"L", "M", "r_i", "r_o"}, "model");
        c.model = ModelParams{number_at(m, "L"), number_at(m, "M"), number_at(m, "r_i"), number_at(m, "r_o")};
        if (!(c.model->r_inner > 0.0 && c.model->r_outer > c.model->r_inner))
            throw Error(ErrorKind::invalid_domain, "model radii must satisfy 0 < r_i < r_o");
    }
    if (c.boundary_data && c.model) bad_config("scenario takes only one of 'boundary_data' and 'model'");
    if (c.boundary_data && !all_finite(*c.boundary_data)) bad_config("boundary data must be finite");
    if (j.contains("domain")) c.domain = domain_from_json(j.at("domain"));
    if (j.contains("source")) c.source = number_at(j, "source");
    if (j.contains("resolution")) {
        const json& r = j.at("resolution");
        reject_unknown(r, {"ns", "ntheta"}, "resolution");
        c.resolution = {static_cast<int>(number_at(r, "ns")), static_cast<int>(number_at(r, "ntheta"))};
    }
    if (j.contains("solver")) {
        const json& s = j.at("solver");
        reject_unknown(s, {"tolerance", "max_iterations", "method"}, "solver");
        if (s.contains("tolerance")) c.solver.tolerance = number_at(s, "tolerance");
        if (s.contains("max_iterations")) c.solver.max_iterations = static_cast<int>(number_at(s, "max_iterations"));
        if (s.contains("method")) {
            const std::string m = s.at("method").get<std::string>();
            if (m == "direct") c.solver.method = LinearSolver::direct;
            else if (m == "iterative") c.solver.method = LinearSolver::iterative;
            else if (m == "auto") c.solver.method = LinearSolver::automatic;
            else bad_config("solver.method must be direct, iterative or auto");
        }
        if (!(c.solver.tolerance > 0.0 && c.solver.tolerance < 1e-4)) bad_config("solver tolerance must lie in (0, 1e-4)");
    }
    if (j.contains("perturbation")) {
        const json& p = j.at("perturbation");
        reject_unknown(p, {"boundary", "mode", "eps"}, "perturbation");
        Perturbation pert;
        if (p.contains("boundary")) {
            const std::string b = p.at("boundary").get<std::string>();
            if (b != "inner" && b != "outer") bad_config("perturbation.boundary must be inner or outer");
            pert.boundary = b == "inner" ? Boundary::inner : Boundary::outer;
        }
        if (p.contains("mode")) pert.mode = static_cast<int>(number_at(p, "mode"));
        if (pert.mode < 1 || pert.mode > max_fourier_degree) bad_config("perturbation.mode must lie in [1, 16]");
        if (p.contains("eps")) pert.eps = number_at(p, "eps");
        c.perturbation = pert;
    }
    if (j.contains("sweep")) {
        const json& s = j.at("sweep");
        reject_unknown(s, {"parameter", "values"}, "sweep");
        if (!s.contains("parameter") || !s.at("parameter").is_string()) bad_config("sweep.parameter must be a string");
        SweepBlock sw{s.at("parameter").get<std::string>(), number_list(s, "values")};
        if (sw.parameter != "eps" && sw.parameter != "ns" && sw.parameter != "ntheta" && sw.parameter != "resolution")
            bad_config("sweep.parameter must be eps, ns, ntheta or resolution");
        c.sweep = sw;
    }
    if (j.contains("mms")) {
        const json& m = j.at("mms");
        reject_unknown(m, {"field", "sizes"}, "mms");
        if (m.contains("field")) c.mms.field = m.at("field").get<std::string>();
        if (m.contains("sizes")) {
            c.mms.sizes.clear();
            for (double v : number_list(m, "sizes")) c.mms.sizes.push_back(static_cast<int>(v));
        }
    }
    if (j.contains("output")) {
        const json& o = j.at("output");
        reject_unknown(o, {"field", "report", "csv"}, "output");
        if (o.contains("field")) c.output.field = o.at("field").get<std::string>();
        if (o.contains("report")) c.output.report = o.at("report").get<std::string>();
        if (o.contains("csv")) c.output.csv = o.at("csv").get<std::string>();
    }
    return c;
}

inline ScenarioConfig load_scenario(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::invalid_input, "cannot open scenario file '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::invalid_input, "scenario '" + path + "' is not valid JSON: " + e.what());
    }
    try {
        return scenario_from_json(j);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::invalid_input, "scenario '" + path + "': " + e.what());
    }
}

} // namespace serrin
