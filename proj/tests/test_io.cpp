#include "serrin/io.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

using namespace serrin;

namespace {

DomainSpec trefoil(double eps)
{
    DomainSpec spec = DomainSpec::annulus(1.0, 2.0);
    spec.inner.cos_coeffs = {0.0, 0.0, eps};
    return spec;
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out(1);
    for (char ch : s) {
        if (ch == sep)
            out.emplace_back();
        else
            out.back() += ch;
    }
    return out;
}

} // namespace

TEST(DomainJson, RoundTripAndCircles)
{
    const DomainSpec spec = trefoil(0.1);
    const DomainSpec back = domain_from_json(to_json(spec));
    EXPECT_EQ(back.inner.cos_coeffs, spec.inner.cos_coeffs);
    EXPECT_EQ(back.outer.c0, 2.0);

    const DomainSpec circles = domain_from_json(json::parse(R"({"inner": 1.2, "outer": 2})"));
    EXPECT_EQ(circles.inner.c0, 1.2);
    EXPECT_TRUE(circles.inner.cos_coeffs.empty());
    EXPECT_THROW(domain_from_json(json::parse(R"({"inner": 1})")), Error);
    EXPECT_THROW(domain_from_json(json::parse(R"({"inner": {"c0": 1, "cosine": [0]}, "outer": 2})")), Error);
}

TEST(SpecHash, MatchesIndependentFnv)
{
    // FNV-1a 64 over little-endian doubles, computed separately in Python
    EXPECT_EQ(spec_hash(DomainSpec::annulus(1.0, 1.5)), "067ecef584b1894d");
    EXPECT_EQ(spec_hash(trefoil(0.1)), "d941f9852a1e72bd");
    EXPECT_NE(spec_hash(trefoil(0.1)), spec_hash(trefoil(0.1000001)));
}

TEST(FieldFile, RoundTrip)
{
    const CurvGrid g = build_grid(trefoil(0.1), 9, 16);
    const ScalarField u = ScalarField::sample(g, [](double x, double y) { return x * x - 0.3 * y + 1e-17; });
    std::stringstream ss;
    write_field(ss, g, u);
    const FieldFile f = read_field(ss);
    EXPECT_EQ(f.spec_hash, spec_hash(g.spec()));
    EXPECT_EQ(f.field.ns, 9);
    EXPECT_EQ(f.field.ntheta, 16);
    EXPECT_EQ(f.field.values, u.values);
    for (std::size_t i = 0; i < g.size(); ++i) {
        EXPECT_EQ(f.x1[i], g.x1(i));
        EXPECT_EQ(f.x2[i], g.x2(i));
    }
}

TEST(FieldFile, Malformed)
{
    std::istringstream bad_header("# something else\n");
    EXPECT_THROW(read_field(bad_header), Error);

    const CurvGrid g = build_grid(DomainSpec::annulus(1.0, 2.0), 9, 16);
    std::stringstream ss;
    write_field(ss, g, ScalarField::sample(g, [](double, double) { return 0.0; }));
    std::string text = ss.str();
    text.erase(text.rfind('\n', text.size() - 2) + 1); // drop the last row
    std::istringstream truncated(text);
    try {
        read_field(truncated);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("expected 144 rows"), std::string::npos);
    }
}

TEST(Scenario, ParseAndResolve)
{
    const ScenarioConfig c = scenario_from_json(json::parse(R"({
        "model": {"L": 0, "M": 4, "r_i": 1, "r_o": 1.5},
        "perturbation": {"boundary": "inner", "mode": 3, "eps": 0.05},
        "resolution": {"ns": 65, "ntheta": 33},
        "solver": {"tolerance": 1e-10, "method": "iterative"},
        "sweep": {"parameter": "eps", "values": [0, 0.1]}
    })"));
    EXPECT_EQ(c.resolution.ns, 65);
    EXPECT_EQ(c.resolution.ntheta, 33);
    EXPECT_EQ(c.solver.method, LinearSolver::iterative);
    EXPECT_DOUBLE_EQ(c.data().inner_flux, -3.0);
    const DomainSpec d = c.resolved_domain();
    ASSERT_EQ(d.inner.cos_coeffs.size(), 3u);
    EXPECT_EQ(d.inner.cos_coeffs[2], 0.05);
    EXPECT_EQ(d.outer.c0, 1.5);
    EXPECT_EQ(c.resolved_domain(0.1).inner.cos_coeffs[2], 0.1);
    EXPECT_TRUE(c.resolved_domain(0.0).inner.cos_coeffs.empty());
    EXPECT_EQ(c.sweep->values.size(), 2u);

    // boundary data alone: domain is the fitted model's annulus
    const ScenarioConfig b = scenario_from_json(json::parse(R"({"boundary_data": {"a": 1.5, "b": 0, "alpha": 1, "beta": -2}})"));
    EXPECT_NEAR(b.resolved_domain().outer.c0, 2.0, 1e-12);
}

TEST(Scenario, Errors)
{
    auto kind = [](const char* text) {
        try {
            scenario_from_json(json::parse(text));
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::not_applicable;
    };
    EXPECT_EQ(kind(R"({"model": {"L": 0, "M": 4, "r_i": 1, "r_o": 1.5}, "boundary_data": {"a": 0, "b": 1, "alpha": -1, "beta": 1}})"),
              ErrorKind::invalid_input);
    EXPECT_EQ(kind(R"({"model": {"L": 0, "M": 4, "r_i": 2, "r_o": 1}})"), ErrorKind::invalid_domain);
    EXPECT_EQ(kind(R"({"model": {"L": 0, "M": 4, "r_i": 1}})"), ErrorKind::invalid_input);
    EXPECT_EQ(kind(R"({"model": {"L": 0, "M": 4, "r_i": 1, "r_o": 1.5}, "solver": {"method": "lu"}})"),
              ErrorKind::invalid_input);
    EXPECT_EQ(kind(R"({"model": {"L": 0, "M": 4, "r_i": 1, "r_o": 1.5}, "solver": {"tolerance": 0.1}})"),
              ErrorKind::invalid_input);
    EXPECT_EQ(kind(R"({"model": {"L": 0, "M": 4, "r_i": 1, "r_o": 1.5}, "perturbation": {"mode": 17}})"),
              ErrorKind::invalid_input);
    EXPECT_EQ(kind(R"({"model": {"L": 0, "M": 4, "r_i": 1, "r_o": 1.5}, "sweep": {"parameter": "tolerance", "values": [1]}})"),
              ErrorKind::invalid_input);
    EXPECT_EQ(kind(R"({"modle": {}})"), ErrorKind::invalid_input);
    EXPECT_THROW(load_scenario("/nonexistent/scenario.json"), Error);

    const ScenarioConfig empty = scenario_from_json(json::parse(R"({"domain": {"inner": 1, "outer": 2}})"));
    EXPECT_FALSE(empty.has_data());
    EXPECT_THROW(empty.data(), Error);
}

TEST(ReportOutput, JsonAndCsv)
{
    const auto a = full_report(DomainSpec::annulus(1.0, 1.5), boundary_data_of(model_a), {33, 33});
    const json ja = report_to_json(a, evaluate_checks(a));
    EXPECT_EQ(ja.at("case"), "increasing");
    EXPECT_TRUE(ja.at("refined_pohozaev").is_null());
    EXPECT_TRUE(ja.at("expansion").is_null());
    EXPECT_TRUE(ja.at("divergence_identity").is_object());
    EXPECT_TRUE(ja.at("regime_tag").is_null());
    EXPECT_FALSE(ja.contains("seconds"));
    EXPECT_EQ(ja.at("checks").size(), evaluate_checks(a).size());

    const auto u = full_report(DomainSpec::annulus(1.0, 2.0), BoundaryData{2.0, 0.0, 1.0, -1.0}, {33, 33});
    const json ju = report_to_json(u, evaluate_checks(u));
    EXPECT_EQ(ju.at("regime_tag"), "unproven regime");
    for (const char* key : {"model", "gradient_bound_margin", "area_bound_margins", "divergence_identity",
                            "refined_pohozaev"})
        EXPECT_TRUE(ju.at(key).is_null()) << key;

    const auto header = split(csv_header(), ',');
    const std::vector<std::string> fixed{"case",         "Ns",           "Ntheta",           "eps",
                                         "neumann_sd_inner", "neumann_sd_outer", "pohozaev_res", "grad_margin",
                                         "area_margin_in", "area_margin_out", "div_identity_res",
                                         "refined_identity_res", "case1_margin", "expansion_coeff"};
    ASSERT_EQ(header.size(), fixed.size() + 1);
    EXPECT_TRUE(std::equal(fixed.begin(), fixed.end(), header.begin()));
    EXPECT_EQ(header.back(), "status");

    const auto row = split(csv_row(u, 0.0, "fail"), ',');
    ASSERT_EQ(row.size(), header.size());
    EXPECT_EQ(row[0], "decreasing_uncovered");
    EXPECT_EQ(row[1], "33");
    EXPECT_FALSE(row[6].empty());
    for (int i = 7; i <= 13; ++i) EXPECT_TRUE(row[i].empty()) << header[i];
    EXPECT_EQ(split(csv_error_row("increasing", {33, 33}, 0.1, "solver-failure"), ',').size(), header.size());
}
