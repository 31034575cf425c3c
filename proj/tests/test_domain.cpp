#include "serrin/domain.hpp"
#include "serrin/model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <array>
#include <numbers>
#include <random>
#include <vector>

using namespace serrin;

namespace {

constexpr double pi = std::numbers::pi;

DomainSpec trefoil_inner(double eps, double outer = 2.0)
{
    DomainSpec spec = DomainSpec::annulus(1.0, outer);
    spec.inner.cos_coeffs = {0.0, 0.0, eps};
    return spec;
}

DomainSpec random_spec(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> coeff(-1.0, 1.0);
    std::uniform_int_distribution<int> degree(1, max_fourier_degree);
    auto curve = [&](double c0) {
        FourierRadius c = FourierRadius::circle(c0);
        const int n = degree(rng);
        const double budget = 0.15 * c0;
        for (int i = 0; i < n; ++i) {
            const double cn = coeff(rng) * budget / n, sn = coeff(rng) * budget / n;
            c.cos_coeffs.push_back(cn);
            c.sin_coeffs.push_back(sn);
        }
        return c;
    };
    return DomainSpec{curve(1.0), curve(3.0)};
}

// Curvature of the parametric curve θ -> ρ(θ)(cos θ, sin θ) from central
// differences of the point coordinates only.
double parametric_curvature(const FourierRadius& c, double t)
{
    const double h = 1e-4;
    auto pt = [&](double s) { return std::array<double, 2>{c.value(s) * std::cos(s), c.value(s) * std::sin(s)}; };
    const auto p0 = pt(t - h), p1 = pt(t), p2 = pt(t + h);
    const double xd = (p2[0] - p0[0]) / (2 * h), yd = (p2[1] - p0[1]) / (2 * h);
    const double xdd = (p2[0] - 2 * p1[0] + p0[0]) / (h * h), ydd = (p2[1] - 2 * p1[1] + p0[1]) / (h * h);
    return (xd * ydd - yd * xdd) / std::pow(xd * xd + yd * yd, 1.5);
}

} // namespace

TEST(BuildGrid, PolarNodes)
{
    const CurvGrid g = build_grid(DomainSpec::annulus(1.0, 1.5), 33, 64);
    const auto i = g.node(16, 0);
    EXPECT_DOUBLE_EQ(g.s(16), 0.5);
    EXPECT_NEAR(g.x1(i), 1.25, 1e-15);
    EXPECT_NEAR(g.x2(i), 0.0, 1e-15);
    // exact boundary interpolation
    for (int k = 0; k < g.ntheta(); ++k) {
        EXPECT_NEAR(std::hypot(g.x1(g.node(0, k)), g.x2(g.node(0, k))), 1.0, 1e-15);
        EXPECT_NEAR(std::hypot(g.x1(g.node(32, k)), g.x2(g.node(32, k))), 1.5, 1e-15);
    }
}

TEST(BuildGrid, PerturbedJacobianPositive)
{
    const CurvGrid g = build_grid(trefoil_inner(0.1), 33, 64);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_GT(g.jacobian(i), 0.0);
    // boundary nodes sit on the curve
    for (int k = 0; k < g.ntheta(); ++k) {
        const double t = g.theta(k);
        EXPECT_NEAR(std::hypot(g.x1(g.node(0, k)), g.x2(g.node(0, k))), 1.0 + 0.1 * std::cos(3 * t), 1e-14);
    }
}

TEST(BuildGrid, InverseJacobianIsInverse)
{
    const DomainSpec spec = trefoil_inner(0.15);
    const double s = 0.37, t = 1.1, h = 1e-6;
    const PointMetric m = metric_at(spec, s, t);
    const PointMetric sp = metric_at(spec, s + h, t), sm = metric_at(spec, s - h, t);
    const PointMetric tp = metric_at(spec, s, t + h), tm = metric_at(spec, s, t - h);
    const double xs = (sp.x1 - sm.x1) / (2 * h), ys = (sp.x2 - sm.x2) / (2 * h);
    const double xt = (tp.x1 - tm.x1) / (2 * h), yt = (tp.x2 - tm.x2) / (2 * h);
    EXPECT_NEAR(m.ds_dx1 * xs + m.ds_dx2 * ys, 1.0, 1e-8);
    EXPECT_NEAR(m.ds_dx1 * xt + m.ds_dx2 * yt, 0.0, 1e-8);
    EXPECT_NEAR(m.dth_dx1 * xs + m.dth_dx2 * ys, 0.0, 1e-8);
    EXPECT_NEAR(m.dth_dx1 * xt + m.dth_dx2 * yt, 1.0, 1e-8);
    EXPECT_NEAR(m.jac, xs * yt - xt * ys, 1e-8);
}

TEST(BuildGrid, Errors)
{
    try {
        build_grid(DomainSpec::annulus(2.0, 1.0), 33, 64);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::invalid_domain);
    }
    EXPECT_THROW(build_grid(DomainSpec::annulus(1.0, 2.0), 8, 64), Error);
    EXPECT_THROW(build_grid(DomainSpec::annulus(1.0, 2.0), 33, 15), Error);
    DomainSpec too_high = DomainSpec::annulus(1.0, 2.0);
    too_high.outer.cos_coeffs.assign(17, 0.0);
    EXPECT_THROW(validate(too_high), Error);
    // odd angular counts are accepted
    EXPECT_NO_THROW(build_grid(DomainSpec::annulus(1.0, 2.0), 33, 33));
}

TEST(BoundaryLength, Circles)
{
    const DomainSpec spec = DomainSpec::annulus(1.0, 1.5);
    EXPECT_NEAR(boundary_length(spec, Boundary::outer), 2 * pi * 1.5, 1e-12);
    EXPECT_NEAR(boundary_length(spec, Boundary::inner), 2 * pi, 1e-12);
}

TEST(BoundaryLength, PerturbedCurve)
{
    // 30-digit adaptive quadrature of √(ρ² + ρ'²)
    const double length = boundary_length(trefoil_inner(0.1), Boundary::inner);
    EXPECT_NEAR(length, 6.42258933305110035, 1e-12);
    EXPECT_GT(length, 2 * pi);
}

TEST(BoundaryCurvature, Values)
{
    const DomainSpec circles = DomainSpec::annulus(1.0, 1.5);
    for (double t : {0.0, 0.7, 3.0}) EXPECT_NEAR(boundary_curvature(circles, Boundary::outer, t), 1 / 1.5, 1e-15);
    const DomainSpec spec = trefoil_inner(0.1);
    EXPECT_NEAR(boundary_curvature(spec, Boundary::inner, 0.0), 1.6528925619834713, 1e-14);
    for (double t : {0.0, 0.3, 1.9, 4.4})
        EXPECT_NEAR(boundary_curvature(spec, Boundary::inner, t), parametric_curvature(spec.inner, t), 1e-6);
}

TEST(BoundaryCurvature, TotalTurningProperty)
{
    std::mt19937_64 rng(3);
    for (int i = 0; i < 40; ++i) {
        const DomainSpec spec = random_spec(rng);
        validate(spec);
        EXPECT_NEAR(total_turning(spec, Boundary::inner), 2 * pi, 1e-8);
        EXPECT_NEAR(total_turning(spec, Boundary::outer), 2 * pi, 1e-8);
    }
}

TEST(RegionAreas, Values)
{
    const auto c = region_areas(DomainSpec::annulus(1.0, 1.5));
    EXPECT_NEAR(c.inner, pi, 1e-14);
    EXPECT_NEAR(c.outer, 2.25 * pi, 1e-14);
    EXPECT_NEAR(c.domain, 1.25 * pi, 1e-14);
    for (double eps : {0.05, 0.1, 0.3}) EXPECT_NEAR(region_areas(trefoil_inner(eps)).inner, pi * (1 + eps * eps / 2), 1e-14);

    // collapsing annulus
    DomainSpec thin = DomainSpec::annulus(1.0, 1.0 + 1e-9);
    EXPECT_NEAR(region_areas(thin).domain, 0.0, 1e-8);

    // Parseval against direct trapezoid of ½ρ² on random curves
    std::mt19937_64 rng(17);
    for (int i = 0; i < 10; ++i) {
        const DomainSpec spec = random_spec(rng);
        double acc = 0.0;
        const int n = 4096;
        for (int q = 0; q < n; ++q) acc += 0.5 * std::pow(spec.outer.value(2 * pi * q / n), 2);
        EXPECT_NEAR(region_areas(spec).outer, acc * 2 * pi / n, 1e-11);
    }
}

TEST(IntegrateArea, ConstantAndZero)
{
    const CurvGrid g = build_grid(DomainSpec::annulus(1.0, 1.5), 128, 128);
    EXPECT_NEAR(integrate_area(g, std::vector<double>(g.size(), 1.0)), 1.25 * pi, 1e-6);
    EXPECT_EQ(integrate_area(g, std::vector<double>(g.size(), 0.0)), 0.0);
    EXPECT_THROW(integrate_area(g, std::vector<double>(3, 1.0)), Error);

    // f = 1 is linear in s times the Jacobian, so the trapezoid-in-s rule is exact
    // even on perturbed domains.
    const CurvGrid p = build_grid(trefoil_inner(0.1), 17, 32);
    EXPECT_NEAR(integrate_area(p, std::vector<double>(p.size(), 1.0)), region_areas(p.spec()).domain, 1e-12);
}

TEST(IntegrateArea, SecondOrderOnModelA)
{
    // ∫ 4u dμ on the model-A annulus: 2π ∫_1^1.5 (-2r³ + 16 r log r) dr, evaluated with the antiderivative.
    auto antiderivative = [](double r) { return -r * r * r * r / 2 + 16 * (r * r / 2 * std::log(r) - r * r / 4); };
    const double exact = 2 * pi * (antiderivative(1.5) - antiderivative(1.0));
    EXPECT_NEAR(exact, 1.6783766859991517, 1e-13);

    std::vector<double> err, h;
    for (int n : {17, 33, 65, 129}) {
        const CurvGrid g = build_grid(DomainSpec::annulus(1.0, 1.5), n, n);
        std::vector<double> f(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) f[i] = 4 * model_u(model_a, std::hypot(g.x1(i), g.x2(i)));
        err.push_back(std::abs(integrate_area(g, f) - exact));
        h.push_back(g.ds());
    }
    EXPECT_LT(err.back(), 2e-3);
    for (std::size_t i = 1; i < err.size(); ++i) {
        const double order = std::log(err[i - 1] / err[i]) / std::log(h[i - 1] / h[i]);
        EXPECT_NEAR(order, 2.0, 0.3);
    }
}

TEST(DistanceToCurve, CircleAndPerturbed)
{
    const DomainSpec circles = DomainSpec::annulus(1.0, 2.0);
    EXPECT_NEAR(distance_to_curve(circles, Boundary::inner, 1.3 * std::cos(0.4), 1.3 * std::sin(0.4), 0.4), 0.3, 1e-14);
    const DomainSpec spec = trefoil_inner(0.1);
    // point displaced along the outward normal of the curve at θ = 0 (where the normal is radial)
    EXPECT_NEAR(distance_to_curve(spec, Boundary::inner, 1.1 + 0.01, 0.0, 0.05), 0.01, 1e-12);
}
