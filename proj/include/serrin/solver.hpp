#pragma once

// Second-order solution of Δu = f with Dirichlet data on a CurvGrid, gradient
// reconstruction, Neumann traces, and manufactured-solution convergence studies.
//
// The discrete operator is the Hessian of the quadrature energy
//   E(u) = ½ Σ_s-edges A (δ_s u)² + ½ Σ_θ-edges C (δ_θ u)² + Σ_cells B ū_s ū_θ
// (coefficients from metric_at, ū the cell-centred gradient), which gives a
// symmetric positive definite 9-point stencil for the divergence-form Laplacian.

#include "serrin/domain.hpp"
#include "serrin/error.hpp"
#include "serrin/model.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace serrin {

enum class LinearSolver { automatic, direct, iterative };

inline std::string_view to_string(LinearSolver s)
{
    switch (s) {
    case LinearSolver::automatic: return "auto";
    case LinearSolver::direct: return "direct";
    case LinearSolver::iterative: return "iterative";
    }
    return "auto";
}

struct SolveOptions {
    double tolerance = 1e-11; // relative residual of the linear system
    int max_iterations = 20000;
    LinearSolver method = LinearSolver::automatic;
};

struct SolveStats {
    int iterations = 0;
    double residual = 0.0;
    double seconds = 0.0;
    LinearSolver method = LinearSolver::direct;
};

/// Unknowns above which `automatic` switches from sparse Cholesky to CG.
inline constexpr std::size_t direct_solve_limit = 100000;

/// Node values u(s_j, θ_k) on a grid of matching shape.
struct ScalarField {
    int ns = 0;
    int ntheta = 0;
    std::vector<double> values;

    double operator()(int j, int k) const { return values[static_cast<std::size_t>(j) * ntheta + k]; }
    std::size_t size() const { return values.size(); }

    static ScalarField sample(const CurvGrid& g, const std::function<double(double, double)>& fn)
    {
        ScalarField u{g.ns(), g.ntheta(), std::vector<double>(g.size())};
        for (std::size_t i = 0; i < g.size(); ++i) u.values[i] = fn(g.x1(i), g.x2(i));
        return u;
    }
};

namespace detail {

inline void check_shape(const CurvGrid& g, const ScalarField& u)
{
    if (u.ns != g.ns() || u.ntheta != g.ntheta() || u.values.size() != g.size())
        throw Error(ErrorKind::invalid_input, "field shape does not match grid");
}

inline std::string history_string(const std::vector<double>& h)
{
    std::string out;
    for (double v : h) {
        if (!out.empty()) out += ", ";
        out += std::to_string(v);
    }
    return "[" + out + "]";
}

} // namespace detail

/// Solves Δu = f with u = inner_values on Γ_i and outer_values on Γ_o (one value per angular node).
inline std::pair<ScalarField, SolveStats> solve_dirichlet(const CurvGrid& g, std::span<const double> f,
                                                          std::span<const double> inner_values,
                                                          std::span<const double> outer_values,
                                                          const SolveOptions& opts = {})
{
    using SpMat = Eigen::SparseMatrix<double>;
    const auto t0 = std::chrono::steady_clock::now();
    const int ns = g.ns(), nt = g.ntheta();
    if (f.size() != g.size()) throw Error(ErrorKind::invalid_input, "right-hand side length mismatch");
    if (inner_values.size() != static_cast<std::size_t>(nt) || outer_values.size() != static_cast<std::size_t>(nt))
        throw Error(ErrorKind::invalid_input, "boundary data length must equal Ntheta");
    if (!(opts.tolerance > 0.0 && opts.tolerance < 1e-4))
        throw Error(ErrorKind::invalid_input, "solver tolerance must lie in (0, 1e-4)");
    for (double v : f)
        if (!std::isfinite(v)) throw Error(ErrorKind::invalid_input, "right-hand side is not finite");

    ScalarField u{ns, nt, std::vector<double>(g.size(), 0.0)};
    for (int k = 0; k < nt; ++k) {
        u.values[g.node(0, k)] = inner_values[k];
        u.values[g.node(ns - 1, k)] = outer_values[k];
    }

    const std::size_t n = static_cast<std::size_t>(ns - 2) * nt;
    auto unknown = [&](std::size_t node) -> std::ptrdiff_t {
        const int j = static_cast<int>(node / nt);
        if (j == 0 || j == ns - 1) return -1;
        return static_cast<std::ptrdiff_t>(node - nt);
    };

    const double ds = g.ds(), dth = g.dtheta();
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(n * 9 + 16);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    auto add = [&](std::size_t p, std::size_t q, double val) {
        const auto ip = unknown(p);
        if (ip < 0) return;
        const auto iq = unknown(q);
        if (iq >= 0)
            triplets.emplace_back(static_cast<int>(ip), static_cast<int>(iq), val);
        else
            rhs[ip] -= val * u.values[q];
    };
    auto add_pair = [&](std::size_t p, std::size_t q, double c) {
        add(p, p, c), add(q, q, c), add(p, q, -c), add(q, p, -c);
    };

    const DomainSpec& spec = g.spec();
    for (int j = 0; j + 1 < ns; ++j) {
        const double s_half = (j + 0.5) * ds;
        for (int k = 0; k < nt; ++k) {
            const int k1 = g.wrap(k + 1);
            add_pair(g.node(j, k), g.node(j + 1, k), metric_at(spec, s_half, g.theta(k)).a * dth / ds);

            const double w = metric_at(spec, s_half, (k + 0.5) * dth).b * ds * dth;
            if (w != 0.0) {
                const std::size_t corner[4] = {g.node(j, k), g.node(j + 1, k), g.node(j, k1), g.node(j + 1, k1)};
                const double vs[4] = {-0.5 / ds, 0.5 / ds, -0.5 / ds, 0.5 / ds};
                const double vt[4] = {-0.5 / dth, -0.5 / dth, 0.5 / dth, 0.5 / dth};
                for (int p = 0; p < 4; ++p)
                    for (int q = 0; q < 4; ++q) add(corner[p], corner[q], w * (vs[p] * vt[q] + vt[p] * vs[q]));
            }
        }
    }
    for (int j = 1; j + 1 < ns; ++j)
        for (int k = 0; k < nt; ++k)
            add_pair(g.node(j, k), g.node(j, g.wrap(k + 1)),
                     metric_at(spec, g.s(j), (k + 0.5) * dth).c * ds / dth);
    for (std::size_t node = 0; node < g.size(); ++node) {
        const auto ip = unknown(node);
        if (ip >= 0) rhs[ip] -= g.jacobian(node) * f[node] * ds * dth;
    }

    SpMat K(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    K.setFromTriplets(triplets.begin(), triplets.end());
    K.makeCompressed();

    const double rhs_norm = rhs.norm();
    auto relative_residual = [&](const Eigen::VectorXd& x) {
        const double r = (K * x - rhs).norm();
        return rhs_norm > 0.0 ? r / rhs_norm : r;
    };

    SolveStats stats;
    stats.method = opts.method == LinearSolver::automatic
                       ? (n <= direct_solve_limit ? LinearSolver::direct : LinearSolver::iterative)
                       : opts.method;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    std::vector<double> history;
    if (stats.method == LinearSolver::direct) {
        Eigen::SimplicialLDLT<SpMat> ldlt(K);
        if (ldlt.info() != Eigen::Success)
            throw Error(ErrorKind::solver_failure, "sparse factorization failed (matrix not positive definite?)");
        x = ldlt.solve(rhs);
        history.push_back(relative_residual(x));
        stats.iterations = 1;
        // iterative refinement for the rare ill-conditioned case
        for (int it = 0; it < 3 && history.back() > opts.tolerance; ++it) {
            x += ldlt.solve(rhs - K * x);
            history.push_back(relative_residual(x));
            ++stats.iterations;
        }
    } else {
        Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
        cg.compute(K);
        cg.setTolerance(opts.tolerance);
        constexpr int chunk = 100;
        while (stats.iterations < opts.max_iterations) {
            cg.setMaxIterations(std::min(chunk, opts.max_iterations - stats.iterations));
            x = cg.solveWithGuess(rhs, x);
            stats.iterations += static_cast<int>(cg.iterations());
            history.push_back(relative_residual(x));
            if (history.back() <= opts.tolerance || cg.iterations() == 0) break;
        }
    }
    stats.residual = history.back();
    if (!(stats.residual <= opts.tolerance))
        throw Error(ErrorKind::solver_failure, "linear solve did not reach tolerance; residual history " +
                                                   detail::history_string(history));

    for (int j = 1; j + 1 < ns; ++j)
        for (int k = 0; k < nt; ++k) u.values[g.node(j, k)] = x[unknown(g.node(j, k))];
    stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(u), stats};
}

/// Constant Dirichlet data a on Γ_i and b on Γ_o.
inline std::pair<ScalarField, SolveStats> solve_dirichlet(const CurvGrid& g, std::span<const double> f, double a,
                                                          double b, const SolveOptions& opts = {})
{
    const std::vector<double> inner(g.ntheta(), a), outer(g.ntheta(), b);
    return solve_dirichlet(g, f, inner, outer, opts);
}

namespace detail {

/// Periodic spectral differentiation weights: du/dθ(k) = Σ_m w[m] u(k - m).
inline std::vector<double> spectral_weights(int n)
{
    const double h = two_pi / n;
    std::vector<double> w(n, 0.0);
    for (int m = 1; m < n; ++m) {
        const double sgn = m % 2 ? -1.0 : 1.0;
        const double half = 0.5 * m * h;
        w[m] = n % 2 ? 0.5 * sgn / std::sin(half) : 0.5 * sgn * std::cos(half) / std::sin(half);
    }
    return w;
}

inline double d_theta(const CurvGrid& g, const ScalarField& u, const std::vector<double>& w, int j, int k)
{
    const int nt = g.ntheta();
    double acc = 0.0;
    for (int m = 1; m < nt; ++m) acc += w[m] * u(j, g.wrap(k - m));
    return acc;
}

inline double d_s(const CurvGrid& g, const ScalarField& u, int j, int k)
{
    const double ds = g.ds();
    const int last = g.ns() - 1;
    if (j == 0) return (-3.0 * u(0, k) + 4.0 * u(1, k) - u(2, k)) / (2.0 * ds);
    if (j == last) return (3.0 * u(last, k) - 4.0 * u(last - 1, k) + u(last - 2, k)) / (2.0 * ds);
    return (u(j + 1, k) - u(j - 1, k)) / (2.0 * ds);
}

} // namespace detail

struct GradientField {
    std::vector<double> d1; // ∂u/∂x₁
    std::vector<double> d2; // ∂u/∂x₂
    std::vector<double> w;  // |∇u|²
};

/// ∇u from second-order differences in s (one-sided at the boundary rows) and
/// spectral differentiation in the periodic θ direction, mapped through the
/// inverse Jacobian.
inline GradientField gradient_field(const CurvGrid& g, const ScalarField& u)
{
    detail::check_shape(g, u);
    const auto weights = detail::spectral_weights(g.ntheta());
    GradientField out{std::vector<double>(g.size()), std::vector<double>(g.size()), std::vector<double>(g.size())};
    for (int j = 0; j < g.ns(); ++j) {
        for (int k = 0; k < g.ntheta(); ++k) {
            const std::size_t i = g.node(j, k);
            const double us = detail::d_s(g, u, j, k), ut = detail::d_theta(g, u, weights, j, k);
            out.d1[i] = us * g.ds_dx1(i) + ut * g.dth_dx1(i);
            out.d2[i] = us * g.ds_dx2(i) + ut * g.dth_dx2(i);
            out.w[i] = out.d1[i] * out.d1[i] + out.d2[i] * out.d2[i];
        }
    }
    return out;
}

/// ∂u/∂ν at the nodes of one boundary curve, ν the unit normal pointing out of
/// the domain (into E_i on the inner curve).
inline std::vector<double> neumann_trace(const CurvGrid& g, const ScalarField& u, Boundary which)
{
    detail::check_shape(g, u);
    const auto weights = detail::spectral_weights(g.ntheta());
    const int j = g.boundary_row(which);
    const double sign = which == Boundary::inner ? -1.0 : 1.0;
    std::vector<double> trace(g.ntheta());
    for (int k = 0; k < g.ntheta(); ++k) {
        const std::size_t i = g.node(j, k);
        const double us = detail::d_s(g, u, j, k), ut = detail::d_theta(g, u, weights, j, k);
        const double gx = g.ds_dx1(i), gy = g.ds_dx2(i);
        const double gss = gx * gx + gy * gy;
        const double gst = gx * g.dth_dx1(i) + gy * g.dth_dx2(i);
        trace[k] = sign * (us * gss + ut * gst) / std::sqrt(gss);
    }
    return trace;
}

/// A closed-form field with its Laplacian, for manufactured-solution studies.
struct ExactField {
    std::string name;
    std::function<double(double, double)> value;
    std::function<double(double, double)> laplacian;
};

inline ExactField model_field(const ModelParams& p, std::string name = "model")
{
    return {std::move(name), [p](double x, double y) { return model_u(p, std::hypot(x, y)); },
            [](double, double) { return -2.0; }};
}

/// x₁² - x₂² + model: harmonic perturbation, same source term.
inline ExactField saddle_plus_model(const ModelParams& p, std::string name = "saddle+model")
{
    return {std::move(name), [p](double x, double y) { return x * x - y * y + model_u(p, std::hypot(x, y)); },
            [](double, double) { return -2.0; }};
}

inline ExactField linear_field() { return {"linear", [](double x, double) { return x; }, [](double, double) { return 0.0; }}; }

inline ExactField constant_field(double c)
{
    return {"constant", [c](double, double) { return c; }, [](double, double) { return 0.0; }};
}

/// Tokens: model-a, model-b, model-c, saddle-model-a, linear, constant.
inline std::optional<ExactField> exact_field_from_token(std::string_view token)
{
    if (token == "model-a") return model_field(model_a, "model-a");
    if (token == "model-b") return model_field(model_b, "model-b");
    if (token == "model-c") return model_field(model_c, "model-c");
    if (token == "saddle-model-a") return saddle_plus_model(model_a, "saddle-model-a");
    if (token == "linear") return linear_field();
    if (token == "constant") return constant_field(1.0);
    return std::nullopt;
}

/// Least-squares slope of log(err) against log(h); nullopt if any error is not positive.
inline std::optional<double> fitted_order(std::span<const double> h, std::span<const double> err)
{
    if (h.size() != err.size() || h.size() < 2) return std::nullopt;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (!(err[i] > 0.0) || !(h[i] > 0.0)) return std::nullopt;
        const double x = std::log(h[i]), y = std::log(err[i]);
        sx += x, sy += y, sxx += x * x, sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

struct ConvergenceStudy {
    std::string field;
    std::vector<int> sizes;
    std::vector<double> h;
    std::vector<double> linf;
    std::vector<double> l2;
    std::optional<double> order_linf; // absent when the field is reproduced exactly
    std::optional<double> order_l2;
    bool exact = false;
};

/// Errors below this (relative to max |u|) count as exact reproduction.
inline constexpr double exact_reproduction_level = 1e-10;

/// Solves on Ns = Nθ = N for every N in `sizes` with the exact field's boundary values
/// and Laplacian; h = 1/(N-1).
inline ConvergenceStudy mms_convergence(const DomainSpec& spec, const ExactField& exact, std::span<const int> sizes,
                                        const SolveOptions& opts = {})
{
    if (sizes.size() < 3) throw Error(ErrorKind::invalid_input, "convergence study needs at least 3 grid sizes");
    ConvergenceStudy study;
    study.field = exact.name;
    double scale = 1.0;
    for (int n : sizes) {
        const CurvGrid g = build_grid(spec, n, n);
        std::vector<double> f(g.size()), inner(g.ntheta()), outer(g.ntheta());
        for (std::size_t i = 0; i < g.size(); ++i) f[i] = exact.laplacian(g.x1(i), g.x2(i));
        for (int k = 0; k < g.ntheta(); ++k) {
            const auto ii = g.node(0, k), io = g.node(g.ns() - 1, k);
            inner[k] = exact.value(g.x1(ii), g.x2(ii));
            outer[k] = exact.value(g.x1(io), g.x2(io));
        }
        const auto [u, stats] = solve_dirichlet(g, f, inner, outer, opts);
        std::vector<double> err2(g.size());
        double linf = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double ue = exact.value(g.x1(i), g.x2(i));
            scale = std::max(scale, std::abs(ue));
            const double e = std::abs(u.values[i] - ue);
            linf = std::max(linf, e);
            err2[i] = e * e;
        }
        study.sizes.push_back(n);
        study.h.push_back(g.ds());
        study.linf.push_back(linf);
        study.l2.push_back(std::sqrt(integrate_area(g, err2)));
    }
    double worst = 0.0;
    for (double e : study.linf) worst = std::max(worst, e);
    study.exact = worst <= exact_reproduction_level * scale;
    if (!study.exact) {
        study.order_linf = fitted_order(study.h, study.linf);
        study.order_l2 = fitted_order(study.h, study.l2);
    }
    return study;
}

} // namespace serrin
