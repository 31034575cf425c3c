#pragma once

// Rotationally symmetric solutions u = L - r^2/2 + M log r of Δu = -2 on an
// annulus, the admissibility classification of overdetermined boundary data,
// and the auxiliary functions used by the refined Pohozaev argument.

#include "serrin/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace serrin {

/// The four overdetermined constants: u = a, ∂u/∂ν = α on the inner curve and
/// u = b, ∂u/∂ν = β on the outer curve (ν points out of the domain).
struct BoundaryData {
    double inner_value = 0.0; // a
    double outer_value = 0.0; // b
    double inner_flux = 0.0;  // α
    double outer_flux = 0.0;  // β
};

/// Parameters of the model u(r) = offset - r^2/2 + log_coeff * log r on
/// r_inner < r < r_outer.
struct ModelParams {
    double offset = 0.0;    // L
    double log_coeff = 0.0; // M
    double r_inner = 1.0;
    double r_outer = 2.0;
};

enum class ProblemCase {
    increasing,           // a < b
    decreasing_covered,   // a > b and 2a + α² <= 2b + β²
    decreasing_uncovered, // a > b and 2a + α² >  2b + β²
    inadmissible,
};

inline std::string_view to_string(ProblemCase c)
{
    switch (c) {
    case ProblemCase::increasing: return "increasing";
    case ProblemCase::decreasing_covered: return "decreasing_covered";
    case ProblemCase::decreasing_uncovered: return "decreasing_uncovered";
    case ProblemCase::inadmissible: return "inadmissible";
    }
    return "inadmissible";
}

namespace detail {

inline bool all_finite(const BoundaryData& d)
{
    return std::isfinite(d.inner_value) && std::isfinite(d.outer_value) &&
           std::isfinite(d.inner_flux) && std::isfinite(d.outer_flux);
}

/// x + sqrt(x² + 4m) without cancellation for x < 0.
inline double plus_root(double x, double m)
{
    const double s = std::sqrt(x * x + 4.0 * m);
    return x >= 0.0 ? x + s : 4.0 * m / (s - x);
}

inline double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

} // namespace detail

inline ProblemCase classify_case(const BoundaryData& d)
{
    if (!detail::all_finite(d))
        throw Error(ErrorKind::invalid_input, "boundary data must be finite");
    const double a = d.inner_value, b = d.outer_value;
    const double alpha = d.inner_flux, beta = d.outer_flux;
    const bool pohozaev_sign = 4.0 * a + alpha * alpha > 4.0 * b + beta * beta;
    if (a < b && alpha < 0.0 && beta >= 0.0 && pohozaev_sign)
        return ProblemCase::increasing;
    if (a > b && alpha >= 0.0 && beta < 0.0 && pohozaev_sign) {
        return 2.0 * a + alpha * alpha <= 2.0 * b + beta * beta ? ProblemCase::decreasing_covered
                                                                : ProblemCase::decreasing_uncovered;
    }
    return ProblemCase::inadmissible;
}

/// Human-readable list of the sign conditions `d` violates.
inline std::string describe_violation(const BoundaryData& d)
{
    const double a = d.inner_value, b = d.outer_value;
    const double alpha = d.inner_flux, beta = d.outer_flux;
    std::vector<std::string> why;
    if (a == b) why.emplace_back("a == b");
    if (a < b && !(alpha < 0.0)) why.emplace_back("a<b requires alpha<0");
    if (a < b && !(beta >= 0.0)) why.emplace_back("a<b requires beta>=0");
    if (a > b && !(alpha >= 0.0)) why.emplace_back("a>b requires alpha>=0");
    if (a > b && !(beta < 0.0)) why.emplace_back("a>b requires beta<0");
    if (!(4.0 * a + alpha * alpha > 4.0 * b + beta * beta))
        why.emplace_back("4a+alpha^2 > 4b+beta^2 fails");
    if (why.empty() && a > b && 2.0 * a + alpha * alpha > 2.0 * b + beta * beta)
        why.emplace_back("2a+alpha^2 > 2b+beta^2 (no model-fitting result in this regime)");
    std::string out;
    for (const auto& w : why) {
        if (!out.empty()) out += "; ";
        out += w;
    }
    return out;
}

inline double model_u(const ModelParams& p, double r)
{
    if (!(r > 0.0)) throw Error(ErrorKind::domain, "model_u requires r > 0");
    return p.offset - 0.5 * r * r + p.log_coeff * std::log(r);
}

/// Radial derivative du/dr of the model.
inline double model_du(const ModelParams& p, double r)
{
    if (!(r > 0.0)) throw Error(ErrorKind::domain, "model_du requires r > 0");
    return -r + p.log_coeff / r;
}

/// Case a model belongs to, from where √M sits relative to the radii.
inline ProblemCase model_case(const ModelParams& p)
{
    if (!(p.r_inner > 0.0 && p.r_outer > p.r_inner && p.log_coeff >= 0.0))
        return ProblemCase::inadmissible;
    if (p.r_outer * p.r_outer <= p.log_coeff) return ProblemCase::increasing;
    if (p.r_inner * p.r_inner >= p.log_coeff) return ProblemCase::decreasing_covered;
    return ProblemCase::inadmissible;
}

inline BoundaryData boundary_data_of(const ModelParams& p)
{
    const double ri = p.r_inner, ro = p.r_outer, m = p.log_coeff;
    return BoundaryData{
        model_u(p, ri),
        model_u(p, ro),
        (ri * ri - m) / ri,
        (m - ro * ro) / ro,
    };
}

/// Compatibility function whose zero in M selects the model matching `d`.
/// At M = 0 the closed-form limit is returned.
inline double compatibility_F(const BoundaryData& d, double m)
{
    if (!detail::all_finite(d) || !std::isfinite(m))
        throw Error(ErrorKind::invalid_input, "compatibility_F arguments must be finite");
    if (m < 0.0) throw Error(ErrorKind::domain, "compatibility_F requires M >= 0");
    const double a = d.inner_value, b = d.outer_value;
    const double alpha = d.inner_flux, beta = d.outer_flux;
    if (m == 0.0) {
        if (alpha < 0.0) throw Error(ErrorKind::degenerate_argument, "alpha + sqrt(alpha^2 + 4M) <= 0");
        // 4M log(...) -> 0, also for alpha = 0; sqrt(x^2) = |x|
        return 4.0 * a - 4.0 * b + alpha * alpha - beta * beta + alpha * std::abs(alpha) +
               beta * std::abs(beta);
    }
    const double denom = detail::plus_root(alpha, m);
    if (!(denom > 0.0))
        throw Error(ErrorKind::degenerate_argument, "alpha + sqrt(alpha^2 + 4M) <= 0");
    const double numer = detail::plus_root(-beta, m);
    if (!(numer > 0.0))
        throw Error(ErrorKind::degenerate_argument, "-beta + sqrt(beta^2 + 4M) <= 0");
    const double sa = std::sqrt(alpha * alpha + 4.0 * m);
    const double sb = std::sqrt(beta * beta + 4.0 * m);
    return 4.0 * a + alpha * alpha - 4.0 * b - beta * beta + alpha * sa + beta * sb +
           4.0 * m * std::log(numer / denom);
}

/// dF/dM = 4 (α/√(α²+4M) + β/√(β²+4M) + log(r_o/r_i)), valid for M > 0.
inline double compatibility_dF(const BoundaryData& d, double m)
{
    if (!(m > 0.0)) throw Error(ErrorKind::domain, "compatibility_dF requires M > 0");
    const double alpha = d.inner_flux, beta = d.outer_flux;
    const double sa = std::sqrt(alpha * alpha + 4.0 * m);
    const double sb = std::sqrt(beta * beta + 4.0 * m);
    return 4.0 * (alpha / sa + beta / sb +
                  std::log(detail::plus_root(-beta, m) / detail::plus_root(alpha, m)));
}

/// Fitted model plus root-finding diagnostics.
struct ModelFit {
    ModelParams params;
    ProblemCase problem_case = ProblemCase::inadmissible;
    double residual = 0.0; // |F(M)| at the returned root
    int sign_changes = 0;  // sign changes of F seen in the bracket scan; > 1 flags non-uniqueness
};

inline ModelParams radii_and_offset(const BoundaryData& d, double m)
{
    ModelParams p;
    p.log_coeff = m;
    p.r_inner = 0.5 * detail::plus_root(d.inner_flux, m);
    p.r_outer = 0.5 * detail::plus_root(-d.outer_flux, m);
    if (!(p.r_inner > 0.0))
        throw Error(ErrorKind::degenerate_argument, "fitted inner radius is not positive");
    p.offset = d.inner_value + 0.5 * p.r_inner * p.r_inner - m * std::log(p.r_inner);
    return p;
}

inline constexpr double max_log_coeff = 1e12;

inline ModelFit fit_model_detailed(const BoundaryData& d)
{
    const ProblemCase pc = classify_case(d);
    if (pc == ProblemCase::inadmissible)
        throw Error(ErrorKind::inadmissible, "boundary data violate sign conditions: " + describe_violation(d));
    if (pc == ProblemCase::decreasing_uncovered)
        throw Error(ErrorKind::unsupported_regime,
                    "a>b with 2a+alpha^2 > 2b+beta^2: no model-fitting result covers this regime");

    const double a = d.inner_value, b = d.outer_value;
    const double alpha = d.inner_flux, beta = d.outer_flux;
    const double limit = 4.0 * a + alpha * alpha - 4.0 * b - beta * beta;
    const double tol = 1e-12 * (1.0 + std::abs(limit));

    // Value of F as M -> 0+: 4a - 4b in the increasing case, F(0) otherwise.
    const double f_zero = pc == ProblemCase::increasing ? 4.0 * (a - b) : compatibility_F(d, 0.0);
    const bool root_at_zero = pc == ProblemCase::decreasing_covered && std::abs(f_zero) <= tol;

    const double m_start = std::max({1.0, alpha * alpha, beta * beta});
    std::vector<double> grid;
    for (int j = -60;; ++j) {
        const double m = std::ldexp(m_start, j);
        if (m > max_log_coeff) break;
        grid.push_back(m);
    }
    grid.push_back(max_log_coeff);

    double lo = 0.0, f_lo = f_zero;
    double prev = 0.0, f_prev = f_zero;
    bool have_bracket = false, exact = false;
    double hi = 0.0, f_hi = 0.0;
    int changes = 0;
    bool first_point = true;
    for (double m : grid) {
        const double f = compatibility_F(d, m);
        const bool changed = root_at_zero && first_point
                                 ? false
                                 : detail::sign_of(f) != detail::sign_of(f_prev) && f_prev != 0.0;
        if (changed) {
            ++changes;
            if (!have_bracket && !root_at_zero) {
                have_bracket = true;
                lo = prev, f_lo = f_prev;
                hi = m, f_hi = f;
                exact = f == 0.0;
            }
        }
        first_point = false;
        prev = m, f_prev = f;
    }

    ModelFit fit;
    fit.problem_case = pc;
    double root = 0.0;
    if (root_at_zero) {
        root = 0.0;
        fit.sign_changes = changes + 1;
    } else {
        if (!have_bracket)
            throw Error(ErrorKind::no_root, "no sign change of F(M) up to M = 1e12 (anomaly for admissible data)");
        fit.sign_changes = changes;
        if (exact) {
            root = hi;
        } else {
            for (int it = 0; it < 400 && hi - lo > 1e-13 * hi; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double f = compatibility_F(d, mid);
                if (f == 0.0) {
                    lo = hi = mid;
                    break;
                }
                if (detail::sign_of(f) == detail::sign_of(f_lo)) {
                    lo = mid, f_lo = f;
                } else {
                    hi = mid, f_hi = f;
                }
            }
            root = 0.5 * (lo + hi);
            double f_root = compatibility_F(d, root);
            for (int it = 0; it < 3 && root > 0.0 && f_root != 0.0; ++it) {
                const double next = root - f_root / compatibility_dF(d, root);
                if (!(next >= lo && next <= hi)) break;
                const double f_next = compatibility_F(d, next);
                if (std::abs(f_next) > std::abs(f_root)) break;
                root = next, f_root = f_next;
            }
        }
    }

    fit.params = radii_and_offset(d, root);
    fit.residual = std::abs(compatibility_F(d, root));
    if (!(fit.params.r_outer > fit.params.r_inner))
        throw Error(ErrorKind::no_root, "root of F(M) yields r_o <= r_i (anomaly)");
    return fit;
}

inline ModelParams fit_model(const BoundaryData& d) { return fit_model_detailed(d).params; }

/// Inverts u = L - Ψ²/2 + M log Ψ on [r_i, r_o] (safeguarded Newton).
inline double pseudo_radius(const ModelParams& p, double u_val)
{
    double lo = p.r_inner, hi = p.r_outer;
    const double u_lo = model_u(p, lo), u_hi = model_u(p, hi);
    const double u_min = std::min(u_lo, u_hi), u_max = std::max(u_lo, u_hi);
    const double slack = 8.0 * std::numeric_limits<double>::epsilon() *
                         std::max({1.0, std::abs(u_min), std::abs(u_max)});
    if (!(u_val >= u_min - slack && u_val <= u_max + slack))
        throw Error(ErrorKind::out_of_range, "value " + std::to_string(u_val) + " outside model range [" +
                                                 std::to_string(u_min) + ", " + std::to_string(u_max) + "]");
    const bool rising = u_hi > u_lo;
    if (u_val <= u_min) return rising ? lo : hi;
    if (u_val >= u_max) return rising ? hi : lo;

    // g(Ψ) = u(Ψ) - u_val, oriented so that g(lo) < 0 < g(hi)
    const double orient = rising ? 1.0 : -1.0;
    auto g = [&](double x) { return orient * (model_u(p, x) - u_val); };
    auto dg = [&](double x) { return orient * model_du(p, x); };

    double x = lo + (hi - lo) * (u_val - u_lo) / (u_hi - u_lo);
    double step_old = hi - lo, step = step_old;
    for (int it = 0; it < 300; ++it) {
        const double gx = g(x);
        if (gx == 0.0) return x;
        if (gx < 0.0)
            lo = x;
        else
            hi = x;
        const double dgx = dg(x);
        const double newton = dgx != 0.0 ? x - gx / dgx : lo - 1.0;
        if (newton <= lo || newton >= hi || std::abs(2.0 * gx) > std::abs(step_old * dgx)) {
            step_old = step;
            step = 0.5 * (hi - lo);
            x = lo + step;
        } else {
            step_old = step;
            step = newton - x;
            x = newton;
        }
        if (std::abs(step) <= 1e-15 * x || hi - lo <= 1e-15 * hi) break;
    }
    return x;
}

inline double w0_of_psi(const ModelParams& p, double psi)
{
    if (!(psi > 0.0)) throw Error(ErrorKind::domain, "w0_of_psi requires psi > 0");
    const double q = (p.log_coeff - psi * psi) / psi;
    return q * q;
}

/// Distance below which M - Ψ² counts as zero for φ and φ̇.
inline double singular_cutoff(const ModelParams& p) { return 1e-9 * std::max(1.0, p.log_coeff); }

/// 4M r_i² - r_i⁴ - 4M² log r_i, expressed through the boundary data instead:
/// 4LM + M² - 4aM - α² r_i².
inline double refined_k_from_data(const ModelParams& p)
{
    const BoundaryData d = boundary_data_of(p);
    const double m = p.log_coeff, ri = p.r_inner;
    return 4.0 * p.offset * m + m * m - 4.0 * d.inner_value * m - d.inner_flux * d.inner_flux * ri * ri;
}

/// Smallest k making φ̇ >= 0 on [r_i, r_o] for a decreasing covered model.
inline double refined_k(const ModelParams& p)
{
    const double m = p.log_coeff, ri = p.r_inner;
    if (!(m >= 0.0 && ri * ri >= m * (1.0 - 1e-12) && p.r_outer > ri))
        throw Error(ErrorKind::unsupported_regime, "refined_k needs a decreasing covered model (sqrt(M) <= r_i)");
    const double k = 4.0 * m * ri * ri - ri * ri * ri * ri - 4.0 * m * m * std::log(ri);
    const double k_data = refined_k_from_data(p);
    if (std::abs(k - k_data) > 1e-10 * std::max(1.0, std::abs(k)))
        throw Error(ErrorKind::inconsistent_model,
                    "closed forms of k disagree: " + std::to_string(k) + " vs " + std::to_string(k_data));
    return k;
}

namespace detail {

inline double check_regular(const ModelParams& p, double psi)
{
    if (!(psi > 0.0)) throw Error(ErrorKind::domain, "phi requires psi > 0");
    const double gap = p.log_coeff - psi * psi;
    if (std::abs(gap) < singular_cutoff(p))
        throw Error(ErrorKind::singular, "M - psi^2 vanishes at psi = " + std::to_string(psi));
    return gap;
}

/// Ψ⁴ - 4MΨ² + 4M² log Ψ + k
inline double phi_numerator(const ModelParams& p, double k, double psi)
{
    const double m = p.log_coeff, q = psi * psi;
    return q * q - 4.0 * m * q + 4.0 * m * m * std::log(psi) + k;
}

} // namespace detail

inline double phi(const ModelParams& p, double k, double psi)
{
    const double gap = detail::check_regular(p, psi);
    return 2.0 * model_u(p, psi) - detail::phi_numerator(p, k, psi) / (2.0 * gap);
}

inline double phi_dot(const ModelParams& p, double k, double psi)
{
    const double gap = detail::check_regular(p, psi);
    return psi * psi / (gap * gap * gap) * -detail::phi_numerator(p, k, psi);
}

/// Reference models used throughout the tests and the CLI.
inline constexpr ModelParams model_a{0.0, 4.0, 1.0, 1.5}; // increasing
inline constexpr ModelParams model_b{2.0, 0.0, 1.0, 2.0}; // decreasing, M = 0
inline constexpr ModelParams model_c{0.0, 1.0, 1.2, 2.0}; // decreasing covered

} // namespace serrin
