#pragma once

// Doubly connected star-shaped domains bounded by two Fourier radius curves,
// the structured (s, θ) grid between them, and the quadratures used to
// integrate over the domain and along its boundary.

#include "serrin/error.hpp"

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace serrin {

inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr int max_fourier_degree = 16;

/// ρ(θ) = c0 + Σ_n (cos_coeffs[n-1] cos nθ + sin_coeffs[n-1] sin nθ).
struct FourierRadius {
    double c0 = 1.0;
    std::vector<double> cos_coeffs;
    std::vector<double> sin_coeffs;

    int degree() const { return static_cast<int>(std::max(cos_coeffs.size(), sin_coeffs.size())); }

    double value(double theta) const { return eval(theta, 0); }
    double d1(double theta) const { return eval(theta, 1); }
    double d2(double theta) const { return eval(theta, 2); }

    static FourierRadius circle(double radius) { return FourierRadius{radius, {}, {}}; }

private:
    double eval(double theta, int order) const
    {
        double acc = order == 0 ? c0 : 0.0;
        for (int n = 1; n <= degree(); ++n) {
            const double cn = n <= static_cast<int>(cos_coeffs.size()) ? cos_coeffs[n - 1] : 0.0;
            const double sn = n <= static_cast<int>(sin_coeffs.size()) ? sin_coeffs[n - 1] : 0.0;
            const double c = std::cos(n * theta), s = std::sin(n * theta);
            switch (order) {
            case 0: acc += cn * c + sn * s; break;
            case 1: acc += n * (-cn * s + sn * c); break;
            default: acc += -double(n) * n * (cn * c + sn * s); break;
            }
        }
        return acc;
    }
};

enum class Boundary { inner, outer };

inline std::string_view to_string(Boundary b) { return b == Boundary::inner ? "inner" : "outer"; }

struct DomainSpec {
    FourierRadius inner;
    FourierRadius outer;

    const FourierRadius& curve(Boundary b) const { return b == Boundary::inner ? inner : outer; }

    static DomainSpec annulus(double r_inner, double r_outer)
    {
        return DomainSpec{FourierRadius::circle(r_inner), FourierRadius::circle(r_outer)};
    }
};

/// Throws invalid_domain unless 0 < ρ_i < ρ_o on a 4096-point sample and both
/// series have degree <= 16 with finite coefficients.
inline void validate(const DomainSpec& spec)
{
    for (const FourierRadius* c : {&spec.inner, &spec.outer}) {
        if (c->degree() > max_fourier_degree)
            throw Error(ErrorKind::invalid_domain, "Fourier degree exceeds 16");
        bool finite = std::isfinite(c->c0);
        for (double v : c->cos_coeffs) finite = finite && std::isfinite(v);
        for (double v : c->sin_coeffs) finite = finite && std::isfinite(v);
        if (!finite) throw Error(ErrorKind::invalid_domain, "non-finite Fourier coefficient");
    }
    constexpr int samples = 4096;
    for (int i = 0; i < samples; ++i) {
        const double t = two_pi * i / samples;
        const double ri = spec.inner.value(t), ro = spec.outer.value(t);
        if (!(ri > 0.0))
            throw Error(ErrorKind::invalid_domain, "inner radius not positive at theta=" + std::to_string(t));
        if (!(ro > ri))
            throw Error(ErrorKind::invalid_domain, "outer curve does not enclose inner curve at theta=" +
                                                       std::to_string(t));
    }
}

/// Geometry of the map (s, θ) -> r(s,θ)(cos θ, sin θ), r = (1-s)ρ_i + sρ_o.
/// The Laplacian in these coordinates is
///   Δu = (1/J) [∂_s(A u_s + B u_θ) + ∂_θ(B u_s + C u_θ)]
/// with A = (r_θ² + r²)/(J), B = -r_θ/r, C = D/r, J = D r, D = ρ_o - ρ_i.
struct PointMetric {
    double x1, x2;
    double jac;
    double a, b, c;
    double ds_dx1, ds_dx2;   // ∇s
    double dth_dx1, dth_dx2; // ∇θ
};

inline PointMetric metric_at(const DomainSpec& spec, double s, double theta)
{
    const double ri = spec.inner.value(theta), ro = spec.outer.value(theta);
    const double dri = spec.inner.d1(theta), dro = spec.outer.d1(theta);
    const double r = (1.0 - s) * ri + s * ro;
    const double r_th = (1.0 - s) * dri + s * dro;
    const double d = ro - ri;
    const double cs = std::cos(theta), sn = std::sin(theta);
    const double jac = d * r;
    // x_s = D(cos, sin); x_θ = r_θ(cos, sin) + r(-sin, cos)
    const double xs = d * cs, ys = d * sn;
    const double xt = r_th * cs - r * sn, yt = r_th * sn + r * cs;
    PointMetric m{};
    m.x1 = r * cs;
    m.x2 = r * sn;
    m.jac = jac;
    m.a = (r_th * r_th + r * r) / jac;
    m.b = -r_th / r;
    m.c = d / r;
    m.ds_dx1 = yt / jac;
    m.ds_dx2 = -xt / jac;
    m.dth_dx1 = -ys / jac;
    m.dth_dx2 = xs / jac;
    return m;
}

/// Structured grid on the domain: Ns radial lines s_j = j/(Ns-1) by Nθ periodic
/// angles θ_k = 2πk/Nθ. Node (j, k) has flat index j*Nθ + k. Immutable.
class CurvGrid {
public:
    CurvGrid(DomainSpec spec, int ns, int ntheta) : spec_(std::move(spec)), ns_(ns), nt_(ntheta)
    {
        if (ns_ < 9) throw Error(ErrorKind::invalid_input, "Ns must be >= 9");
        if (nt_ < 16) throw Error(ErrorKind::invalid_input, "Ntheta must be >= 16");
        validate(spec_);
        ds_ = 1.0 / (ns_ - 1);
        dth_ = two_pi / nt_;
        const std::size_t n = size();
        x1_.resize(n), x2_.resize(n), jac_.resize(n), weight_.resize(n);
        grad_s_.resize(2 * n), grad_th_.resize(2 * n);
        for (int j = 0; j < ns_; ++j) {
            for (int k = 0; k < nt_; ++k) {
                const std::size_t i = node(j, k);
                const PointMetric m = metric_at(spec_, s(j), theta(k));
                if (!(m.jac > 0.0)) throw Error(ErrorKind::invalid_domain, "non-positive Jacobian");
                x1_[i] = m.x1, x2_[i] = m.x2, jac_[i] = m.jac;
                grad_s_[2 * i] = m.ds_dx1, grad_s_[2 * i + 1] = m.ds_dx2;
                grad_th_[2 * i] = m.dth_dx1, grad_th_[2 * i + 1] = m.dth_dx2;
                const double end = (j == 0 || j == ns_ - 1) ? 0.5 : 1.0;
                weight_[i] = end * m.jac * ds_ * dth_;
            }
        }
        for (Boundary b : {Boundary::inner, Boundary::outer}) {
            auto& w = b == Boundary::inner ? arc_inner_ : arc_outer_;
            w.resize(nt_);
            const FourierRadius& c = spec_.curve(b);
            for (int k = 0; k < nt_; ++k) w[k] = std::hypot(c.value(theta(k)), c.d1(theta(k))) * dth_;
        }
    }

    const DomainSpec& spec() const { return spec_; }
    int ns() const { return ns_; }
    int ntheta() const { return nt_; }
    std::size_t size() const { return static_cast<std::size_t>(ns_) * nt_; }
    double ds() const { return ds_; }
    double dtheta() const { return dth_; }
    double s(int j) const { return j * ds_; }
    double theta(int k) const { return k * dth_; }
    std::size_t node(int j, int k) const { return static_cast<std::size_t>(j) * nt_ + k; }
    int wrap(int k) const { return ((k % nt_) + nt_) % nt_; }
    int boundary_row(Boundary b) const { return b == Boundary::inner ? 0 : ns_ - 1; }

    double x1(std::size_t i) const { return x1_[i]; }
    double x2(std::size_t i) const { return x2_[i]; }
    double jacobian(std::size_t i) const { return jac_[i]; }
    double ds_dx1(std::size_t i) const { return grad_s_[2 * i]; }
    double ds_dx2(std::size_t i) const { return grad_s_[2 * i + 1]; }
    double dth_dx1(std::size_t i) const { return grad_th_[2 * i]; }
    double dth_dx2(std::size_t i) const { return grad_th_[2 * i + 1]; }

    std::span<const double> area_weights() const { return weight_; }
    std::span<const double> arc_weights(Boundary b) const { return b == Boundary::inner ? arc_inner_ : arc_outer_; }

    /// Mean physical radial spacing D·Δs, used as the grid length scale h.
    double radial_spacing() const
    {
        double acc = 0.0;
        for (int k = 0; k < nt_; ++k) acc += spec_.outer.value(theta(k)) - spec_.inner.value(theta(k));
        return acc / nt_ * ds_;
    }

private:
    DomainSpec spec_;
    int ns_, nt_;
    double ds_ = 0.0, dth_ = 0.0;
    std::vector<double> x1_, x2_, jac_, weight_, grad_s_, grad_th_;
    std::vector<double> arc_inner_, arc_outer_;
};

inline CurvGrid build_grid(const DomainSpec& spec, int ns, int ntheta) { return CurvGrid(spec, ns, ntheta); }

namespace detail {

inline constexpr int curve_samples = 8192;

template <class F>
double periodic_trapezoid(F&& f, int n = curve_samples)
{
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += f(two_pi * i / n);
    return acc * two_pi / n;
}

} // namespace detail

/// ∫ √(ρ² + ρ'²) dθ by the periodic trapezoid rule (spectrally accurate).
inline double boundary_length(const DomainSpec& spec, Boundary which)
{
    const FourierRadius& c = spec.curve(which);
    return detail::periodic_trapezoid([&](double t) { return std::hypot(c.value(t), c.d1(t)); });
}

inline double boundary_curvature(const DomainSpec& spec, Boundary which, double theta)
{
    const FourierRadius& c = spec.curve(which);
    const double r = c.value(theta), r1 = c.d1(theta), r2 = c.d2(theta);
    const double q = r * r + r1 * r1;
    return (r * r + 2.0 * r1 * r1 - r * r2) / (q * std::sqrt(q));
}

/// ∫ κ ds; equals 2π for every simple closed curve.
inline double total_turning(const DomainSpec& spec, Boundary which)
{
    const FourierRadius& c = spec.curve(which);
    return detail::periodic_trapezoid(
        [&](double t) { return boundary_curvature(spec, which, t) * std::hypot(c.value(t), c.d1(t)); });
}

struct RegionAreas {
    double inner;  // |E_i|
    double outer;  // |E_o|
    double domain; // |Ω| = |E_o| - |E_i|
};

/// ½∫ρ² dθ evaluated exactly through Parseval: π (c0² + ½ Σ (c_n² + s_n²)).
inline double enclosed_area(const FourierRadius& c)
{
    double acc = c.c0 * c.c0;
    for (double v : c.cos_coeffs) acc += 0.5 * v * v;
    for (double v : c.sin_coeffs) acc += 0.5 * v * v;
    return std::numbers::pi * acc;
}

inline RegionAreas region_areas(const DomainSpec& spec)
{
    const double ei = enclosed_area(spec.inner), eo = enclosed_area(spec.outer);
    return {ei, eo, eo - ei};
}

inline double integrate_area(const CurvGrid& g, std::span<const double> f)
{
    if (f.size() != g.size())
        throw Error(ErrorKind::invalid_input, "integrand has " + std::to_string(f.size()) + " values, grid has " +
                                                  std::to_string(g.size()));
    const auto w = g.area_weights();
    double acc = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) acc += f[i] * w[i];
    return acc;
}

/// Σ f_k · (arc-length weight) over the boundary nodes of one curve.
inline double integrate_boundary(const CurvGrid& g, Boundary which, std::span<const double> f)
{
    const auto w = g.arc_weights(which);
    if (f.size() != w.size()) throw Error(ErrorKind::invalid_input, "boundary integrand length mismatch");
    double acc = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) acc += f[k] * w[k];
    return acc;
}

/// Euclidean distance from (x1, x2) to a boundary curve; `theta_hint` seeds the
/// Newton search for the closest curve parameter.
inline double distance_to_curve(const DomainSpec& spec, Boundary which, double x1, double x2, double theta_hint)
{
    const FourierRadius& c = spec.curve(which);
    auto dist2 = [&](double t) {
        const double r = c.value(t);
        const double dx = x1 - r * std::cos(t), dy = x2 - r * std::sin(t);
        return dx * dx + dy * dy;
    };
    double t = theta_hint;
    for (int it = 0; it < 50; ++it) {
        const double r = c.value(t), r1 = c.d1(t), r2 = c.d2(t);
        const double cs = std::cos(t), sn = std::sin(t);
        const double px = r * cs, py = r * sn;
        const double tx = r1 * cs - r * sn, ty = r1 * sn + r * cs;
        const double ax = r2 * cs - 2.0 * r1 * sn - r * cs, ay = r2 * sn + 2.0 * r1 * cs - r * sn;
        const double ex = x1 - px, ey = x2 - py;
        const double g1 = -(ex * tx + ey * ty);
        const double g2 = tx * tx + ty * ty - (ex * ax + ey * ay);
        if (!(g2 > 0.0)) break;
        const double step = -g1 / g2;
        t += step;
        if (std::abs(step) < 1e-15) break;
    }
    return std::sqrt(std::min(dist2(t), dist2(theta_hint)));
}

} // namespace serrin
