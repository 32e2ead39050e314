#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "delaycir/model.hpp"

namespace delaycir {

// k(x) = sqrt(a^2 + 2 (1 + b x) sigma^2)
inline double k_of(double x, const ModelParams& q) {
    if (x < 0.0) throw std::domain_error("k_of needs x >= 0");
    return std::sqrt(q.a * q.a + 2.0 * (1.0 + q.b * x) * q.sigma * q.sigma);
}

// Closed-form solution of phi' = 1/2 sigma^2 phi^2 + a phi - (1 + b gamma_c)
// backward from phi(T) = psi, with constant forcing gamma_c.
inline double phi_closed_form(double t, double T, double psi, double gamma_c,
                              const ModelParams& q) {
    if (t > T) throw std::domain_error("phi_closed_form needs t <= T");
    if (psi < 0.0 || gamma_c < 0.0)
        throw std::domain_error("phi_closed_form needs psi, gamma_c >= 0");
    double k = k_of(gamma_c, q);
    double s2 = q.sigma * q.sigma;
    double e = std::exp(-k * (T - t));
    double num = (k - q.a) / s2 * (psi + (q.a + k) / s2) +
                 (q.a + k) / s2 * (psi + (q.a - k) / s2) * e;
    double den = (psi + (q.a + k) / s2) + ((k - q.a) / s2 - psi) * e;
    return num / den;
}

namespace detail {

// Value on a uniform grid: exact stored value at nodes (within 1e-9 steps),
// linear interpolation between them.
inline double grid_lookup(const std::vector<double>& v, double t0, double dt, double t) {
    double x = (t - t0) / dt;
    double nearest = std::round(x);
    if (std::abs(x - nearest) <= 1e-9) {
        if (nearest < 0.0 || nearest > static_cast<double>(v.size() - 1))
            throw std::out_of_range("time outside the solution grid");
        return v[static_cast<std::size_t>(nearest)];
    }
    if (x < 0.0 || x > static_cast<double>(v.size() - 1))
        throw std::out_of_range("time outside the solution grid");
    std::size_t i = static_cast<std::size_t>(x);
    double u = x - static_cast<double>(i);
    return v[i] + u * (v[i + 1] - v[i]);
}

}  // namespace detail

// Backward solution of the alpha system on [t0, T], stored ascending in t on
// the delay-aligned grid.  Node i sits at t0 + i dt.
struct AlphaSolution {
    double t0 = 0.0, T = 0.0, w = 0.0, dt = 0.0, tau = 0.0;
    std::vector<double> alpha_r;
    std::vector<double> alpha_0;

    std::size_t n_nodes() const { return alpha_r.size(); }

    std::size_t index_at(double t) const {
        double x = (t - t0) / dt;
        double r = std::round(x);
        if (std::abs(x - r) > 1e-9 || r < 0.0 || r >= static_cast<double>(n_nodes()))
            throw std::out_of_range("time is not a grid node of the solution");
        return static_cast<std::size_t>(r);
    }

    double alpha_r_at(double t) const { return detail::grid_lookup(alpha_r, t0, dt, t); }
    double alpha_0_at(double t) const { return detail::grid_lookup(alpha_0, t0, dt, t); }
};

struct BetaSolution {
    double t0 = 0.0, T = 0.0, w = 0.0, dt = 0.0, tau = 0.0;
    std::vector<double> beta_r;
    std::vector<double> beta_0;

    std::size_t n_nodes() const { return beta_r.size(); }

    double beta_r_at(double t) const { return detail::grid_lookup(beta_r, t0, dt, t); }
    double beta_0_at(double t) const { return detail::grid_lookup(beta_0, t0, dt, t); }
};

namespace detail {

inline void require_q(const ModelParams& q, const char* who) {
    if (q.measure != Measure::RiskNeutral)
        throw std::invalid_argument(std::string(who) + " expects risk-neutral parameters");
}

}  // namespace detail

// Solve the alpha system backward from T across the knots T - j tau.  Written
// in the reversed variable s = T - t, where the system reads, with m = tau/dt,
//   alpha'(s) = 1 + b alpha(s - tau) 1{s >= tau} - 1/2 sigma^2 alpha^2 - a alpha
// and the delayed value comes from the already-finished part of the sweep.
// Classical RK4; delayed and coefficient values at half-stages by linear
// interpolation (grid nodes themselves are exact by delay alignment).
inline AlphaSolution solve_alpha(const ModelParams& q, double T, double w, double dt) {
    detail::require_q(q, "solve_alpha");
    auto rep = validate(q, T);
    if (!rep.ok())
        throw std::invalid_argument("invalid parameters: " + rep.errors.front());
    if (!rep.feller_ok)
        throw std::invalid_argument("parameters violate the Feller condition on [t0, T]");
    double wm = w_max(q);
    if (!(w >= 0.0) || !(w < wm))
        throw std::domain_error("w=" + std::to_string(w) + " outside [0, w_max), w_max=" +
                                std::to_string(wm));
    TimeGrid grid(q.t0, T, dt, q.tau);  // throws unless delay-aligned

    std::size_t n = grid.n_steps;
    std::size_t m = grid.delay_steps;
    double s2 = q.sigma * q.sigma;
    double aq = q.a;
    double bq = q.b;

    std::vector<double> al(n + 1);
    al[0] = w;
    auto rhs = [&](double x, double delayed, double bcoef) {
        return 1.0 + bcoef * delayed - 0.5 * s2 * x * x - aq * x;
    };
    for (std::size_t j = 0; j * m < n; ++j) {
        std::size_t lo = j * m;
        std::size_t hi = std::min(lo + m, n);
        double bcoef = j == 0 ? 0.0 : bq;
        for (std::size_t i = lo; i < hi; ++i) {
            double d0 = 0.0, dh = 0.0, d1 = 0.0;
            if (j > 0) {
                d0 = al[i - m];
                d1 = al[i + 1 - m];
                dh = 0.5 * (d0 + d1);
            }
            double x = al[i];
            double k1 = rhs(x, d0, bcoef);
            double k2 = rhs(x + 0.5 * dt * k1, dh, bcoef);
            double k3 = rhs(x + 0.5 * dt * k2, dh, bcoef);
            double k4 = rhs(x + dt * k3, d1, bcoef);
            al[i + 1] = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
    }

    // alpha_0(s) = a int_0^s gamma(T - u) alpha(u) du, cumulative trapezoid.
    // gamma evaluated at each subinterval midpoint: exact when its breaks sit
    // on grid nodes, a sensible average otherwise.
    std::vector<double> a0(n + 1);
    a0[0] = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double t_mid = T - (static_cast<double>(i) + 0.5) * dt;
        double g = q.gamma.at(t_mid);
        a0[i + 1] = a0[i] + aq * g * 0.5 * (al[i] + al[i + 1]) * dt;
    }

    AlphaSolution out;
    out.t0 = q.t0;
    out.T = T;
    out.w = w;
    out.dt = dt;
    out.tau = q.tau;
    out.alpha_r.resize(n + 1);
    out.alpha_0.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        out.alpha_r[i] = al[n - i];
        out.alpha_0[i] = a0[n - i];
    }
    return out;
}

// Solve the beta system on the grid of an existing alpha solution.  On the
// last interval [T - tau, T] the equation has no delay term and
//   beta_r(t) = exp(-int_t^T (sigma^2 alpha_r + a) du)
// is evaluated by trapezoidal quadrature of the exponent; earlier intervals
// integrate the linear ODE with forcing -b beta_r(t + tau) by RK4.
inline BetaSolution solve_beta(const ModelParams& q, double T, double w,
                               const AlphaSolution& alpha) {
    detail::require_q(q, "solve_beta");
    if (alpha.T != T || alpha.w != w || alpha.t0 != q.t0 || alpha.tau != q.tau)
        throw std::invalid_argument("alpha solution does not match the requested beta system");
    double dt = alpha.dt;
    TimeGrid grid(q.t0, T, dt, q.tau);
    std::size_t n = grid.n_steps;
    std::size_t m = grid.delay_steps;
    if (alpha.n_nodes() != n + 1)
        throw std::invalid_argument("alpha solution grid size mismatch");
    double s2 = q.sigma * q.sigma;
    double aq = q.a;
    double bq = q.b;

    // alpha in the reversed variable: als[i] = alpha_r(T - i dt)
    std::vector<double> als(n + 1);
    for (std::size_t i = 0; i <= n; ++i) als[i] = alpha.alpha_r[n - i];

    std::vector<double> be(n + 1);
    be[0] = 1.0;
    std::size_t first_hi = std::min(m, n);
    double expo = 0.0;
    for (std::size_t i = 0; i < first_hi; ++i) {
        expo += 0.5 * ((s2 * als[i] + aq) + (s2 * als[i + 1] + aq)) * dt;
        be[i + 1] = std::exp(-expo);
    }
    auto rhs = [&](double y, double acoef, double delayed) {
        return -(s2 * acoef + aq) * y + bq * delayed;
    };
    for (std::size_t j = 1; j * m < n; ++j) {
        std::size_t lo = j * m;
        std::size_t hi = std::min(lo + m, n);
        for (std::size_t i = lo; i < hi; ++i) {
            double a0c = als[i];
            double a1c = als[i + 1];
            double ahc = 0.5 * (a0c + a1c);
            double e0 = be[i - m];
            double e1 = be[i + 1 - m];
            double eh = 0.5 * (e0 + e1);
            double y = be[i];
            double k1 = rhs(y, a0c, e0);
            double k2 = rhs(y + 0.5 * dt * k1, ahc, eh);
            double k3 = rhs(y + 0.5 * dt * k2, ahc, eh);
            double k4 = rhs(y + dt * k3, a1c, e1);
            be[i + 1] = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
    }

    std::vector<double> b0(n + 1);
    b0[0] = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double t_mid = T - (static_cast<double>(i) + 0.5) * dt;
        double g = q.gamma.at(t_mid);
        b0[i + 1] = b0[i] + aq * g * 0.5 * (be[i] + be[i + 1]) * dt;
    }

    BetaSolution out;
    out.t0 = q.t0;
    out.T = T;
    out.w = w;
    out.dt = dt;
    out.tau = q.tau;
    out.beta_r.resize(n + 1);
    out.beta_0.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        out.beta_r[i] = be[n - i];
        out.beta_0[i] = b0[n - i];
    }
    return out;
}

// Gamma^Q(t, T; w): b alpha_r(t + tau) up to T - tau, then the constant b w.
// Continuous at T - tau because alpha_r(T) = w.
inline double gamma_q_fn(double t, double T, double w, const AlphaSolution& alpha,
                         const ModelParams& q) {
    if (t < q.t0 - q.tau - 1e-9 || t > T + 1e-9)
        throw std::out_of_range("gamma_q_fn needs t in [t0 - tau, T]");
    if (t >= T - q.tau) return q.b * w;
    return q.b * alpha.alpha_r_at(t + q.tau);
}

// Nondecreasing per-interval bounds wbar_j on alpha_r and their finite limit.
struct BoundSequence {
    std::vector<double> w_bar;
    double limit_L = 0.0;
};

inline BoundSequence bounds(const ModelParams& q, double T, double w, double gamma_sup) {
    detail::require_q(q, "bounds");
    double wm = w_max(q);
    if (!(w >= 0.0) || !(w < wm))
        throw std::domain_error("w outside [0, w_max)");
    double s2 = q.sigma * q.sigma;
    auto next = [&](double x) { return (k_of(x, q) - q.a) / s2; };

    BoundSequence out;
    double cur = std::max(next(0.0), gamma_sup);
    out.w_bar.push_back(cur);
    std::size_t intervals = static_cast<std::size_t>(std::ceil((T - q.t0) / q.tau));
    for (std::size_t j = 0; j < intervals; ++j) {
        cur = std::max(cur, next(cur));
        out.w_bar.push_back(cur);
    }
    double x = cur;
    for (int it = 0; it < 200; ++it) {
        double y = std::max(x, next(x));
        if (std::abs(y - x) <= 1e-12) {
            x = y;
            break;
        }
        x = y;
    }
    out.limit_L = x;
    return out;
}

}  // namespace delaycir
