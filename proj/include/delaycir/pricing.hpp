#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "delaycir/model.hpp"
#include "delaycir/riccati.hpp"
#include "delaycir/simulate.hpp"

namespace delaycir {

// Evaluation state: the current rate plus the rate history over the trailing
// delay window, on the delay-aligned grid.
struct RateState {
    double t = 0.0;
    double r_t = 0.0;
    double dt = 0.0;
    std::vector<double> lookback;  // r at t - tau + i dt; back() == r_t

    static RateState at_start(const InitialSegment& segment, const ModelParams& p,
                              double dt) {
        RateState s;
        s.t = p.t0;
        s.dt = dt;
        s.lookback = detail::resample_history(segment, p.t0, p.tau, dt);
        s.r_t = s.lookback.back();
        return s;
    }

    static RateState from_path(const RatePath& path, std::size_t node) {
        if (node >= path.values.size())
            throw std::out_of_range("path node out of range");
        RateState s;
        s.t = path.grid.time_at(node);
        s.dt = path.grid.dt;
        std::size_t m = path.grid.delay_steps;
        s.lookback.resize(m + 1);
        for (std::size_t i = 0; i <= m; ++i) {
            std::size_t back = m - i;
            s.lookback[i] = back > node ? path.history[node + i] : path.values[node - back];
        }
        s.r_t = s.lookback.back();
        return s;
    }
};

struct CurvePoint {
    double T = 0.0;
    double B = 0.0;
    double R = 0.0;
    double f = 0.0;
};

namespace detail {

// Trapezoid of kernel(u + tau) * r(u) du over u in [t - tau, min(t, T - tau)],
// reading kernel values off the solution grid (nodes align exactly).
template <typename Solution>
double history_integral(const RateState& state, const Solution& sol,
                        const std::vector<double>& kernel, double b, double tau) {
    if (state.dt != sol.dt)
        throw std::invalid_argument("state grid spacing differs from the solution grid");
    std::size_t m = static_cast<std::size_t>(std::round(tau / sol.dt));
    if (state.lookback.size() != m + 1)
        throw std::invalid_argument("lookback span does not equal the delay");
    if (b == 0.0) return 0.0;

    // number of dt-subintervals of [t - tau, min(t, T - tau)]
    double over = (state.t - (sol.T - tau)) / sol.dt;
    double over_r = std::round(over);
    if (std::abs(over - over_r) > 1e-9)
        throw std::invalid_argument("state time is off the solution grid lattice");
    std::ptrdiff_t cut = static_cast<std::ptrdiff_t>(over_r);
    std::ptrdiff_t count = static_cast<std::ptrdiff_t>(m) - std::max<std::ptrdiff_t>(cut, 0);
    if (count <= 0) return 0.0;

    // kernel index of u_0 + tau = t - tau + tau = t on the solution grid
    double pos = (state.t - sol.t0) / sol.dt;
    double pos_r = std::round(pos);
    if (std::abs(pos - pos_r) > 1e-9 || pos_r < 0.0)
        throw std::invalid_argument("state time is off the solution grid lattice");
    std::size_t k0 = static_cast<std::size_t>(pos_r);
    if (k0 + static_cast<std::size_t>(count) >= kernel.size())
        throw std::invalid_argument("solution grid too short for the history integral");

    double acc = 0.0;
    for (std::ptrdiff_t i = 0; i <= count; ++i) {
        double weight = (i == 0 || i == count) ? 0.5 : 1.0;
        acc += weight * kernel[k0 + static_cast<std::size_t>(i)] *
               state.lookback[static_cast<std::size_t>(i)];
    }
    return b * acc * sol.dt;
}

}  // namespace detail

// y^Q(t, T; w): the recent rate history integrated against b alpha_r(. + tau).
// Zero exactly at t = T (empty support) and for b = 0.
inline double y_q(const RateState& state, const AlphaSolution& alpha,
                  const ModelParams& q) {
    detail::require_q(q, "y_q");
    return detail::history_integral(state, alpha, alpha.alpha_r, q.b, q.tau);
}

// ytilde^Q: same with the beta_r kernel.
inline double y_tilde_q(const RateState& state, const BetaSolution& beta,
                        const ModelParams& q) {
    detail::require_q(q, "y_tilde_q");
    return detail::history_integral(state, beta, beta.beta_r, q.b, q.tau);
}

// v^Q = exp(-alpha_0 - alpha_r r - y) for t < T, exp(-w r - y) at t = T.
inline double v_q(double t, double T, double r, double y, double w,
                  const AlphaSolution& alpha) {
    if (t > T) throw std::domain_error("v_q needs t <= T");
    if (t == T) return std::exp(-w * r - y);
    return std::exp(-alpha.alpha_0_at(t) - alpha.alpha_r_at(t) * r - y);
}

// vtilde^Q = (beta_0 + r beta_r + ytilde) exp(-alpha_0 - alpha_r r - y) for
// t < T, (r + ytilde) exp(-w r - y) at t = T.
inline double v_tilde_q(double t, double T, double r, double y, double y_tilde,
                        double w, const AlphaSolution& alpha, const BetaSolution& beta) {
    if (t > T) throw std::domain_error("v_tilde_q needs t <= T");
    if (t == T) return (r + y_tilde) * std::exp(-w * r - y);
    return (beta.beta_0_at(t) + r * beta.beta_r_at(t) + y_tilde) *
           std::exp(-alpha.alpha_0_at(t) - alpha.alpha_r_at(t) * r - y);
}

// B(t, T) = exp(-alpha_0 - alpha_r r(t) - y^Q) with the w = 0 solution.
inline double bond_price(const RateState& state, const AlphaSolution& alpha0,
                         const ModelParams& q) {
    if (alpha0.w != 0.0)
        throw std::invalid_argument("bond_price needs the w = 0 alpha solution");
    double y = y_q(state, alpha0, q);
    return v_q(state.t, alpha0.T, state.r_t, y, 0.0, alpha0);
}

inline double yield(double B, double t, double T) {
    if (!(T > t))
        throw std::domain_error("yield needs T > t (use the spot rate at T = t)");
    if (!(B > 0.0)) throw std::domain_error("yield needs a positive bond price");
    return -std::log(B) / (T - t);
}

// Same value as yield(bond_price(...)) without the exp/log round trip:
// R = [alpha_0 + alpha_r r + y^Q] / (T - t).
inline double yield_affine(const RateState& state, const AlphaSolution& alpha0,
                           const ModelParams& q) {
    if (alpha0.w != 0.0)
        throw std::invalid_argument("yield_affine needs the w = 0 alpha solution");
    if (!(alpha0.T > state.t)) throw std::domain_error("yield_affine needs T > t");
    double y = y_q(state, alpha0, q);
    return (alpha0.alpha_0_at(state.t) + alpha0.alpha_r_at(state.t) * state.r_t + y) /
           (alpha0.T - state.t);
}

// f(t, T) = beta_0 + beta_r r(t) + ytilde^Q at w = 0; returns r(T) in the
// limit t = T.
inline double forward_rate(const RateState& state, const AlphaSolution& alpha0,
                           const BetaSolution& beta0, const ModelParams& q) {
    if (alpha0.w != 0.0 || beta0.w != 0.0)
        throw std::invalid_argument("forward_rate needs the w = 0 solutions");
    if (state.t > beta0.T) throw std::domain_error("forward_rate needs t <= T");
    double yt = y_tilde_q(state, beta0, q);
    return beta0.beta_0_at(state.t) + beta0.beta_r_at(state.t) * state.r_t + yt;
}

// B(t, T) = exp(-int_t^T f(t, u) du) from a sampled forward curve.
inline double bond_from_forward(const std::vector<double>& maturities,
                                const std::vector<double>& forwards) {
    if (maturities.empty() || maturities.size() != forwards.size())
        throw std::invalid_argument("forward curve needs matching, nonempty samples");
    double acc = 0.0;
    for (std::size_t i = 1; i < maturities.size(); ++i) {
        double h = maturities[i] - maturities[i - 1];
        if (!(h > 0.0))
            throw std::invalid_argument("forward curve maturities must increase");
        acc += 0.5 * (forwards[i - 1] + forwards[i]) * h;
    }
    return std::exp(-acc);
}

// Solve both systems at w = 0 and evaluate one curve point.
inline CurvePoint curve_point(const RateState& state, const ModelParams& q, double T,
                              double dt) {
    CurvePoint pt;
    pt.T = T;
    AlphaSolution alpha = solve_alpha(q, T, 0.0, dt);
    BetaSolution beta = solve_beta(q, T, 0.0, alpha);
    pt.B = bond_price(state, alpha, q);
    pt.f = forward_rate(state, alpha, beta, q);
    pt.R = T > state.t ? yield(pt.B, state.t, T) : state.r_t;
    return pt;
}

}  // namespace delaycir
