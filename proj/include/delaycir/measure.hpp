#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "delaycir/model.hpp"
#include "delaycir/simulate.hpp"

namespace delaycir {

// Market price of risk.  The default single-psi specification uses psi0 only;
// the general triple maps (a, gamma, b) to
//   a^Q = a + psi0,  gamma^Q = (a gamma - psi1) / (a + psi0),  b^Q = b - psi2.
struct RiskPremium {
    double psi0 = 0.0;
    double psi1 = 0.0;
    double psi2 = 0.0;

    bool single_psi() const { return psi1 == 0.0 && psi2 == 0.0; }
};

// Map physical-measure parameters to risk-neutral ones.  For the single-psi
// case the Q-Feller condition is inherited from the P-side one (2 a^Q gamma^Q
// = 2 a gamma); the general case must pass positivity and Q-Feller checks.
inline ModelParams to_risk_neutral(const ModelParams& p, const RiskPremium& prem,
                                   double horizon) {
    if (p.measure != Measure::Physical)
        throw std::invalid_argument("to_risk_neutral expects physical-measure parameters");
    auto rep = validate(p, horizon);
    if (!rep.ok())
        throw std::invalid_argument("invalid parameters: " + rep.errors.front());
    if (!rep.feller_ok)
        throw std::invalid_argument("parameters violate the Feller condition on [t0, horizon]");

    double aq = p.a + prem.psi0;
    if (!(aq > 0.0))
        throw std::invalid_argument("risk premium rejected: a + psi0 must be positive");
    std::vector<double> vals;
    vals.reserve(p.gamma.values().size());
    for (double g : p.gamma.values()) vals.push_back((p.a * g - prem.psi1) / aq);
    StepFunction gq(p.gamma.breaks(), vals, p.gamma.end());

    ModelParams q = p;
    q.a = aq;
    q.gamma = gq;
    q.b = p.b - prem.psi2;
    q.measure = Measure::RiskNeutral;

    if (!prem.single_psi()) {
        if (!gq.all_positive())
            throw std::invalid_argument("risk premium rejected: gamma^Q must stay positive");
        if (!(q.b >= 0.0))
            throw std::invalid_argument("risk premium rejected: b - psi2 must be nonnegative");
        auto repq = validate(q, horizon);
        if (!repq.feller_ok)
            throw std::invalid_argument(
                "risk premium rejected: Feller condition fails under Q "
                "(sigma^2 > 2 a^Q gamma^Q somewhere on the horizon)");
    }
    return q;
}

namespace detail {

inline void require_compatible(const ModelParams& p, const ModelParams& q) {
    if (p.sigma != q.sigma || p.tau != q.tau || p.t0 != q.t0)
        throw std::invalid_argument("measure pair must share sigma, tau and t0");
}

}  // namespace detail

// Market price of risk at one state:
//   xi = [a gamma(t) - a^Q gamma^Q(t) - (a - a^Q) r_t + (b - b^Q) r_lag] / (sigma sqrt(r_t)).
// Singular at r_t = 0, which is a hard error here; pathwise accumulation
// truncates instead (see rn_weight).
inline double xi_at(const ModelParams& p, const ModelParams& q, double r_t,
                    double r_lag, double t) {
    detail::require_compatible(p, q);
    if (!(r_t > 0.0))
        throw std::domain_error("market price of risk is singular at zero rate");
    double num = p.a * p.gamma.at(t) - q.a * q.gamma.at(t) - (p.a - q.a) * r_t +
                 (p.b - q.b) * r_lag;
    return num / (p.sigma * std::sqrt(r_t));
}

// Radon-Nikodym weight along one path.
struct RnWeight {
    double log_z = 0.0;
    std::size_t truncated_nodes = 0;  // nodes where r fell below the epsilon floor
    double z() const { return std::exp(log_z); }
};

// Accumulate log Z = sum_n (-xi_n dW_n - 1/2 xi_n^2 dt) with xi at left
// endpoints.  dW must be the increment of the Brownian motion of the `from`
// measure; the path's recorded increments belong to its simulating measure,
// so they are shifted by the drift adjustment between the two:
//   dW^from_n = dW^sim_n + xi_{sim->from}(t_n) dt.
// Rates below eps are floored there for the singular 1/sqrt(r) factor and
// counted as a diagnostic.
inline RnWeight rn_weight(const RatePath& path, const ModelParams& from,
                          const ModelParams& to, double eps = 1e-12) {
    detail::require_compatible(from, to);
    detail::require_compatible(path.params, from);
    if (!path.noise_recorded)
        throw std::invalid_argument("path carries no noise record; simulate it with a seeded stream");

    NoiseStream noise(path.seed, path.path_index);
    const TimeGrid& grid = path.grid;
    double dt = grid.dt;
    double sqdt = std::sqrt(dt);

    RnWeight out;
    for (std::size_t i = 0; i < grid.n_steps; ++i) {
        double t = grid.time_at(i);
        double r = path.values[i];
        if (r < eps) {
            r = eps;
            ++out.truncated_nodes;
        }
        double lag = path.lagged(i);
        double xi = xi_at(from, to, r, lag, t);
        double dw = noise.normal(i) * sqdt;
        if (!(path.params.a == from.a && path.params.b == from.b &&
              path.params.gamma == from.gamma)) {
            dw += xi_at(path.params, from, r, lag, t) * dt;
        }
        out.log_z += -xi * dw - 0.5 * xi * xi * dt;
    }
    return out;
}

}  // namespace delaycir
