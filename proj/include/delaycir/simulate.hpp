#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "delaycir/model.hpp"

namespace delaycir {

// Counter-based normal increments: each draw is a pure function of
// (seed, path_index, step), so execution order and thread count can never
// change a path.  Two avalanche passes of the splitmix64 finalizer feed a
// Box-Muller transform.
class NoiseStream {
public:
    NoiseStream(std::uint64_t seed, std::uint64_t path_index)
        : base_(mix(mix(seed + 0x9E3779B97F4A7C15ULL) ^ (path_index * 0xBF58476D1CE4E5B9ULL + 1))),
          silent_(false) {}

    // diagnostic stream: every increment is zero (drift-only paths)
    static NoiseStream zeros() {
        NoiseStream s(0, 0);
        s.silent_ = true;
        return s;
    }

    // standard normal draw for the given step counter
    double normal(std::uint64_t step) const {
        if (silent_) return 0.0;
        std::uint64_t a = mix(base_ + 2 * step);
        std::uint64_t b = mix(base_ + 2 * step + 1);
        // u1 in (0, 1], u2 in [0, 1)
        double u1 = (static_cast<double>(a >> 11) + 1.0) * 0x1.0p-53;
        double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    bool silent() const { return silent_; }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t base_;
    bool silent_;
};

enum class Scheme { FullTruncation, Reflection };

// One simulated trajectory.  values holds the emitted (nonnegative) rates on
// [t0, T]; history the segment resampled onto the same grid over
// [t0 - tau, t0].  The noise identity and the simulating parameters stay with
// the path so Radon-Nikodym weights can replay the exact increments later.
struct RatePath {
    TimeGrid grid;
    std::vector<double> values;            // r at t0 + i dt, >= 0
    std::vector<double> history;           // r at t0 - tau + i dt (last == values[0])
    std::vector<double> running_integral;  // trapezoidal int_{t0}^{t} r du
    double sup = 0.0;                      // max of r over [t0, T]
    std::size_t zero_hits = 0;             // emitted nodes at exactly 0

    ModelParams params;  // simulating measure's coefficients
    std::uint64_t seed = 0;
    std::uint64_t path_index = 0;
    bool noise_recorded = false;

    double r_at_index(std::size_t i) const { return values[i]; }

    // r(t_i - tau): reaches into the history for i < delay_steps
    double lagged(std::size_t i) const {
        std::size_t m = grid.delay_steps;
        return i < m ? history[i] : values[i - m];
    }
};

namespace detail {

inline std::vector<double> resample_history(const InitialSegment& seg, double t0,
                                            double tau, double dt) {
    std::size_t m = static_cast<std::size_t>(std::round(tau / dt));
    std::vector<double> h(m + 1);
    for (std::size_t i = 0; i <= m; ++i) {
        double t = t0 - tau + static_cast<double>(i) * dt;
        h[i] = seg.at(t);
    }
    return h;
}

}  // namespace detail

// Euler-Maruyama with the chosen nonnegativity treatment.
//
// Full truncation keeps an unfloored internal state x and evaluates drift and
// diffusion at max(x, 0):
//   x_{n+1} = x_n + [a (gamma(t_n) - x_n^+) + b x_{n-m}^+] dt + sigma sqrt(x_n^+) dW_n
// emitting r_n = max(x_n, 0).  Reflection instead takes the absolute value of
// the update, keeping the state itself nonnegative.
inline RatePath simulate_path(const ModelParams& p, const InitialSegment& segment,
                              double T, double dt, const NoiseStream& noise,
                              std::uint64_t seed = 0, std::uint64_t path_index = 0,
                              Scheme scheme = Scheme::FullTruncation) {
    auto rep = validate(p, T);
    if (!rep.ok())
        throw std::invalid_argument("invalid parameters: " + rep.errors.front());
    if (!(T > p.t0)) throw std::invalid_argument("simulation horizon must exceed t0");
    if (!segment.spans(p.t0, p.tau))
        throw std::invalid_argument("initial segment does not span [t0 - tau, t0]");

    RatePath path;
    path.grid = TimeGrid(p.t0, T, dt, p.tau);
    std::size_t n = path.grid.n_steps;
    std::size_t m = path.grid.delay_steps;
    path.history = detail::resample_history(segment, p.t0, p.tau, dt);
    path.values.resize(n + 1);
    path.running_integral.resize(n + 1);

    double sqdt = std::sqrt(dt);
    std::vector<double> x(n + 1);  // internal state (unfloored under full truncation)
    x[0] = path.history[m];
    path.values[0] = std::max(x[0], 0.0);
    path.running_integral[0] = 0.0;
    path.sup = path.values[0];

    for (std::size_t i = 0; i < n; ++i) {
        double t = path.grid.time_at(i);
        double lag = i < m ? path.history[i] : x[i - m];
        double dw = noise.normal(i) * sqdt;
        double next;
        if (scheme == Scheme::FullTruncation) {
            double xp = std::max(x[i], 0.0);
            double lp = std::max(lag, 0.0);
            next = x[i] + (p.a * (p.gamma.at(t) - xp) + p.b * lp) * dt +
                   p.sigma * std::sqrt(xp) * dw;
        } else {
            double xc = x[i];  // reflected state is already nonnegative
            next = std::abs(xc + (p.a * (p.gamma.at(t) - xc) + p.b * lag) * dt +
                            p.sigma * std::sqrt(xc) * dw);
        }
        x[i + 1] = next;
        double r = std::max(next, 0.0);
        path.values[i + 1] = r;
        path.running_integral[i + 1] =
            path.running_integral[i] + 0.5 * (path.values[i] + r) * dt;
        if (r > path.sup) path.sup = r;
        if (r == 0.0) ++path.zero_hits;
    }

    path.params = p;
    path.seed = seed;
    path.path_index = path_index;
    path.noise_recorded = !noise.silent();
    return path;
}

inline RatePath simulate_path(const ModelParams& p, const InitialSegment& segment,
                              double T, double dt, std::uint64_t seed,
                              std::uint64_t path_index,
                              Scheme scheme = Scheme::FullTruncation) {
    return simulate_path(p, segment, T, dt, NoiseStream(seed, path_index), seed,
                         path_index, scheme);
}

// Two paths driven by the same increments, for the comparison property
// r^(b_lo) <= r^(b_hi).  Parameters may differ only in b.
inline std::pair<RatePath, RatePath> simulate_coupled(
    const ModelParams& lo, const InitialSegment& seg_lo, const ModelParams& hi,
    const InitialSegment& seg_hi, double T, double dt, std::uint64_t seed,
    std::uint64_t path_index, Scheme scheme = Scheme::FullTruncation) {
    if (!(lo.b <= hi.b))
        throw std::invalid_argument("coupled simulation needs b_lo <= b_hi");
    if (lo.a != hi.a || lo.sigma != hi.sigma || lo.tau != hi.tau || lo.t0 != hi.t0 ||
        !(lo.gamma == hi.gamma))
        throw std::invalid_argument("coupled parameters may differ only in b");
    if (seg_lo.times() != seg_hi.times())
        throw std::invalid_argument("coupled segments need identical sample times");
    for (std::size_t i = 0; i < seg_lo.values().size(); ++i)
        if (seg_lo.values()[i] > seg_hi.values()[i])
            throw std::invalid_argument("coupled segments must be ordered seg_lo <= seg_hi");
    NoiseStream noise(seed, path_index);
    return {simulate_path(lo, seg_lo, T, dt, noise, seed, path_index, scheme),
            simulate_path(hi, seg_hi, T, dt, noise, seed, path_index, scheme)};
}

// Deterministic mean curve m(t) = E[r(t)] on [t0, T], advanced node by node
// through the variation-of-constants form
//   m(t_{i+1}) = e^{-a dt} m(t_i) + int_{t_i}^{t_{i+1}} e^{-a(t_{i+1}-u)} g(u) du,
//   g(u) = a gamma(u) + b m(u - tau),
// with the exponential kernel exact at nodes and the integral by trapezoid.
// The delayed mean is a stored node thanks to delay alignment.
inline std::vector<double> mean_dde(const ModelParams& p, const InitialSegment& segment,
                                    double T, double dt) {
    auto rep = validate(p, T);
    if (!rep.ok())
        throw std::invalid_argument("invalid parameters: " + rep.errors.front());
    if (!segment.spans(p.t0, p.tau))
        throw std::invalid_argument("initial segment does not span [t0 - tau, t0]");
    TimeGrid grid(p.t0, T, dt, p.tau);
    std::size_t n = grid.n_steps;
    std::size_t m = grid.delay_steps;

    std::vector<double> hist = detail::resample_history(segment, p.t0, p.tau, dt);
    std::vector<double> mean(n + 1);
    mean[0] = hist[m];
    double decay = std::exp(-p.a * dt);
    auto g = [&](std::size_t i) {
        double t = grid.time_at(i);
        double lag = i < m ? hist[i] : mean[i - m];
        return p.a * p.gamma.at(t) + p.b * lag;
    };
    for (std::size_t i = 0; i < n; ++i)
        mean[i + 1] = decay * mean[i] + 0.5 * dt * (decay * g(i) + g(i + 1));
    return mean;
}

}  // namespace delaycir
