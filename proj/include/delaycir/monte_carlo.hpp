#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "delaycir/measure.hpp"
#include "delaycir/model.hpp"
#include "delaycir/simulate.hpp"

namespace delaycir {

struct McEstimate {
    double mean = 0.0;
    double stderr_val = 0.0;
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
    double dt = 0.0;
    double elapsed = 0.0;  // seconds, wall clock
};

struct VerificationReport {
    std::string name;
    double analytic = 0.0;
    McEstimate mc;
    double z_score = 0.0;
    bool pass = false;
    std::size_t truncated_nodes = 0;  // epsilon-floored nodes across all paths
};

namespace detail {

// Map fn over path indices.  Results land in per-path slots (the callers
// preallocate them), so the estimate is a pure function of (seed, n_paths,
// dt) no matter how many workers run or how their work interleaves.
template <typename Fn>
void for_each_path(std::size_t n_paths, unsigned workers, Fn&& fn) {
    if (workers <= 1 || n_paths < 2) {
        for (std::size_t i = 0; i < n_paths; ++i) fn(i);
        return;
    }
    unsigned w = std::min<unsigned>(workers, static_cast<unsigned>(n_paths));
    std::size_t chunk = (n_paths + w - 1) / w;
    std::vector<std::thread> pool;
    pool.reserve(w);
    for (unsigned k = 0; k < w; ++k) {
        std::size_t lo = static_cast<std::size_t>(k) * chunk;
        std::size_t hi = std::min(lo + chunk, n_paths);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

// Sequential mean and standard error over the slot array.
inline void reduce_slots(const std::vector<double>& slots, McEstimate& est) {
    std::size_t n = slots.size();
    double sum = 0.0;
    bool constant = true;
    for (double v : slots) {
        sum += v;
        if (v != slots.front()) constant = false;
    }
    if (constant) {
        // a constant sample has zero variance; summation rounding must not
        // manufacture a spurious standard error here
        est.mean = slots.front();
        est.stderr_val = 0.0;
        return;
    }
    est.mean = sum / static_cast<double>(n);
    if (n >= 2) {
        double ss = 0.0;
        for (double v : slots) {
            double d = v - est.mean;
            ss += d * d;
        }
        est.stderr_val = std::sqrt(ss / (static_cast<double>(n) * static_cast<double>(n - 1)));
    }
}

struct Stopwatch {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

}  // namespace detail

// E^Q[exp(-int_{t0}^{T} r du - w r(T))] by simulation under Q.  silent_noise
// zeroes every increment (drift-only paths), a diagnostic against the Euler
// mean equation.
inline McEstimate estimate_fk(const ModelParams& q, const InitialSegment& segment,
                              double T, double w, std::size_t n_paths, double dt,
                              std::uint64_t seed, unsigned workers = 1,
                              Scheme scheme = Scheme::FullTruncation,
                              bool silent_noise = false) {
    if (q.measure != Measure::RiskNeutral)
        throw std::invalid_argument("estimate_fk expects risk-neutral parameters");
    double wm = w_max(q);
    if (!(w >= 0.0) || !(w < wm)) throw std::domain_error("w outside [0, w_max)");
    if (n_paths == 0) throw std::invalid_argument("n_paths must be positive");

    detail::Stopwatch timer;
    McEstimate est;
    est.n_paths = n_paths;
    est.seed = seed;
    est.dt = dt;
    std::vector<double> slots(n_paths);
    if (T == q.t0) {
        // empty integral: the value is a constant, no randomness consumed
        double v = std::exp(-w * segment.at(q.t0));
        for (auto& s : slots) s = v;
    } else {
        detail::for_each_path(n_paths, workers, [&](std::size_t i) {
            NoiseStream noise = silent_noise ? NoiseStream::zeros() : NoiseStream(seed, i);
            RatePath path = simulate_path(q, segment, T, dt, noise, seed, i, scheme);
            slots[i] = std::exp(-path.running_integral.back() - w * path.values.back());
        });
    }
    detail::reduce_slots(slots, est);
    est.elapsed = timer.seconds();
    return est;
}

// E^Q[r(T) exp(-int_{t0}^{T} r du - w r(T))], the forward-rate numerator.
inline McEstimate estimate_fk_numerator(const ModelParams& q, const InitialSegment& segment,
                                        double T, double w, std::size_t n_paths, double dt,
                                        std::uint64_t seed, unsigned workers = 1,
                                        Scheme scheme = Scheme::FullTruncation) {
    if (q.measure != Measure::RiskNeutral)
        throw std::invalid_argument("estimate_fk_numerator expects risk-neutral parameters");
    double wm = w_max(q);
    if (!(w >= 0.0) || !(w < wm)) throw std::domain_error("w outside [0, w_max)");
    if (n_paths == 0) throw std::invalid_argument("n_paths must be positive");

    detail::Stopwatch timer;
    McEstimate est;
    est.n_paths = n_paths;
    est.seed = seed;
    est.dt = dt;
    std::vector<double> slots(n_paths);
    if (T == q.t0) {
        double r0 = segment.at(q.t0);
        double v = r0 * std::exp(-w * r0);
        for (auto& s : slots) s = v;
    } else {
        detail::for_each_path(n_paths, workers, [&](std::size_t i) {
            RatePath path = simulate_path(q, segment, T, dt, seed, i, scheme);
            double rT = path.values.back();
            slots[i] = rT * std::exp(-path.running_integral.back() - w * rT);
        });
    }
    detail::reduce_slots(slots, est);
    est.elapsed = timer.seconds();
    return est;
}

// Monte Carlo mean of r(T) under the given measure's dynamics.
inline McEstimate estimate_mean_rate(const ModelParams& p, const InitialSegment& segment,
                                     double T, std::size_t n_paths, double dt,
                                     std::uint64_t seed, unsigned workers = 1,
                                     Scheme scheme = Scheme::FullTruncation) {
    if (n_paths == 0) throw std::invalid_argument("n_paths must be positive");
    detail::Stopwatch timer;
    McEstimate est;
    est.n_paths = n_paths;
    est.seed = seed;
    est.dt = dt;
    std::vector<double> slots(n_paths);
    if (T == p.t0) {
        double r0 = segment.at(p.t0);
        for (auto& s : slots) s = r0;
    } else {
        detail::for_each_path(n_paths, workers, [&](std::size_t i) {
            slots[i] = simulate_path(p, segment, T, dt, seed, i, scheme).values.back();
        });
    }
    detail::reduce_slots(slots, est);
    est.elapsed = timer.seconds();
    return est;
}

// Gate an estimate against its analytic value at three standard errors.
inline VerificationReport verify(double analytic, const McEstimate& mc,
                                 const std::string& name = "") {
    VerificationReport rep;
    rep.name = name;
    rep.analytic = analytic;
    rep.mc = mc;
    if (mc.stderr_val > 0.0) {
        rep.z_score = (mc.mean - analytic) / mc.stderr_val;
        rep.pass = std::abs(rep.z_score) <= 3.0;
    } else {
        bool exact = mc.mean == analytic;
        rep.z_score = exact ? 0.0 : std::numeric_limits<double>::infinity();
        rep.pass = exact;
    }
    return rep;
}

// E^P[Z_T] = 1: simulate under P, weight with the P->Q Radon-Nikodym
// derivative, compare the sample mean against one.
inline VerificationReport verify_martingale(const ModelParams& p, const ModelParams& q,
                                            const InitialSegment& segment, double T,
                                            std::size_t n_paths, double dt,
                                            std::uint64_t seed, unsigned workers = 1,
                                            Scheme scheme = Scheme::FullTruncation) {
    if (p.measure != Measure::Physical || q.measure != Measure::RiskNeutral)
        throw std::invalid_argument("verify_martingale expects a (physical, risk-neutral) pair");
    if (n_paths == 0) throw std::invalid_argument("n_paths must be positive");

    detail::Stopwatch timer;
    McEstimate est;
    est.n_paths = n_paths;
    est.seed = seed;
    est.dt = dt;
    std::vector<double> slots(n_paths);
    std::vector<std::size_t> truncated(n_paths);
    detail::for_each_path(n_paths, workers, [&](std::size_t i) {
        RatePath path = simulate_path(p, segment, T, dt, seed, i, scheme);
        RnWeight wgt = rn_weight(path, p, q);
        slots[i] = wgt.z();
        truncated[i] = wgt.truncated_nodes;
    });
    detail::reduce_slots(slots, est);
    est.elapsed = timer.seconds();

    VerificationReport rep = verify(1.0, est, "martingale");
    for (std::size_t c : truncated) rep.truncated_nodes += c;
    return rep;
}

// Importance-sampled bond price: E^P[Z_T exp(-int r du)] equals the Q-measure
// price, estimated from P-paths.
inline McEstimate estimate_importance_bond(const ModelParams& p, const ModelParams& q,
                                           const InitialSegment& segment, double T,
                                           std::size_t n_paths, double dt,
                                           std::uint64_t seed, unsigned workers = 1,
                                           Scheme scheme = Scheme::FullTruncation) {
    if (p.measure != Measure::Physical || q.measure != Measure::RiskNeutral)
        throw std::invalid_argument("estimate_importance_bond expects a (physical, risk-neutral) pair");
    if (n_paths == 0) throw std::invalid_argument("n_paths must be positive");

    detail::Stopwatch timer;
    McEstimate est;
    est.n_paths = n_paths;
    est.seed = seed;
    est.dt = dt;
    std::vector<double> slots(n_paths);
    detail::for_each_path(n_paths, workers, [&](std::size_t i) {
        RatePath path = simulate_path(p, segment, T, dt, seed, i, scheme);
        slots[i] = rn_weight(path, p, q).z() * std::exp(-path.running_integral.back());
    });
    detail::reduce_slots(slots, est);
    est.elapsed = timer.seconds();
    return est;
}

}  // namespace delaycir
