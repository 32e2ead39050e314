#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace delaycir {

enum class Measure { Physical, RiskNeutral };

// Piecewise-constant positive function of time, right-continuous at its
// breakpoints: values[i] applies on [breaks[i-1], breaks[i]).  The optional
// end bound makes evaluation beyond the declared horizon an error.
class StepFunction {
public:
    static StepFunction constant(double value) {
        return StepFunction({}, {value}, std::numeric_limits<double>::infinity());
    }

    StepFunction(std::vector<double> breaks, std::vector<double> values,
                 double end = std::numeric_limits<double>::infinity())
        : breaks_(std::move(breaks)), values_(std::move(values)), end_(end) {
        if (values_.size() != breaks_.size() + 1)
            throw std::invalid_argument("step function needs one more value than breakpoints");
        for (std::size_t i = 1; i < breaks_.size(); ++i)
            if (!(breaks_[i - 1] < breaks_[i]))
                throw std::invalid_argument("step function breakpoints must be strictly increasing");
        if (!breaks_.empty() && !(breaks_.back() <= end_))
            throw std::invalid_argument("step function end bound precedes its last breakpoint");
    }

    double at(double t) const {
        if (t > end_)
            throw std::out_of_range("step function evaluated at t=" + std::to_string(t) +
                                    " beyond declared end " + std::to_string(end_));
        auto it = std::upper_bound(breaks_.begin(), breaks_.end(), t);
        return values_[static_cast<std::size_t>(it - breaks_.begin())];
    }

    // Extremes over [lo, hi]; exact because the function is a step function.
    double min_on(double lo, double hi) const { return extreme_on(lo, hi, false); }
    double max_on(double lo, double hi) const { return extreme_on(lo, hi, true); }

    bool all_positive() const {
        return std::all_of(values_.begin(), values_.end(), [](double v) { return v > 0.0; });
    }

    double end() const { return end_; }
    const std::vector<double>& breaks() const { return breaks_; }
    const std::vector<double>& values() const { return values_; }

    bool operator==(const StepFunction& o) const {
        return breaks_ == o.breaks_ && values_ == o.values_ && end_ == o.end_;
    }

private:
    double extreme_on(double lo, double hi, bool want_max) const {
        if (!(lo <= hi))
            throw std::invalid_argument("empty interval for step function extreme");
        if (hi > end_)
            throw std::out_of_range("step function interval extends beyond declared end");
        // segment holding lo, through segment holding hi
        auto first = std::upper_bound(breaks_.begin(), breaks_.end(), lo) - breaks_.begin();
        auto last = std::upper_bound(breaks_.begin(), breaks_.end(), hi) - breaks_.begin();
        double best = values_[static_cast<std::size_t>(first)];
        for (auto i = first + 1; i <= last; ++i)
            best = want_max ? std::max(best, values_[static_cast<std::size_t>(i)])
                            : std::min(best, values_[static_cast<std::size_t>(i)]);
        return best;
    }

    std::vector<double> breaks_;
    std::vector<double> values_;
    double end_;
};

// Coefficient set of the delay model under one probability measure.
struct ModelParams {
    double a = 0.0;            // mean-reversion speed, > 0
    StepFunction gamma = StepFunction::constant(1.0);  // long-term level, > 0
    double b = 0.0;            // delay coefficient, >= 0
    double sigma = 0.0;        // volatility, > 0
    double tau = 0.0;          // delay, > 0
    double t0 = 0.0;           // start time
    Measure measure = Measure::Physical;
};

struct ValidationReport {
    std::vector<std::string> errors;  // violated sign constraints
    bool feller_ok = false;           // sigma^2 <= 2 a gamma(t) on [t0, horizon]
    bool ok() const { return errors.empty(); }
};

// Sign checks plus the Feller flag.  Never throws: callers branch on the
// report (the CLI turns errors into exit code 2).
inline ValidationReport validate(const ModelParams& p, double horizon) {
    ValidationReport rep;
    if (!(p.a > 0.0)) rep.errors.push_back("a must be positive");
    if (!(p.sigma > 0.0)) rep.errors.push_back("sigma must be positive");
    if (!(p.b >= 0.0)) rep.errors.push_back("b must be nonnegative");
    if (!(p.tau > 0.0)) rep.errors.push_back("tau must be positive");
    if (!p.gamma.all_positive()) rep.errors.push_back("gamma must be positive");
    if (horizon < p.t0) rep.errors.push_back("horizon precedes t0");
    if (p.gamma.end() < horizon)
        rep.errors.push_back("gamma is not defined through the requested horizon");
    if (rep.ok()) {
        // exact for a step function: test the minimum segment value
        double gmin = p.gamma.min_on(p.t0, std::min(horizon, p.gamma.end()));
        rep.feller_ok = p.sigma * p.sigma <= 2.0 * p.a * gmin;
    }
    return rep;
}

inline double gamma_at(const ModelParams& p, double t) { return p.gamma.at(t); }

// Exclusive upper bound of the admissible terminal-weight interval,
// (sqrt(a^2 + 2 sigma^2) - a) / sigma^2.
inline double w_max(const ModelParams& p) {
    if (p.measure != Measure::RiskNeutral)
        throw std::invalid_argument("w_max expects risk-neutral parameters");
    double s2 = p.sigma * p.sigma;
    return (std::sqrt(p.a * p.a + 2.0 * s2) - p.a) / s2;
}

// Deterministic positive rate history on [t0 - tau, t0], linear between
// samples.
class InitialSegment {
public:
    InitialSegment(std::vector<double> times, std::vector<double> values)
        : times_(std::move(times)), values_(std::move(values)) {
        if (times_.size() < 2 || times_.size() != values_.size())
            throw std::invalid_argument("initial segment needs matching times/values, at least two samples");
        for (std::size_t i = 1; i < times_.size(); ++i)
            if (!(times_[i - 1] < times_[i]))
                throw std::invalid_argument("initial segment times must be strictly increasing");
        for (double v : values_)
            if (!(v > 0.0))
                throw std::invalid_argument("initial segment values must be positive");
    }

    static InitialSegment constant(double t0, double tau, double value) {
        return InitialSegment({t0 - tau, t0}, {value, value});
    }

    double t_begin() const { return times_.front(); }
    double t_end() const { return times_.back(); }

    double at(double t) const {
        if (t < times_.front() - 1e-12 || t > times_.back() + 1e-12)
            throw std::out_of_range("initial segment evaluated outside its span");
        t = std::clamp(t, times_.front(), times_.back());
        auto it = std::upper_bound(times_.begin(), times_.end(), t);
        if (it == times_.begin()) return values_.front();
        if (it == times_.end()) return values_.back();
        std::size_t i = static_cast<std::size_t>(it - times_.begin());
        double u = (t - times_[i - 1]) / (times_[i] - times_[i - 1]);
        return values_[i - 1] + u * (values_[i] - values_[i - 1]);
    }

    // piecewise-linear, so the supremum sits at a sample
    double sup() const { return *std::max_element(values_.begin(), values_.end()); }

    // spans exactly [t0 - tau, t0] for the given model?
    bool spans(double t0, double tau) const {
        return std::abs(t_begin() - (t0 - tau)) <= 1e-12 && std::abs(t_end() - t0) <= 1e-12;
    }

    const std::vector<double>& times() const { return times_; }
    const std::vector<double>& values() const { return values_; }

private:
    std::vector<double> times_;
    std::vector<double> values_;
};

// Uniform grid with t_end = t_start + n_steps * dt and tau an exact multiple
// of dt, so every delayed lookup lands on a stored node.
struct TimeGrid {
    double t_start = 0.0;
    double t_end = 0.0;
    double dt = 0.0;
    std::size_t n_steps = 0;
    std::size_t delay_steps = 0;

    TimeGrid() = default;

    TimeGrid(double start, double end, double step, double tau) {
        if (!(step > 0.0)) throw std::invalid_argument("dt must be positive");
        if (!(end >= start)) throw std::invalid_argument("grid end precedes start");
        double m = std::round(tau / step);
        if (!(m >= 1.0) || m * step != tau)
            throw std::invalid_argument("dt=" + std::to_string(step) +
                                        " does not divide the delay tau=" + std::to_string(tau) +
                                        " exactly");
        double n = std::round((end - start) / step);
        if (n * step != end - start)
            throw std::invalid_argument("dt does not divide the horizon exactly");
        t_start = start;
        t_end = end;
        dt = step;
        n_steps = static_cast<std::size_t>(n);
        delay_steps = static_cast<std::size_t>(m);
    }

    double time_at(std::size_t i) const { return t_start + static_cast<double>(i) * dt; }
};

}  // namespace delaycir
