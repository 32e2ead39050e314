#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "delaycir/delaycir.hpp"

namespace testkit {

// Physical-measure parameter set used throughout the suite:
// a = 1, gamma = 0.05, b = 0.2, sigma = 0.1, tau = 0.25, t0 = 0.
inline delaycir::ModelParams canonical_p() {
    delaycir::ModelParams p;
    p.a = 1.0;
    p.gamma = delaycir::StepFunction::constant(0.05);
    p.b = 0.2;
    p.sigma = 0.1;
    p.tau = 0.25;
    p.t0 = 0.0;
    p.measure = delaycir::Measure::Physical;
    return p;
}

// Risk-neutral image of canonical_p under the single-premium psi0 = 0.5:
// a = 1.5, gamma = 0.05/1.5, b = 0.2, everything else unchanged.
inline delaycir::ModelParams canonical_q() {
    delaycir::ModelParams q = canonical_p();
    q.a = 1.5;
    q.gamma = delaycir::StepFunction::constant(0.05 / 1.5);
    q.measure = delaycir::Measure::RiskNeutral;
    return q;
}

// canonical_q without the delay feedback; the model degenerates to plain CIR.
inline delaycir::ModelParams cir_q() {
    delaycir::ModelParams q = canonical_q();
    q.b = 0.0;
    return q;
}

inline delaycir::InitialSegment seg04(const delaycir::ModelParams& p) {
    return delaycir::InitialSegment::constant(p.t0, p.tau, 0.04);
}

inline bool mentions(const std::vector<std::string>& errors, const std::string& needle) {
    return std::any_of(errors.begin(), errors.end(), [&](const std::string& e) {
        return e.find(needle) != std::string::npos;
    });
}

}  // namespace testkit
