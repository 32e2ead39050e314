#pragma once

// Run configuration: a typed view over the TOML table with strict key
// checking, so a typo fails loudly instead of silently using a default.

#include <cmath>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "delaycir/measure.hpp"
#include "delaycir/model.hpp"
#include "delaycir/simulate.hpp"
#include "delaycir/toml.hpp"

namespace delaycir {

struct RunConfig {
    ModelParams model;
    InitialSegment segment = InitialSegment::constant(0.0, 1.0, 1.0);
    RiskPremium premium;
    bool has_premium = false;

    double dt = 1e-3;
    std::size_t n_paths = 10000;
    std::uint64_t seed = 42;
    unsigned workers = 1;
    Scheme scheme = Scheme::FullTruncation;

    std::vector<double> maturities;
    std::vector<double> w_list{0.0};
    std::string out;  // empty writes to stdout
    std::string format = "csv";
};

namespace config_detail {

[[noreturn]] inline void fail(const std::string& what) { throw std::runtime_error(what); }

inline void check_keys(const TomlTable& t, const std::string& section,
                       const std::set<std::string>& allowed) {
    auto it = t.sections().find(section);
    if (it == t.sections().end()) return;
    for (const auto& [key, value] : it->second)
        if (!allowed.count(key))
            fail("line " + std::to_string(value.line) + ": unknown key '" + key + "' in [" +
                 section + "]");
}

inline const TomlValue& require(const TomlTable& t, const std::string& section,
                                const std::string& key) {
    const TomlValue* v = t.find(section, key);
    if (!v) fail("[" + section + "] is missing required key '" + key + "'");
    return *v;
}

inline double as_number(const TomlValue& v, const std::string& name) {
    if (v.kind != TomlValue::Kind::Number)
        fail("line " + std::to_string(v.line) + ": " + name + " must be a number");
    if (!std::isfinite(v.number))
        fail("line " + std::to_string(v.line) + ": " + name + " must be finite");
    return v.number;
}

inline double number_or(const TomlTable& t, const std::string& section, const std::string& key,
                        double fallback) {
    const TomlValue* v = t.find(section, key);
    return v ? as_number(*v, key) : fallback;
}

inline std::string as_string(const TomlValue& v, const std::string& name) {
    if (v.kind != TomlValue::Kind::String)
        fail("line " + std::to_string(v.line) + ": " + name + " must be a string");
    return v.str;
}

inline std::vector<double> as_numbers(const TomlValue& v, const std::string& name) {
    if (v.kind != TomlValue::Kind::NumberArray)
        fail("line " + std::to_string(v.line) + ": " + name + " must be an array of numbers");
    return v.numbers;
}

inline std::uint64_t as_count(const TomlValue& v, const std::string& name,
                              std::uint64_t minimum) {
    double x = as_number(v, name);
    if (x != std::floor(x) || x < 0.0)
        fail("line " + std::to_string(v.line) + ": " + name + " must be a nonnegative integer");
    auto n = static_cast<std::uint64_t>(x);
    if (n < minimum) fail(name + " must be at least " + std::to_string(minimum));
    return n;
}

inline StepFunction parse_gamma(const TomlTable& t) {
    const TomlValue* flat = t.find("model", "gamma");
    const TomlValue* breaks = t.find("model", "gamma_breaks");
    const TomlValue* values = t.find("model", "gamma_values");
    const TomlValue* end = t.find("model", "gamma_end");
    if (flat && (breaks || values || end))
        fail("[model] gamma conflicts with gamma_breaks/gamma_values/gamma_end");
    if (flat) return StepFunction::constant(as_number(*flat, "gamma"));
    if (!breaks || !values)
        fail("[model] needs either gamma or the pair gamma_breaks, gamma_values");
    double e = end ? as_number(*end, "gamma_end") : std::numeric_limits<double>::infinity();
    return StepFunction(as_numbers(*breaks, "gamma_breaks"), as_numbers(*values, "gamma_values"),
                        e);
}

inline InitialSegment parse_segment(const TomlTable& t, double t0, double tau) {
    const TomlValue* flat = t.find("segment", "constant");
    const TomlValue* times = t.find("segment", "times");
    const TomlValue* values = t.find("segment", "values");
    if (flat && (times || values)) fail("[segment] constant conflicts with times/values");
    if (flat) return InitialSegment::constant(t0, tau, as_number(*flat, "constant"));
    if (!times || !values) fail("[segment] needs either constant or the pair times, values");
    InitialSegment seg(as_numbers(*times, "times"), as_numbers(*values, "values"));
    if (!seg.spans(t0, tau)) fail("[segment] times must span exactly [t0 - tau, t0]");
    return seg;
}

}  // namespace config_detail

inline RunConfig build_config(const TomlTable& table) {
    using namespace config_detail;
    for (const auto& [name, sec] : table.sections())
        if (name != "model" && name != "segment" && name != "premium" && name != "numerics" &&
            name != "run")
            fail("unknown section [" + name + "]");
    check_keys(table, "model",
               {"a", "b", "sigma", "tau", "t0", "measure", "gamma", "gamma_breaks",
                "gamma_values", "gamma_end"});
    check_keys(table, "segment", {"constant", "times", "values"});
    check_keys(table, "premium", {"psi0", "psi1", "psi2"});
    check_keys(table, "numerics", {"dt", "n_paths", "seed", "workers", "scheme"});
    check_keys(table, "run", {"maturities", "w", "out", "format"});
    if (!table.has_section("model")) fail("config needs a [model] section");
    if (!table.has_section("segment")) fail("config needs a [segment] section");

    RunConfig cfg;
    cfg.model.a = as_number(require(table, "model", "a"), "a");
    cfg.model.b = as_number(require(table, "model", "b"), "b");
    cfg.model.sigma = as_number(require(table, "model", "sigma"), "sigma");
    cfg.model.tau = as_number(require(table, "model", "tau"), "tau");
    cfg.model.t0 = number_or(table, "model", "t0", 0.0);
    cfg.model.gamma = parse_gamma(table);
    if (const TomlValue* mv = table.find("model", "measure")) {
        std::string m = as_string(*mv, "measure");
        if (m == "physical") cfg.model.measure = Measure::Physical;
        else if (m == "risk-neutral") cfg.model.measure = Measure::RiskNeutral;
        else fail("measure must be \"physical\" or \"risk-neutral\", got \"" + m + "\"");
    } else {
        cfg.model.measure = Measure::RiskNeutral;
    }

    if (!(cfg.model.a > 0.0)) fail("a must be positive");
    if (!(cfg.model.b >= 0.0)) fail("b must be nonnegative");
    if (!(cfg.model.sigma > 0.0)) fail("sigma must be positive");
    if (!(cfg.model.tau > 0.0)) fail("tau must be positive");
    if (!cfg.model.gamma.all_positive()) fail("gamma must be positive");

    cfg.segment = parse_segment(table, cfg.model.t0, cfg.model.tau);

    if (table.has_section("premium")) {
        if (cfg.model.measure == Measure::RiskNeutral)
            fail("[premium] requires measure = \"physical\"");
        cfg.has_premium = true;
        cfg.premium.psi0 = number_or(table, "premium", "psi0", 0.0);
        cfg.premium.psi1 = number_or(table, "premium", "psi1", 0.0);
        cfg.premium.psi2 = number_or(table, "premium", "psi2", 0.0);
    }

    if (const TomlValue* v = table.find("numerics", "dt")) {
        cfg.dt = as_number(*v, "dt");
        if (!(cfg.dt > 0.0)) fail("dt must be positive");
    }
    double steps = std::round(cfg.model.tau / cfg.dt);
    if (!(steps >= 1.0) || steps * cfg.dt != cfg.model.tau)
        fail("dt must divide tau exactly (tau = " + std::to_string(cfg.model.tau) + ", dt = " +
             std::to_string(cfg.dt) + ")");
    if (const TomlValue* v = table.find("numerics", "n_paths"))
        cfg.n_paths = static_cast<std::size_t>(as_count(*v, "n_paths", 1));
    if (const TomlValue* v = table.find("numerics", "seed")) cfg.seed = as_count(*v, "seed", 0);
    if (const TomlValue* v = table.find("numerics", "workers"))
        cfg.workers = static_cast<unsigned>(as_count(*v, "workers", 1));
    if (const TomlValue* v = table.find("numerics", "scheme")) {
        std::string s = as_string(*v, "scheme");
        if (s == "full-truncation") cfg.scheme = Scheme::FullTruncation;
        else if (s == "reflection") cfg.scheme = Scheme::Reflection;
        else fail("scheme must be \"full-truncation\" or \"reflection\", got \"" + s + "\"");
    }

    if (const TomlValue* v = table.find("run", "maturities")) {
        cfg.maturities = as_numbers(*v, "maturities");
        for (double T : cfg.maturities)
            if (T < cfg.model.t0) fail("maturities must not precede t0");
    }
    if (const TomlValue* v = table.find("run", "w")) {
        if (v->kind == TomlValue::Kind::NumberArray) cfg.w_list = v->numbers;
        else cfg.w_list = {as_number(*v, "w")};
        if (cfg.w_list.empty()) fail("w must not be empty");
        for (double w : cfg.w_list)
            if (!(w >= 0.0)) fail("w must be nonnegative");
    }
    if (const TomlValue* v = table.find("run", "out")) cfg.out = as_string(*v, "out");
    if (const TomlValue* v = table.find("run", "format")) {
        cfg.format = as_string(*v, "format");
        if (cfg.format != "csv" && cfg.format != "json")
            fail("format must be \"csv\" or \"json\", got \"" + cfg.format + "\"");
    }
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    return build_config(load_toml_file(path));
}

// Risk-neutral coefficient set for pricing, whichever measure the config is
// written in.  A physical config maps through its premium (zero if absent).
inline ModelParams pricing_params(const RunConfig& cfg, double horizon) {
    if (cfg.model.measure == Measure::RiskNeutral) return cfg.model;
    return to_risk_neutral(cfg.model, cfg.premium, horizon);
}

}  // namespace delaycir
