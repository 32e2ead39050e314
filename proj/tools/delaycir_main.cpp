// Command-line front end: loads a TOML run config, applies flag overrides,
// and dispatches to the pricing, simulation, and verification subcommands.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "delaycir/delaycir.hpp"

namespace {

using nlohmann::json;
using namespace delaycir;

// Configuration or usage problem found after flag parsing; exits with 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// 17 significant digits: enough for exact double round-trips in CSV.
std::string g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Flags {
    std::string config_path;
    std::vector<double> maturities;
    double w = 0.0;
    std::uint64_t paths = 0;
    double dt = 0.0;
    std::uint64_t seed = 0;
    std::string out;
    std::string format;
    bool has_w = false, has_paths = false, has_dt = false, has_seed = false;
    bool has_out = false, has_format = false;
};

RunConfig merged_config(const Flags& f) {
    RunConfig cfg;
    try {
        cfg = load_config(f.config_path);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    if (!f.maturities.empty()) cfg.maturities = f.maturities;
    if (f.has_w) {
        if (!(f.w >= 0.0)) throw ConfigError("w must be nonnegative");
        cfg.w_list = {f.w};
    }
    if (f.has_paths) {
        if (f.paths == 0) throw ConfigError("n_paths must be at least 1");
        cfg.n_paths = f.paths;
    }
    if (f.has_dt) {
        if (!(f.dt > 0.0)) throw ConfigError("dt must be positive");
        cfg.dt = f.dt;
        double steps = std::round(cfg.model.tau / cfg.dt);
        if (!(steps >= 1.0) || steps * cfg.dt != cfg.model.tau)
            throw ConfigError("dt must divide tau exactly (tau = " + g17(cfg.model.tau) +
                              ", dt = " + g17(cfg.dt) + ")");
    }
    if (f.has_seed) cfg.seed = f.seed;
    if (f.has_out) cfg.out = f.out;
    if (f.has_format) cfg.format = f.format;
    for (double T : cfg.maturities)
        if (T < cfg.model.t0) throw ConfigError("maturities must not precede t0");
    return cfg;
}

// Snap a maturity onto the dt lattice so grids divide exactly; reject inputs
// farther than a relative 1e-9 from any node.
double snap_maturity(double T, double t0, double dt) {
    double steps = std::round((T - t0) / dt);
    double snapped = t0 + steps * dt;
    if (std::abs(snapped - T) > 1e-9 * std::max(1.0, std::abs(T)))
        throw ConfigError("maturity " + g17(T) + " is not on the dt lattice (dt = " + g17(dt) +
                          ")");
    return snapped;
}

void require_single_maturity(const RunConfig& cfg, const char* cmd) {
    if (cfg.maturities.size() != 1)
        throw ConfigError(std::string(cmd) + " needs exactly one maturity");
}

void require_csv(const RunConfig& cfg, const char* cmd) {
    if (cfg.format != "csv")
        throw ConfigError(std::string(cmd) + " emits CSV only; format json is reserved for verify");
}

// Validated risk-neutral parameters for pricing through the given horizon.
ModelParams q_params(const RunConfig& cfg, double horizon) {
    ModelParams q;
    try {
        q = pricing_params(cfg, horizon);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    auto rep = validate(q, horizon);
    if (!rep.ok()) throw ConfigError("invalid parameters: " + rep.errors.front());
    if (!rep.feller_ok)
        throw ConfigError("parameters violate the Feller condition on [t0, horizon]");
    return q;
}

struct OutputTarget {
    std::ofstream file;
    std::ostream* stream = &std::cout;

    explicit OutputTarget(const std::string& path) {
        if (path.empty()) return;
        file.open(path);
        if (!file) throw ConfigError("cannot open output file '" + path + "'");
        stream = &file;
    }
    std::ostream& os() { return *stream; }
};

int cmd_price(const RunConfig& cfg) {
    require_csv(cfg, "price");
    if (cfg.maturities.empty()) throw ConfigError("price needs at least one maturity");
    std::vector<double> mats;
    for (double T : cfg.maturities) mats.push_back(snap_maturity(T, cfg.model.t0, cfg.dt));
    double horizon = *std::max_element(mats.begin(), mats.end());
    ModelParams q = q_params(cfg, horizon);

    OutputTarget target(cfg.out);
    auto& os = target.os();
    os << "T,B,R\n";
    RateState state = RateState::at_start(cfg.segment, q, cfg.dt);
    for (double T : mats) {
        if (T == q.t0) {
            os << g17(T) << "," << g17(1.0) << ",—\n";
            continue;
        }
        AlphaSolution alpha0 = solve_alpha(q, T, 0.0, cfg.dt);
        double B = bond_price(state, alpha0, q);
        os << g17(T) << "," << g17(B) << "," << g17(yield(B, q.t0, T)) << "\n";
    }
    return 0;
}

int cmd_curve(const RunConfig& cfg, bool forward_only) {
    const char* name = forward_only ? "forward" : "curve";
    require_csv(cfg, name);
    if (cfg.maturities.empty())
        throw ConfigError(std::string(name) + " needs at least one maturity");
    std::vector<double> mats;
    for (double T : cfg.maturities) mats.push_back(snap_maturity(T, cfg.model.t0, cfg.dt));
    double horizon = *std::max_element(mats.begin(), mats.end());
    ModelParams q = q_params(cfg, horizon);

    OutputTarget target(cfg.out);
    auto& os = target.os();
    os << (forward_only ? "T,f\n" : "T,B,R,f\n");
    RateState state = RateState::at_start(cfg.segment, q, cfg.dt);
    for (double T : mats) {
        if (T == q.t0) {
            if (forward_only)
                os << g17(T) << "," << g17(state.r_t) << "\n";
            else
                os << g17(T) << "," << g17(1.0) << ",—," << g17(state.r_t) << "\n";
            continue;
        }
        CurvePoint pt = curve_point(state, q, T, cfg.dt);
        if (forward_only)
            os << g17(pt.T) << "," << g17(pt.f) << "\n";
        else
            os << g17(pt.T) << "," << g17(pt.B) << "," << g17(pt.R) << "," << g17(pt.f) << "\n";
    }
    return 0;
}

int cmd_alpha(const RunConfig& cfg, bool with_beta) {
    const char* name = with_beta ? "beta" : "alpha";
    require_csv(cfg, name);
    require_single_maturity(cfg, name);
    double T = snap_maturity(cfg.maturities.front(), cfg.model.t0, cfg.dt);
    ModelParams q = q_params(cfg, T);
    double w = cfg.w_list.front();
    double wm = w_max(q);
    if (!(w >= 0.0) || !(w < wm))
        throw ConfigError("w = " + g17(w) + " outside [0, w_max), w_max = " + g17(wm));
    if (T == q.t0) throw ConfigError(std::string(name) + " needs a maturity after t0");

    AlphaSolution alpha = solve_alpha(q, T, w, cfg.dt);
    OutputTarget target(cfg.out);
    auto& os = target.os();
    if (with_beta) {
        BetaSolution beta = solve_beta(q, T, w, alpha);
        os << "t,alpha_r,alpha_0,beta_r,beta_0\n";
        for (std::size_t i = 0; i < alpha.n_nodes(); ++i) {
            double t = alpha.t0 + static_cast<double>(i) * alpha.dt;
            os << g17(t) << "," << g17(alpha.alpha_r[i]) << "," << g17(alpha.alpha_0[i]) << ","
               << g17(beta.beta_r[i]) << "," << g17(beta.beta_0[i]) << "\n";
        }
    } else {
        os << "t,alpha_r,alpha_0\n";
        for (std::size_t i = 0; i < alpha.n_nodes(); ++i) {
            double t = alpha.t0 + static_cast<double>(i) * alpha.dt;
            os << g17(t) << "," << g17(alpha.alpha_r[i]) << "," << g17(alpha.alpha_0[i]) << "\n";
        }
    }
    return 0;
}

int cmd_bounds(const RunConfig& cfg) {
    require_csv(cfg, "bounds");
    require_single_maturity(cfg, "bounds");
    double T = snap_maturity(cfg.maturities.front(), cfg.model.t0, cfg.dt);
    ModelParams q = q_params(cfg, T);
    double w = cfg.w_list.front();
    double wm = w_max(q);
    if (!(w >= 0.0) || !(w < wm))
        throw ConfigError("w = " + g17(w) + " outside [0, w_max), w_max = " + g17(wm));
    double gamma_sup = q.gamma.max_on(q.t0, std::min(T, q.gamma.end()));

    BoundSequence seq = bounds(q, T, w, gamma_sup);
    OutputTarget target(cfg.out);
    auto& os = target.os();
    os << "j,w_bar\n";
    for (std::size_t j = 0; j < seq.w_bar.size(); ++j)
        os << j << "," << g17(seq.w_bar[j]) << "\n";
    os << "limit," << g17(seq.limit_L) << "\n";
    return 0;
}

int cmd_simulate(const RunConfig& cfg) {
    require_csv(cfg, "simulate");
    require_single_maturity(cfg, "simulate");
    double T = snap_maturity(cfg.maturities.front(), cfg.model.t0, cfg.dt);
    if (T == cfg.model.t0) throw ConfigError("simulate needs a maturity after t0");
    auto rep = validate(cfg.model, T);
    if (!rep.ok()) throw ConfigError("invalid parameters: " + rep.errors.front());
    if (!rep.feller_ok)
        throw ConfigError("parameters violate the Feller condition on [t0, horizon]");

    OutputTarget target(cfg.out);
    auto& os = target.os();
    os << "path,t,r,integral_r\n";
    for (std::size_t p = 0; p < cfg.n_paths; ++p) {
        RatePath path = simulate_path(cfg.model, cfg.segment, T, cfg.dt, cfg.seed, p, cfg.scheme);
        for (std::size_t i = 0; i < path.values.size(); ++i)
            os << p << "," << g17(path.grid.time_at(i)) << "," << g17(path.values[i]) << ","
               << g17(path.running_integral[i]) << "\n";
    }
    return 0;
}

int cmd_mean(const RunConfig& cfg) {
    require_csv(cfg, "mean");
    require_single_maturity(cfg, "mean");
    double T = snap_maturity(cfg.maturities.front(), cfg.model.t0, cfg.dt);
    if (T == cfg.model.t0) throw ConfigError("mean needs a maturity after t0");
    auto rep = validate(cfg.model, T);
    if (!rep.ok()) throw ConfigError("invalid parameters: " + rep.errors.front());

    std::vector<double> m = mean_dde(cfg.model, cfg.segment, T, cfg.dt);
    OutputTarget target(cfg.out);
    auto& os = target.os();
    os << "t,m\n";
    for (std::size_t i = 0; i < m.size(); ++i)
        os << g17(cfg.model.t0 + static_cast<double>(i) * cfg.dt) << "," << g17(m[i]) << "\n";
    return 0;
}

json report_json(const VerificationReport& rep) {
    json j;
    j["name"] = rep.name;
    j["analytic"] = rep.analytic;
    j["mean"] = rep.mc.mean;
    j["stderr"] = rep.mc.stderr_val;
    j["z_score"] = rep.z_score;
    j["pass"] = rep.pass;
    j["n_paths"] = rep.mc.n_paths;
    j["dt"] = rep.mc.dt;
    j["seed"] = rep.mc.seed;
    j["elapsed"] = rep.mc.elapsed;
    return j;
}

int main_impl(const std::string& cmd, const RunConfig& cfg);

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Delay CIR bond pricing and Monte Carlo verification"};
    app.require_subcommand(1);

    Flags flags;
    auto* opt_config =
        app.add_option("--config", flags.config_path, "TOML run configuration")->required();
    auto* opt_mat = app.add_option("--maturity", flags.maturities, "maturity (repeatable)");
    auto* opt_w = app.add_option("--w", flags.w, "terminal weight");
    auto* opt_paths = app.add_option("--paths", flags.paths, "Monte Carlo path count");
    auto* opt_dt = app.add_option("--dt", flags.dt, "grid step");
    auto* opt_seed = app.add_option("--seed", flags.seed, "base seed");
    auto* opt_out = app.add_option("--out", flags.out, "output file (default stdout)");
    auto* opt_format = app.add_option("--format", flags.format, "output format")
                           ->check(CLI::IsMember({"csv", "json"}));
    (void)opt_config;

    const char* names[] = {"price",    "curve", "forward", "simulate", "mean",
                           "alpha",    "beta",  "bounds",  "verify"};
    const char* descs[] = {
        "bond prices and yields per maturity",
        "bond, yield, and forward curve per maturity",
        "instantaneous forward curve per maturity",
        "emit simulated rate paths",
        "deterministic mean curve",
        "solved alpha coefficient functions",
        "solved alpha and beta coefficient functions",
        "per-interval bounds on alpha_r",
        "Monte Carlo verification suite (JSON report)",
    };
    for (std::size_t i = 0; i < std::size(names); ++i)
        app.add_subcommand(names[i], descs[i])->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help() << std::flush;
        return 2;
    }

    flags.has_w = opt_w->count() > 0;
    flags.has_paths = opt_paths->count() > 0;
    flags.has_dt = opt_dt->count() > 0;
    flags.has_seed = opt_seed->count() > 0;
    flags.has_out = opt_out->count() > 0;
    flags.has_format = opt_format->count() > 0;
    (void)opt_mat;

    std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "verify" && flags.has_format && flags.format == "csv") {
        std::cerr << "error: verify reports are JSON only\n";
        return 2;
    }

    RunConfig cfg;
    try {
        cfg = merged_config(flags);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        return main_impl(cmd, cfg);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

namespace {

int run_verify(const RunConfig& cfg) {
    if (cfg.model.measure != Measure::Physical)
        throw ConfigError("verify needs measure = \"physical\" (with an optional [premium] block)");
    require_single_maturity(cfg, "verify");
    double T = snap_maturity(cfg.maturities.front(), cfg.model.t0, cfg.dt);
    if (T == cfg.model.t0) throw ConfigError("verify needs a maturity after t0");

    const ModelParams& p = cfg.model;
    ModelParams q;
    try {
        q = to_risk_neutral(p, cfg.premium, T);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    auto prep = validate(p, T);
    if (!prep.ok()) throw ConfigError("invalid parameters: " + prep.errors.front());
    if (!prep.feller_ok)
        throw ConfigError("parameters violate the Feller condition on [t0, horizon]");
    double wm = w_max(q);
    for (double w : cfg.w_list)
        if (!(w >= 0.0) || !(w < wm))
            throw ConfigError("w = " + g17(w) + " outside [0, w_max), w_max = " + g17(wm));

    RateState state = RateState::at_start(cfg.segment, q, cfg.dt);
    std::vector<VerificationReport> checks;

    for (std::size_t k = 0; k < cfg.w_list.size(); ++k) {
        double w = cfg.w_list[k];
        AlphaSolution alpha = solve_alpha(q, T, w, cfg.dt);
        BetaSolution beta = solve_beta(q, T, w, alpha);
        double y = y_q(state, alpha, q);
        double yt = y_tilde_q(state, beta, q);
        double v = v_q(q.t0, T, state.r_t, y, w, alpha);
        double vt = v_tilde_q(q.t0, T, state.r_t, y, yt, w, alpha, beta);

        McEstimate fk = estimate_fk(q, cfg.segment, T, w, cfg.n_paths, cfg.dt, cfg.seed,
                                    cfg.workers, cfg.scheme);
        VerificationReport r1 = verify(v, fk, "fk_bond_" + std::to_string(k));
        checks.push_back(r1);

        McEstimate num = estimate_fk_numerator(q, cfg.segment, T, w, cfg.n_paths, cfg.dt,
                                               cfg.seed, cfg.workers, cfg.scheme);
        VerificationReport r2 = verify(vt, num, "fk_numerator_" + std::to_string(k));
        checks.push_back(r2);
    }

    std::vector<double> m = mean_dde(p, cfg.segment, T, cfg.dt);
    McEstimate mr = estimate_mean_rate(p, cfg.segment, T, cfg.n_paths, cfg.dt, cfg.seed,
                                       cfg.workers, cfg.scheme);
    checks.push_back(verify(m.back(), mr, "mean_rate"));

    checks.push_back(verify_martingale(p, q, cfg.segment, T, cfg.n_paths, cfg.dt, cfg.seed,
                                       cfg.workers, cfg.scheme));

    AlphaSolution alpha0 = solve_alpha(q, T, 0.0, cfg.dt);
    double bond = bond_price(state, alpha0, q);
    McEstimate ib = estimate_importance_bond(p, q, cfg.segment, T, cfg.n_paths, cfg.dt, cfg.seed,
                                             cfg.workers, cfg.scheme);
    checks.push_back(verify(bond, ib, "importance_bond"));

    bool all_pass = true;
    json out;
    out["checks"] = json::array();
    for (std::size_t k = 0; k < checks.size(); ++k) {
        const auto& rep = checks[k];
        json j = report_json(rep);
        if (rep.name.rfind("fk_", 0) == 0) j["w"] = cfg.w_list[k / 2];
        if (rep.name == "martingale") j["truncated_nodes"] = rep.truncated_nodes;
        out["checks"].push_back(j);
        all_pass = all_pass && rep.pass;
    }
    out["all_pass"] = all_pass;
    out["T"] = T;

    OutputTarget target(cfg.out);
    target.os() << out.dump(2) << "\n";
    return all_pass ? 0 : 1;
}

int main_impl(const std::string& cmd, const RunConfig& cfg) {
    if (cmd == "price") return cmd_price(cfg);
    if (cmd == "curve") return cmd_curve(cfg, false);
    if (cmd == "forward") return cmd_curve(cfg, true);
    if (cmd == "alpha") return cmd_alpha(cfg, false);
    if (cmd == "beta") return cmd_alpha(cfg, true);
    if (cmd == "bounds") return cmd_bounds(cfg);
    if (cmd == "simulate") return cmd_simulate(cfg);
    if (cmd == "mean") return cmd_mean(cfg);
    if (cmd == "verify") return run_verify(cfg);
    throw ConfigError("unknown subcommand '" + cmd + "'");
}

}  // namespace
