#pragma once

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "coxmono/coxmono.hpp"

namespace coxmono::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitComputation = 1;
inline constexpr int kExitValidation = 2;

namespace detail {

inline Dataset read_input(const std::string& path, std::istream& in) {
    if (path == "-") return read_csv(in);
    return load_csv(path);
}

/// Writes to `path`, or to `out` when path is "-" or empty.
template <class Fn>
void with_output(const std::string& path, std::ostream& out, Fn&& fn) {
    if (path.empty() || path == "-") {
        fn(out);
        return;
    }
    std::ofstream f(path);
    if (!f) throw DataError("cannot write " + path);
    fn(f);
}

inline void print_config(std::ostream& err, const nlohmann::json& config) {
    err << "# config " << config.dump() << '\n';
}

inline nlohmann::json cox_json(const CoxFit& f) {
    return {{"beta_hat", f.beta_hat},
            {"loglik", f.loglik},
            {"gradient_norm", f.gradient_norm},
            {"iterations", f.iterations},
            {"converged", f.converged}};
}

inline nlohmann::json theta_json(const WeibullTheta& t) { return {{"mu", t.mu}, {"nu", t.nu}, {"beta", t.beta}}; }

}  // namespace detail

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name.
inline int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
    CLI::App app{"Monotone baseline hazard estimation and Weibull goodness-of-fit tests in the Cox model", "coxmono"};
    app.require_subcommand(1);
    unsigned threads = 0;
    app.add_option("--threads", threads, "worker threads (default: $COXMONO_THREADS or all cores)");

    // fit
    auto* fit_cmd = app.add_subcommand("fit", "partial-likelihood beta and Weibull-Cox MLE");
    std::string fit_input;
    fit_cmd->add_option("input", fit_input, "dataset CSV or - for stdin")->required();

    // grenander
    auto* gren_cmd = app.add_subcommand("grenander", "Grenander-type hazard estimator as CSV");
    std::string gren_input, gren_out;
    double gren_eps = 0.0, gren_M = 0.0;
    gren_cmd->add_option("input", gren_input, "dataset CSV or - for stdin")->required();
    gren_cmd->add_option("--eps", gren_eps, "window start")->required();
    gren_cmd->add_option("--M", gren_M, "window end")->required();
    gren_cmd->add_option("--out", gren_out, "output file (default stdout)");

    // test
    auto* test_cmd = app.add_subcommand("test", "bootstrap goodness-of-fit test of a Weibull baseline");
    std::string test_input, test_stat = "T", boot_csv;
    TestConfig tcfg;
    std::uint64_t test_seed = 1;
    test_cmd->add_option("input", test_input, "dataset CSV or - for stdin")->required();
    test_cmd->add_option("--stat", test_stat, "T, LR or S")->check(CLI::IsMember({"T", "LR", "S"}));
    test_cmd->add_option("--alpha", tcfg.alpha, "level");
    test_cmd->add_option("--B", tcfg.B, "bootstrap replicates");
    test_cmd->add_option("--split", tcfg.split_ratio, "fraction used for the parametric fit (1 = no split)");
    test_cmd->add_option("--p", tcfg.p, "L_p order");
    test_cmd->add_option("--eps", tcfg.window.lo, "window start")->required();
    test_cmd->add_option("--M", tcfg.window.hi, "window end")->required();
    test_cmd->add_option("--seed", test_seed, "master seed");
    test_cmd->add_flag("!--lr-window", tcfg.lr_full_range, "LR uses the test window instead of [0, max T]");
    test_cmd->add_option("--boot-csv", boot_csv, "also dump bootstrap values to this CSV");

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "draw a dataset from a scenario");
    std::string sim_scenario, sim_config, sim_out;
    std::vector<double> sim_beta;
    std::optional<double> sim_tau, sim_eps, sim_M;
    std::optional<std::size_t> sim_n;
    std::uint64_t sim_seed = 1;
    sim_cmd->add_option("--scenario", sim_scenario, "weibull:MU,NU | altA:C | altB:C");
    sim_cmd->add_option("--config", sim_config, "scenario JSON file");
    sim_cmd->add_option("--beta", sim_beta, "regression coefficients");
    sim_cmd->add_option("--tau", sim_tau, "censoring upper bound");
    sim_cmd->add_option("--eps", sim_eps, "window start (recorded in the config)");
    sim_cmd->add_option("--M", sim_M, "window end (recorded in the config)");
    sim_cmd->add_option("--n", sim_n, "sample size");
    sim_cmd->add_option("--seed", sim_seed, "seed");
    sim_cmd->add_option("--out", sim_out, "output file (default stdout)");

    // tables
    auto* tab_cmd = app.add_subcommand("tables", "level/power tables as CSV files");
    std::string tab_scale = "desk", tab_out = "tables";
    std::uint64_t tab_seed = 20240101;
    std::vector<std::size_t> tab_n;
    std::optional<std::size_t> tab_reps, tab_B;
    tab_cmd->add_option("--scale", tab_scale, "desk or full")->check(CLI::IsMember({"desk", "full"}));
    tab_cmd->add_option("--out", tab_out, "output directory");
    tab_cmd->add_option("--seed", tab_seed, "master seed");
    tab_cmd->add_option("--n", tab_n, "override sample sizes");
    tab_cmd->add_option("--reps", tab_reps, "override outer replications");
    tab_cmd->add_option("--B", tab_B, "override bootstrap replicates");

    // limits
    auto* lim_cmd = app.add_subcommand("limits", "Monte Carlo limit constants E|X(0)|^p and k_p");
    std::vector<double> lim_p{1.0};
    ArgmaxMCConfig mc;
    std::uint64_t lim_seed = 1;
    std::string lim_out;
    lim_cmd->add_option("--p", lim_p, "orders p in [1, 2.5)");
    lim_cmd->add_option("--reps", mc.reps, "Monte Carlo replicates");
    lim_cmd->add_option("--L", mc.half_width, "grid half width");
    lim_cmd->add_option("--step", mc.step, "grid step");
    lim_cmd->add_option("--a-max", mc.a_max, "truncation of the covariance integral");
    lim_cmd->add_option("--a-step", mc.a_step, "spacing of the covariance grid");
    lim_cmd->add_option("--seed", lim_seed, "seed");
    lim_cmd->add_option("--out", lim_out, "output file (default stdout)");

    std::vector<std::string> argv_store{"coxmono"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : argv_store) argv.push_back(s.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n' << app.help();
        return kExitValidation;
    }
    const unsigned workers = resolve_threads(threads);

    try {
        if (*fit_cmd) {
            const Dataset data = detail::read_input(fit_input, in);
            detail::print_config(err, {{"command", "fit"}, {"input", fit_input}, {"n", data.size()},
                                       {"dim", data.dim()}, {"events", data.events()}});
            const CoxFit cox = fit(data);
            const WeibullTheta theta = fit_weibull(data);
            const nlohmann::json report{{"n", data.size()},
                                        {"events", data.events()},
                                        {"cox", detail::cox_json(cox)},
                                        {"weibull", detail::theta_json(theta)}};
            out << report.dump(2) << '\n';
        } else if (*gren_cmd) {
            const Dataset data = detail::read_input(gren_input, in);
            const Window w{gren_eps, gren_M};
            detail::print_config(err, {{"command", "grenander"}, {"input", gren_input}, {"eps", w.lo}, {"M", w.hi}});
            if (!(w.lo >= 0.0 && w.lo < w.hi)) throw DataError("need 0 <= eps < M");
            const CoxFit cox = fit(data);
            const MonotoneHazard h = grenander(breslow(data, cox.beta_hat), w);
            detail::with_output(gren_out, out, [&](std::ostream& o) { write_csv(o, h); });
        } else if (*test_cmd) {
            const Dataset data = detail::read_input(test_input, in);
            tcfg.validate();
            const Statistic stat = parse_statistic(test_stat);
            const nlohmann::json config{{"command", "test"},     {"input", test_input},
                                        {"stat", test_stat},     {"alpha", tcfg.alpha},
                                        {"B", tcfg.B},           {"split", tcfg.split_ratio},
                                        {"p", tcfg.p},           {"eps", tcfg.window.lo},
                                        {"M", tcfg.window.hi},   {"seed", test_seed},
                                        {"lr_full_range", tcfg.lr_full_range},
                                        {"replicate_seed_0", derive_seed(test_seed, kBootstrapStream, 0)}};
            detail::print_config(err, config);
            BootstrapOptions opt;
            opt.threads = workers;
            const TestReport rep = bootstrap_critical_value(data, tcfg, stat, test_seed, opt);
            nlohmann::json j = rep;
            j["config"] = config;
            out << j.dump(2) << '\n';
            if (!boot_csv.empty()) detail::with_output(boot_csv, out, [&](std::ostream& o) { write_boot_csv(o, rep); });
        } else if (*sim_cmd) {
            Scenario s;
            if (!sim_config.empty()) {
                std::ifstream f(sim_config);
                if (!f) throw DataError("cannot open " + sim_config);
                nlohmann::json j;
                try {
                    f >> j;
                } catch (const nlohmann::json::exception& e) {
                    throw DataError(std::string("scenario config: ") + e.what());
                }
                s = j.get<Scenario>();
            } else if (sim_scenario.empty()) {
                throw DataError("simulate needs --scenario or --config");
            }
            if (!sim_scenario.empty()) s.baseline = parse_baseline(sim_scenario);
            if (!sim_beta.empty()) s.beta = sim_beta;
            if (sim_tau) s.censor_tau = *sim_tau;
            if (sim_eps) s.window.lo = *sim_eps;
            if (sim_M) s.window.hi = *sim_M;
            if (sim_n) s.n = *sim_n;
            s.validate();
            nlohmann::json config = s;
            config["command"] = "simulate";
            config["seed"] = sim_seed;
            detail::print_config(err, config);
            for (const auto& w : s.warnings()) err << "# warning: " << w << '\n';
            const Dataset data = sample(s, sim_seed);
            detail::with_output(sim_out, out, [&](std::ostream& o) { write_csv(o, data); });
        } else if (*tab_cmd) {
            TableScale scale = parse_scale(tab_scale);
            if (!tab_n.empty()) scale.n_list = tab_n;
            if (tab_reps) scale.outer_reps = *tab_reps;
            if (tab_B) scale.B = *tab_B;
            detail::print_config(err, {{"command", "tables"}, {"scale", tab_scale}, {"n", scale.n_list},
                                       {"N", scale.outer_reps}, {"B", scale.B}, {"seed", tab_seed},
                                       {"out", tab_out}});
            const std::size_t rows = paper_tables(scale, tab_out, tab_seed, workers);
            out << "wrote " << rows << " rows to " << tab_out << '\n';
        } else if (*lim_cmd) {
            mc.threads = workers;
            mc.validate();
            detail::print_config(err, {{"command", "limits"}, {"p", lim_p}, {"reps", mc.reps},
                                       {"L", mc.half_width}, {"h", mc.step}, {"a_max", mc.a_max},
                                       {"a_step", mc.a_step}, {"seed", lim_seed}});
            std::vector<LimitConstants> rows;
            for (double p : lim_p) {
                rows.push_back(estimate_constants(p, mc, lim_seed));
                for (const auto& w : rows.back().warnings) err << "# warning (p=" << p << "): " << w << '\n';
            }
            detail::with_output(lim_out, out, [&](std::ostream& o) { write_constants_csv(o, rows); });
        }
    } catch (const DataError& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitComputation;
    }
    return kExitOk;
}

}  // namespace coxmono::cli
