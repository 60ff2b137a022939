#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "coxmono/errors.hpp"
#include "coxmono/gof_tests.hpp"
#include "coxmono/nonparam.hpp"
#include "coxmono/parallel.hpp"
#include "coxmono/random.hpp"
#include "coxmono/survival_data.hpp"
#include "coxmono/weibull_cox.hpp"

namespace coxmono {

struct TestReport {
    Statistic stat = Statistic::T;
    double statistic = 0.0;
    std::vector<double> boot_values;  // in replicate order
    double critical_value = 0.0;
    bool reject = false;
    double alpha = 0.05;
    std::uint64_t seed = 0;
    std::vector<std::string> warnings;
};

/// Statistics for which small values are evidence against the null.
inline bool rejects_low(Statistic s) { return s == Statistic::LR; }

/// k-th order statistic with k = ceil((1-alpha) B) (upper tail) or
/// k = ceil(alpha B) (lower tail).
inline double critical_value(std::vector<double> values, double alpha, bool lower_tail) {
    if (values.empty()) throw DataError("no bootstrap values");
    std::sort(values.begin(), values.end());
    const double level = lower_tail ? alpha : 1.0 - alpha;
    auto k = static_cast<std::size_t>(std::ceil(level * static_cast<double>(values.size()) - 1e-9));
    k = std::clamp<std::size_t>(k, 1, values.size());
    return values[k - 1];
}

inline bool decide(Statistic s, double statistic, double critical) {
    return rejects_low(s) ? statistic < critical : statistic > critical;
}

/// Bootstrap sample: covariates kept, X* drawn from the fitted Weibull-Cox
/// model given Z_i, C* drawn from the censoring Kaplan-Meier curve
/// independently of Z_i. Mass the curve leaves at the end is placed at
/// +inf (never censored). Observation i uses substream derive_seed(seed, i).
inline Dataset resample(const Dataset& data, const WeibullTheta& theta, const SurvivalCurve& censoring,
                        std::uint64_t seed) {
    theta.validate();
    const std::size_t n = data.size();
    std::vector<double> times(n);
    std::vector<int> status(n);
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(derive_seed(seed, i));
        const double e = rng.exponential();
        const double x = std::pow(e * std::exp(-data.linear_predictor(i, theta.beta)), 1.0 / theta.nu) / theta.mu;
        const double u = rng.uniform();
        // first jump where G = 1 - surv reaches u
        const auto it = std::partition_point(censoring.surv.begin(), censoring.surv.end(),
                                             [u](double s) { return 1.0 - s < u; });
        const double c = it == censoring.surv.end()
                             ? std::numeric_limits<double>::infinity()
                             : censoring.jump_times[static_cast<std::size_t>(it - censoring.surv.begin())];
        times[i] = std::min(x, c);
        status[i] = x <= c ? 1 : 0;
    }
    return Dataset(std::move(times), std::move(status), data.covariate_matrix(), data.dim());
}

/// Stream tag separating bootstrap replicate seeds from other derived seeds.
inline constexpr std::uint64_t kBootstrapStream = 0xB007;

struct BootstrapOptions {
    unsigned threads = 1;
    /// Fraction of replicates allowed to fail before the test errors out.
    double max_failure_rate = 0.05;
};

/// Runs the bootstrap for several statistics on shared replicates: fit on
/// the observed data, generate B resamples, rerun the full statistic
/// pipeline (split, refits, Grenander) on each, and compare.
inline std::vector<TestReport> bootstrap_tests(const Dataset& data, const TestConfig& cfg,
                                               const std::vector<Statistic>& stats, std::uint64_t seed,
                                               const BootstrapOptions& opt = {}) {
    cfg.validate();
    if (cfg.B < 20) throw DataError("bootstrap needs B >= 20");
    if (stats.empty()) throw DataError("no statistics requested");

    std::size_t floored_observed = 0;
    const FittedPair observed = fit_pair(data, cfg, seed);
    std::vector<double> observed_values;
    for (Statistic s : stats) {
        switch (s) {
            case Statistic::T: observed_values.push_back(statistic_T(observed, cfg)); break;
            case Statistic::LR: {
                const auto lr = statistic_LR(observed, cfg);
                floored_observed += lr.floored;
                observed_values.push_back(lr.value);
                break;
            }
            case Statistic::S: observed_values.push_back(statistic_S(observed, cfg)); break;
        }
    }
    const SurvivalCurve censoring = kaplan_meier(data, CurveRole::censoring);

    struct Replicate {
        std::vector<double> values;
        std::size_t floored = 0;
        bool ok = false;
        std::string error;
    };
    std::vector<Replicate> reps(cfg.B);
    parallel_for(cfg.B, opt.threads, [&](std::size_t j) {
        const std::uint64_t rep_seed = derive_seed(seed, kBootstrapStream, j);
        Replicate& r = reps[j];
        try {
            const Dataset boot = resample(data, observed.theta, censoring, derive_seed(rep_seed, 1));
            r.values = compute_statistics(boot, cfg, derive_seed(rep_seed, 2), stats, &r.floored);
            r.ok = true;
        } catch (const std::exception& e) {
            r.error = e.what();
        }
    });

    std::vector<std::uint64_t> failed;
    std::size_t floored_boot = 0;
    for (std::size_t j = 0; j < reps.size(); ++j) {
        if (!reps[j].ok) failed.push_back(derive_seed(seed, kBootstrapStream, j));
        floored_boot += reps[j].floored;
    }
    if (static_cast<double>(failed.size()) > opt.max_failure_rate * static_cast<double>(cfg.B)) {
        std::string msg = std::to_string(failed.size()) + " of " + std::to_string(cfg.B) +
                          " bootstrap replicates failed; replicate seeds:";
        for (auto s : failed) msg += " " + std::to_string(s);
        for (const auto& r : reps)
            if (!r.ok) {
                msg += " (first error: " + r.error + ")";
                break;
            }
        throw FitError(msg);
    }

    std::vector<TestReport> out;
    for (std::size_t k = 0; k < stats.size(); ++k) {
        TestReport rep;
        rep.stat = stats[k];
        rep.statistic = observed_values[k];
        rep.alpha = cfg.alpha;
        rep.seed = seed;
        for (const auto& r : reps)
            if (r.ok) rep.boot_values.push_back(r.values[k]);
        rep.critical_value = critical_value(rep.boot_values, cfg.alpha, rejects_low(stats[k]));
        rep.reject = decide(stats[k], rep.statistic, rep.critical_value);
        if (!failed.empty())
            rep.warnings.push_back(std::to_string(failed.size()) + " bootstrap replicates failed and were dropped");
        if (stats[k] == Statistic::LR && floored_observed + floored_boot > 0)
            rep.warnings.push_back("Grenander slope floored at 1e-12 inside log for " +
                                   std::to_string(floored_observed + floored_boot) + " events");
        out.push_back(std::move(rep));
    }
    return out;
}

inline TestReport bootstrap_critical_value(const Dataset& data, const TestConfig& cfg, Statistic stat,
                                           std::uint64_t seed, const BootstrapOptions& opt = {}) {
    return bootstrap_tests(data, cfg, {stat}, seed, opt).front();
}

inline void to_json(nlohmann::json& j, const TestReport& r) {
    j = nlohmann::json{{"statistic_name", to_string(r.stat)},
                       {"statistic", r.statistic},
                       {"critical_value", r.critical_value},
                       {"reject", r.reject},
                       {"alpha", r.alpha},
                       {"seed", r.seed},
                       {"B", r.boot_values.size()},
                       {"boot_values", r.boot_values},
                       {"warnings", r.warnings}};
}

inline void write_boot_csv(std::ostream& out, const TestReport& r) {
    out << "replicate,value\n";
    for (std::size_t j = 0; j < r.boot_values.size(); ++j)
        out << j << ',' << detail::format_double(r.boot_values[j]) << '\n';
}

}  // namespace coxmono
