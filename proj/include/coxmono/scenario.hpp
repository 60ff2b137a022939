#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "coxmono/errors.hpp"
#include "coxmono/random.hpp"
#include "coxmono/survival_data.hpp"

namespace coxmono {

/// Weibull baseline: hazard nu mu^nu t^(nu-1), cumulative (mu t)^nu.
struct WeibullBaseline {
    double mu = 1.0;
    double nu = 1.0;
};

/// Alternative (a): hazard 1/(t+c), cumulative log((t+c)/c).
struct AltABaseline {
    double c = 1.0;
};

/// Alternative (b): hazard c + 1/(2 sqrt t), cumulative c t + sqrt t.
struct AltBBaseline {
    double c = 1.0;
};

/// A baseline hazard with closed-form hazard, cumulative hazard, derivative,
/// inverse cumulative hazard and level crossing. Used both for simulation and
/// as the "true" hazard in error computations.
class Baseline {
public:
    using Kind = std::variant<WeibullBaseline, AltABaseline, AltBBaseline>;

    Baseline() = default;
    Baseline(WeibullBaseline w) : kind_(w) {}
    Baseline(AltABaseline a) : kind_(a) {}
    Baseline(AltBBaseline b) : kind_(b) {}

    const Kind& kind() const noexcept { return kind_; }

    void validate() const {
        std::visit(
            [](const auto& b) {
                using T = std::decay_t<decltype(b)>;
                if constexpr (std::is_same_v<T, WeibullBaseline>) {
                    if (!(b.mu > 0.0) || !(b.nu > 0.0))
                        throw DataError("Weibull baseline requires mu > 0 and nu > 0");
                } else {
                    if (!(b.c > 0.0)) throw DataError("alternative baseline requires c > 0");
                }
            },
            kind_);
    }

    double hazard(double t) const {
        return std::visit(
            [t](const auto& b) -> double {
                using T = std::decay_t<decltype(b)>;
                if constexpr (std::is_same_v<T, WeibullBaseline>)
                    return b.nu * std::pow(b.mu, b.nu) * std::pow(t, b.nu - 1.0);
                else if constexpr (std::is_same_v<T, AltABaseline>)
                    return 1.0 / (t + b.c);
                else
                    return b.c + 0.5 / std::sqrt(t);
            },
            kind_);
    }

    double cum_hazard(double t) const {
        return std::visit(
            [t](const auto& b) -> double {
                using T = std::decay_t<decltype(b)>;
                if constexpr (std::is_same_v<T, WeibullBaseline>)
                    return std::pow(b.mu * t, b.nu);
                else if constexpr (std::is_same_v<T, AltABaseline>)
                    return std::log1p(t / b.c);
                else
                    return b.c * t + std::sqrt(t);
            },
            kind_);
    }

    double hazard_derivative(double t) const {
        return std::visit(
            [t](const auto& b) -> double {
                using T = std::decay_t<decltype(b)>;
                if constexpr (std::is_same_v<T, WeibullBaseline>)
                    return b.nu * (b.nu - 1.0) * std::pow(b.mu, b.nu) * std::pow(t, b.nu - 2.0);
                else if constexpr (std::is_same_v<T, AltABaseline>)
                    return -1.0 / ((t + b.c) * (t + b.c));
                else
                    return -0.25 / (t * std::sqrt(t));
            },
            kind_);
    }

    /// Solves cum_hazard(x) = e for x >= 0.
    double inverse_cum_hazard(double e) const {
        return std::visit(
            [e](const auto& b) -> double {
                using T = std::decay_t<decltype(b)>;
                if constexpr (std::is_same_v<T, WeibullBaseline>) {
                    return std::pow(e, 1.0 / b.nu) / b.mu;
                } else if constexpr (std::is_same_v<T, AltABaseline>) {
                    return b.c * std::expm1(e);
                } else {
                    // s = sqrt(x) solves c s^2 + s - e = 0; rationalized root.
                    const double s = 2.0 * e / (1.0 + std::sqrt(1.0 + 4.0 * b.c * e));
                    return s * s;
                }
            },
            kind_);
    }

    /// Point where hazard(t) == level. NaN when the hazard is constant,
    /// +inf when the level is never reached on (0, inf).
    double level_crossing(double level) const {
        return std::visit(
            [level](const auto& b) -> double {
                using T = std::decay_t<decltype(b)>;
                constexpr double inf = std::numeric_limits<double>::infinity();
                if constexpr (std::is_same_v<T, WeibullBaseline>) {
                    if (b.nu == 1.0) return std::numeric_limits<double>::quiet_NaN();
                    if (level <= 0.0) return b.nu < 1.0 ? inf : 0.0;
                    return std::pow(level / (b.nu * std::pow(b.mu, b.nu)), 1.0 / (b.nu - 1.0));
                } else if constexpr (std::is_same_v<T, AltABaseline>) {
                    if (level <= 0.0) return inf;
                    return 1.0 / level - b.c;
                } else {
                    if (level <= b.c) return inf;
                    return 0.25 / ((level - b.c) * (level - b.c));
                }
            },
            kind_);
    }

    std::string describe() const {
        return std::visit(
            [](const auto& b) -> std::string {
                using T = std::decay_t<decltype(b)>;
                if constexpr (std::is_same_v<T, WeibullBaseline>)
                    return "weibull:" + detail::format_double(b.mu) + "," + detail::format_double(b.nu);
                else if constexpr (std::is_same_v<T, AltABaseline>)
                    return "altA:" + detail::format_double(b.c);
                else
                    return "altB:" + detail::format_double(b.c);
            },
            kind_);
    }

private:
    Kind kind_ = WeibullBaseline{};
};

/// Parses "weibull:MU,NU", "altA:C" or "altB:C".
inline Baseline parse_baseline(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw DataError("baseline must look like weibull:MU,NU | altA:C | altB:C");
    const std::string name = text.substr(0, colon);
    std::vector<double> args;
    for (auto f : detail::split_fields(std::string_view(text).substr(colon + 1))) {
        double v = 0.0;
        if (!detail::parse_double(f, v)) throw DataError("bad number '" + std::string(f) + "' in baseline " + text);
        args.push_back(v);
    }
    Baseline b;
    if (name == "weibull" && args.size() == 2)
        b = WeibullBaseline{args[0], args[1]};
    else if ((name == "altA" || name == "a") && args.size() == 1)
        b = AltABaseline{args[0]};
    else if ((name == "altB" || name == "b") && args.size() == 1)
        b = AltBBaseline{args[0]};
    else
        throw DataError("unknown baseline '" + text + "'");
    b.validate();
    return b;
}

/// Estimation window [eps, M].
struct Window {
    double lo = 0.0;
    double hi = 1.0;

    void validate() const {
        if (!(std::isfinite(lo) && std::isfinite(hi) && lo >= 0.0 && lo < hi))
            throw DataError("window must satisfy 0 <= eps < M");
    }
};

/// Simulation design: Cox model with the given baseline, Uniform[0,1]^d
/// covariates and Uniform[0, censor_tau] censoring independent of Z.
struct Scenario {
    Baseline baseline;
    std::vector<double> beta{0.5};
    double censor_tau = 1.0;
    Window window;
    std::size_t n = 100;

    void validate() const {
        baseline.validate();
        window.validate();
        if (beta.empty()) throw DataError("beta must have dimension >= 1");
        if (!(censor_tau > 0.0)) throw DataError("censor_tau must be positive");
        if (n < 2) throw DataError("n must be at least 2");
    }

    /// Non-fatal design issues.
    std::vector<std::string> warnings() const {
        std::vector<std::string> w;
        if (!(window.lo > 0.0 && window.lo < window.hi && window.hi < censor_tau))
            w.emplace_back("recommended 0 < eps < M < censor_tau");
        if (const auto* wb = std::get_if<WeibullBaseline>(&baseline.kind()); wb && wb->nu >= 1.0)
            w.emplace_back("Weibull shape nu >= 1 gives a non-decreasing hazard");
        return w;
    }
};

inline double cum_hazard_true(const Scenario& s, double t) { return s.baseline.cum_hazard(t); }

/// Draws a dataset. Observation i uses its own substream derive_seed(seed, i),
/// consuming d covariate uniforms, one Exp(1) and one censoring uniform.
inline Dataset sample(const Scenario& s, std::uint64_t seed) {
    s.validate();
    const std::size_t d = s.beta.size();
    std::vector<double> times(s.n);
    std::vector<int> status(s.n);
    std::vector<double> z(s.n * d);
    for (std::size_t i = 0; i < s.n; ++i) {
        Rng rng(derive_seed(seed, i));
        double lp = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            z[i * d + k] = rng.uniform();
            lp += s.beta[k] * z[i * d + k];
        }
        const double e = rng.exponential();
        const double x = s.baseline.inverse_cum_hazard(e * std::exp(-lp));
        const double c = rng.uniform(0.0, s.censor_tau);
        times[i] = std::min(x, c);
        status[i] = x <= c ? 1 : 0;
    }
    return Dataset(std::move(times), std::move(status), std::move(z), d);
}

inline void to_json(nlohmann::json& j, const Scenario& s) {
    j = nlohmann::json{{"baseline", s.baseline.describe()},
                       {"beta", s.beta},
                       {"censor_tau", s.censor_tau},
                       {"eps", s.window.lo},
                       {"M", s.window.hi},
                       {"n", s.n}};
}

inline void from_json(const nlohmann::json& j, Scenario& s) {
    try {
        s.baseline = parse_baseline(j.at("baseline").get<std::string>());
        if (j.contains("beta")) {
            if (j.at("beta").is_array())
                s.beta = j.at("beta").get<std::vector<double>>();
            else
                s.beta = {j.at("beta").get<double>()};
        }
        s.censor_tau = j.value("censor_tau", s.censor_tau);
        s.window.lo = j.value("eps", s.window.lo);
        s.window.hi = j.value("M", s.window.hi);
        s.n = j.value("n", s.n);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("scenario config: ") + e.what());
    }
    s.validate();
}

}  // namespace coxmono
