#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "coxmono/concave_majorant.hpp"
#include "coxmono/errors.hpp"
#include "coxmono/scenario.hpp"
#include "coxmono/survival_data.hpp"

namespace coxmono {

/// Phi_n(x; beta) = (1/n) sum_i 1{T_i >= x} exp(beta'Z_i).
inline double phi_n(const Dataset& data, std::span<const double> beta, double x) {
    double s = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i)
        if (data.time(i) >= x) s += std::exp(data.linear_predictor(i, beta));
    return s / static_cast<double>(data.size());
}

/// Phi_n precomputed as a left-continuous step function so repeated
/// evaluations cost O(log n). Used where Phi_n is integrated.
class RiskFunction {
public:
    RiskFunction(const Dataset& data, std::span<const double> beta) {
        const auto& order = data.sorted_index();
        times_.reserve(data.size());
        for (std::size_t i : order) times_.push_back(data.time(i));
        tail_.assign(data.size() + 1, 0.0);
        for (std::size_t k = data.size(); k-- > 0;)
            tail_[k] = tail_[k + 1] + std::exp(data.linear_predictor(order[k], beta));
        for (double& v : tail_) v /= static_cast<double>(data.size());
    }

    double operator()(double x) const {
        const auto k = std::lower_bound(times_.begin(), times_.end(), x) - times_.begin();
        return tail_[static_cast<std::size_t>(k)];
    }

private:
    std::vector<double> times_;
    std::vector<double> tail_;
};

/// Right-continuous nondecreasing step function, 0 before the first jump.
struct StepCumHazard {
    std::vector<double> jump_times;
    std::vector<double> values;

    double operator()(double t) const {
        const auto k = std::upper_bound(jump_times.begin(), jump_times.end(), t) - jump_times.begin();
        return k == 0 ? 0.0 : values[static_cast<std::size_t>(k - 1)];
    }

    double left_limit(double t) const {
        const auto k = std::lower_bound(jump_times.begin(), jump_times.end(), t) - jump_times.begin();
        return k == 0 ? 0.0 : values[static_cast<std::size_t>(k - 1)];
    }
};

/// Breslow estimator: Lambda_n(x) = sum_{events T_i <= x} 1/(n Phi_n(T_i; beta)).
inline StepCumHazard breslow(const Dataset& data, std::span<const double> beta) {
    if (beta.size() != data.dim()) throw DataError("beta dimension does not match covariates");
    if (data.events() == 0) throw DataError("Breslow estimator needs at least one event");
    const auto& order = data.sorted_index();
    const std::size_t n = data.size();

    // Reverse sweep: risk-set sum and event count per distinct time.
    std::vector<double> group_time, group_jump;
    double risk = 0.0;
    std::size_t hi = n;
    while (hi > 0) {
        std::size_t lo = hi - 1;
        const double t = data.time(order[lo]);
        while (lo > 0 && data.time(order[lo - 1]) == t) --lo;
        std::size_t events = 0;
        for (std::size_t k = lo; k < hi; ++k) {
            risk += std::exp(data.linear_predictor(order[k], beta));
            events += static_cast<std::size_t>(data.status(order[k]));
        }
        if (events > 0) {
            group_time.push_back(t);
            group_jump.push_back(static_cast<double>(events) / risk);
        }
        hi = lo;
    }
    StepCumHazard out;
    out.jump_times.assign(group_time.rbegin(), group_time.rend());
    out.values.resize(out.jump_times.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < out.values.size(); ++k) {
        acc += group_jump[group_jump.size() - 1 - k];
        out.values[k] = acc;
    }
    return out;
}

/// Nonincreasing left-continuous step function on [window.lo, window.hi]:
/// the left-hand slope of the least concave majorant through `knots`.
/// slopes[k] applies on (knots[k], knots[k+1]]; majorant[k] is the LCM value
/// at knots[k].
struct MonotoneHazard {
    std::vector<double> knots;
    std::vector<double> slopes;
    std::vector<double> majorant;
    Window window;

    std::size_t pieces() const noexcept { return slopes.size(); }

    /// Left-continuous evaluation; constant extension outside the window.
    double operator()(double t) const {
        auto it = std::lower_bound(knots.begin() + 1, knots.end() - 1, t);
        return slopes[static_cast<std::size_t>(it - (knots.begin() + 1))];
    }

    /// The concave majorant itself (piecewise linear).
    double lcm(double t) const {
        const std::size_t k = piece_index(t);
        return majorant[k] + slopes[k] * (t - knots[k]);
    }

    /// Integral of the slope function from window.lo to t.
    double integral(double t) const { return lcm(t) - majorant.front(); }

private:
    std::size_t piece_index(double t) const {
        auto it = std::lower_bound(knots.begin() + 1, knots.end() - 1, t);
        return static_cast<std::size_t>(it - (knots.begin() + 1));
    }
};

/// Grenander-type estimator on `window`: LCM of
/// {(lo, L(lo))} u {(t, L(t)) : jumps t in (lo, hi)} u {(hi, L(hi))}.
inline MonotoneHazard grenander(const StepCumHazard& lam, Window window) {
    if (!(window.lo < window.hi) || !std::isfinite(window.lo) || !std::isfinite(window.hi))
        throw DataError("degenerate window: need eps < M");
    std::vector<double> x{window.lo};
    std::vector<double> y{lam(window.lo)};
    const auto first = std::upper_bound(lam.jump_times.begin(), lam.jump_times.end(), window.lo);
    for (auto it = first; it != lam.jump_times.end() && *it < window.hi; ++it) {
        x.push_back(*it);
        y.push_back(lam.values[static_cast<std::size_t>(it - lam.jump_times.begin())]);
    }
    x.push_back(window.hi);
    y.push_back(lam(window.hi));

    const auto hull = upper_hull(x, y);
    MonotoneHazard out;
    out.window = window;
    out.knots.reserve(hull.size());
    out.majorant.reserve(hull.size());
    for (std::size_t k : hull) {
        out.knots.push_back(x[k]);
        out.majorant.push_back(y[k]);
    }
    out.slopes.reserve(hull.size() - 1);
    for (std::size_t k = 1; k < hull.size(); ++k)
        out.slopes.push_back((out.majorant[k] - out.majorant[k - 1]) / (out.knots[k] - out.knots[k - 1]));
    return out;
}

/// Largest maximizer of t -> Lambda_n(t) - a t over [lo, hi]. Read off the
/// majorant (the last knot whose left slope is >= a) so that it agrees with
/// the estimator exactly: lambda_hat(t) >= a iff inverse_process(a) >= t.
inline double inverse_process(const StepCumHazard& lam, double a, Window window) {
    const MonotoneHazard h = grenander(lam, window);
    const auto it = std::partition_point(h.slopes.begin(), h.slopes.end(), [a](double s) { return s >= a; });
    return h.knots[static_cast<std::size_t>(it - h.slopes.begin())];
}

enum class CurveRole { censoring, event };

/// Right-continuous nonincreasing survival-type curve, 1 before the first jump.
/// For role == censoring, surv is 1 - G_n; for role == event, 1 - F_n.
struct SurvivalCurve {
    std::vector<double> jump_times;
    std::vector<double> surv;
    CurveRole role = CurveRole::event;

    double operator()(double t) const {
        const auto k = std::upper_bound(jump_times.begin(), jump_times.end(), t) - jump_times.begin();
        return k == 0 ? 1.0 : surv[static_cast<std::size_t>(k - 1)];
    }
    double left_limit(double t) const {
        const auto k = std::lower_bound(jump_times.begin(), jump_times.end(), t) - jump_times.begin();
        return k == 0 ? 1.0 : surv[static_cast<std::size_t>(k - 1)];
    }
    double cdf(double t) const { return 1.0 - (*this)(t); }
};

/// Product-limit estimator. With role == censoring the indicator 1 - Delta
/// marks the events of interest.
inline SurvivalCurve kaplan_meier(const Dataset& data, CurveRole role) {
    const auto& order = data.sorted_index();
    const std::size_t n = data.size();
    SurvivalCurve out;
    out.role = role;
    double s = 1.0;
    std::size_t lo = 0;
    while (lo < n) {
        std::size_t hi = lo + 1;
        const double t = data.time(order[lo]);
        while (hi < n && data.time(order[hi]) == t) ++hi;
        std::size_t d = 0;
        for (std::size_t k = lo; k < hi; ++k) {
            const int st = data.status(order[k]);
            d += static_cast<std::size_t>(role == CurveRole::event ? st : 1 - st);
        }
        if (d > 0) {
            s *= 1.0 - static_cast<double>(d) / static_cast<double>(n - lo);
            out.jump_times.push_back(t);
            out.surv.push_back(s);
        }
        lo = hi;
    }
    return out;
}

/// F_n = 1 - exp(-Lambda_n), stored through its survivor exp(-Lambda_n).
inline SurvivalCurve breslow_cdf(const StepCumHazard& lam) {
    SurvivalCurve out;
    out.role = CurveRole::event;
    out.jump_times = lam.jump_times;
    out.surv.reserve(lam.values.size());
    for (double v : lam.values) out.surv.push_back(std::exp(-v));
    return out;
}

inline void write_csv(std::ostream& out, const StepCumHazard& lam) {
    out << "time,value\n";
    for (std::size_t k = 0; k < lam.jump_times.size(); ++k)
        out << detail::format_double(lam.jump_times[k]) << ',' << detail::format_double(lam.values[k]) << '\n';
}

/// One row per piece: (left knot, right knot], slope, and the majorant at
/// the right knot.
inline void write_csv(std::ostream& out, const MonotoneHazard& h) {
    out << "knot_left,knot_right,slope,majorant_right\n";
    for (std::size_t k = 0; k < h.pieces(); ++k)
        out << detail::format_double(h.knots[k]) << ',' << detail::format_double(h.knots[k + 1]) << ','
            << detail::format_double(h.slopes[k]) << ',' << detail::format_double(h.majorant[k + 1]) << '\n';
}

}  // namespace coxmono
