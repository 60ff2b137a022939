#pragma once

// Slow, direct implementations used as references by the unit and
// acceptance tests. None of them share code with the library algorithms.

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "coxmono/nonparam.hpp"
#include "coxmono/random.hpp"
#include "coxmono/survival_data.hpp"
#include "coxmono/weibull_cox.hpp"

namespace coxmono::oracle {

/// sum over events T_i <= t of 1 / sum_{T_j >= T_i} exp(beta'Z_j)
inline double breslow_at(const Dataset& d, const std::vector<double>& beta, double t) {
    double total = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (d.status(i) != 1 || d.time(i) > t) continue;
        double risk = 0.0;
        for (std::size_t j = 0; j < d.size(); ++j)
            if (d.time(j) >= d.time(i)) risk += std::exp(d.linear_predictor(j, beta));
        total += 1.0 / risk;
    }
    return total;
}

/// prod over distinct times s <= t of (1 - d_s / r_s)
inline double product_limit(const Dataset& d, CurveRole role, double t) {
    std::set<double> times(d.times().begin(), d.times().end());
    double s = 1.0;
    for (double u : times) {
        if (u > t) break;
        double events = 0.0, at_risk = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i) {
            const int hit = role == CurveRole::event ? d.status(i) : 1 - d.status(i);
            if (d.time(i) == u && hit) events += 1.0;
            if (d.time(i) >= u) at_risk += 1.0;
        }
        s *= 1.0 - events / at_risk;
    }
    return s;
}

/// Random nondecreasing step function with m distinct jump times.
inline StepCumHazard random_step(Rng& rng, std::size_t m) {
    StepCumHazard lam;
    double t = 0.0, v = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        t += 0.01 + rng.exponential();
        v += rng.exponential() * (rng.uniform() < 0.5 ? 1.0 : 0.1);
        lam.jump_times.push_back(t);
        lam.values.push_back(v);
    }
    return lam;
}

/// Window starting somewhere before the middle of the jumps and ending
/// inside or past the last jump.
inline Window random_window(Rng& rng, const StepCumHazard& lam) {
    const double last = lam.jump_times.back();
    const double lo = rng.uniform(0.0, 0.5 * last);
    const double hi = lo + rng.uniform(0.05, 1.2) * (last - lo) + 0.01;
    return {lo, hi};
}

/// Points the majorant is taken over.
inline void window_points(const StepCumHazard& lam, Window w, std::vector<double>& x, std::vector<double>& y) {
    x = {w.lo};
    y = {lam(w.lo)};
    for (std::size_t k = 0; k < lam.jump_times.size(); ++k)
        if (lam.jump_times[k] > w.lo && lam.jump_times[k] < w.hi) {
            x.push_back(lam.jump_times[k]);
            y.push_back(lam.values[k]);
        }
    x.push_back(w.hi);
    y.push_back(lam(w.hi));
}

/// Upper envelope of all chords between pairs of points, at t.
inline double chord_envelope(const std::vector<double>& x, const std::vector<double>& y, double t) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] > t) break;
        if (x[i] == t) best = std::max(best, y[i]);
        for (std::size_t j = i + 1; j < x.size(); ++j) {
            if (x[j] < t) continue;
            best = std::max(best, y[i] + (y[j] - y[i]) * (t - x[i]) / (x[j] - x[i]));
        }
    }
    return best;
}

/// Largest discrepancy (relative to max(1, |value|)) between the estimator
/// and the chord envelope: majorant values on a grid and at every point,
/// and slopes obtained by differencing the envelope between consecutive
/// points. Knots must be among the points.
inline double grenander_discrepancy(const StepCumHazard& lam, Window w, const MonotoneHazard& h) {
    std::vector<double> x, y;
    window_points(lam, w, x, y);
    double worst = 0.0;
    auto note = [&](double got, double want) {
        worst = std::max(worst, std::abs(got - want) / std::max(1.0, std::abs(want)));
    };
    std::vector<double> env(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        env[i] = chord_envelope(x, y, x[i]);
        note(h.lcm(x[i]), env[i]);
    }
    for (int g = 0; g <= 200; ++g) {
        const double t = w.lo + (w.hi - w.lo) * g / 200.0;
        note(h.lcm(t), chord_envelope(x, y, t));
    }
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        const double slope = (env[i + 1] - env[i]) / (x[i + 1] - x[i]);
        note(h(0.5 * (x[i] + x[i + 1])), slope);
        note(h(x[i + 1]), slope);  // left-continuous at the right end
    }
    for (double k : h.knots)
        if (std::find(x.begin(), x.end(), k) == x.end()) worst = std::numeric_limits<double>::infinity();
    return worst;
}

/// Largest t among the candidate points maximizing Lambda(t) - a t.
inline double largest_maximizer(const StepCumHazard& lam, double a, Window w) {
    std::vector<double> x, y;
    window_points(lam, w, x, y);
    double best = -std::numeric_limits<double>::infinity(), arg = w.lo;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (y[i] - a * x[i] >= best) {
            best = y[i] - a * x[i];
            arg = x[i];
        }
    return arg;
}

/// Counts (t, a) pairs violating lambda_hat(t) >= a <=> U(a) >= t for t in
/// (lo, hi], with a and t chosen at and around slopes and knots.
inline std::size_t switching_violations(const StepCumHazard& lam, Window w, Rng& rng) {
    const MonotoneHazard h = grenander(lam, w);
    std::vector<double> levels{0.0, -1.0, h.slopes.front() + 1.0};
    for (std::size_t k = 0; k < h.pieces(); ++k) {
        levels.push_back(h.slopes[k]);
        if (k + 1 < h.pieces()) levels.push_back(0.5 * (h.slopes[k] + h.slopes[k + 1]));
    }
    for (int k = 0; k < 10; ++k) levels.push_back(rng.uniform(h.slopes.back() - 0.1, h.slopes.front() + 0.1));
    std::vector<double> ts{w.hi};
    for (std::size_t k = 1; k < h.knots.size(); ++k) {
        ts.push_back(h.knots[k]);
        ts.push_back(std::nextafter(h.knots[k], w.lo));
        ts.push_back(std::nextafter(h.knots[k], w.hi));
        ts.push_back(0.5 * (h.knots[k - 1] + h.knots[k]));
    }
    for (int k = 0; k < 20; ++k) ts.push_back(rng.uniform(w.lo, w.hi));
    std::size_t bad = 0;
    for (double a : levels) {
        const double u = inverse_process(lam, a, w);
        for (double t : ts) {
            if (!(t > w.lo && t <= w.hi)) continue;
            if ((h(t) >= a) != (u >= t)) ++bad;
        }
    }
    return bad;
}

/// Log partial likelihood with the risk set summed directly for each event.
inline double partial_loglik(const Dataset& d, const std::vector<double>& beta) {
    double total = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (d.status(i) != 1) continue;
        double risk = 0.0;
        for (std::size_t j = 0; j < d.size(); ++j)
            if (d.time(j) >= d.time(i)) risk += std::exp(d.linear_predictor(j, beta));
        total += d.linear_predictor(i, beta) - std::log(risk);
    }
    return total;
}

/// Weibull-Cox log-likelihood, one term at a time.
inline double weibull_loglik(const Dataset& d, double mu, double nu, const std::vector<double>& beta) {
    double total = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double t = d.time(i);
        double lp = 0.0;
        for (std::size_t k = 0; k < beta.size(); ++k) lp += beta[k] * d.covariates(i)[k];
        const double hazard = nu * std::pow(mu, nu) * std::pow(t, nu - 1.0) * std::exp(lp);
        const double cum = std::pow(mu * t, nu) * std::exp(lp);
        if (d.status(i) == 1) total += std::log(hazard);
        total -= cum;
    }
    return total;
}

}  // namespace coxmono::oracle
