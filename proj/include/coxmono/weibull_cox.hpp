#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "coxmono/cox_fit.hpp"
#include "coxmono/errors.hpp"
#include "coxmono/survival_data.hpp"

namespace coxmono {

/// Weibull-Cox parameters: baseline scale mu, shape nu, and regression beta.
struct WeibullTheta {
    double mu = 1.0;
    double nu = 1.0;
    std::vector<double> beta;

    void validate() const {
        if (!(mu > 0.0 && std::isfinite(mu)) || !(nu > 0.0 && std::isfinite(nu)))
            throw DataError("Weibull parameters require mu > 0 and nu > 0");
    }

    /// nu mu^nu t^(nu-1)
    double hazard(double t) const {
        if (t == 0.0 && nu < 1.0) throw DataError("Weibull hazard diverges at t = 0 for nu < 1");
        return nu * std::pow(mu, nu) * std::pow(t, nu - 1.0);
    }

    /// (mu t)^nu
    double cum_hazard(double t) const { return std::pow(mu * t, nu); }

    double hazard_derivative(double t) const {
        return nu * (nu - 1.0) * std::pow(mu, nu) * std::pow(t, nu - 2.0);
    }

    /// Point where the hazard equals `level` (NaN for the constant case).
    double level_crossing(double level) const {
        if (nu == 1.0) return std::numeric_limits<double>::quiet_NaN();
        if (level <= 0.0) return nu < 1.0 ? std::numeric_limits<double>::infinity() : 0.0;
        return std::pow(level / (nu * std::pow(mu, nu)), 1.0 / (nu - 1.0));
    }

    /// F(x | z) = 1 - exp(-(mu x)^nu exp(beta'z))
    double conditional_cdf(double x, std::span<const double> z) const {
        double lp = 0.0;
        for (std::size_t k = 0; k < z.size(); ++k) lp += beta[k] * z[k];
        return -std::expm1(-cum_hazard(x) * std::exp(lp));
    }
};

inline double param_hazard(const WeibullTheta& theta, double t) { return theta.hazard(t); }
inline double param_cum_hazard(const WeibullTheta& theta, double t) { return theta.cum_hazard(t); }
inline double conditional_cdf(const WeibullTheta& theta, double x, std::span<const double> z) {
    return theta.conditional_cdf(x, z);
}

/// Log-likelihood with gradient and Hessian in the coordinates
/// (log mu, log nu, beta_1, ..., beta_d).
struct WeibullLikelihood {
    double value = 0.0;
    Eigen::VectorXd gradient;
    Eigen::MatrixXd hessian;
};

namespace detail {

inline WeibullLikelihood weibull_terms(const Dataset& data, const WeibullTheta& theta, bool with_derivatives) {
    const std::size_t d = data.dim();
    const std::size_t p = d + 2;
    const double log_mu = std::log(theta.mu);
    const double nu = theta.nu;
    const double log_nu = std::log(nu);

    WeibullLikelihood out;
    if (with_derivatives) {
        out.gradient = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
        out.hessian = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double t = data.time(i);
        const bool event = data.status(i) == 1;
        const double lp = data.linear_predictor(i, theta.beta);
        if (event && t <= 0.0) throw DataError("event at time 0: Weibull log-likelihood is -inf");
        if (t <= 0.0) continue;  // censored at 0 contributes nothing

        const double l = log_mu + std::log(t);  // log(mu t)
        const double h = std::exp(nu * l + lp);  // (mu t)^nu e^{beta'z}
        const double nl = nu * l;
        if (event) out.value += log_nu + nu * log_mu + (nu - 1.0) * std::log(t) + lp;
        out.value -= h;
        if (!with_derivatives) continue;

        auto z = data.covariates(i);
        auto& g = out.gradient;
        auto& H = out.hessian;
        const double ev = event ? 1.0 : 0.0;
        g[0] += ev * nu - nu * h;
        g[1] += ev * (1.0 + nl) - h * nl;
        H(0, 0) -= nu * nu * h;
        H(1, 0) += ev * nu - nu * h * (1.0 + nl);
        H(1, 1) += ev * nl - h * nl * (1.0 + nl);
        for (std::size_t a = 0; a < d; ++a) {
            const auto ia = static_cast<Eigen::Index>(a + 2);
            g[ia] += ev * z[a] - h * z[a];
            H(ia, 0) -= nu * h * z[a];
            H(ia, 1) -= h * nl * z[a];
            for (std::size_t b = 0; b <= a; ++b) H(ia, static_cast<Eigen::Index>(b + 2)) -= h * z[a] * z[b];
        }
    }
    if (with_derivatives) out.hessian.triangularView<Eigen::StrictlyUpper>() = out.hessian.transpose();
    return out;
}

}  // namespace detail

/// sum_i { Delta_i [log nu + nu log mu + (nu-1) log T_i + beta'Z_i] - (mu T_i)^nu e^{beta'Z_i} }
inline double weibull_loglik(const Dataset& data, const WeibullTheta& theta) {
    theta.validate();
    if (theta.beta.size() != data.dim()) throw DataError("beta dimension does not match covariates");
    return detail::weibull_terms(data, theta, false).value;
}

inline WeibullLikelihood weibull_loglik_derivatives(const Dataset& data, const WeibullTheta& theta) {
    theta.validate();
    if (theta.beta.size() != data.dim()) throw DataError("beta dimension does not match covariates");
    return detail::weibull_terms(data, theta, true);
}

/// Raised when the Weibull Newton iteration does not reach the tolerance;
/// carries the last iterate.
class WeibullFitError : public FitError {
public:
    WeibullFitError(const std::string& what, WeibullTheta last) : FitError(what), last_(std::move(last)) {}
    const WeibullTheta& last_iterate() const noexcept { return last_; }

private:
    WeibullTheta last_;
};

struct WeibullFitOptions {
    double tol = 1e-8;
    int max_iter = 200;
};

/// Full maximum likelihood over (log mu, log nu, beta) by Newton's method
/// with step halving, started from nu = 1, beta = `beta_start` and the
/// exponential closed form for mu.
inline WeibullTheta fit_weibull(const Dataset& data, std::span<const double> beta_start,
                                const WeibullFitOptions& opt = {}) {
    if (!(opt.tol > 0.0)) throw DataError("tolerance must be positive");
    const std::size_t events = data.events();
    if (events == 0) throw DataError("no events: Weibull likelihood is not identifiable (sup at mu -> 0)");
    const std::size_t d = data.dim();
    if (beta_start.size() != d) throw DataError("beta start dimension does not match covariates");

    WeibullTheta theta;
    theta.beta.assign(beta_start.begin(), beta_start.end());
    double exposure = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i)
        exposure += data.time(i) * std::exp(data.linear_predictor(i, theta.beta));
    theta.nu = 1.0;
    theta.mu = static_cast<double>(events) / exposure;

    auto coords = [&](const WeibullTheta& th) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(d + 2));
        v[0] = std::log(th.mu);
        v[1] = std::log(th.nu);
        for (std::size_t k = 0; k < d; ++k) v[static_cast<Eigen::Index>(k + 2)] = th.beta[k];
        return v;
    };
    auto from_coords = [&](const Eigen::VectorXd& v) {
        WeibullTheta th;
        th.mu = std::exp(v[0]);
        th.nu = std::exp(v[1]);
        th.beta.resize(d);
        for (std::size_t k = 0; k < d; ++k) th.beta[k] = v[static_cast<Eigen::Index>(k + 2)];
        return th;
    };

    auto terms = detail::weibull_terms(data, theta, true);
    for (int iter = 0;; ++iter) {
        const double gnorm = terms.gradient.cwiseAbs().maxCoeff();
        if (gnorm <= opt.tol) return theta;
        if (iter >= opt.max_iter)
            throw WeibullFitError("Weibull fit did not converge in " + std::to_string(opt.max_iter) +
                                      " iterations (gradient " + detail::format_double(gnorm) + ")",
                                  theta);
        Eigen::VectorXd step = detail::ascent_direction(terms.hessian, terms.gradient);
        // keep the shape update bounded so pow() stays finite
        const double largest = step.head(2).cwiseAbs().maxCoeff();
        if (largest > 2.0) step *= 2.0 / largest;

        const Eigen::VectorXd x0 = coords(theta);
        bool improved = false;
        double scale = 1.0;
        WeibullTheta trial;
        WeibullLikelihood trial_terms;
        for (int halving = 0; halving < 50; ++halving, scale *= 0.5) {
            trial = from_coords(x0 + scale * step);
            if (!(trial.mu > 0.0 && std::isfinite(trial.mu) && trial.nu > 0.0 && std::isfinite(trial.nu))) continue;
            trial_terms = detail::weibull_terms(data, trial, true);
            if (detail::accept_step(terms.value, gnorm, trial_terms.value, trial_terms.gradient)) {
                improved = true;
                break;
            }
        }
        if (!improved)
            throw WeibullFitError("Weibull fit stalled (gradient " + detail::format_double(gnorm) + ")", theta);
        theta = trial;
        terms = std::move(trial_terms);
    }
}

/// As above, started from the partial-likelihood estimate (zero if that fit
/// fails).
inline WeibullTheta fit_weibull(const Dataset& data, const WeibullFitOptions& opt = {}) {
    std::vector<double> start(data.dim(), 0.0);
    if (data.events() > 0) {
        try {
            const CoxFit cox = fit(data);
            if (cox.converged) start = cox.beta_hat;
        } catch (const FitError&) {
        }
    }
    return fit_weibull(data, start, opt);
}

}  // namespace coxmono
