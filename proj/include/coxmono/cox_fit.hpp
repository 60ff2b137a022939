#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "coxmono/errors.hpp"
#include "coxmono/survival_data.hpp"

namespace coxmono {

/// Result of maximizing the Cox partial likelihood.
struct CoxFit {
    std::vector<double> beta_hat;
    double loglik = 0.0;
    double gradient_norm = 0.0;  // max-norm
    int iterations = 0;
    bool converged = false;
};

struct CoxFitOptions {
    double tol = 1e-8;
    int max_iter = 100;
    /// ||beta||_2 beyond this is treated as monotone-likelihood divergence.
    double separation_bound = 50.0;
};

/// Log partial likelihood with its gradient and Hessian.
struct PartialLikelihood {
    double value = 0.0;
    Eigen::VectorXd gradient;
    Eigen::MatrixXd hessian;
};

namespace detail {

/// One reverse sweep over sorted times. Tied times form one risk set
/// (Breslow convention): all members of a tie group are added before any
/// event in the group is scored.
inline PartialLikelihood partial_likelihood_terms(const Dataset& data, std::span<const double> beta,
                                                  bool with_derivatives) {
    const std::size_t n = data.size();
    const std::size_t d = data.dim();
    const auto& order = data.sorted_index();

    std::vector<double> eta(n);
    double shift = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        eta[i] = data.linear_predictor(i, beta);
        shift = std::max(shift, eta[i]);
    }

    PartialLikelihood out;
    out.gradient = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    out.hessian = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    double s0 = 0.0;
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    Eigen::VectorXd mean(static_cast<Eigen::Index>(d));

    std::size_t hi = n;
    while (hi > 0) {
        std::size_t lo = hi - 1;
        const double t = data.time(order[lo]);
        while (lo > 0 && data.time(order[lo - 1]) == t) --lo;
        for (std::size_t k = lo; k < hi; ++k) {
            const std::size_t j = order[k];
            const double w = std::exp(eta[j] - shift);
            s0 += w;
            if (with_derivatives) {
                auto z = data.covariates(j);
                for (std::size_t a = 0; a < d; ++a) {
                    s1[static_cast<Eigen::Index>(a)] += w * z[a];
                    for (std::size_t b = 0; b <= a; ++b)
                        s2(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += w * z[a] * z[b];
                }
            }
        }
        const double log_s0 = std::log(s0) + shift;
        if (with_derivatives) mean.noalias() = s1 / s0;
        for (std::size_t k = lo; k < hi; ++k) {
            const std::size_t i = order[k];
            if (data.status(i) != 1) continue;
            out.value += eta[i] - log_s0;
            if (with_derivatives) {
                auto z = data.covariates(i);
                for (std::size_t a = 0; a < d; ++a) {
                    const auto ia = static_cast<Eigen::Index>(a);
                    out.gradient[ia] += z[a] - mean[ia];
                    for (std::size_t b = 0; b <= a; ++b) {
                        const auto ib = static_cast<Eigen::Index>(b);
                        out.hessian(ia, ib) -= s2(ia, ib) / s0 - mean[ia] * mean[ib];
                    }
                }
            }
        }
        hi = lo;
    }
    if (with_derivatives)
        out.hessian.triangularView<Eigen::StrictlyUpper>() = out.hessian.transpose();
    return out;
}

/// Newton direction solving (-H) step = g, with a ridge added until -H is
/// numerically positive definite.
inline Eigen::VectorXd ascent_direction(const Eigen::MatrixXd& hessian, const Eigen::VectorXd& gradient) {
    Eigen::MatrixXd neg = -hessian;
    const double scale = std::max(1.0, neg.diagonal().cwiseAbs().maxCoeff());
    double ridge = 0.0;
    for (int attempt = 0; attempt < 60; ++attempt) {
        Eigen::LLT<Eigen::MatrixXd> llt(neg + ridge * Eigen::MatrixXd::Identity(neg.rows(), neg.cols()));
        if (llt.info() == Eigen::Success) {
            Eigen::VectorXd step = llt.solve(gradient);
            if (step.allFinite()) return step;
        }
        ridge = ridge == 0.0 ? 1e-10 * scale : ridge * 10.0;
    }
    return gradient / scale;
}

/// Step acceptance: strict ascent, or (once the change is below the
/// rounding level of the O(n) sum) a decrease of the gradient max-norm.
inline bool accept_step(double value, double gnorm, double trial_value, const Eigen::VectorXd& trial_gradient) {
    if (!std::isfinite(trial_value) || !trial_gradient.allFinite()) return false;
    if (trial_value > value) return true;
    const double rounding = 1e-12 * (1.0 + std::abs(value));
    return trial_value >= value - rounding && trial_gradient.cwiseAbs().maxCoeff() < gnorm;
}

}  // namespace detail

/// sum over events of [beta'Z_i - log sum_{T_j >= T_i} exp(beta'Z_j)].
inline double log_partial_likelihood(const Dataset& data, std::span<const double> beta) {
    if (beta.size() != data.dim()) throw DataError("beta dimension does not match covariates");
    return detail::partial_likelihood_terms(data, beta, false).value;
}

inline PartialLikelihood partial_likelihood_derivatives(const Dataset& data, std::span<const double> beta) {
    if (beta.size() != data.dim()) throw DataError("beta dimension does not match covariates");
    return detail::partial_likelihood_terms(data, beta, true);
}

/// Newton steps below this size count as stationary once the gradient is
/// within tolerance.
inline constexpr double kStationaryStep = 1e-3;

/// Newton-Raphson with step halving on the log partial likelihood.
inline CoxFit fit(const Dataset& data, std::span<const double> init, const CoxFitOptions& opt = {}) {
    if (init.size() != data.dim()) throw DataError("initial beta dimension does not match covariates");
    if (!(opt.tol > 0.0)) throw DataError("tolerance must be positive");
    if (data.events() == 0) throw DataError("partial likelihood needs at least one event");

    std::vector<double> beta(init.begin(), init.end());
    CoxFit out;
    auto terms = detail::partial_likelihood_terms(data, beta, true);
    // Information that collapses along the path (rather than being zero from
    // the start, as for a constant covariate) means beta is running off to
    // infinity and the gradient has underflowed.
    const double info0 = (-terms.hessian.diagonal()).maxCoeff();
    const auto collapsed = [&] { return info0 > 0.0 && (-terms.hessian.diagonal()).maxCoeff() <= 1e-12 * info0; };
    for (out.iterations = 0;; ++out.iterations) {
        out.gradient_norm = terms.gradient.cwiseAbs().maxCoeff();
        if (out.gradient_norm == 0.0) {
            if (collapsed()) throw FitError("separation detected: information vanished as |beta| grew");
            out.converged = true;
            break;
        }
        const Eigen::VectorXd step = detail::ascent_direction(terms.hessian, terms.gradient);
        // A small gradient with a large Newton step means the curvature has
        // vanished too: the likelihood is still rising towards |beta| = inf.
        const bool flat = out.gradient_norm <= opt.tol;
        if (flat && step.cwiseAbs().maxCoeff() <= kStationaryStep) {
            if (collapsed()) throw FitError("separation detected: information vanished as |beta| grew");
            out.converged = true;
            break;
        }
        if (out.iterations >= opt.max_iter) break;

        std::vector<double> trial(beta.size());
        PartialLikelihood trial_terms;
        bool improved = false;
        double scale = 1.0;
        for (int halving = 0; halving < 40; ++halving, scale *= 0.5) {
            for (std::size_t k = 0; k < beta.size(); ++k)
                trial[k] = beta[k] + scale * step[static_cast<Eigen::Index>(k)];
            trial_terms = detail::partial_likelihood_terms(data, trial, true);
            if (detail::accept_step(terms.value, out.gradient_norm, trial_terms.value, trial_terms.gradient)) {
                improved = true;
                break;
            }
        }
        if (!improved) {
            if (flat) throw FitError("separation detected: partial likelihood increases without bound");
            break;
        }
        beta = trial;
        double norm2 = 0.0;
        for (double b : beta) norm2 += b * b;
        if (std::sqrt(norm2) > opt.separation_bound)
            throw FitError("separation detected: |beta| exceeded " + detail::format_double(opt.separation_bound));
        terms = std::move(trial_terms);
    }
    out.beta_hat = beta;
    out.loglik = terms.value;
    return out;
}

inline CoxFit fit(const Dataset& data, const CoxFitOptions& opt = {}) {
    const std::vector<double> zero(data.dim(), 0.0);
    return fit(data, zero, opt);
}

}  // namespace coxmono
