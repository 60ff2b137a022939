#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "coxmono/scenario.hpp"
#include "coxmono/weibull_cox.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace coxmono;

namespace {

Scenario weibull_scenario(double mu, double nu, double beta, double tau, std::size_t n) {
    Scenario s;
    s.baseline = WeibullBaseline{mu, nu};
    s.beta = {beta};
    s.censor_tau = tau;
    s.window = {0.5, 2.5};
    s.n = n;
    return s;
}

WeibullTheta theta(double mu, double nu, std::vector<double> beta) { return {mu, nu, std::move(beta)}; }

}  // namespace

TEST(WeibullLoglik, ExponentialClosedForm) {
    const Dataset d({0.5, 1.0, 2.0}, {1, 0, 1}, {0, 0, 0}, 1);
    // mu = nu = 1, beta = 0: sum Delta log 1 - sum T
    EXPECT_DOUBLE_EQ(weibull_loglik(d, theta(1, 1, {0})), -3.5);
    // exponential rate mu: D log mu - mu sum T
    EXPECT_NEAR(weibull_loglik(d, theta(2, 1, {0})), 2 * std::log(2.0) - 7.0, 1e-14);
}

TEST(WeibullLoglik, CensoredOnlyIsMinusCumulativeHazard) {
    const Dataset d({0.5, 1.0}, {0, 0}, {1, -1}, 1);
    const double expected = -std::pow(0.5 * 2, 0.5) * std::exp(0.3) - std::pow(2.0, 0.5) * std::exp(-0.3);
    EXPECT_NEAR(weibull_loglik(d, theta(2, 0.5, {0.3})), expected, 1e-14);
    EXPECT_THROW(fit_weibull(d), DataError);
}

TEST(WeibullLoglik, EventAtZeroIsAnError) {
    const Dataset d({0.0, 1.0}, {1, 1}, {0, 0}, 1);
    EXPECT_THROW(weibull_loglik(d, theta(1, 0.5, {0})), DataError);
}

TEST(WeibullLoglik, MatchesTermByTermSum) {
    Rng rng(1);
    for (int trial = 0; trial < 30; ++trial) {
        const Dataset d = support::random_dataset(rng, 2 + rng.below(50), 2, false);
        const double mu = rng.uniform(0.2, 3), nu = rng.uniform(0.2, 2);
        const std::vector<double> b{rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const double want = oracle::weibull_loglik(d, mu, nu, b);
        EXPECT_NEAR(weibull_loglik(d, theta(mu, nu, b)), want, 1e-11 * std::max(1.0, std::abs(want)));
    }
}

TEST(WeibullLoglik, DerivativesMatchFiniteDifferences) {
    Rng rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const Dataset d = support::random_dataset(rng, 30, 1, false);
        const double lm = rng.uniform(-1, 1), ln = rng.uniform(-1, 0.5), b = rng.uniform(-1, 1);
        const auto f = [&](double x0, double x1, double x2) {
            return oracle::weibull_loglik(d, std::exp(x0), std::exp(x1), {x2});
        };
        const auto terms = weibull_loglik_derivatives(d, theta(std::exp(lm), std::exp(ln), {b}));
        const double h = 1e-6;
        const double x[3] = {lm, ln, b};
        for (int k = 0; k < 3; ++k) {
            double up[3] = {x[0], x[1], x[2]}, dn[3] = {x[0], x[1], x[2]};
            up[k] += h;
            dn[k] -= h;
            const double fd = (f(up[0], up[1], up[2]) - f(dn[0], dn[1], dn[2])) / (2 * h);
            EXPECT_LE(std::abs(terms.gradient[k] - fd), 1e-5 * std::max(1.0, std::abs(fd)));
            const auto gu = weibull_loglik_derivatives(d, theta(std::exp(up[0]), std::exp(up[1]), {up[2]})).gradient;
            const auto gd = weibull_loglik_derivatives(d, theta(std::exp(dn[0]), std::exp(dn[1]), {dn[2]})).gradient;
            for (int a = 0; a < 3; ++a) {
                const double hfd = (gu[a] - gd[a]) / (2 * h);
                EXPECT_LE(std::abs(terms.hessian(a, k) - hfd), 1e-5 * std::max(1.0, std::abs(hfd)));
            }
        }
    }
}

TEST(WeibullFit, RecoversExponential) {
    const Dataset d = sample(weibull_scenario(1.0, 1.0, 0.0, 1e9, 5000), 3);
    const WeibullTheta t = fit_weibull(d);
    EXPECT_NEAR(t.mu, 1.0, 0.05);
    EXPECT_NEAR(t.nu, 1.0, 0.05);
}

TEST(WeibullFit, RecoversCensoredScenario) {
    const Dataset d = sample(weibull_scenario(1.0, 0.5, 0.5, 3.5, 5000), 4);
    const WeibullTheta t = fit_weibull(d);
    EXPECT_NEAR(t.mu, 1.0, 0.07);
    EXPECT_NEAR(t.nu, 0.5, 0.07);
    EXPECT_NEAR(t.beta[0], 0.5, 0.07);
}

TEST(WeibullFit, StationaryAndLocallyMaximal) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Dataset d = sample(weibull_scenario(5.0, 0.5, 0.5, 0.7, 300), seed);
        const WeibullTheta t = fit_weibull(d);
        const auto terms = weibull_loglik_derivatives(d, t);
        EXPECT_LE(terms.gradient.cwiseAbs().maxCoeff(), 1e-8);
        const double h = 1e-4;
        const double best = oracle::weibull_loglik(d, t.mu, t.nu, t.beta);
        for (double dm : {-h, h})
            for (double dn : {-h, h})
                for (double db : {-h, h})
                    EXPECT_LE(oracle::weibull_loglik(d, t.mu * std::exp(dm), t.nu * std::exp(dn), {t.beta[0] + db}),
                              best);
    }
}

TEST(WeibullFit, InvariantToRecordOrder) {
    const Dataset d = sample(weibull_scenario(1.0, 0.5, 0.5, 3.5, 400), 5);
    std::vector<std::size_t> perm(d.size());
    std::iota(perm.rbegin(), perm.rend(), std::size_t{0});
    const WeibullTheta a = fit_weibull(d), b = fit_weibull(d.subset(perm));
    EXPECT_NEAR(a.mu, b.mu, 1e-9);
    EXPECT_NEAR(a.nu, b.nu, 1e-9);
    EXPECT_NEAR(a.beta[0], b.beta[0], 1e-9);
}

TEST(WeibullFit, StartingPointDoesNotMatter) {
    const Dataset d = sample(weibull_scenario(1.0, 0.5, 0.5, 3.5, 400), 6);
    const WeibullTheta a = fit_weibull(d), b = fit_weibull(d, std::vector<double>{-2.0});
    EXPECT_NEAR(a.mu, b.mu, 1e-7);
    EXPECT_NEAR(a.nu, b.nu, 1e-7);
    EXPECT_NEAR(a.beta[0], b.beta[0], 1e-7);
}

TEST(WeibullFit, NonconvergenceCarriesLastIterate) {
    const Dataset d = sample(weibull_scenario(1.0, 0.5, 0.5, 3.5, 400), 7);
    WeibullFitOptions opt;
    opt.max_iter = 1;
    try {
        fit_weibull(d, opt);
        FAIL() << "expected WeibullFitError";
    } catch (const WeibullFitError& e) {
        EXPECT_GT(e.last_iterate().mu, 0.0);
        EXPECT_EQ(e.last_iterate().beta.size(), 1u);
    }
}

TEST(WeibullTheta, HazardExamples) {
    EXPECT_DOUBLE_EQ(param_hazard(theta(1, 1, {0}), 3.0), 1.0);
    EXPECT_NEAR(param_hazard(theta(2, 0.5, {0}), 4.0), std::sqrt(2.0) / 4.0, 1e-15);
    EXPECT_THROW(param_hazard(theta(2, 0.5, {0}), 0.0), DataError);
    const double z = 0.0;
    EXPECT_NEAR(conditional_cdf(theta(1, 1, {0.4}), 2.0, {&z, 1}), 1.0 - std::exp(-2.0), 1e-15);
}

TEST(WeibullTheta, CdfIsADistribution) {
    const WeibullTheta t = theta(1.5, 0.7, {0.8});
    const double z = 0.6;
    double prev = 0.0;
    EXPECT_EQ(t.conditional_cdf(0.0, {&z, 1}), 0.0);
    for (int k = 1; k <= 200; ++k) {
        const double f = t.conditional_cdf(0.05 * k, {&z, 1});
        ASSERT_GE(f, prev);
        prev = f;
    }
    EXPECT_NEAR(t.conditional_cdf(1e6, {&z, 1}), 1.0, 1e-12);
}

TEST(WeibullTheta, HazardMonotoneExactlyWhenShapeBelowOne) {
    for (double nu : {0.3, 0.99, 1.0, 1.5}) {
        const WeibullTheta t = theta(1.0, nu, {0});
        bool nonincreasing = true;
        for (int k = 1; k < 100; ++k) nonincreasing = nonincreasing && t.hazard(0.1 * (k + 1)) <= t.hazard(0.1 * k);
        EXPECT_EQ(nonincreasing, nu <= 1.0) << nu;
    }
}

TEST(WeibullTheta, CumulativeHazardIsIntegralOfHazard) {
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    for (double nu : {0.3, 0.5, 0.9, 1.7}) {
        const WeibullTheta t = theta(1.3, nu, {0});
        for (double x : {0.5, 1.0, 4.0}) {
            // s = u^k with k = 2/nu makes the integrand smooth at zero
            const double k = 2.0 / nu;
            const double q = GK::integrate([&](double u) { return k * std::pow(u, k - 1) * t.hazard(std::pow(u, k)); },
                                           0.0, std::pow(x, 1.0 / k), 15, 1e-13);
            EXPECT_NEAR(q, t.cum_hazard(x), 1e-8);
        }
    }
}
