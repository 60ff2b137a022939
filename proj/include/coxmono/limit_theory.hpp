#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "coxmono/concave_majorant.hpp"
#include "coxmono/cox_fit.hpp"
#include "coxmono/errors.hpp"
#include "coxmono/gof_tests.hpp"
#include "coxmono/nonparam.hpp"
#include "coxmono/parallel.hpp"
#include "coxmono/random.hpp"
#include "coxmono/scenario.hpp"

namespace coxmono {

/// Grid Monte Carlo for X(a) = argmax_u { -(u-a)^2 + W(u) } with W a
/// standard two-sided Brownian motion, u in [-half_width, half_width].
struct ArgmaxMCConfig {
    double half_width = 6.0;
    double step = 0.005;
    std::size_t reps = 200000;
    double a_max = 4.0;
    double a_step = 0.1;
    /// W == 0 (debug); then X(a) = a up to grid resolution.
    bool zero_noise = false;
    unsigned threads = 1;

    void validate() const {
        if (!(step > 0.0 && half_width > 0.0 && step < half_width))
            throw DataError("argmax grid needs 0 < step < half_width");
        if (reps < 1) throw DataError("reps must be >= 1");
        if (!(a_max > 0.0 && a_step > 0.0 && a_step <= a_max)) throw DataError("need 0 < a_step <= a_max");
    }

    std::size_t grid_points() const { return 2 * half_points() + 1; }
    std::size_t half_points() const { return static_cast<std::size_t>(std::llround(half_width / step)); }
};

struct XSamples {
    std::vector<double> a_values;
    std::size_t reps = 0;
    std::vector<double> values;  // row-major reps x a_values.size()
    std::size_t boundary_hits = 0;
    std::vector<std::string> warnings;

    double operator()(std::size_t rep, std::size_t k) const { return values[rep * a_values.size() + k]; }
};

namespace detail {

/// Per-path argmax finder. The argmax over grid points of
/// y_k + 2 a u_k (y = W - u^2) lies on the upper hull of (u_k, y_k); the
/// vertex is the first one whose right chord slope is <= -2a, which also
/// breaks exact ties toward the smallest u.
class ArgmaxPath {
public:
    explicit ArgmaxPath(const ArgmaxMCConfig& cfg) : cfg_(cfg), u_(cfg.grid_points()), y_(cfg.grid_points()) {
        const auto c = static_cast<std::ptrdiff_t>(cfg.half_points());
        for (std::size_t k = 0; k < u_.size(); ++k)
            u_[k] = static_cast<double>(static_cast<std::ptrdiff_t>(k) - c) * cfg.step;
    }

    void draw(Rng& rng) {
        const std::size_t c = cfg_.half_points();
        const double sd = std::sqrt(cfg_.step);
        double w = 0.0;
        y_[c] = 0.0;
        for (std::size_t k = c + 1; k < u_.size(); ++k) {
            if (!cfg_.zero_noise) w += sd * rng.normal();
            y_[k] = w;
        }
        w = 0.0;
        for (std::size_t k = c; k-- > 0;) {
            if (!cfg_.zero_noise) w += sd * rng.normal();
            y_[k] = w;
        }
        for (std::size_t k = 0; k < u_.size(); ++k) y_[k] -= u_[k] * u_[k];
        hull_ = upper_hull(u_, y_);
        slopes_.resize(hull_.size() - 1);
        for (std::size_t j = 0; j + 1 < hull_.size(); ++j)
            slopes_[j] = (y_[hull_[j + 1]] - y_[hull_[j]]) / (u_[hull_[j + 1]] - u_[hull_[j]]);
    }

    /// Grid index of the argmax for shift a.
    std::size_t argmax_index(double a) const {
        const double target = -2.0 * a;
        const auto it = std::partition_point(slopes_.begin(), slopes_.end(), [target](double s) { return s > target; });
        return hull_[static_cast<std::size_t>(it - slopes_.begin())];
    }

    double u(std::size_t k) const { return u_[k]; }
    std::size_t size() const { return u_.size(); }

private:
    const ArgmaxMCConfig& cfg_;
    std::vector<double> u_;
    std::vector<double> y_;
    std::vector<std::size_t> hull_;
    std::vector<double> slopes_;
};

inline constexpr std::size_t kChunk = 1000;

}  // namespace detail

/// Samples X(a) for every a in `a_values`, one common path per replicate.
/// Replicate r uses stream derive_seed(seed, r).
inline XSamples simulate_X(const std::vector<double>& a_values, const ArgmaxMCConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    XSamples out;
    out.a_values = a_values;
    out.reps = cfg.reps;
    out.values.resize(cfg.reps * a_values.size());
    const std::size_t chunks = (cfg.reps + detail::kChunk - 1) / detail::kChunk;
    std::vector<std::size_t> hits(chunks, 0);
    parallel_for(chunks, cfg.threads, [&](std::size_t ch) {
        detail::ArgmaxPath path(cfg);
        const std::size_t end = std::min(cfg.reps, (ch + 1) * detail::kChunk);
        for (std::size_t r = ch * detail::kChunk; r < end; ++r) {
            Rng rng(derive_seed(seed, r));
            path.draw(rng);
            bool hit = false;
            for (std::size_t k = 0; k < a_values.size(); ++k) {
                const std::size_t idx = path.argmax_index(a_values[k]);
                hit = hit || idx == 0 || idx + 1 == path.size();
                out.values[r * a_values.size() + k] = path.u(idx);
            }
            hits[ch] += hit ? 1 : 0;
        }
    });
    out.boundary_hits = std::accumulate(hits.begin(), hits.end(), std::size_t{0});
    if (static_cast<double>(out.boundary_hits) > 0.01 * static_cast<double>(cfg.reps))
        out.warnings.emplace_back("argmax at grid boundary in more than 1% of replicates: increase half_width");
    return out;
}

struct LimitConstants {
    double p = 1.0;
    double e_abs_x0_p = 0.0;  // E|X(0)|^p
    double k_p = 0.0;         // int_0^inf cov(|X(0)|^p, |X(a)-a|^p) da
    double e_stderr = 0.0;
    double k_stderr = 0.0;
    std::vector<double> a_grid;
    std::vector<double> covariance;  // cov(|X(0)|^p, |X(a)-a|^p) on a_grid
    std::vector<std::string> warnings;
};

/// MC estimates of E|X(0)|^p and k_p (trapezoid over [0, a_max]).
/// Chunks of 1000 replicates are reduced in chunk order, so results do not
/// depend on the thread count.
inline LimitConstants estimate_constants(double p, const ArgmaxMCConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    if (!(p >= 1.0 && p < 2.5)) throw DataError("p must lie in [1, 2.5)");
    const auto m = static_cast<std::size_t>(std::llround(cfg.a_max / cfg.a_step)) + 1;
    std::vector<double> a_grid(m);
    for (std::size_t k = 0; k < m; ++k) a_grid[k] = std::min(cfg.a_max, static_cast<double>(k) * cfg.a_step);

    // trapezoid weights on a_grid
    std::vector<double> wts(m, 0.0);
    for (std::size_t k = 0; k + 1 < m; ++k) {
        const double h = a_grid[k + 1] - a_grid[k];
        wts[k] += 0.5 * h;
        wts[k + 1] += 0.5 * h;
    }

    const std::size_t chunks = (cfg.reps + detail::kChunk - 1) / detail::kChunk;
    struct ChunkSums {
        std::vector<double> sum_y, sum_xy;
        std::size_t hits = 0;
    };
    std::vector<ChunkSums> sums(chunks);
    std::vector<double> x0(cfg.reps), integ(cfg.reps);
    parallel_for(chunks, cfg.threads, [&](std::size_t ch) {
        detail::ArgmaxPath path(cfg);
        ChunkSums& cs = sums[ch];
        cs.sum_y.assign(m, 0.0);
        cs.sum_xy.assign(m, 0.0);
        const std::size_t end = std::min(cfg.reps, (ch + 1) * detail::kChunk);
        for (std::size_t r = ch * detail::kChunk; r < end; ++r) {
            Rng rng(derive_seed(seed, r));
            path.draw(rng);
            double x = 0.0, y_int = 0.0;
            bool hit = false;
            for (std::size_t k = 0; k < m; ++k) {
                const std::size_t idx = path.argmax_index(a_grid[k]);
                hit = hit || idx == 0 || idx + 1 == path.size();
                const double y = std::pow(std::abs(path.u(idx) - a_grid[k]), p);
                if (k == 0) x = y;
                cs.sum_y[k] += y;
                cs.sum_xy[k] += x * y;
                y_int += wts[k] * y;
            }
            x0[r] = x;
            integ[r] = y_int;
            cs.hits += hit ? 1 : 0;
        }
    });

    const auto N = static_cast<double>(cfg.reps);
    LimitConstants out;
    out.p = p;
    out.a_grid = a_grid;
    std::vector<double> sum_y(m, 0.0), sum_xy(m, 0.0);
    std::size_t hits = 0;
    for (const auto& cs : sums) {
        for (std::size_t k = 0; k < m; ++k) {
            sum_y[k] += cs.sum_y[k];
            sum_xy[k] += cs.sum_xy[k];
        }
        hits += cs.hits;
    }
    const double mean_x = sum_y[0] / N;
    out.e_abs_x0_p = mean_x;
    out.covariance.resize(m);
    for (std::size_t k = 0; k < m; ++k) out.covariance[k] = sum_xy[k] / N - mean_x * sum_y[k] / N;

    // k_p = cov(|X(0)|^p, int |X(a)-a|^p da); its stderr from the
    // per-replicate products (x - xbar)(Y - Ybar).
    const double mean_int = std::accumulate(integ.begin(), integ.end(), 0.0) / N;
    double var_x = 0.0, k = 0.0, k2 = 0.0;
    for (std::size_t r = 0; r < cfg.reps; ++r) {
        const double dx = x0[r] - mean_x;
        const double prod = dx * (integ[r] - mean_int);
        var_x += dx * dx;
        k += prod;
        k2 += prod * prod;
    }
    out.k_p = k / N;
    const double n1 = std::max(1.0, N - 1.0);
    out.e_stderr = std::sqrt(var_x / n1 / N);
    out.k_stderr = std::sqrt(std::max(0.0, k2 / N - out.k_p * out.k_p) / n1);

    if (static_cast<double>(hits) > 0.01 * N)
        out.warnings.emplace_back("argmax at grid boundary in more than 1% of replicates: increase half_width");
    if (std::abs(out.covariance.back()) > 0.05 * std::abs(out.covariance.front()))
        out.warnings.emplace_back("covariance at a_max exceeds 5% of its value at 0: increase a_max");
    return out;
}

inline void write_constants_csv(std::ostream& out, const std::vector<LimitConstants>& rows) {
    out << "p,e_abs_x0_p,k_p,e_stderr,k_stderr\n";
    for (const auto& c : rows)
        out << detail::format_double(c.p) << ',' << detail::format_double(c.e_abs_x0_p) << ','
            << detail::format_double(c.k_p) << ',' << detail::format_double(c.e_stderr) << ','
            << detail::format_double(c.k_stderr) << '\n';
}

struct AsymptoticMoments {
    double m_p = 0.0;
    double sigma2_p = 0.0;
};

using RealFunction = std::function<double(double)>;

/// m_p = E|X(0)|^p int |4 l l' / Phi|^(p/3),
/// sigma_p^2 = 8 k_p int |4 l l' / Phi|^(2(p-1)/3) l / Phi,
/// both by adaptive Gauss-Kronrod (15 points) to relative 1e-8.
inline AsymptoticMoments asymptotic_moments(double p, const LimitConstants& consts, const RealFunction& lambda0,
                                            const RealFunction& dlambda0, const RealFunction& phi, Window window) {
    window.validate();
    for (int k = 0; k <= 100; ++k) {
        const double t = window.lo + (window.hi - window.lo) * k / 100.0;
        if (!(dlambda0(t) < 0.0)) throw DataError("hazard derivative must be negative on the window");
        if (!(phi(t) > 0.0)) throw DataError("Phi must be positive on the window");
    }
    using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
    auto core = [&](double t) { return std::abs(4.0 * lambda0(t) * dlambda0(t) / phi(t)); };
    const double i_mean = GK::integrate([&](double t) { return std::pow(core(t), p / 3.0); }, window.lo,
                                        window.hi, 20, 1e-8);
    const double i_var = GK::integrate(
        [&](double t) { return std::pow(core(t), 2.0 * (p - 1.0) / 3.0) * lambda0(t) / phi(t); }, window.lo,
        window.hi, 20, 1e-8);
    return {consts.e_abs_x0_p * i_mean, 8.0 * consts.k_p * i_var};
}

/// Phi(t; beta) for one Uniform[0,1] covariate and Uniform[0, tau]
/// censoring: (1 - t/tau)_+ * int_0^1 e^{bz} exp(-L e^{bz}) dz with
/// L = Lambda_0(t); the z-integral is (e^{-L} - e^{-L e^b}) / (b L).
inline double phi_uniform_exact(const Scenario& s, double t) {
    if (s.beta.size() != 1) throw DataError("closed-form Phi needs a single covariate");
    if (t >= s.censor_tau) return 0.0;
    const double b = s.beta[0];
    const double cens = t <= 0.0 ? 1.0 : 1.0 - t / s.censor_tau;
    const double L = t <= 0.0 ? 0.0 : s.baseline.cum_hazard(t);
    double z_part;
    if (b == 0.0)
        z_part = std::exp(-L);
    else if (L == 0.0)
        z_part = std::expm1(b) / b;
    else
        z_part = (std::exp(-L) - std::exp(-L * std::exp(b))) / (b * L);
    return cens * z_part;
}

/// n^(p/3) int_window |lambda_hat_n - lambda_0|^p for `reps` simulated
/// datasets; dataset r uses seed derive_seed(seed, r).
inline std::vector<double> scaled_lp_errors(const Scenario& s, double p, std::size_t n, std::size_t reps,
                                            std::uint64_t seed, unsigned threads = 1) {
    Scenario sc = s;
    sc.n = n;
    sc.validate();
    std::vector<double> out(reps);
    parallel_for(reps, threads, [&](std::size_t r) {
        const Dataset data = sample(sc, derive_seed(seed, r));
        const CoxFit cox = fit(data);
        const MonotoneHazard est = grenander(breslow(data, cox.beta_hat), sc.window);
        out[r] = scale_statistic(n, lp_distance(est, sc.baseline, p), p);
    });
    return out;
}

struct CltReport {
    double p = 1.0;
    std::size_t n = 0;
    std::size_t reps = 0;
    double m_p = 0.0;
    double sigma2_p = 0.0;
    double mean_scaled_error = 0.0;  // mean of n^(p/3) J_n
    double standardized_mean = 0.0;
    double standardized_variance = 0.0;
    double jarque_bera = 0.0;
    double normality_pvalue = 0.0;
};

enum class PhiSource { monte_carlo, exact_uniform };

struct CltOptions {
    std::size_t phi_sample_size = 1000000;
    PhiSource phi_source = PhiSource::monte_carlo;
    unsigned threads = 1;
};

/// Simulates n^(1/6)(n^(p/3) J_n - m_p)/sigma_p for `reps` datasets and
/// summarizes it. Phi(t; beta_0) comes from one large simulated sample
/// (default) or the closed form for uniform designs.
inline CltReport clt_check(const Scenario& s, double p, std::size_t n, std::size_t reps, std::uint64_t seed,
                           const LimitConstants& consts, const CltOptions& opt = {}) {
    s.validate();
    if (reps < 2) throw DataError("clt_check needs reps >= 2");
    RealFunction phi;
    if (opt.phi_source == PhiSource::exact_uniform) {
        phi = [s](double t) { return phi_uniform_exact(s, t); };
    } else {
        Scenario big = s;
        big.n = opt.phi_sample_size;
        const Dataset huge = sample(big, derive_seed(seed, 0xF1F1ull));
        auto risk = std::make_shared<RiskFunction>(huge, s.beta);
        phi = [risk](double t) { return (*risk)(t); };
    }
    const auto& base = s.baseline;
    const AsymptoticMoments am =
        asymptotic_moments(p, consts, [&base](double t) { return base.hazard(t); },
                           [&base](double t) { return base.hazard_derivative(t); }, phi, s.window);

    const std::vector<double> scaled = scaled_lp_errors(s, p, n, reps, derive_seed(seed, 0x5CA1Eull), opt.threads);
    CltReport rep;
    rep.p = p;
    rep.n = n;
    rep.reps = reps;
    rep.m_p = am.m_p;
    rep.sigma2_p = am.sigma2_p;
    const double root6 = std::pow(static_cast<double>(n), 1.0 / 6.0);
    const double sigma = std::sqrt(am.sigma2_p);
    std::vector<double> z(reps);
    for (std::size_t r = 0; r < reps; ++r) z[r] = root6 * (scaled[r] - am.m_p) / sigma;
    const auto N = static_cast<double>(reps);
    rep.mean_scaled_error = std::accumulate(scaled.begin(), scaled.end(), 0.0) / N;
    const double mean = std::accumulate(z.begin(), z.end(), 0.0) / N;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : z) {
        const double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= N;
    m3 /= N;
    m4 /= N;
    rep.standardized_mean = mean;
    rep.standardized_variance = m2 * N / (N - 1.0);
    const double skew = m3 / std::pow(m2, 1.5);
    const double kurt = m4 / (m2 * m2);
    rep.jarque_bera = N / 6.0 * (skew * skew + 0.25 * (kurt - 3.0) * (kurt - 3.0));
    rep.normality_pvalue = std::exp(-0.5 * rep.jarque_bera);  // chi-square(2) tail
    return rep;
}

}  // namespace coxmono
