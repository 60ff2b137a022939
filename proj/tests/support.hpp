#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "coxmono/random.hpp"
#include "coxmono/survival_data.hpp"

namespace coxmono::support {

/// Random dataset with n records, dim covariates in [-1, 1], times from a
/// small grid when `ties` is set (so tied times are common) and roughly
/// 70% events. The first record is always an event.
inline Dataset random_dataset(Rng& rng, std::size_t n, std::size_t dim, bool ties) {
    std::vector<double> t(n), z(n * dim);
    std::vector<int> s(n);
    for (std::size_t i = 0; i < n; ++i) {
        t[i] = ties ? 0.25 * static_cast<double>(1 + rng.below(12)) : rng.exponential();
        s[i] = i == 0 || rng.uniform() < 0.7 ? 1 : 0;
        for (std::size_t k = 0; k < dim; ++k) z[i * dim + k] = rng.uniform(-1.0, 1.0);
    }
    return Dataset(std::move(t), std::move(s), std::move(z), dim);
}

/// Two-sample KS distance between an empirical sample and a cdf.
template <class Cdf>
double ks_distance(std::vector<double> xs, const Cdf& cdf) {
    std::sort(xs.begin(), xs.end());
    const auto n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = cdf(xs[i]);
        d = std::max({d, std::abs(static_cast<double>(i + 1) / n - f), std::abs(f - static_cast<double>(i) / n)});
    }
    return d;
}

inline double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double variance(const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

}  // namespace coxmono::support
