#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "coxmono/errors.hpp"
#include "coxmono/random.hpp"

namespace coxmono {

/// One subject: follow-up time T = min(X, C), indicator Delta = 1{X <= C},
/// and covariates Z.
struct Observation {
    double time = 0.0;
    int status = 0;
    std::vector<double> covariates;
};

/// Validated, immutable right-censored sample with n >= 2 and a common
/// covariate dimension d >= 1. Storage is columnar; records keep input order
/// and `sorted_index()` gives the ascending-time permutation (events before
/// censorings at tied times, then input order).
class Dataset {
public:
    Dataset(std::vector<double> times, std::vector<int> status,
            std::vector<double> covariates, std::size_t dim)
        : times_(std::move(times)),
          status_(std::move(status)),
          z_(std::move(covariates)),
          dim_(dim) {
        validate();
        build_order();
    }

    explicit Dataset(const std::vector<Observation>& obs) : dim_(obs.empty() ? 0 : obs.front().covariates.size()) {
        times_.reserve(obs.size());
        status_.reserve(obs.size());
        z_.reserve(obs.size() * dim_);
        for (std::size_t i = 0; i < obs.size(); ++i) {
            if (obs[i].covariates.size() != dim_)
                throw DataError("observation " + std::to_string(i) + " has covariate dimension " +
                                std::to_string(obs[i].covariates.size()) + ", expected " +
                                std::to_string(dim_));
            times_.push_back(obs[i].time);
            status_.push_back(obs[i].status);
            z_.insert(z_.end(), obs[i].covariates.begin(), obs[i].covariates.end());
        }
        validate();
        build_order();
    }

    std::size_t size() const noexcept { return times_.size(); }
    std::size_t dim() const noexcept { return dim_; }

    double time(std::size_t i) const { return times_[i]; }
    int status(std::size_t i) const { return status_[i]; }
    std::span<const double> covariates(std::size_t i) const {
        return {z_.data() + i * dim_, dim_};
    }

    Observation observation(std::size_t i) const {
        auto z = covariates(i);
        return {times_[i], status_[i], {z.begin(), z.end()}};
    }

    const std::vector<double>& times() const noexcept { return times_; }
    const std::vector<int>& statuses() const noexcept { return status_; }
    const std::vector<double>& covariate_matrix() const noexcept { return z_; }
    const std::vector<std::size_t>& sorted_index() const noexcept { return order_; }

    std::size_t events() const {
        return static_cast<std::size_t>(std::count(status_.begin(), status_.end(), 1));
    }
    double max_time() const { return *std::max_element(times_.begin(), times_.end()); }

    /// beta'Z_i
    double linear_predictor(std::size_t i, std::span<const double> beta) const {
        double s = 0.0;
        for (std::size_t k = 0; k < dim_; ++k) s += beta[k] * z_[i * dim_ + k];
        return s;
    }

    /// Records at `indices`, in the given order.
    Dataset subset(std::span<const std::size_t> indices) const {
        std::vector<double> t;
        std::vector<int> s;
        std::vector<double> z;
        t.reserve(indices.size());
        s.reserve(indices.size());
        z.reserve(indices.size() * dim_);
        for (std::size_t i : indices) {
            t.push_back(times_[i]);
            s.push_back(status_[i]);
            auto zi = covariates(i);
            z.insert(z.end(), zi.begin(), zi.end());
        }
        return Dataset(std::move(t), std::move(s), std::move(z), dim_);
    }

private:
    void validate() const {
        if (dim_ < 1) throw DataError("covariate dimension must be at least 1");
        if (times_.size() < 2) throw DataError("a dataset needs at least 2 observations");
        if (status_.size() != times_.size() || z_.size() != times_.size() * dim_)
            throw DataError("inconsistent column lengths");
        for (std::size_t i = 0; i < times_.size(); ++i) {
            if (!std::isfinite(times_[i]) || times_[i] < 0.0)
                throw DataError("observation " + std::to_string(i) + ": time must be finite and nonnegative");
            if (status_[i] != 0 && status_[i] != 1)
                throw DataError("observation " + std::to_string(i) + ": status must be 0 or 1");
        }
        for (double v : z_)
            if (!std::isfinite(v)) throw DataError("covariates must be finite");
    }

    void build_order() {
        order_.resize(times_.size());
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        std::stable_sort(order_.begin(), order_.end(), [this](std::size_t a, std::size_t b) {
            if (times_[a] != times_[b]) return times_[a] < times_[b];
            return status_[a] > status_[b];
        });
    }

    std::vector<double> times_;
    std::vector<int> status_;
    std::vector<double> z_;
    std::size_t dim_;
    std::vector<std::size_t> order_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

inline bool parse_double(std::string_view s, double& out) {
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

/// Shortest decimal representation that round-trips to the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace detail

/// Parses `time,status,z1,...,zd` CSV. Blank lines and lines starting with
/// '#' are skipped; errors name the 1-based physical line number.
inline Dataset read_csv(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    std::size_t dim = 0;
    bool have_header = false;
    std::vector<double> times;
    std::vector<int> status;
    std::vector<double> z;
    auto fail = [&](const std::string& what) {
        throw DataError(what + " at line " + std::to_string(lineno));
    };
    while (std::getline(in, line)) {
        ++lineno;
        const auto view = detail::trim(line);
        if (view.empty() || view.front() == '#') continue;
        const auto fields = detail::split_fields(view);
        if (!have_header) {
            if (fields.size() < 3 || fields[0] != "time" || fields[1] != "status")
                fail("header must be time,status,z1,...,zd");
            dim = fields.size() - 2;
            have_header = true;
            continue;
        }
        if (fields.size() != dim + 2)
            fail("expected " + std::to_string(dim + 2) + " fields, found " + std::to_string(fields.size()));
        double t = 0.0, s = 0.0;
        if (!detail::parse_double(fields[0], t) || !std::isfinite(t)) fail("non-numeric time");
        if (t < 0.0) fail("negative time");
        if (!detail::parse_double(fields[1], s)) fail("non-numeric status");
        if (s != 0.0 && s != 1.0) fail("status must be 0 or 1");
        times.push_back(t);
        status.push_back(static_cast<int>(s));
        for (std::size_t k = 0; k < dim; ++k) {
            double v = 0.0;
            if (!detail::parse_double(fields[k + 2], v) || !std::isfinite(v))
                fail("non-numeric covariate z" + std::to_string(k + 1));
            z.push_back(v);
        }
    }
    if (!have_header) throw DataError("missing header row");
    return Dataset(std::move(times), std::move(status), std::move(z), dim);
}

inline Dataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return read_csv(in);
}

inline void write_csv(std::ostream& out, const Dataset& data) {
    out << "time,status";
    for (std::size_t k = 0; k < data.dim(); ++k) out << ",z" << (k + 1);
    out << '\n';
    for (std::size_t i = 0; i < data.size(); ++i) {
        out << detail::format_double(data.time(i)) << ',' << data.status(i);
        for (double v : data.covariates(i)) out << ',' << detail::format_double(v);
        out << '\n';
    }
}

/// Seed-deterministic partition into sizes floor(ratio*n) and the rest.
/// Both parts keep the input order of their records.
inline std::pair<Dataset, Dataset> split(const Dataset& data, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw DataError("split ratio must lie in (0, 1)");
    const std::size_t n = data.size();
    const auto n1 = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
    if (n1 < 2 || n - n1 < 2)
        throw DataError("split produces a subsample smaller than 2 (n=" + std::to_string(n) + ")");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(derive_seed(seed, 0x5B117ull));
    for (std::size_t i = 0; i < n1; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(perm[i], perm[j]);
    }
    std::sort(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n1));
    std::sort(perm.begin() + static_cast<std::ptrdiff_t>(n1), perm.end());
    return {data.subset({perm.data(), n1}), data.subset({perm.data() + n1, n - n1})};
}

}  // namespace coxmono
