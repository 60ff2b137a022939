#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace coxmono {

/// Indices of the vertices of the least concave majorant of the points
/// (x[i], y[i]), x strictly ascending. Points on or below a chord are
/// dropped, so consecutive chord slopes are strictly decreasing. The first
/// and last points are always vertices. O(n) monotone-stack pass.
template <class Real>
std::vector<std::size_t> upper_hull(std::span<const Real> x, std::span<const Real> y) {
    std::vector<std::size_t> hull;
    hull.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        while (hull.size() >= 2) {
            const std::size_t a = hull[hull.size() - 2];
            const std::size_t b = hull.back();
            // b lies on or below the chord a->i
            const Real cross = (x[b] - x[a]) * (y[i] - y[a]) - (y[b] - y[a]) * (x[i] - x[a]);
            if (cross >= Real(0))
                hull.pop_back();
            else
                break;
        }
        hull.push_back(i);
    }
    return hull;
}

template <class Real>
std::vector<std::size_t> upper_hull(const std::vector<Real>& x, const std::vector<Real>& y) {
    return upper_hull(std::span<const Real>(x), std::span<const Real>(y));
}

}  // namespace coxmono
