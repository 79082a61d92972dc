#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>
#include <vector>

namespace rvrec {

struct Point2 {
    double x = 0, y = 0;
    bool operator==(const Point2&) const = default;
};

struct Point3 {
    double x = 0, y = 0, z = 0;
    bool operator==(const Point3&) const = default;
};

namespace detail {

inline std::size_t neighbour_count(std::size_t n, double bandwidth) {
    const auto k = static_cast<std::size_t>(std::ceil(bandwidth * static_cast<double>(n) - 1e-12));
    return std::clamp<std::size_t>(k, 1, n);
}

}  // namespace detail

/// Local linear regression with uniform weights over the ceil(bandwidth*n)
/// nearest neighbours in x. Returns the fitted value at each input point.
inline std::vector<double> loess_fit_2d(const std::vector<Point2>& pts, double bandwidth = 0.5) {
    const std::size_t n = pts.size();
    const std::size_t k = detail::neighbour_count(n, bandwidth);
    std::vector<double> fitted(n);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Point2 p = pts[i];
        std::iota(order.begin(), order.end(), std::size_t{0});
        auto key = [&](std::size_t j) { return std::tuple(std::abs(pts[j].x - p.x), pts[j].x, pts[j].y, j); };
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                          [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
        std::vector<Point2> nb;
        nb.reserve(k);
        for (std::size_t j = 0; j < k; ++j) nb.push_back(pts[order[j]]);
        std::sort(nb.begin(), nb.end(), [](const Point2& a, const Point2& b) {
            return std::tie(a.x, a.y) < std::tie(b.x, b.y);
        });
        double mx = 0, my = 0;
        for (const auto& q : nb) {
            mx += q.x;
            my += q.y;
        }
        mx /= static_cast<double>(k);
        my /= static_cast<double>(k);
        if (nb.front().x == nb.back().x) {
            fitted[i] = my;
            continue;
        }
        double sxx = 0, sxy = 0;
        for (const auto& q : nb) {
            sxx += (q.x - mx) * (q.x - mx);
            sxy += (q.x - mx) * (q.y - my);
        }
        fitted[i] = my + sxy / sxx * (p.x - mx);
    }
    return fitted;
}

/// Local plane fit z ~ x + y with uniform weights over the nearest
/// neighbours in z-scored (x, y). Singular neighbourhoods fall back to the
/// neighbourhood mean.
inline std::vector<double> loess_fit_3d(const std::vector<Point3>& pts, double bandwidth = 0.5) {
    const std::size_t n = pts.size();
    const std::size_t k = detail::neighbour_count(n, bandwidth);
    std::vector<double> fitted(n);
    if (n == 0) return fitted;

    auto spread = [&](auto get) {
        double m = 0;
        for (const auto& p : pts) m += get(p);
        m /= static_cast<double>(n);
        double v = 0;
        for (const auto& p : pts) v += (get(p) - m) * (get(p) - m);
        const double sd = std::sqrt(v / static_cast<double>(n));
        return sd > 0 ? sd : 1.0;
    };
    const double sx = spread([](const Point3& p) { return p.x; });
    const double sy = spread([](const Point3& p) { return p.y; });

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Point3 p = pts[i];
        auto dist = [&](std::size_t j) {
            const double dx = (pts[j].x - p.x) / sx, dy = (pts[j].y - p.y) / sy;
            return dx * dx + dy * dy;
        };
        std::iota(order.begin(), order.end(), std::size_t{0});
        auto key = [&](std::size_t j) { return std::tuple(dist(j), pts[j].x, pts[j].y, pts[j].z, j); };
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                          [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
        std::vector<Point3> nb;
        nb.reserve(k);
        for (std::size_t j = 0; j < k; ++j) nb.push_back(pts[order[j]]);
        std::sort(nb.begin(), nb.end(), [](const Point3& a, const Point3& b) {
            return std::tie(a.x, a.y, a.z) < std::tie(b.x, b.y, b.z);
        });
        double mx = 0, my = 0, mz = 0;
        for (const auto& q : nb) {
            mx += q.x;
            my += q.y;
            mz += q.z;
        }
        const auto kd = static_cast<double>(k);
        mx /= kd;
        my /= kd;
        mz /= kd;
        double sxx = 0, syy = 0, sxy = 0, sxz = 0, syz = 0;
        for (const auto& q : nb) {
            const double dx = q.x - mx, dy = q.y - my, dz = q.z - mz;
            sxx += dx * dx;
            syy += dy * dy;
            sxy += dx * dy;
            sxz += dx * dz;
            syz += dy * dz;
        }
        const double det = sxx * syy - sxy * sxy;
        if (!(det > 1e-10 * sxx * syy) || sxx == 0 || syy == 0) {
            fitted[i] = mz;
            continue;
        }
        const double b = (sxz * syy - syz * sxy) / det;
        const double c = (syz * sxx - sxz * sxy) / det;
        fitted[i] = mz + b * (p.x - mx) + c * (p.y - my);
    }
    return fitted;
}

}  // namespace rvrec
