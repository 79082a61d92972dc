#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "rvrec/loess.hpp"

namespace rvrec {

using Triangle = std::array<std::size_t, 3>;

namespace detail {

inline double orient(const Point2& a, const Point2& b, const Point2& c) {
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

/// True when d lies strictly inside the circumcircle of counter-clockwise abc.
inline bool in_circumcircle(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
    const double adx = a.x - d.x, ady = a.y - d.y;
    const double bdx = b.x - d.x, bdy = b.y - d.y;
    const double cdx = c.x - d.x, cdy = c.y - d.y;
    const double det = (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy) -
                       (bdx * bdx + bdy * bdy) * (adx * cdy - cdx * ady) +
                       (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady);
    const double scale = (adx * adx + ady * ady + bdx * bdx + bdy * bdy + cdx * cdx + cdy * cdy);
    return det > 1e-12 * scale * scale;
}

}  // namespace detail

/// Bowyer-Watson Delaunay triangulation. Points must be distinct; returns
/// counter-clockwise index triples into `pts`.
inline std::vector<Triangle> delaunay(const std::vector<Point2>& pts) {
    const std::size_t n = pts.size();
    if (n < 3) return {};
    double lo_x = pts[0].x, hi_x = pts[0].x, lo_y = pts[0].y, hi_y = pts[0].y;
    for (const auto& p : pts) {
        lo_x = std::min(lo_x, p.x);
        hi_x = std::max(hi_x, p.x);
        lo_y = std::min(lo_y, p.y);
        hi_y = std::max(hi_y, p.y);
    }
    const double span = std::max({hi_x - lo_x, hi_y - lo_y, 1.0});
    const double cx = (lo_x + hi_x) / 2, cy = (lo_y + hi_y) / 2;

    std::vector<Point2> all = pts;
    all.push_back({cx - 40 * span, cy - 30 * span});
    all.push_back({cx + 40 * span, cy - 30 * span});
    all.push_back({cx, cy + 40 * span});

    std::vector<Triangle> tris = {{n, n + 1, n + 2}};
    for (std::size_t i = 0; i < n; ++i) {
        const Point2& p = all[i];
        std::vector<Triangle> keep;
        std::map<std::pair<std::size_t, std::size_t>, int> edges;
        for (const auto& t : tris) {
            if (detail::in_circumcircle(all[t[0]], all[t[1]], all[t[2]], p)) {
                for (int e = 0; e < 3; ++e) {
                    std::size_t a = t[e], b = t[(e + 1) % 3];
                    ++edges[{std::min(a, b), std::max(a, b)}];
                }
            } else {
                keep.push_back(t);
            }
        }
        if (keep.size() == tris.size()) {
            // On a circumcircle boundary everywhere: insert into the containing triangle.
            for (std::size_t ti = 0; ti < keep.size(); ++ti) {
                const auto& t = keep[ti];
                if (detail::orient(all[t[0]], all[t[1]], p) >= 0 && detail::orient(all[t[1]], all[t[2]], p) >= 0 &&
                    detail::orient(all[t[2]], all[t[0]], p) >= 0) {
                    for (int e = 0; e < 3; ++e) {
                        std::size_t a = t[e], b = t[(e + 1) % 3];
                        ++edges[{std::min(a, b), std::max(a, b)}];
                    }
                    keep.erase(keep.begin() + static_cast<std::ptrdiff_t>(ti));
                    break;
                }
            }
        }
        for (const auto& [e, count] : edges) {
            if (count != 1) continue;
            Triangle t{e.first, e.second, i};
            const double o = detail::orient(all[t[0]], all[t[1]], all[t[2]]);
            if (o == 0) continue;
            if (o < 0) std::swap(t[0], t[1]);
            keep.push_back(t);
        }
        tris = std::move(keep);
    }
    std::vector<Triangle> out;
    for (const auto& t : tris)
        if (t[0] < n && t[1] < n && t[2] < n) out.push_back(t);
    return out;
}

/// Regular grid of `nx * ny` samples, row-major (`values[iy * nx + ix]`).
struct Grid {
    std::vector<double> xs;
    std::vector<double> ys;
    std::vector<double> values;

    double& at(std::size_t ix, std::size_t iy) { return values[iy * xs.size() + ix]; }
    double at(std::size_t ix, std::size_t iy) const { return values[iy * xs.size() + ix]; }
};

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> v(n);
    if (n == 1) {
        v[0] = lo;
        return v;
    }
    for (std::size_t i = 0; i < n; ++i)
        v[i] = i + 1 == n ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

namespace detail {

/// For each query abscissa, the site minimising (q - s.x)^2 + s.h, via the
/// lower envelope of parabolas. `sites` must be sorted by x with distinct x.
struct Parabola {
    double x, h;
    std::size_t id;
};

inline std::vector<std::size_t> envelope_argmin(const std::vector<Parabola>& sites, const std::vector<double>& queries) {
    const std::size_t m = sites.size();
    std::vector<std::size_t> v(m);
    std::vector<double> z(m + 1);
    std::size_t k = 0;
    v[0] = 0;
    z[0] = -std::numeric_limits<double>::infinity();
    z[1] = std::numeric_limits<double>::infinity();
    auto cross = [&](std::size_t a, std::size_t b) {
        const auto& p = sites[a];
        const auto& q = sites[b];
        return ((q.h + q.x * q.x) - (p.h + p.x * p.x)) / (2 * (q.x - p.x));
    };
    for (std::size_t q = 1; q < m; ++q) {
        double s = cross(v[k], q);
        while (s <= z[k]) {
            --k;
            s = cross(v[k], q);
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = std::numeric_limits<double>::infinity();
    }
    std::vector<std::size_t> out(queries.size());
    std::size_t j = 0;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        while (z[j + 1] < queries[i]) ++j;
        out[i] = sites[v[j]].id;
    }
    return out;
}

}  // namespace detail

/// Piecewise-linear interpolation of scattered values onto a grid over the
/// Delaunay triangulation; cells outside the hull take the nearest sample.
inline Grid grid_surface(const std::vector<Point3>& samples, const std::vector<double>& xs,
                         const std::vector<double>& ys) {
    // Duplicate (x, y) sites are collapsed to their first value.
    std::vector<Point2> sites;
    std::vector<double> vals;
    {
        std::map<std::pair<double, double>, double> uniq;
        for (const auto& s : samples) uniq.emplace(std::pair(s.x, s.y), s.z);
        for (const auto& [xy, z] : uniq) {
            sites.push_back({xy.first, xy.second});
            vals.push_back(z);
        }
    }
    Grid g{xs, ys, std::vector<double>(xs.size() * ys.size(), 0.0)};
    std::vector<char> filled(g.values.size(), 0);
    if (sites.empty()) return g;

    for (const auto& t : delaunay(sites)) {
        const Point2 &a = sites[t[0]], &b = sites[t[1]], &c = sites[t[2]];
        const double area = detail::orient(a, b, c);
        if (!(area > 0)) continue;
        const double eps = 1e-12 * area;
        const double x0 = std::min({a.x, b.x, c.x}), x1 = std::max({a.x, b.x, c.x});
        const double y0 = std::min({a.y, b.y, c.y}), y1 = std::max({a.y, b.y, c.y});
        const auto ix0 = static_cast<std::size_t>(std::lower_bound(xs.begin(), xs.end(), x0) - xs.begin());
        const auto ix1 = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), x1) - xs.begin());
        const auto iy0 = static_cast<std::size_t>(std::lower_bound(ys.begin(), ys.end(), y0) - ys.begin());
        const auto iy1 = static_cast<std::size_t>(std::upper_bound(ys.begin(), ys.end(), y1) - ys.begin());
        for (std::size_t iy = iy0; iy < iy1; ++iy) {
            for (std::size_t ix = ix0; ix < ix1; ++ix) {
                const std::size_t cell = iy * xs.size() + ix;
                if (filled[cell]) continue;
                const Point2 p{xs[ix], ys[iy]};
                const double wa = detail::orient(b, c, p), wb = detail::orient(c, a, p), wc = detail::orient(a, b, p);
                if (wa < -eps || wb < -eps || wc < -eps) continue;
                g.values[cell] = (wa * vals[t[0]] + wb * vals[t[1]] + wc * vals[t[2]]) / (wa + wb + wc);
                filled[cell] = 1;
            }
        }
    }

    if (std::find(filled.begin(), filled.end(), 0) == filled.end()) return g;
    for (std::size_t iy = 0; iy < ys.size(); ++iy) {
        // Nearest site per column of this row: minimise (x - sx)^2 + (y - sy)^2.
        std::map<double, detail::Parabola> best;
        for (std::size_t s = 0; s < sites.size(); ++s) {
            const double dy = ys[iy] - sites[s].y;
            const detail::Parabola p{sites[s].x, dy * dy, s};
            auto [it, inserted] = best.emplace(p.x, p);
            if (!inserted && p.h < it->second.h) it->second = p;
        }
        std::vector<detail::Parabola> env;
        for (const auto& [x, p] : best) env.push_back(p);
        const auto nearest = detail::envelope_argmin(env, xs);
        for (std::size_t ix = 0; ix < xs.size(); ++ix) {
            const std::size_t cell = iy * xs.size() + ix;
            if (!filled[cell]) g.values[cell] = vals[nearest[ix]];
        }
    }
    return g;
}

}  // namespace rvrec
