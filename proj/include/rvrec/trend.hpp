#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rvrec/chart.hpp"
#include "rvrec/color.hpp"
#include "rvrec/error.hpp"
#include "rvrec/loess.hpp"
#include "rvrec/measures.hpp"
#include "rvrec/render.hpp"
#include "rvrec/triangulation.hpp"

namespace rvrec {

enum class TrendKind { Y_on_X, Color_on_XY, Size_on_XY };

inline std::string to_string(TrendKind k) {
    switch (k) {
        case TrendKind::Y_on_X: return "Y_on_X";
        case TrendKind::Color_on_XY: return "Color_on_XY";
        case TrendKind::Size_on_XY: return "Size_on_XY";
    }
    return {};
}

inline constexpr TrendKind kAllTrendKinds[] = {TrendKind::Y_on_X, TrendKind::Color_on_XY, TrendKind::Size_on_XY};
inline constexpr std::size_t kBreakpoints = 300;

struct TrendModelId {
    TrendKind kind = TrendKind::Y_on_X;
    std::optional<std::string> subgroup;
    auto operator<=>(const TrendModelId&) const = default;
};

/// A fitted trend resampled on a regular lattice: 2D curves leave `ys`
/// empty and hold one fitted value per breakpoint; 3D surfaces hold a
/// row-major `xs.size() * ys.size()` grid.
struct TrendCurve {
    std::vector<double> xs;
    std::vector<double> ys;
    std::vector<double> fitted;

    bool is_surface() const { return !ys.empty(); }
};

struct LinearizedColorScale {
    std::vector<Lab> ordered;
    std::vector<double> cumulative;
};

/// Arc length along a data-ordered sequence of colors.
inline LinearizedColorScale linearize_color(const std::vector<Lab>& colors) {
    LinearizedColorScale s{colors, {}};
    s.cumulative.reserve(colors.size());
    for (std::size_t i = 0; i < colors.size(); ++i)
        s.cumulative.push_back(i == 0 ? 0.0 : s.cumulative.back() + distance_color(colors[i - 1], colors[i]));
    return s;
}

/// Fitted 2D curve as (x, fitted y) samples sorted by x, one per distinct x.
inline std::vector<Point2> fitted_curve(const std::vector<Point2>& pts, double bandwidth = 0.5) {
    const auto fit = loess_fit_2d(pts, bandwidth);
    std::vector<Point2> curve;
    for (std::size_t i = 0; i < pts.size(); ++i) curve.push_back({pts[i].x, fit[i]});
    std::sort(curve.begin(), curve.end(), [](const Point2& a, const Point2& b) {
        return std::tie(a.x, a.y) < std::tie(b.x, b.y);
    });
    curve.erase(std::unique(curve.begin(), curve.end(), [](const Point2& a, const Point2& b) { return a.x == b.x; }),
                curve.end());
    return curve;
}

namespace detail {

inline double interpolate(const std::vector<Point2>& curve, double x) {
    if (curve.size() == 1 || x <= curve.front().x) return curve.front().y;
    if (x >= curve.back().x) return curve.back().y;
    auto hi = std::upper_bound(curve.begin(), curve.end(), x, [](double v, const Point2& p) { return v < p.x; });
    auto lo = hi - 1;
    const double u = (x - lo->x) / (hi->x - lo->x);
    return lo->y + (hi->y - lo->y) * u;
}

inline std::pair<double, double> extent(const std::vector<double>& v) {
    auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return {*lo, *hi};
}

}  // namespace detail

/// Scales the target curve by `source_width / target_width` on both axes and
/// resamples both curves on equally spaced breakpoints spanning the overlap
/// of their x extents.
inline std::pair<TrendCurve, TrendCurve> standardize_and_interpolate(const std::vector<Point2>& source,
                                                                      std::vector<Point2> target, double source_width,
                                                                      double target_width) {
    if (source.empty() || target.empty()) throw NoOverlapError("trend: empty curve");
    const double f = source_width / target_width;
    if (f != 1.0)
        for (auto& p : target) p = {p.x * f, p.y * f};
    const double lo = std::max(source.front().x, target.front().x);
    const double hi = std::min(source.back().x, target.back().x);
    if (lo > hi) throw NoOverlapError("trend: curves share no x range");
    TrendCurve a{linspace(lo, hi, kBreakpoints), {}, {}};
    TrendCurve b{a.xs, {}, {}};
    for (double x : a.xs) {
        a.fitted.push_back(detail::interpolate(source, x));
        b.fitted.push_back(detail::interpolate(target, x));
    }
    return {std::move(a), std::move(b)};
}

struct RelativeArea {
    double value = 0;
    bool degenerate = false;  // source area below 1e-9: `value` is unnormalized
};

namespace detail {

inline RelativeArea relative_difference(const TrendCurve& a, const TrendCurve& b, double cell) {
    if (a.fitted.size() != b.fitted.size()) throw NoOverlapError("trend: curves are not aligned");
    double diff = 0, base = 0;
    for (std::size_t i = 0; i < a.fitted.size(); ++i) {
        diff += std::abs(a.fitted[i] - b.fitted[i]);
        base += std::abs(a.fitted[i]);
    }
    diff *= cell;
    base *= cell;
    if (base < 1e-9) return {diff, true};
    return {diff / base, false};
}

inline double spacing(const std::vector<double>& v) {
    return v.size() > 1 ? (v.back() - v.front()) / static_cast<double>(v.size() - 1) : 0.0;
}

}  // namespace detail

/// Area between curves relative to the area under |a|.
inline RelativeArea area_between_curves(const TrendCurve& a, const TrendCurve& b) {
    return detail::relative_difference(a, b, detail::spacing(a.xs));
}

/// Volume between surfaces relative to the volume under |a|.
inline RelativeArea volume_between_surfaces(const TrendCurve& a, const TrendCurve& b) {
    return detail::relative_difference(a, b, detail::spacing(a.xs) * detail::spacing(a.ys));
}

/// Fits both point sets (target already scaled into source units), grids
/// the fitted values over the overlap of their (x, y) extents.
inline std::pair<TrendCurve, TrendCurve> standardize_and_grid(const std::vector<Point3>& source,
                                                               std::vector<Point3> target, double source_width,
                                                               double target_width, double bandwidth = 0.5) {
    if (source.empty() || target.empty()) throw NoOverlapError("trend: empty surface");
    const double f = source_width / target_width;
    if (f != 1.0)
        for (auto& p : target) p = {p.x * f, p.y * f, p.z};
    auto fit = [&](const std::vector<Point3>& pts) {
        const auto z = loess_fit_3d(pts, bandwidth);
        std::vector<Point3> out;
        for (std::size_t i = 0; i < pts.size(); ++i) out.push_back({pts[i].x, pts[i].y, z[i]});
        return out;
    };
    const auto fs = fit(source), ft = fit(target);
    auto bounds = [](const std::vector<Point3>& pts, auto get) {
        std::vector<double> v;
        for (const auto& p : pts) v.push_back(get(p));
        return detail::extent(v);
    };
    const auto [sx0, sx1] = bounds(fs, [](const Point3& p) { return p.x; });
    const auto [tx0, tx1] = bounds(ft, [](const Point3& p) { return p.x; });
    const auto [sy0, sy1] = bounds(fs, [](const Point3& p) { return p.y; });
    const auto [ty0, ty1] = bounds(ft, [](const Point3& p) { return p.y; });
    const double x0 = std::max(sx0, tx0), x1 = std::min(sx1, tx1);
    const double y0 = std::max(sy0, ty0), y1 = std::min(sy1, ty1);
    if (x0 > x1 || y0 > y1) throw NoOverlapError("trend: surfaces share no (x, y) range");
    const auto xs = linspace(x0, x1, kBreakpoints), ys = linspace(y0, y1, kBreakpoints);
    Grid gs = grid_surface(fs, xs, ys), gt = grid_surface(ft, xs, ys);
    return {TrendCurve{xs, ys, std::move(gs.values)}, TrendCurve{xs, ys, std::move(gt.values)}};
}

/// Per-model relative losses, their sum, and models that could not be
/// compared (infinite) or whose source had near-zero area (degenerate).
struct TrendLoss {
    std::map<std::string, double> components;
    double total = 0;
    std::set<std::string> infinite;
    std::set<std::string> degenerate;
};

namespace detail {

/// Channel-to-field keys of the channels a trend model reads.
struct TrendShape {
    std::string x, y;                 // field keys on the x and y channels
    std::optional<std::string> z;     // field key of the dependent for 3D models
};

inline std::optional<TrendShape> trend_shape(const RenderedView& v, TrendKind kind) {
    const auto& spec = v.spec;
    if (!is_quantitative(spec, Channel::x) || !is_quantitative(spec, Channel::y)) return std::nullopt;
    TrendShape s{match_key(v.channels.at(Channel::x)), match_key(v.channels.at(Channel::y)), std::nullopt};
    if (kind == TrendKind::Color_on_XY) {
        if (!is_quantitative(spec, Channel::color)) return std::nullopt;
        s.z = match_key(v.channels.at(Channel::color));
    } else if (kind == TrendKind::Size_on_XY) {
        if (!is_quantitative(spec, Channel::size)) return std::nullopt;
        s.z = match_key(v.channels.at(Channel::size));
    }
    return s;
}

/// Field keys of the nominal channels that split a view into subgroups.
inline std::vector<std::string> group_fields(const RenderedView& v) {
    std::vector<std::string> out;
    for (Channel c : {Channel::color, Channel::shape})
        if (v.spec.has(c) && !is_quantitative(v.spec, c)) out.push_back(match_key(v.channels.at(c)));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

/// Linearized color per tuple: cumulative ΔE along the data-ordered colors.
inline std::vector<double> linear_color_values(const RenderedView& v) {
    struct Entry {
        double value;
        Lab lab;
    };
    std::vector<Entry> entries;
    for (const auto& t : v.tuples) entries.push_back({t.color_value.value_or(0.0), t.color.value()});
    auto less = [](const Entry& a, const Entry& b) {
        return std::tie(a.value, a.lab.l, a.lab.a, a.lab.b) < std::tie(b.value, b.lab.l, b.lab.a, b.lab.b);
    };
    std::vector<Entry> sorted = entries;
    std::sort(sorted.begin(), sorted.end(), less);
    sorted.erase(std::unique(sorted.begin(), sorted.end(),
                             [](const Entry& a, const Entry& b) { return a.value == b.value && a.lab == b.lab; }),
                 sorted.end());
    std::vector<Lab> labs;
    for (const auto& e : sorted) labs.push_back(e.lab);
    const auto scale = linearize_color(labs);
    std::vector<double> out;
    for (const auto& e : entries) {
        auto it = std::lower_bound(sorted.begin(), sorted.end(), e, less);
        out.push_back(scale.cumulative[static_cast<std::size_t>(it - sorted.begin())]);
    }
    return out;
}

/// Trend samples for one view, in source orientation: x along the source's
/// x field, y bottom-up. `swap` marks a view whose axes carry the fields the
/// other way round. 2D samples carry the fitted value in y.
struct ViewSamples {
    std::map<std::optional<std::string>, std::vector<Point2>> curves;
    std::map<std::optional<std::string>, std::vector<Point3>> surfaces;
    double width = 0;  // extent of the axis carrying the source's x field
};

inline ViewSamples view_samples(const RenderedView& v, TrendKind kind, bool swap, bool grouped) {
    ViewSamples s;
    s.width = swap ? v.spec.height : v.spec.width;
    std::vector<double> z;
    if (kind == TrendKind::Color_on_XY) z = linear_color_values(v);
    std::map<std::optional<std::string>, std::vector<Point2>> raw2;
    for (std::size_t i = 0; i < v.tuples.size(); ++i) {
        const auto& t = v.tuples[i];
        const std::optional<std::string> key = grouped ? t.group : std::nullopt;
        const double dx = t.x, dy = v.spec.height - t.y;  // displayed, bottom-up
        if (kind == TrendKind::Y_on_X) {
            raw2[key].push_back({dx, dy});
        } else {
            const double zv = kind == TrendKind::Color_on_XY ? z[i] : t.size.value();
            s.surfaces[key].push_back(swap ? Point3{dy, dx, zv} : Point3{dx, dy, zv});
        }
    }
    // 2D: fit as displayed, then express in source orientation.
    for (auto& [key, pts] : raw2) {
        auto curve = fitted_curve(pts);
        if (swap) {
            for (auto& p : curve) p = {p.y, p.x};
            std::sort(curve.begin(), curve.end(), [](const Point2& a, const Point2& b) {
                return std::tie(a.x, a.y) < std::tie(b.x, b.y);
            });
            curve.erase(std::unique(curve.begin(), curve.end(),
                                    [](const Point2& a, const Point2& b) { return a.x == b.x; }),
                        curve.end());
        }
        s.curves[key] = std::move(curve);
    }
    return s;
}

}  // namespace detail

/// Sum over shared trend models of the relative area (2D) or volume (3D)
/// between LOESS fits, after standardizing the target to the source width.
/// Subgroups split by a nominal color/shape are matched by value and averaged.
inline TrendLoss trend_loss(const RenderedView& source, const RenderedView& target) {
    TrendLoss out;
    const bool grouped = !detail::group_fields(source).empty() && detail::group_fields(source) == detail::group_fields(target);
    for (TrendKind kind : kAllTrendKinds) {
        const auto s = detail::trend_shape(source, kind);
        const auto t = detail::trend_shape(target, kind);
        if (!s || !t || s->z != t->z) continue;
        bool swap = false;
        if (s->x == t->x && s->y == t->y) swap = false;
        else if (s->x == t->y && s->y == t->x) swap = true;
        else continue;

        const std::string name = to_string(kind);
        const auto ss = detail::view_samples(source, kind, false, grouped);
        const auto ts = detail::view_samples(target, kind, swap, grouped);
        std::vector<double> losses;
        bool degenerate = false;
        try {
            if (kind == TrendKind::Y_on_X) {
                for (const auto& [key, curve] : ss.curves) {
                    auto it = ts.curves.find(key);
                    if (it == ts.curves.end()) continue;
                    const auto [a, b] = standardize_and_interpolate(curve, it->second, ss.width, ts.width);
                    const auto r = area_between_curves(a, b);
                    degenerate = degenerate || r.degenerate;
                    losses.push_back(r.value);
                }
            } else {
                for (const auto& [key, pts] : ss.surfaces) {
                    auto it = ts.surfaces.find(key);
                    if (it == ts.surfaces.end()) continue;
                    const auto [a, b] = standardize_and_grid(pts, it->second, ss.width, ts.width);
                    const auto r = volume_between_surfaces(a, b);
                    degenerate = degenerate || r.degenerate;
                    losses.push_back(r.value);
                }
            }
        } catch (const NoOverlapError&) {
            out.components[name] = std::numeric_limits<double>::infinity();
            out.infinite.insert(name);
            continue;
        }
        if (losses.empty()) continue;
        std::sort(losses.begin(), losses.end());
        double sum = 0;
        for (double l : losses) sum += l;
        out.components[name] = sum / static_cast<double>(losses.size());
        if (degenerate) out.degenerate.insert(name);
    }
    out.total = detail::ordered_total(out.components);
    return out;
}

}  // namespace rvrec
