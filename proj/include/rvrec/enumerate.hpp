#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "rvrec/chart.hpp"
#include "rvrec/dataset.hpp"
#include "rvrec/error.hpp"
#include "rvrec/render.hpp"

namespace rvrec {

inline constexpr int kBinOptions[] = {25, 15, 5};
inline constexpr Aggregate kValueAggregates[] = {Aggregate::mean, Aggregate::median, Aggregate::sum};

/// What a target keeps from its source and which slots it may change.
struct PartialSpec {
    ChartSpec source;
    bool densify = false;      // may bin and aggregate a disaggregated scatterplot
    bool rebin = false;        // may change maxbins of the source's binned channels
    bool mark_change = false;  // point -> rect
    std::vector<Channel> binned;  // source channels that already carry bins
};

/// One target's changes relative to its source. `maxbins` is keyed by the
/// source channel; `aggregate` is the aggregate introduced by densification.
struct TransformDescriptor {
    int height = 0;
    bool transposed = false;
    std::map<Channel, int> maxbins;
    std::optional<Aggregate> aggregate;
    std::optional<Mark> mark_change;
    bool operator==(const TransformDescriptor&) const = default;
};

struct Target {
    std::string id;
    TransformDescriptor descriptor;
    ChartSpec spec;
};

struct TargetSet {
    std::string source;
    std::vector<Target> targets;
};

inline Json to_json(const TransformDescriptor& d) {
    Json bins = Json::object();
    for (const auto& [c, b] : d.maxbins) bins[to_string(c)] = b;
    return {{"height", d.height},
            {"transposed", d.transposed},
            {"maxbins", std::move(bins)},
            {"aggregate", d.aggregate ? Json(to_string(*d.aggregate)) : Json(nullptr)},
            {"markChange", d.mark_change ? Json("point->" + to_string(*d.mark_change)) : Json(nullptr)}};
}

inline Json to_json(const TargetSet& set) {
    Json out = Json::array();
    for (const auto& t : set.targets)
        out.push_back({{"id", t.id}, {"descriptor", to_json(t.descriptor)}, {"spec", to_json(t.spec)}});
    return out;
}

namespace detail {

inline bool raw_continuous(const ChartSpec& s, Channel c) {
    const Encoding* e = s.find(c);
    return e && !e->is_count() && !e->aggregate && !e->binned() && s.kind_of(c) == FieldKind::continuous;
}

inline bool has_aggregate(const ChartSpec& s) {
    for (const auto& [c, e] : s.encoding)
        if (e.aggregate) return true;
    return false;
}

}  // namespace detail

inline PartialSpec to_partial_spec(const ChartSpec& source) {
    PartialSpec p;
    p.source = source;
    for (const auto& [c, e] : source.encoding)
        if (e.binned()) p.binned.push_back(c);
    const bool scatter = source.mark == Mark::point && !detail::has_aggregate(source) && p.binned.empty() &&
                         detail::raw_continuous(source, Channel::x) && detail::raw_continuous(source, Channel::y);
    p.densify = scatter;
    p.mark_change = scatter;
    p.rebin = source.mark != Mark::line && !p.binned.empty();
    return p;
}

/// Target heights at a fixed target width, from the proportionate height to
/// the inverse-aspect height in 50 px steps (both endpoints included).
inline std::vector<int> enumerate_heights(int source_w, int source_h, int target_w) {
    const int a = static_cast<int>(std::lround(static_cast<double>(target_w) * source_h / source_w));
    const int b = static_cast<int>(std::lround(static_cast<double>(target_w) * source_w / source_h));
    const int lo = std::min(a, b), hi = std::max(a, b);
    std::vector<int> out;
    for (int h = lo; h < hi; h += 50) out.push_back(h);
    out.push_back(hi);
    return out;
}

namespace detail {

/// Density strategies (everything but size and orientation) for a source.
inline std::vector<TransformDescriptor> density_strategies(const PartialSpec& p) {
    const ChartSpec& s = p.source;
    std::vector<TransformDescriptor> out;
    out.push_back({});

    if (p.rebin) {
        std::vector<std::map<Channel, int>> combos = {{}};
        for (Channel c : p.binned) {
            std::vector<int> options(std::begin(kBinOptions), std::end(kBinOptions));
            const int own = *s.find(c)->maxbins;
            if (std::find(options.begin(), options.end(), own) == options.end()) options.push_back(own);
            std::vector<std::map<Channel, int>> next;
            for (const auto& m : combos)
                for (int b : options) {
                    auto m2 = m;
                    if (b != own) m2[c] = b;
                    next.push_back(m2);
                }
            combos = std::move(next);
        }
        out.clear();
        for (auto& m : combos) out.push_back({0, false, std::move(m), std::nullopt, std::nullopt});
        return out;
    }
    if (!p.densify) return out;

    const bool has_size = s.has(Channel::size), has_shape = s.has(Channel::shape);
    const bool value_channel = raw_continuous(s, Channel::color) || raw_continuous(s, Channel::size);
    for (int bx : kBinOptions)
        for (int by : kBinOptions) {
            std::map<Channel, int> bins = {{Channel::x, bx}, {Channel::y, by}};
            if (!has_size) out.push_back({0, false, bins, Aggregate::count, std::nullopt});
            if (p.mark_change && !s.has(Channel::color) && !has_size && !has_shape)
                out.push_back({0, false, bins, Aggregate::count, Mark::rect});
            if (value_channel)
                for (Aggregate a : kValueAggregates) {
                    out.push_back({0, false, bins, a, std::nullopt});
                    if (p.mark_change && !has_size && !has_shape) out.push_back({0, false, bins, a, Mark::rect});
                }
        }
    for (Channel axis : {Channel::x, Channel::y})
        for (int b : kBinOptions)
            for (Aggregate a : kValueAggregates) out.push_back({0, false, {{axis, b}}, a, std::nullopt});
    return out;
}

}  // namespace detail

/// Applies a descriptor to a source spec at the given target width.
inline ChartSpec apply_transform(const ChartSpec& source, const TransformDescriptor& d, int target_w) {
    ChartSpec t = source;
    t.width = target_w;
    t.height = d.height;
    for (const auto& [c, b] : d.maxbins) {
        t.encoding.at(c).maxbins = b;
        t.encoding.at(c).aggregate.reset();
    }
    if (d.mark_change) t.mark = *d.mark_change;
    if (d.aggregate) {
        // Every unbinned continuous channel aggregates; a count adds its own
        // channel and averages the rest.
        for (auto& [c, e] : t.encoding) {
            if (d.maxbins.count(c) || !detail::raw_continuous(source, c)) continue;
            e.aggregate = *d.aggregate == Aggregate::count ? Aggregate::mean : *d.aggregate;
        }
        if (*d.aggregate == Aggregate::count) {
            const Channel slot = t.mark == Mark::rect ? Channel::color : Channel::size;
            t.encoding[slot] = Encoding{std::string(kCountField), std::nullopt, Aggregate::count, std::nullopt};
        }
    }
    if (d.transposed) std::swap(t.encoding.at(Channel::x), t.encoding.at(Channel::y));
    return t;
}

/// Cartesian product of heights x {as-is, transposed} x density strategies,
/// keeping only well-formed targets that render on `data` (when given).
inline TargetSet generate_targets(const ChartSpec& source, int target_w, const Dataset* data = nullptr,
                                  const RenderOptions& opts = {}) {
    const PartialSpec partial = to_partial_spec(source);
    const auto strategies = detail::density_strategies(partial);
    TargetSet set{"source", {}};
    std::set<std::string> seen;
    for (int h : enumerate_heights(source.width, source.height, target_w)) {
        for (bool transposed : {false, true}) {
            for (auto d : strategies) {
                d.height = h;
                d.transposed = transposed;
                ChartSpec spec = apply_transform(source, d, target_w);
                try {
                    validate(spec);
                    if (data) (void)render(*data, spec, opts);
                } catch (const Error&) {
                    continue;
                }
                if (!seen.insert(serialize_spec(spec)).second) continue;
                char id[16];
                std::snprintf(id, sizeof id, "t%04zu", set.targets.size() + 1);
                set.targets.push_back({id, std::move(d), std::move(spec)});
            }
        }
    }
    if (set.targets.empty()) throw EmptySpaceError("enumerate: no valid targets");
    return set;
}

}  // namespace rvrec
