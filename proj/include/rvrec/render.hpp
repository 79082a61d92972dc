#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "rvrec/bin.hpp"
#include "rvrec/chart.hpp"
#include "rvrec/color.hpp"
#include "rvrec/dataset.hpp"
#include "rvrec/error.hpp"

namespace rvrec {

/// Identity of the data behind a channel; channels of two views match when
/// their bindings are equal.
struct FieldBinding {
    std::string field;
    std::optional<Aggregate> aggregate;

    bool is_count() const { return field == kCountField; }
    std::string label() const {
        if (is_count()) return "count(*)";
        return aggregate ? to_string(*aggregate) + "(" + field + ")" : field;
    }
    auto operator<=>(const FieldBinding&) const = default;
    bool operator==(const FieldBinding&) const = default;
};

inline FieldBinding binding_of(const Encoding& e) {
    return e.is_count() ? FieldBinding{std::string(kCountField), Aggregate::count}
                        : FieldBinding{e.field, e.aggregate};
}

/// True when the channel carries an ordered numeric quantity (continuous or
/// temporal field, binned or not, or any aggregate).
inline bool is_quantitative(const ChartSpec& spec, Channel c) {
    const Encoding* e = spec.find(c);
    if (!e) return false;
    if (e->is_count() || e->aggregate) return true;
    return spec.kind_of(c) != FieldKind::nominal;
}

struct RenderedTuple {
    double x = 0;
    double y = 0;
    std::optional<Lab> color;
    std::optional<double> size;  // mark area, px^2
    std::optional<std::string> shape;
    std::optional<std::string> group;
    std::vector<std::size_t> rows;  // indices into the source Dataset
    std::optional<double> color_value;  // datum behind a quantitative color
};

struct RenderedView {
    ChartSpec spec;
    std::vector<RenderedTuple> tuples;
    std::map<Channel, FieldBinding> channels;
};

struct RenderOptions {
    double size_min = 16.0;
    double size_max = 400.0;
    std::string sequential_scheme = "viridis";
    std::string categorical_scheme = "tableau10";
    SchemeRegistry schemes = SchemeRegistry::builtin();
};

inline const std::array<std::string_view, 5> kShapePalette = {"circle", "square", "triangle-up",
                                                               "cross", "diamond"};

inline double aggregate_values(std::span<const double> values, Aggregate agg) {
    if (agg == Aggregate::count) return static_cast<double>(values.size());
    if (values.empty()) return 0.0;
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());  // fixed summation order
    switch (agg) {
        case Aggregate::sum: return std::accumulate(v.begin(), v.end(), 0.0);
        case Aggregate::mean: return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        case Aggregate::median: {
            const std::size_t n = v.size();
            return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
        }
        case Aggregate::count: break;
    }
    return 0.0;
}

inline std::vector<double> aggregate_groups(const std::vector<std::vector<double>>& groups, Aggregate agg) {
    std::vector<double> out;
    out.reserve(groups.size());
    for (const auto& g : groups) out.push_back(aggregate_values(g, agg));
    return out;
}

namespace detail {

/// Snaps a normalized coordinate to a 2^-40 grid. Positions are then exact
/// products `extent * snap_unit(t)`, so views of different sizes are exact
/// rescalings of each other and `extent - p` mirrors `p` without rounding.
inline double snap_unit(double t) { return std::ldexp(std::round(std::ldexp(t, 40)), -40); }

using KeyPart = std::variant<long long, double, std::string>;

struct ChannelPlan {
    Channel channel;
    const Encoding* enc;
    std::optional<std::size_t> column;
    FieldKind kind;
    std::optional<BinSpec> bins;
};

inline double numeric(const Cell& c) { return std::get<double>(c); }

}  // namespace detail

inline std::optional<Channel> bar_length_channel(const ChartSpec& spec) {
    if (spec.mark != Mark::bar) return std::nullopt;
    for (Channel c : {Channel::y, Channel::x}) {
        const Encoding* e = spec.find(c);
        if (e && !e->binned() && is_quantitative(spec, c)) return c;
    }
    return std::nullopt;
}

/// Resolves a chart over a dataset into per-mark rendered values.
inline RenderedView render(const Dataset& data, const ChartSpec& spec, const RenderOptions& opts = {}) {
    using detail::ChannelPlan;
    using detail::KeyPart;

    RenderedView view;
    view.spec = spec;

    std::vector<ChannelPlan> plans;
    bool aggregated = false;
    for (const auto& [channel, enc] : spec.encoding) {
        ChannelPlan p{channel, &enc, std::nullopt, FieldKind::continuous, std::nullopt};
        if (!enc.is_count()) {
            p.column = data.index_of(enc.field);
            if (!p.column) throw SchemaError("render: dataset has no field '" + enc.field + "'");
            p.kind = data.fields[*p.column].kind;
            const FieldDef* declared = spec.data.find(enc.field);
            if (declared && declared->kind != p.kind)
                throw SchemaError("render: field '" + enc.field + "' kind differs from dataset");
        }
        if (channel == Channel::size && !enc.is_count() && !enc.aggregate && p.kind == FieldKind::nominal)
            throw UnsupportedSpecError("render: nominal size encodings are not supported");
        if (channel == Channel::shape && (enc.aggregate || p.kind != FieldKind::nominal))
            throw UnsupportedSpecError("render: shape requires a nominal field");
        aggregated = aggregated || enc.aggregate.has_value();
        view.channels.emplace(channel, binding_of(enc));
        plans.push_back(p);
    }

    std::vector<std::size_t> kept;
    for (std::size_t r = 0; r < data.rows.size(); ++r) {
        bool ok = true;
        for (const auto& p : plans)
            if (p.column && is_null(data.rows[r][*p.column])) ok = false;
        if (ok) kept.push_back(r);
    }
    if (kept.empty()) throw EmptyDataError("render: no rows with values for every encoded field");

    for (auto& p : plans) {
        if (!p.enc->binned()) continue;
        std::vector<double> values;
        values.reserve(kept.size());
        for (std::size_t r : kept) values.push_back(detail::numeric(data.rows[r][*p.column]));
        p.bins = nice_bins(values, *p.enc->maxbins);
    }

    // Each mark: the raw datum per channel (bucket index for binned channels)
    // and the rows it covers.
    struct Mark_ {
        std::vector<KeyPart> datum;
        std::vector<std::size_t> rows;
    };
    std::vector<Mark_> marks;

    auto raw_part = [&](const ChannelPlan& p, std::size_t r) -> KeyPart {
        const Cell& cell = data.rows[r][*p.column];
        if (p.bins) return static_cast<long long>(p.bins->bucket(detail::numeric(cell)));
        if (p.kind == FieldKind::nominal) return std::get<std::string>(cell);
        return detail::numeric(cell);
    };

    if (!aggregated) {
        marks.reserve(kept.size());
        for (std::size_t r : kept) {
            Mark_ m;
            for (const auto& p : plans) m.datum.push_back(raw_part(p, r));
            m.rows = {r};
            marks.push_back(std::move(m));
        }
    } else {
        std::map<std::vector<KeyPart>, std::vector<std::size_t>> groups;
        for (std::size_t r : kept) {
            std::vector<KeyPart> key;
            for (const auto& p : plans)
                if (!p.enc->aggregate) key.push_back(raw_part(p, r));
            groups[std::move(key)].push_back(r);
        }
        for (auto& [key, rows] : groups) {
            Mark_ m;
            std::size_t k = 0;
            for (const auto& p : plans) {
                if (!p.enc->aggregate) {
                    m.datum.push_back(key[k++]);
                    continue;
                }
                std::vector<double> values;
                if (p.column)
                    for (std::size_t r : rows) values.push_back(detail::numeric(data.rows[r][*p.column]));
                else
                    values.assign(rows.size(), 0.0);
                m.datum.push_back(aggregate_values(values, *p.enc->aggregate));
            }
            m.rows = rows;
            marks.push_back(std::move(m));
        }
    }

    const auto length_channel = bar_length_channel(spec);
    view.tuples.resize(marks.size());
    for (std::size_t i = 0; i < marks.size(); ++i) view.tuples[i].rows = marks[i].rows;

    for (std::size_t pi = 0; pi < plans.size(); ++pi) {
        const ChannelPlan& p = plans[pi];
        const bool nominal = !p.enc->aggregate && !p.enc->is_count() && p.kind == FieldKind::nominal;

        // Normalized position t in [0, 1] per mark.
        std::vector<double> t(marks.size(), 0.5);
        std::vector<std::string> categories;
        std::vector<double> datum(marks.size(), 0.0);
        if (nominal) {
            for (const auto& m : marks) categories.push_back(std::get<std::string>(m.datum[pi]));
            std::sort(categories.begin(), categories.end());
            categories.erase(std::unique(categories.begin(), categories.end()), categories.end());
            for (std::size_t i = 0; i < marks.size(); ++i) {
                const auto& label = std::get<std::string>(marks[i].datum[pi]);
                const auto idx = std::lower_bound(categories.begin(), categories.end(), label) - categories.begin();
                t[i] = (static_cast<double>(idx) + 0.5) / static_cast<double>(categories.size());
            }
        } else {
            double lo, hi;
            if (p.bins) {
                lo = p.bins->lo();
                hi = p.bins->hi();
                for (std::size_t i = 0; i < marks.size(); ++i)
                    datum[i] = p.bins->midpoint(static_cast<int>(std::get<long long>(marks[i].datum[pi])));
            } else {
                for (std::size_t i = 0; i < marks.size(); ++i) datum[i] = std::get<double>(marks[i].datum[pi]);
                auto [mn, mx] = std::minmax_element(datum.begin(), datum.end());
                lo = *mn;
                hi = *mx;
                if (length_channel == p.channel) {
                    lo = std::min(lo, 0.0);
                    hi = std::max(hi, 0.0);
                }
            }
            if (hi > lo)
                for (std::size_t i = 0; i < marks.size(); ++i) t[i] = (datum[i] - lo) / (hi - lo);
        }

        for (std::size_t i = 0; i < marks.size(); ++i) {
            RenderedTuple& tup = view.tuples[i];
            switch (p.channel) {
                case Channel::x: tup.x = spec.width * detail::snap_unit(t[i]); break;
                case Channel::y: tup.y = spec.height - spec.height * detail::snap_unit(t[i]); break;
                case Channel::color: {
                    if (nominal) {
                        const auto& scheme = opts.schemes.get(p.enc->scheme.value_or(opts.categorical_scheme));
                        const auto idx = static_cast<std::size_t>(t[i] * categories.size());
                        tup.color = srgb_to_lab(scheme.category(idx));
                        tup.group = std::get<std::string>(marks[i].datum[pi]);
                    } else {
                        const auto& scheme = opts.schemes.get(p.enc->scheme.value_or(opts.sequential_scheme));
                        tup.color = srgb_to_lab(scheme.at(t[i]));
                        tup.color_value = datum[i];
                    }
                    break;
                }
                case Channel::size: tup.size = opts.size_min + (opts.size_max - opts.size_min) * t[i]; break;
                case Channel::shape: {
                    const auto idx = static_cast<std::size_t>(t[i] * categories.size());
                    tup.shape = std::string(kShapePalette[idx % kShapePalette.size()]);
                    const auto& label = std::get<std::string>(marks[i].datum[pi]);
                    const bool same_field = spec.has(Channel::color) && spec.find(Channel::color)->field == p.enc->field;
                    if (!tup.group) tup.group = label;
                    else if (!same_field) tup.group = *tup.group + " | " + label;
                    break;
                }
            }
        }
    }
    return view;
}

inline Json to_json(const RenderedView& view) {
    Json tuples = Json::array();
    for (const auto& t : view.tuples) {
        Json j = {{"x", t.x}, {"y", t.y}};
        if (t.color) j["lab"] = {t.color->l, t.color->a, t.color->b};
        if (t.size) j["size"] = *t.size;
        if (t.shape) j["shape"] = *t.shape;
        if (t.group) j["group"] = *t.group;
        tuples.push_back(std::move(j));
    }
    return {{"spec", to_json(view.spec)}, {"tuples", std::move(tuples)}};
}

}  // namespace rvrec
