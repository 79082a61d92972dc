#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "rvrec/chart.hpp"
#include "rvrec/color.hpp"
#include "rvrec/dataset.hpp"
#include "rvrec/error.hpp"
#include "rvrec/render.hpp"

namespace rvrec {

using ChannelValue = std::variant<double, Lab, std::string>;

struct ChannelDistribution {
    Channel channel = Channel::x;
    std::vector<ChannelValue> values;
};

struct DiscriminabilityDistribution {
    Channel channel = Channel::x;
    std::vector<double> distances;  // ascending
};

/// Per-channel (or per-model) loss components and their sum.
struct ComponentLosses {
    std::map<std::string, double> components;
    double total = 0;
};

inline ChannelDistribution channel_distribution(const RenderedView& view, Channel c) {
    if (!view.spec.has(c)) throw UnsupportedSpecError("channel " + to_string(c) + " is not encoded");
    ChannelDistribution d{c, {}};
    d.values.reserve(view.tuples.size());
    for (const auto& t : view.tuples) {
        switch (c) {
            case Channel::x: d.values.emplace_back(t.x); break;
            case Channel::y: d.values.emplace_back(t.y); break;
            case Channel::color: d.values.emplace_back(t.color.value()); break;
            case Channel::size: d.values.emplace_back(t.size.value()); break;
            case Channel::shape: d.values.emplace_back(t.shape.value()); break;
        }
    }
    return d;
}

/// Shannon entropy of a partition given its class sizes. Counts are sorted
/// first so equal partitions give bit-identical results.
inline double entropy_from_counts(std::vector<std::size_t> counts) {
    std::sort(counts.begin(), counts.end());
    double n = 0;
    for (auto c : counts) n += static_cast<double>(c);
    double h = 0;
    for (auto c : counts) {
        const double p = static_cast<double>(c) / n;
        h -= p * std::log2(p);
    }
    return h > 0 ? h : 0.0;
}

/// Entropy in bits after quantizing positions/sizes to 1 px and Lab to 1 unit.
inline double channel_entropy(const ChannelDistribution& dist) {
    if (dist.values.empty()) return 0.0;
    std::vector<std::size_t> counts;
    auto run_lengths = [&](auto keys) {
        std::sort(keys.begin(), keys.end());
        for (std::size_t i = 0; i < keys.size();) {
            std::size_t j = i;
            while (j < keys.size() && keys[j] == keys[i]) ++j;
            counts.push_back(j - i);
            i = j;
        }
    };
    if (std::holds_alternative<std::string>(dist.values.front())) {
        std::vector<std::string> keys;
        for (const auto& v : dist.values) keys.push_back(std::get<std::string>(v));
        run_lengths(std::move(keys));
    } else {
        std::vector<std::array<long long, 3>> keys;
        for (const auto& v : dist.values) {
            if (const auto* d = std::get_if<double>(&v)) keys.push_back({std::llround(*d), 0, 0});
            else {
                const Lab& c = std::get<Lab>(v);
                keys.push_back({std::llround(c.l), std::llround(c.a), std::llround(c.b)});
            }
        }
        run_lengths(std::move(keys));
    }
    return entropy_from_counts(std::move(counts));
}

inline double distance_position(double a, double b) { return std::abs(a - b); }

inline double distance_size(double a, double b) { return std::pow(std::abs(a - b), 0.7); }

/// Symmetric shape-dissimilarity matrix with a zero diagonal.
class PerceptualKernel {
public:
    PerceptualKernel() : PerceptualKernel(uniform()) {}
    PerceptualKernel(std::vector<std::string> ids, std::vector<std::vector<double>> matrix)
        : ids_(std::move(ids)), matrix_(std::move(matrix)) {
        const std::size_t n = ids_.size();
        if (matrix_.size() != n) throw SchemaError("kernel: matrix is not square");
        for (std::size_t i = 0; i < n; ++i) {
            if (matrix_[i].size() != n) throw SchemaError("kernel: matrix is not square");
            for (std::size_t j = 0; j < n; ++j) {
                const double v = matrix_[i][j];
                if (!(v >= 0 && v <= 1)) throw SchemaError("kernel: entries must lie in [0, 1]");
                if (i == j && v != 0) throw SchemaError("kernel: diagonal must be zero");
            }
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < i; ++j)
                if (matrix_[i][j] != matrix_[j][i]) throw SchemaError("kernel: matrix is not symmetric");
        for (std::size_t i = 0; i < n; ++i)
            if (!index_.emplace(ids_[i], i).second) throw SchemaError("kernel: duplicate shape id " + ids_[i]);
    }

    /// 0 on the diagonal, 1 elsewhere, over the renderer's shape palette.
    static PerceptualKernel uniform() {
        std::vector<std::string> ids(kShapePalette.begin(), kShapePalette.end());
        std::vector<std::vector<double>> m(ids.size(), std::vector<double>(ids.size(), 1.0));
        for (std::size_t i = 0; i < ids.size(); ++i) m[i][i] = 0.0;
        return {std::move(ids), std::move(m)};
    }

    /// CSV with shape ids in the first row and column.
    static PerceptualKernel from_csv(std::string_view text) {
        auto records = detail::parse_csv(text);
        if (records.size() < 2) throw SchemaError("kernel: expected a header row and at least one shape");
        std::vector<std::string> ids;
        for (std::size_t j = 1; j < records[0].size(); ++j) ids.emplace_back(detail::trim(records[0][j]));
        std::vector<std::vector<double>> m;
        for (std::size_t i = 1; i < records.size(); ++i) {
            const auto& rec = records[i];
            if (rec.size() != ids.size() + 1) throw SchemaError("kernel: row " + std::to_string(i) + " has wrong width");
            if (detail::trim(rec[0]) != ids[i - 1]) throw SchemaError("kernel: row ids must match column ids");
            std::vector<double> row;
            for (std::size_t j = 1; j < rec.size(); ++j) {
                auto v = detail::parse_number(rec[j]);
                if (!v) throw SchemaError("kernel: bad number '" + rec[j] + "'");
                row.push_back(*v);
            }
            m.push_back(std::move(row));
        }
        return {std::move(ids), std::move(m)};
    }

    double operator()(const std::string& a, const std::string& b) const {
        auto ia = index_.find(a), ib = index_.find(b);
        if (ia == index_.end()) throw UnknownShapeError("kernel: unknown shape '" + a + "'");
        if (ib == index_.end()) throw UnknownShapeError("kernel: unknown shape '" + b + "'");
        return matrix_[ia->second][ib->second];
    }

    const std::vector<std::string>& ids() const { return ids_; }
    const std::vector<std::vector<double>>& matrix() const { return matrix_; }

private:
    std::vector<std::string> ids_;
    std::vector<std::vector<double>> matrix_;
    std::map<std::string, std::size_t> index_;
};

inline Json to_json(const PerceptualKernel& k) { return {{"shapes", k.ids()}, {"matrix", k.matrix()}}; }

inline double distance_shape(const std::string& a, const std::string& b, const PerceptualKernel& kernel) {
    return kernel(a, b);
}

/// Distances between every unordered pair of rendered values on a channel.
inline DiscriminabilityDistribution discriminability(const RenderedView& view, Channel c,
                                                     const PerceptualKernel& kernel) {
    const ChannelDistribution dist = channel_distribution(view, c);
    const std::size_t n = dist.values.size();
    if (n < 2) throw DegenerateViewError("discriminability: channel " + to_string(c) + " has fewer than 2 values");
    DiscriminabilityDistribution out{c, {}};
    out.distances.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const auto& a = dist.values[i];
            const auto& b = dist.values[j];
            double d = 0;
            switch (c) {
                case Channel::x:
                case Channel::y: d = distance_position(std::get<double>(a), std::get<double>(b)); break;
                case Channel::size: d = distance_size(std::get<double>(a), std::get<double>(b)); break;
                case Channel::color: d = distance_color(std::get<Lab>(a), std::get<Lab>(b)); break;
                case Channel::shape: d = distance_shape(std::get<std::string>(a), std::get<std::string>(b), kernel); break;
            }
            out.distances.push_back(d);
        }
    }
    std::sort(out.distances.begin(), out.distances.end());
    return out;
}

/// 1-Wasserstein distance between two empirical distributions (each value
/// carries mass 1/size), integrating |F_p - F_q| over the merged support.
inline double emd_1d(std::vector<double> p, std::vector<double> q) {
    if (p.empty() || q.empty()) throw DegenerateViewError("emd_1d: empty distribution");
    std::sort(p.begin(), p.end());
    std::sort(q.begin(), q.end());
    const auto np = static_cast<long long>(p.size());
    const auto nq = static_cast<long long>(q.size());
    // CDFs as integers scaled by np*nq: F_p = i*nq, F_q = j*np.
    long long i = 0, j = 0;
    double total = 0;
    double at = std::min(p.front(), q.front());
    while (i < np || j < nq) {
        const double next = j >= nq || (i < np && p[i] <= q[j]) ? p[i] : q[j];
        const long long gap = i * nq - j * np;
        total += static_cast<double>(gap < 0 ? -gap : gap) * (next - at);
        at = next;
        while (i < np && p[i] == at) ++i;
        while (j < nq && q[j] == at) ++j;
    }
    return total / (static_cast<double>(np) * static_cast<double>(nq));
}

struct ChannelMatch {
    std::vector<std::pair<Channel, Channel>> pairs;  // (source, target)
    std::vector<Channel> source_only;
    std::vector<Channel> target_only;
};

namespace detail {

/// The field a channel stands for; every count aggregate collapses to one key.
inline std::string match_key(const FieldBinding& b) {
    if (b.is_count() || b.aggregate == Aggregate::count) return std::string(kCountField);
    return b.field;
}

inline std::map<std::string, Channel> match_index(const RenderedView& v, const char* side) {
    std::map<std::string, Channel> index;
    for (const auto& [c, b] : v.channels)
        if (!index.emplace(match_key(b), c).second)
            throw AmbiguousMatchError(std::string("match_channels: ") + side + " view encodes '" + b.label() +
                                      "' on two channels");
    return index;
}

}  // namespace detail

/// Pairs channels of two views that encode the same field, regardless of
/// channel name.
inline ChannelMatch match_channels(const RenderedView& source, const RenderedView& target) {
    const auto s = detail::match_index(source, "source");
    const auto t = detail::match_index(target, "target");
    ChannelMatch m;
    for (const auto& [c, b] : source.channels) {
        auto it = t.find(detail::match_key(b));
        if (it != t.end()) m.pairs.emplace_back(c, it->second);
        else m.source_only.push_back(c);
    }
    for (const auto& [c, b] : target.channels)
        if (!s.count(detail::match_key(b))) m.target_only.push_back(c);
    return m;
}

namespace detail {

/// Sums components in ascending order so that equal multisets give equal totals.
inline double ordered_total(const std::map<std::string, double>& components) {
    std::vector<double> v;
    for (const auto& [k, x] : components) v.push_back(x);
    std::sort(v.begin(), v.end());
    double total = 0;
    for (double x : v) total += x;
    return total;
}

}  // namespace detail

/// |H_S - H_T| per matched channel, keyed by the source channel. A channel
/// whose field is absent from the other view contributes its full entropy
/// (keyed by its own channel name).
inline ComponentLosses identification_loss(const RenderedView& source, const RenderedView& target) {
    const ChannelMatch m = match_channels(source, target);
    ComponentLosses out;
    for (auto [cs, ct] : m.pairs)
        out.components[to_string(cs)] = std::abs(channel_entropy(channel_distribution(source, cs)) -
                                                 channel_entropy(channel_distribution(target, ct)));
    for (Channel c : m.source_only) out.components[to_string(c)] += channel_entropy(channel_distribution(source, c));
    for (Channel c : m.target_only) out.components[to_string(c)] += channel_entropy(channel_distribution(target, c));
    out.total = detail::ordered_total(out.components);
    return out;
}

/// Discriminability of a channel, or {0} when it has fewer than 2 values.
inline std::vector<double> discriminability_or_zero(const RenderedView& view, Channel c,
                                                    const PerceptualKernel& kernel) {
    if (view.tuples.size() < 2) return {0.0};
    return discriminability(view, c, kernel).distances;
}

/// EMD between discriminability distributions per matched channel, keyed by
/// the source channel. Unmatched channels contribute nothing.
inline ComponentLosses comparison_loss(const RenderedView& source, const RenderedView& target,
                                       const PerceptualKernel& kernel = {}) {
    const ChannelMatch m = match_channels(source, target);
    ComponentLosses out;
    for (auto [cs, ct] : m.pairs)
        out.components[to_string(cs)] =
            emd_1d(discriminability_or_zero(source, cs, kernel), discriminability_or_zero(target, ct, kernel));
    out.total = detail::ordered_total(out.components);
    return out;
}

}  // namespace rvrec
