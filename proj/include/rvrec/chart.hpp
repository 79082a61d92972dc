#pragma once

#include <array>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "rvrec/error.hpp"

namespace rvrec {

using Json = nlohmann::json;

enum class Mark { point, bar, line, rect };
enum class Channel { x, y, color, size, shape };
enum class FieldKind { continuous, nominal, temporal };
enum class Aggregate { count, mean, median, sum };

inline constexpr std::array<Channel, 5> kAllChannels = {
    Channel::x, Channel::y, Channel::color, Channel::size, Channel::shape};

/// Field name used by count encodings that are not bound to a data field.
inline constexpr std::string_view kCountField = "__count__";

namespace detail {

template <class E, std::size_t N>
struct EnumNames {
    std::array<std::pair<E, std::string_view>, N> entries;

    constexpr std::string_view name(E e) const {
        for (const auto& [value, text] : entries)
            if (value == e) return text;
        return {};
    }
    constexpr std::optional<E> parse(std::string_view s) const {
        for (const auto& [value, text] : entries)
            if (text == s) return value;
        return std::nullopt;
    }
};

inline constexpr EnumNames<Mark, 4> kMarkNames{{{{Mark::point, "point"},
                                                 {Mark::bar, "bar"},
                                                 {Mark::line, "line"},
                                                 {Mark::rect, "rect"}}}};
inline constexpr EnumNames<Channel, 5> kChannelNames{{{{Channel::x, "x"},
                                                       {Channel::y, "y"},
                                                       {Channel::color, "color"},
                                                       {Channel::size, "size"},
                                                       {Channel::shape, "shape"}}}};
inline constexpr EnumNames<FieldKind, 3> kKindNames{{{{FieldKind::continuous, "continuous"},
                                                      {FieldKind::nominal, "nominal"},
                                                      {FieldKind::temporal, "temporal"}}}};
inline constexpr EnumNames<Aggregate, 4> kAggregateNames{{{{Aggregate::count, "count"},
                                                           {Aggregate::mean, "mean"},
                                                           {Aggregate::median, "median"},
                                                           {Aggregate::sum, "sum"}}}};

}  // namespace detail

inline std::string to_string(Mark m) { return std::string(detail::kMarkNames.name(m)); }
inline std::string to_string(Channel c) { return std::string(detail::kChannelNames.name(c)); }
inline std::string to_string(FieldKind k) { return std::string(detail::kKindNames.name(k)); }
inline std::string to_string(Aggregate a) { return std::string(detail::kAggregateNames.name(a)); }

inline std::optional<Mark> parse_mark(std::string_view s) { return detail::kMarkNames.parse(s); }
inline std::optional<Channel> parse_channel(std::string_view s) { return detail::kChannelNames.parse(s); }
inline std::optional<FieldKind> parse_kind(std::string_view s) { return detail::kKindNames.parse(s); }
inline std::optional<Aggregate> parse_aggregate(std::string_view s) {
    return detail::kAggregateNames.parse(s);
}

inline bool is_position(Channel c) { return c == Channel::x || c == Channel::y; }

struct FieldDef {
    std::string name;
    FieldKind kind = FieldKind::continuous;

    bool operator==(const FieldDef&) const = default;
};

struct Encoding {
    std::string field;
    std::optional<int> maxbins;
    std::optional<Aggregate> aggregate;
    std::optional<std::string> scheme;

    bool is_count() const { return field == kCountField; }
    bool binned() const { return maxbins.has_value(); }
    bool operator==(const Encoding&) const = default;
};

struct DataSpec {
    std::string url;
    std::vector<FieldDef> fields;

    const FieldDef* find(std::string_view name) const {
        for (const auto& f : fields)
            if (f.name == name) return &f;
        return nullptr;
    }
    bool operator==(const DataSpec&) const = default;
};

/// Declarative single-view chart: mark, pixel size, data fields and one
/// encoding per channel.
struct ChartSpec {
    Mark mark = Mark::point;
    int width = 0;
    int height = 0;
    DataSpec data;
    std::map<Channel, Encoding> encoding;

    const Encoding* find(Channel c) const {
        auto it = encoding.find(c);
        return it == encoding.end() ? nullptr : &it->second;
    }
    bool has(Channel c) const { return encoding.count(c) != 0; }

    /// Kind of the field behind a channel; count encodings read as continuous.
    std::optional<FieldKind> kind_of(Channel c) const {
        const Encoding* e = find(c);
        if (!e) return std::nullopt;
        if (e->is_count()) return FieldKind::continuous;
        const FieldDef* f = data.find(e->field);
        return f ? std::optional<FieldKind>(f->kind) : std::nullopt;
    }

    bool operator==(const ChartSpec&) const = default;
};

/// Checks every ChartSpec invariant; throws SchemaError naming the offending path.
inline void validate(const ChartSpec& spec) {
    if (spec.width <= 0) throw SchemaError("width: must be a positive integer");
    if (spec.height <= 0) throw SchemaError("height: must be a positive integer");

    std::map<std::string, int> seen;
    for (const auto& f : spec.data.fields) {
        if (f.name.empty()) throw SchemaError("data.fields: empty field name");
        if (f.name == kCountField) throw SchemaError("data.fields: reserved field name __count__");
        if (seen[f.name]++) throw SchemaError("data.fields: duplicate field '" + f.name + "'");
    }
    if (!spec.has(Channel::x)) throw SchemaError("encoding.x: required");
    if (!spec.has(Channel::y)) throw SchemaError("encoding.y: required");

    for (const auto& [channel, enc] : spec.encoding) {
        const std::string path = "encoding." + to_string(channel);
        if ((channel == Channel::shape || channel == Channel::size) && spec.mark != Mark::point)
            throw SchemaError(path + ": only allowed on point marks");
        if (enc.scheme && channel != Channel::color)
            throw SchemaError(path + ".scheme: only allowed on color");
        if (enc.maxbins && *enc.maxbins < 2)
            throw SchemaError(path + ".bin.maxbins: must be >= 2");

        if (enc.is_count()) {
            if (enc.aggregate != Aggregate::count)
                throw SchemaError(path + ".aggregate: __count__ requires aggregate 'count'");
            if (enc.binned()) throw SchemaError(path + ".bin: cannot bin __count__");
            continue;
        }
        const FieldDef* field = spec.data.find(enc.field);
        if (!field) throw SchemaError(path + ".field: unknown field '" + enc.field + "'");
        if (enc.binned() && field->kind == FieldKind::nominal)
            throw SchemaError(path + ".bin: only continuous or temporal fields can be binned");
        if (enc.binned() && enc.aggregate)
            throw SchemaError(path + ": bin and aggregate on the same channel");
        if (enc.aggregate && *enc.aggregate != Aggregate::count &&
            field->kind != FieldKind::continuous)
            throw SchemaError(path + ".aggregate: " + to_string(*enc.aggregate) +
                              " requires a continuous field");
        if (channel == Channel::shape && field->kind != FieldKind::nominal)
            throw SchemaError(path + ": shape requires a nominal field");
    }

    if (spec.mark == Mark::rect) {
        for (Channel c : {Channel::x, Channel::y}) {
            const Encoding& e = *spec.find(c);
            if (!e.binned() && spec.kind_of(c) != FieldKind::nominal)
                throw SchemaError("encoding." + to_string(c) +
                                  ": rect marks require binned or nominal x and y");
        }
    }
}

namespace detail {

inline void check_keys(const Json& obj, std::initializer_list<std::string_view> allowed,
                       const std::string& path) {
    for (const auto& item : obj.items()) {
        bool ok = false;
        for (auto k : allowed) ok = ok || item.key() == k;
        if (!ok)
            throw SchemaError((path.empty() ? "" : path + ".") + item.key() + ": unknown key");
    }
}

inline const Json& require(const Json& obj, const char* key, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end())
        throw SchemaError((path.empty() ? "" : path + ".") + key + ": required");
    return *it;
}

inline int require_int(const Json& v, const std::string& path) {
    if (!v.is_number_integer()) throw SchemaError(path + ": expected integer");
    auto n = v.get<long long>();
    if (n < std::numeric_limits<int>::min() || n > std::numeric_limits<int>::max())
        throw SchemaError(path + ": integer out of range");
    return static_cast<int>(n);
}

inline const std::string& require_string(const Json& v, const std::string& path) {
    if (!v.is_string()) throw SchemaError(path + ": expected string");
    return v.get_ref<const std::string&>();
}

}  // namespace detail

/// Builds and validates a ChartSpec from an already parsed JSON value.
inline ChartSpec spec_from_json(const Json& j) {
    using namespace detail;
    if (!j.is_object()) throw SchemaError("$: expected object");
    check_keys(j, {"mark", "width", "height", "data", "encoding"}, "");

    ChartSpec spec;
    const std::string& mark = require_string(require(j, "mark", ""), "mark");
    auto m = parse_mark(mark);
    if (!m) throw SchemaError("mark: unknown mark '" + mark + "'");
    spec.mark = *m;
    spec.width = require_int(require(j, "width", ""), "width");
    spec.height = require_int(require(j, "height", ""), "height");

    const Json& data = require(j, "data", "");
    if (!data.is_object()) throw SchemaError("data: expected object");
    check_keys(data, {"url", "fields"}, "data");
    if (auto it = data.find("url"); it != data.end()) spec.data.url = require_string(*it, "data.url");
    const Json& fields = require(data, "fields", "data");
    if (!fields.is_array()) throw SchemaError("data.fields: expected array");
    for (std::size_t i = 0; i < fields.size(); ++i) {
        const std::string path = "data.fields[" + std::to_string(i) + "]";
        const Json& f = fields[i];
        if (!f.is_object()) throw SchemaError(path + ": expected object");
        check_keys(f, {"name", "kind"}, path);
        FieldDef def;
        def.name = require_string(require(f, "name", path), path + ".name");
        const std::string& kind = require_string(require(f, "kind", path), path + ".kind");
        auto k = parse_kind(kind);
        if (!k) throw SchemaError(path + ".kind: unknown kind '" + kind + "'");
        def.kind = *k;
        spec.data.fields.push_back(std::move(def));
    }

    const Json& enc = require(j, "encoding", "");
    if (!enc.is_object()) throw SchemaError("encoding: expected object");
    for (const auto& item : enc.items()) {
        const std::string path = "encoding." + item.key();
        auto channel = parse_channel(item.key());
        if (!channel) throw SchemaError(path + ": unknown channel");
        const Json& e = item.value();
        if (!e.is_object()) throw SchemaError(path + ": expected object");
        check_keys(e, {"field", "bin", "aggregate", "scheme"}, path);

        Encoding out;
        out.field = require_string(require(e, "field", path), path + ".field");
        if (auto it = e.find("bin"); it != e.end()) {
            if (!it->is_object()) throw SchemaError(path + ".bin: expected object");
            check_keys(*it, {"maxbins"}, path + ".bin");
            out.maxbins = require_int(require(*it, "maxbins", path + ".bin"), path + ".bin.maxbins");
        }
        if (auto it = e.find("aggregate"); it != e.end()) {
            const std::string& a = require_string(*it, path + ".aggregate");
            auto agg = parse_aggregate(a);
            if (!agg) throw SchemaError(path + ".aggregate: unknown aggregate '" + a + "'");
            out.aggregate = *agg;
        } else if (out.is_count()) {
            out.aggregate = Aggregate::count;
        }
        if (auto it = e.find("scheme"); it != e.end())
            out.scheme = require_string(*it, path + ".scheme");
        spec.encoding.emplace(*channel, std::move(out));
    }

    validate(spec);
    return spec;
}

/// Parses raw JSON text into a validated ChartSpec.
inline ChartSpec parse_spec(std::string_view raw) {
    Json j;
    try {
        j = Json::parse(raw);
    } catch (const Json::parse_error& e) {
        throw SyntaxError(std::string("spec: ") + e.what());
    }
    return spec_from_json(j);
}

inline Json to_json(const ChartSpec& spec) {
    Json fields = Json::array();
    for (const auto& f : spec.data.fields)
        fields.push_back({{"name", f.name}, {"kind", to_string(f.kind)}});
    Json enc = Json::object();
    for (const auto& [channel, e] : spec.encoding) {
        Json je = {{"field", e.field}};
        if (e.maxbins) je["bin"] = {{"maxbins", *e.maxbins}};
        if (e.aggregate) je["aggregate"] = to_string(*e.aggregate);
        if (e.scheme) je["scheme"] = *e.scheme;
        enc[to_string(channel)] = std::move(je);
    }
    return {{"mark", to_string(spec.mark)},
            {"width", spec.width},
            {"height", spec.height},
            {"data", {{"url", spec.data.url}, {"fields", std::move(fields)}}},
            {"encoding", std::move(enc)}};
}

inline std::string serialize_spec(const ChartSpec& spec) { return to_json(spec).dump(); }

}  // namespace rvrec
