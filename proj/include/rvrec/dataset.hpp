#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "rvrec/chart.hpp"
#include "rvrec/error.hpp"

namespace rvrec {

/// A typed cell: null, a number (continuous, or temporal as ms since epoch)
/// or a nominal label.
using Cell = std::variant<std::monostate, double, std::string>;

inline bool is_null(const Cell& c) { return std::holds_alternative<std::monostate>(c); }

struct Dataset {
    std::string name;
    std::vector<FieldDef> fields;
    std::vector<std::vector<Cell>> rows;
    std::size_t dropped_rows = 0;

    std::optional<std::size_t> index_of(std::string_view field) const {
        for (std::size_t i = 0; i < fields.size(); ++i)
            if (fields[i].name == field) return i;
        return std::nullopt;
    }
    std::size_t size() const { return rows.size(); }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::optional<double> parse_number(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return std::nullopt;
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

template <class Int>
bool parse_digits(std::string_view s, std::size_t pos, std::size_t len, Int& out) {
    if (pos + len > s.size()) return false;
    auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, out);
    return ec == std::errc() && ptr == s.data() + pos + len;
}

/// ISO-8601 date or date-time (YYYY, YYYY-MM, YYYY-MM-DD, optional
/// Thh:mm[:ss[.fff]][Z]) as UTC milliseconds since the epoch.
inline std::optional<double> parse_iso8601(std::string_view s) {
    using namespace std::chrono;
    int y = 0;
    unsigned mo = 1, d = 1, hh = 0, mi = 0;
    double sec = 0;
    if (s.size() < 4 || !parse_digits(s, 0, 4, y)) return std::nullopt;
    std::size_t pos = 4;
    if (pos < s.size()) {
        if (s[pos] != '-' || !parse_digits(s, pos + 1, 2, mo)) return std::nullopt;
        pos += 3;
    }
    if (pos < s.size()) {
        if (s[pos] != '-' || !parse_digits(s, pos + 1, 2, d)) return std::nullopt;
        pos += 3;
    }
    if (pos < s.size()) {
        if ((s[pos] != 'T' && s[pos] != ' ') || !parse_digits(s, pos + 1, 2, hh) ||
            pos + 3 >= s.size() || s[pos + 3] != ':' || !parse_digits(s, pos + 4, 2, mi))
            return std::nullopt;
        pos += 6;
        if (pos < s.size() && s[pos] == ':') {
            std::size_t end = pos + 1;
            while (end < s.size() && (std::isdigit(static_cast<unsigned char>(s[end])) || s[end] == '.')) ++end;
            auto v = parse_number(s.substr(pos + 1, end - pos - 1));
            if (!v) return std::nullopt;
            sec = *v;
            pos = end;
        }
        if (pos < s.size() && s[pos] == 'Z') ++pos;
        if (pos != s.size()) return std::nullopt;
    }
    year_month_day ymd{year{y}, month{mo}, day{d}};
    if (!ymd.ok() || hh > 23 || mi > 59 || sec >= 61) return std::nullopt;
    const auto days = sys_days{ymd}.time_since_epoch().count();
    return static_cast<double>(days) * 86'400'000.0 + hh * 3'600'000.0 + mi * 60'000.0 + sec * 1000.0;
}

inline std::optional<double> parse_temporal(std::string_view s) {
    s = trim(s);
    bool four_digits = s.size() == 4;
    for (char c : s) four_digits = four_digits && std::isdigit(static_cast<unsigned char>(c));
    if (!four_digits)
        if (auto n = parse_number(s)) return n;
    return parse_iso8601(s);
}

/// Converts a textual value to a cell of the given kind; nullopt marks an
/// unparseable value, a monostate cell marks an explicit null.
inline std::optional<Cell> convert_text(std::string_view text, FieldKind kind) {
    std::string_view t = trim(text);
    if (t.empty()) return Cell{};
    switch (kind) {
        case FieldKind::nominal: return Cell{std::string(t)};
        case FieldKind::continuous:
            if (auto v = parse_number(t)) return Cell{*v};
            return std::nullopt;
        case FieldKind::temporal:
            if (auto v = parse_temporal(t)) return Cell{*v};
            return std::nullopt;
    }
    return std::nullopt;
}

inline std::optional<Cell> convert_json(const nlohmann::json& v, FieldKind kind) {
    if (v.is_null()) return Cell{};
    if (v.is_string()) return convert_text(v.get_ref<const std::string&>(), kind);
    if (v.is_number()) {
        const double d = v.get<double>();
        if (kind == FieldKind::nominal) return Cell{v.dump()};
        if (!std::isfinite(d)) return std::nullopt;
        return Cell{d};
    }
    if (v.is_boolean() && kind == FieldKind::nominal) return Cell{std::string(v.get<bool>() ? "true" : "false")};
    return std::nullopt;
}

/// RFC 4180 CSV: quoted fields, doubled quotes, CRLF or LF records.
inline std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false, field_started = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"' && !field_started) {
            quoted = field_started = true;
        } else if (c == ',') {
            record.push_back(std::move(field));
            field.clear();
            field_started = false;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            record.push_back(std::move(field));
            field.clear();
            field_started = false;
            if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
            record.clear();
        } else {
            field += c;
            field_started = true;
        }
    }
    if (quoted) throw SyntaxError("csv: unterminated quoted field");
    if (field_started || !record.empty()) {
        record.push_back(std::move(field));
        records.push_back(std::move(record));
    }
    return records;
}

}  // namespace detail

/// Loads CSV (header row) or JSON (array of flat objects) text into a typed
/// Dataset. Rows holding an unparseable value are dropped and counted in
/// `dropped_rows`; empty or null cells are kept as explicit nulls.
inline Dataset load_dataset(std::string_view raw, const std::vector<FieldDef>& schema,
                            std::string name = {}) {
    Dataset ds;
    ds.name = std::move(name);
    ds.fields = schema;

    std::size_t first = raw.find_first_not_of(" \t\r\n");
    const bool is_json = first != std::string_view::npos && raw[first] == '[';

    if (is_json) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(raw);
        } catch (const nlohmann::json::parse_error& e) {
            throw SyntaxError(std::string("dataset: ") + e.what());
        }
        std::vector<bool> present(schema.size(), false);
        for (const auto& obj : j) {
            if (!obj.is_object()) throw SchemaError("dataset: expected an array of objects");
            std::vector<Cell> row(schema.size());
            bool ok = true;
            for (std::size_t f = 0; f < schema.size(); ++f) {
                auto it = obj.find(schema[f].name);
                if (it == obj.end()) continue;
                present[f] = true;
                auto cell = detail::convert_json(*it, schema[f].kind);
                if (!cell) {
                    ok = false;
                    break;
                }
                row[f] = std::move(*cell);
            }
            if (ok) ds.rows.push_back(std::move(row));
            else ++ds.dropped_rows;
        }
        for (std::size_t f = 0; f < schema.size(); ++f)
            if (!present[f] && !j.empty())
                throw SchemaError("dataset: missing column '" + schema[f].name + "'");
    } else {
        auto records = detail::parse_csv(raw);
        if (records.empty()) throw EmptyDataError("dataset: no header row");
        const auto& header = records.front();
        std::vector<std::size_t> column(schema.size());
        for (std::size_t f = 0; f < schema.size(); ++f) {
            auto it = std::find_if(header.begin(), header.end(), [&](const std::string& h) {
                return detail::trim(h) == schema[f].name;
            });
            if (it == header.end()) throw SchemaError("dataset: missing column '" + schema[f].name + "'");
            column[f] = static_cast<std::size_t>(it - header.begin());
        }
        for (std::size_t r = 1; r < records.size(); ++r) {
            std::vector<Cell> row(schema.size());
            bool ok = true;
            for (std::size_t f = 0; f < schema.size() && ok; ++f) {
                const auto& rec = records[r];
                std::string_view text = column[f] < rec.size() ? std::string_view(rec[column[f]]) : "";
                auto cell = detail::convert_text(text, schema[f].kind);
                if (!cell) ok = false;
                else row[f] = std::move(*cell);
            }
            if (ok) ds.rows.push_back(std::move(row));
            else ++ds.dropped_rows;
        }
    }
    if (ds.rows.empty()) throw EmptyDataError("dataset: no usable rows");
    return ds;
}

}  // namespace rvrec
