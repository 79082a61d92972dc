#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rvrec/error.hpp"

namespace rvrec {

/// CIELAB color (D65 white, 2 degree observer).
struct Lab {
    double l = 0, a = 0, b = 0;
    bool operator==(const Lab&) const = default;
};

struct Rgb {
    double r = 0, g = 0, b = 0;  // gamma-encoded sRGB in [0, 1]
    bool operator==(const Rgb&) const = default;
};

inline Rgb parse_hex(std::string_view hex) {
    if (!hex.empty() && hex.front() == '#') hex.remove_prefix(1);
    if (hex.size() != 6) throw SchemaError("color: expected #rrggbb, got '" + std::string(hex) + "'");
    auto channel = [&](std::size_t i) {
        unsigned v = 0;
        for (std::size_t k = i; k < i + 2; ++k) {
            const char c = hex[k];
            v *= 16;
            if (c >= '0' && c <= '9') v += c - '0';
            else if (c >= 'a' && c <= 'f') v += c - 'a' + 10;
            else if (c >= 'A' && c <= 'F') v += c - 'A' + 10;
            else throw SchemaError("color: bad hex digit in '" + std::string(hex) + "'");
        }
        return v / 255.0;
    };
    return {channel(0), channel(2), channel(4)};
}

/// sRGB -> linear RGB -> XYZ (D65) -> CIELAB.
inline Lab srgb_to_lab(const Rgb& c) {
    auto linear = [](double u) { return u > 0.04045 ? std::pow((u + 0.055) / 1.055, 2.4) : u / 12.92; };
    const double r = linear(c.r), g = linear(c.g), b = linear(c.b);
    const double x = 0.412453 * r + 0.357580 * g + 0.180423 * b;
    const double y = 0.212671 * r + 0.715160 * g + 0.072169 * b;
    const double z = 0.019334 * r + 0.119193 * g + 0.950227 * b;
    constexpr double xn = 0.95047, yn = 1.0, zn = 1.08883;
    constexpr double delta = 6.0 / 29.0;
    auto f = [&](double t) {
        return t > delta * delta * delta ? std::cbrt(t) : t / (3 * delta * delta) + 4.0 / 29.0;
    };
    const double fx = f(x / xn), fy = f(y / yn), fz = f(z / zn);
    Lab lab{116 * fy - 16, 500 * (fx - fy), 200 * (fy - fz)};
    lab.l = std::clamp(lab.l, 0.0, 100.0);
    return lab;
}

/// Ordered list of sRGB stops, interpolated linearly in sRGB.
struct ColorScheme {
    std::string name;
    std::vector<Rgb> stops;

    Rgb at(double t) const {
        if (stops.size() == 1) return stops.front();
        t = std::clamp(t, 0.0, 1.0);
        const double pos = t * static_cast<double>(stops.size() - 1);
        const auto i = std::min(static_cast<std::size_t>(pos), stops.size() - 2);
        const double u = pos - static_cast<double>(i);
        const Rgb& a = stops[i];
        const Rgb& b = stops[i + 1];
        return {a.r + (b.r - a.r) * u, a.g + (b.g - a.g) * u, a.b + (b.b - a.b) * u};
    }
    /// Cyclic lookup for categorical use.
    const Rgb& category(std::size_t index) const { return stops[index % stops.size()]; }
};

namespace detail {

inline const std::map<std::string, std::vector<const char*>>& builtin_scheme_stops() {
    static const std::map<std::string, std::vector<const char*>> stops = {
        {"viridis", {"#440154", "#482475", "#414487", "#355f8d", "#2a788e", "#21918c", "#22a884",
                     "#44bf70", "#7ad151", "#bddf26", "#fde725"}},
        {"magma", {"#000004", "#140e36", "#3b0f70", "#641a80", "#8c2981", "#b73779", "#de4968",
                   "#f7705c", "#fe9f6d", "#fecf92", "#fcfdbf"}},
        {"blues", {"#f7fbff", "#deebf7", "#c6dbef", "#9dcae1", "#6aaed6", "#4191c6", "#2070b4",
                   "#08509b", "#08306b"}},
        {"tableau10", {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2",
                       "#7f7f7f", "#bcbd22", "#17becf"}},
    };
    return stops;
}

}  // namespace detail

/// Named color schemes. Ships with viridis, magma, blues (sequential) and
/// tableau10 (categorical); more can be loaded from JSON files holding a list
/// of hex stops.
class SchemeRegistry {
public:
    static SchemeRegistry builtin() {
        SchemeRegistry reg;
        for (const auto& [name, hexes] : detail::builtin_scheme_stops()) {
            ColorScheme s{name, {}};
            for (const char* h : hexes) s.stops.push_back(parse_hex(h));
            reg.add(std::move(s));
        }
        return reg;
    }

    /// Builtins plus every `<name>.json` found in `dir` (files override builtins).
    static SchemeRegistry load_dir(const std::filesystem::path& dir) {
        SchemeRegistry reg = builtin();
        for (const auto& entry : std::filesystem::directory_iterator(dir)) {
            if (entry.path().extension() != ".json") continue;
            std::ifstream in(entry.path());
            std::stringstream buf;
            buf << in.rdbuf();
            reg.add(parse_scheme(entry.path().stem().string(), buf.str()));
        }
        return reg;
    }

    static ColorScheme parse_scheme(const std::string& name, const std::string& text) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw SyntaxError("scheme " + name + ": " + e.what());
        }
        if (!j.is_array() || j.empty()) throw SchemaError("scheme " + name + ": expected a list of hex stops");
        ColorScheme s{name, {}};
        for (const auto& h : j) {
            if (!h.is_string()) throw SchemaError("scheme " + name + ": stops must be strings");
            s.stops.push_back(parse_hex(h.get<std::string>()));
        }
        return s;
    }

    void add(ColorScheme s) { schemes_[s.name] = std::move(s); }

    const ColorScheme& get(const std::string& name) const {
        auto it = schemes_.find(name);
        if (it == schemes_.end()) throw UnknownSchemeError("unknown color scheme '" + name + "'");
        return it->second;
    }
    bool contains(const std::string& name) const { return schemes_.count(name) != 0; }

private:
    std::map<std::string, ColorScheme> schemes_;
};

/// Min-max normalizes `value` into [0, 1] over `[lo, hi]` (0.5 for a
/// degenerate domain), samples the scheme and converts to CIELAB.
inline Lab resolve_color(double value, double lo, double hi, const ColorScheme& scheme) {
    const double t = hi > lo ? (value - lo) / (hi - lo) : 0.5;
    return srgb_to_lab(scheme.at(t));
}

inline Lab resolve_color(double value, double lo, double hi, const std::string& scheme,
                         const SchemeRegistry& registry) {
    return resolve_color(value, lo, hi, registry.get(scheme));
}

inline double distance_color(const Lab& p, const Lab& q) {
    const double dl = p.l - q.l, da = p.a - q.a, db = p.b - q.b;
    return std::sqrt(dl * dl + da * da + db * db);
}

}  // namespace rvrec
