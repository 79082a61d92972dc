#pragma once

#include <filesystem>
#include <string>

#include "rvrec/rvrec.hpp"

namespace rvrec::tests {

inline std::filesystem::path fixtures() { return RVREC_FIXTURES; }
inline std::filesystem::path spec_path(const std::string& name) { return fixtures() / "specs" / (name + ".json"); }
inline std::filesystem::path kernel_path() { return std::filesystem::path(RVREC_ASSETS) / "kernels" / "shape.csv"; }

struct Fixture {
    ChartSpec spec;
    std::string data_text;
    Dataset data;
};

/// Spec and dataset of a bundled fixture; the data url is relative to the fixtures root.
inline Fixture load_fixture(const std::string& name) {
    Fixture f;
    f.spec = parse_spec(read_file(spec_path(name)));
    f.data_text = read_file(fixtures() / f.spec.data.url);
    f.data = load_dataset(f.data_text, f.spec.data.fields, f.spec.data.url);
    return f;
}

inline const char* const kFixtureNames[] = {"scatter", "histogram", "line", "heatmap", "color_scatter", "bubble"};

/// Hand-built dataset of continuous columns.
inline Dataset numeric_dataset(const std::vector<std::string>& names, const std::vector<std::vector<double>>& rows) {
    Dataset ds;
    for (const auto& n : names) ds.fields.push_back({n, FieldKind::continuous});
    for (const auto& r : rows) {
        std::vector<Cell> cells;
        for (double v : r) cells.emplace_back(v);
        ds.rows.push_back(std::move(cells));
    }
    return ds;
}

}  // namespace rvrec::tests
