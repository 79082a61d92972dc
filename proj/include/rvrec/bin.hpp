#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace rvrec {

/// Uniform bucket grid `[start + i*step, start + (i+1)*step)`, last bucket closed.
struct BinSpec {
    double start = 0;
    double step = 0;
    int count = 1;

    double lo() const { return start; }
    double hi() const { return start + step * count; }
    double midpoint(int i) const { return start + step * (i + 0.5); }

    int bucket(double v) const {
        if (step <= 0) return 0;
        const int i = static_cast<int>(std::floor((v - start) / step + 1e-9));
        return std::clamp(i, 0, count - 1);
    }
};

/// Picks the smallest step from {1, 2, 2.5, 5} x 10^k that covers
/// [min, max] with at most `maxbins` buckets aligned to multiples of the step.
inline BinSpec nice_bins(double min, double max, int maxbins) {
    if (!(max > min)) return {min, 0.0, 1};
    static constexpr double kMantissa[] = {1.0, 2.0, 2.5, 5.0};
    const double raw = (max - min) / maxbins;
    int exponent = static_cast<int>(std::floor(std::log10(raw)));
    std::size_t m = 0;
    auto step_at = [&] {
        const double p = std::pow(10.0, std::abs(exponent));
        return exponent >= 0 ? kMantissa[m] * p : kMantissa[m] / p;
    };
    while (step_at() < raw * (1 - 1e-12)) {
        if (++m == std::size(kMantissa)) {
            m = 0;
            ++exponent;
        }
    }
    for (;;) {
        const double step = step_at();
        const double start = std::floor(min / step + 1e-9) * step;
        const int count = std::max(1, static_cast<int>(std::ceil((max - start) / step - 1e-9)));
        if (count <= maxbins) return {start, step, count};
        if (++m == std::size(kMantissa)) {
            m = 0;
            ++exponent;
        }
    }
}

inline BinSpec nice_bins(std::span<const double> values, int maxbins) {
    if (values.empty()) return {};
    auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    return nice_bins(*lo, *hi, maxbins);
}

/// Bucket index of each value under `nice_bins(values, maxbins)`.
inline std::vector<int> bin_values(std::span<const double> values, int maxbins) {
    const BinSpec bins = nice_bins(values, maxbins);
    std::vector<int> out;
    out.reserve(values.size());
    for (double v : values) out.push_back(bins.bucket(v));
    return out;
}

}  // namespace rvrec
