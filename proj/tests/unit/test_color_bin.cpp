#include <gtest/gtest.h>

#include "support.hpp"

using namespace rvrec;

namespace {

// Reference CIELAB values from skimage.color.rgb2lab (D65, 2 degree).
struct LabCase {
    const char* hex;
    Lab lab;
};
const LabCase kLabOracle[] = {
    {"#ffffff", {100.000000, -0.002455, 0.004653}}, {"#000000", {0.0, 0.0, 0.0}},
    {"#ff0000", {53.240588, 80.092308, 67.202751}}, {"#808080", {53.585013, -0.001473, 0.002791}},
    {"#440154", {14.903851, 40.633275, -32.327341}}, {"#fde725", {90.858227, -10.310104, 85.299241}},
    {"#3b528b", {35.650314, 9.241058, -34.425688}},  {"#1f77b4", {47.979331, -3.212594, -39.319472}},
};

}  // namespace

TEST(Color, MatchesReferenceConverter) {
    for (const auto& c : kLabOracle) {
        const Lab lab = srgb_to_lab(parse_hex(c.hex));
        EXPECT_NEAR(lab.l, c.lab.l, 1e-4) << c.hex;
        EXPECT_NEAR(lab.a, c.lab.a, 1e-4) << c.hex;
        EXPECT_NEAR(lab.b, c.lab.b, 1e-4) << c.hex;
    }
}

TEST(Color, WhiteAndBlackAnchors) {
    const Lab white = srgb_to_lab({1, 1, 1});
    EXPECT_NEAR(white.l, 100, 0.01);
    EXPECT_NEAR(white.a, 0, 0.01);
    EXPECT_NEAR(white.b, 0, 0.01);
    EXPECT_EQ(srgb_to_lab({0, 0, 0}), (Lab{0, 0, 0}));
}

TEST(Color, SchemeEndpointsAreFirstAndLastStops) {
    const auto reg = SchemeRegistry::builtin();
    EXPECT_EQ(resolve_color(0, 0, 1, "viridis", reg), srgb_to_lab(parse_hex("#440154")));
    EXPECT_EQ(resolve_color(1, 0, 1, "viridis", reg), srgb_to_lab(parse_hex("#fde725")));
}

TEST(Color, UnknownSchemeIsConfigError) {
    EXPECT_THROW((void)SchemeRegistry::builtin().get("nope"), UnknownSchemeError);
}

TEST(Color, BadHexIsRejected) {
    EXPECT_THROW(parse_hex("#12345"), SchemaError);
    EXPECT_THROW(parse_hex("#gg0000"), SchemaError);
}

TEST(Color, DistanceExamples) {
    EXPECT_NEAR(distance_color({100, 0, 0}, {0, 0, 0}), 100, 0.1);
    EXPECT_DOUBLE_EQ(distance_color({50, 10, 0}, {50, 10, 0}), 0);
    EXPECT_DOUBLE_EQ(distance_color({50, 10, 0}, {50, 0, 0}), 10);
}

TEST(Bins, ExactDivision) {
    const BinSpec b = nice_bins(0, 100, 5);
    EXPECT_DOUBLE_EQ(b.step, 20);
    EXPECT_EQ(b.count, 5);
    EXPECT_DOUBLE_EQ(b.start, 0);
}

TEST(Bins, NiceStepTwoAndAHalf) {
    // 0..23 in at most 10 buckets: 2 gives 12 buckets, 2.5 gives 10.
    const BinSpec b = nice_bins(0, 23, 10);
    EXPECT_DOUBLE_EQ(b.step, 2.5);
    EXPECT_EQ(b.count, 10);
}

TEST(Bins, SingleValueIsOneBucket) {
    const std::vector<double> v(6, 7.0);
    const BinSpec b = nice_bins(v, 10);
    EXPECT_EQ(b.count, 1);
    for (int i : bin_values(v, 10)) EXPECT_EQ(i, 0);
}

TEST(Bins, MaxValueFallsInLastBucket) {
    const BinSpec b = nice_bins(0, 100, 5);
    EXPECT_EQ(b.bucket(100), 4);
    EXPECT_EQ(b.bucket(0), 0);
    EXPECT_EQ(b.bucket(20), 1);
}

TEST(Bins, CountNeverExceedsMaxbins) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1000, 1000);
    for (int k = 0; k < 500; ++k) {
        double a = u(rng), c = u(rng);
        if (a > c) std::swap(a, c);
        for (int maxbins : {5, 15, 25}) {
            const BinSpec b = nice_bins(a, c, maxbins);
            EXPECT_LE(b.count, maxbins);
            EXPECT_LE(b.lo(), a);
            EXPECT_GE(b.hi(), c - 1e-9 * std::abs(c));
        }
    }
}

TEST(Aggregates, Examples) {
    const std::vector<double> three = {1, 2, 3}, four = {1, 2, 3, 4};
    EXPECT_DOUBLE_EQ(aggregate_values(three, Aggregate::mean), 2);
    EXPECT_DOUBLE_EQ(aggregate_values(four, Aggregate::median), 2.5);
    EXPECT_DOUBLE_EQ(aggregate_values(four, Aggregate::sum), 10);
    EXPECT_DOUBLE_EQ(aggregate_values(four, Aggregate::count), 4);
}
