#include <gtest/gtest.h>

#include "oracles/planted.hpp"
#include "support.hpp"

using namespace rvrec;

namespace {

FeatureVector fv(std::vector<double> v) { return {{"identification", "comparison", "trend"}, std::move(v)}; }

/// Labels from a strict order: earlier ids are preferred.
PairLabels from_order(const std::vector<std::string>& order) {
    PairLabels l;
    for (std::size_t i = 0; i < order.size(); ++i)
        for (std::size_t j = i + 1; j < order.size(); ++j) l.set(order[i], order[j], 1);
    return l;
}

bool some_order_consistent(std::vector<std::string> ids, const PairLabels& l) {
    std::sort(ids.begin(), ids.end());
    do {
        bool ok = true;
        for (std::size_t i = 0; i < ids.size() && ok; ++i)
            for (std::size_t j = i + 1; j < ids.size() && ok; ++j) ok = l.get(ids[i], ids[j]) > 0;
        if (ok) return true;
    } while (std::next_permutation(ids.begin(), ids.end()));
    return false;
}

}  // namespace

TEST(Family, ParseAndName) {
    EXPECT_EQ(parse_family("A"), kFamilyA);
    EXPECT_EQ(parse_family("A+D+B2"), kFamilyA | kFamilyD | kFamilyB2);
    EXPECT_EQ(family_name(parse_family("B1+A")), "A+B1");
    EXPECT_THROW(parse_family("A+Z"), ConfigError);
    EXPECT_THROW(parse_family(""), ConfigError);
    EXPECT_THROW(parse_mapping("sum"), ConfigError);
}

TEST(Features, IdentityAndTransposition) {
    const auto f = tests::load_fixture("scatter");
    const auto v = render(f.data, f.spec);
    const auto r = evaluate(v, v);
    EXPECT_EQ(extract_features(r, f.spec, f.spec, kFamilyA).values, (std::vector<double>{0, 0, 0}));

    ChartSpec tr = f.spec;
    tr.width = tr.height = 300;
    std::swap(tr.encoding.at(Channel::x), tr.encoding.at(Channel::y));
    EXPECT_EQ(extract_features(r, f.spec, tr, kFamilyB2).values, (std::vector<double>{1}));
    EXPECT_EQ(extract_features(r, f.spec, tr, kFamilyB1).values, (std::vector<double>{-300, 0}));
    EXPECT_EQ(extract_features(r, f.spec, f.spec, kFamilyB2).values, (std::vector<double>{0}));
}

TEST(Features, DetailedFamilyLayout) {
    const auto f = tests::load_fixture("bubble");
    const auto v = render(f.data, f.spec);
    const auto d = extract_features(evaluate(v, v), f.spec, f.spec, kFamilyD);
    EXPECT_EQ(d.names.size(), 26u);
    EXPECT_EQ(d.names.front(), "id.x");
    auto at = [&](const std::string& n) {
        return d.values[static_cast<std::size_t>(std::find(d.names.begin(), d.names.end(), n) - d.names.begin())];
    };
    EXPECT_EQ(at("present.id.size"), 1.0);
    EXPECT_EQ(at("present.id.color"), 0.0);
    EXPECT_EQ(at("present.trend.Size_on_XY"), 1.0);
}

TEST(Features, InfiniteLossesAreCapped) {
    LossReport r;
    r.trend.components["Y_on_X"] = std::numeric_limits<double>::infinity();
    r.trend.total = r.trend.components["Y_on_X"];
    const auto f = tests::load_fixture("scatter").spec;
    EXPECT_EQ(extract_features(r, f, f, kFamilyA).values[2], kInfiniteLossFeature);
}

TEST(PairMap, DifferenceAndConcatenate) {
    const auto a = fv({1, 2, 3}), b = fv({0.5, 4, -1});
    EXPECT_EQ(pair_map(a, a, Mapping::difference), (std::vector<double>{0, 0, 0}));
    const auto ab = pair_map(a, b, Mapping::difference), ba = pair_map(b, a, Mapping::difference);
    for (std::size_t i = 0; i < ab.size(); ++i) EXPECT_EQ(ab[i], -ba[i]);
    EXPECT_EQ(pair_map(a, b, Mapping::concatenate).size(), 6u);
    FeatureVector other{{"x", "y", "z"}, {1, 2, 3}};
    EXPECT_THROW(pair_map(a, other, Mapping::difference), IncompatibleFeaturesError);
}

TEST(Score, ZeroWeightsTieByIdAndSingleWeightFollowsThatLoss) {
    const auto zero = RankModel::weighted_sum(0, 0, 0);
    const std::vector<std::string> ids = {"t3", "t1", "t2"};
    const std::vector<FeatureVector> items = {fv({3, 0, 9}), fv({1, 5, 0}), fv({2, 1, 1})};
    std::vector<double> s;
    for (const auto& f : items) s.push_back(score(zero, f));
    const auto order = rank_order(s, ids);
    EXPECT_EQ(order, (std::vector<std::size_t>{1, 2, 0}));

    const auto id_only = RankModel::weighted_sum(1, 0, 0);
    s.clear();
    for (const auto& f : items) s.push_back(score(id_only, f));
    EXPECT_EQ(rank_order(s, ids), (std::vector<std::size_t>{1, 2, 0}));
    EXPECT_DOUBLE_EQ(score(RankModel::weighted_sum(1, 1, 1), items[0]), 12);
}

TEST(Train, RecoversPlantedOrder) {
    const auto pairs = oracle::planted_pairs(300, 1);
    const auto m = train(pairs);
    EXPECT_GE(accuracy(m, pairs), 0.98);
    // Cost weights keep the planted signs and ordering of magnitudes.
    const auto w = m.cost_weights();
    EXPECT_GT(w[2], w[0]);
    EXPECT_GT(w[0], w[1]);
    EXPECT_GT(w[1], 0);
}

TEST(Train, FlippedLabelsNegateWeights) {
    auto pairs = oracle::planted_pairs(200, 2);
    const auto m = train(pairs);
    for (auto& p : pairs) p.label = -p.label;
    const auto flipped = train(pairs);
    for (std::size_t i = 0; i < m.weights.size(); ++i) EXPECT_EQ(flipped.weights[i], -m.weights[i]);
}

TEST(Train, ChanceOnIdenticalFeatures) {
    std::vector<PairSample> pairs;
    for (int i = 0; i < 200; ++i) pairs.push_back({fv({1, 1, 1}), fv({1, 1, 1}), i % 2 ? 1 : -1});
    const auto m = train(pairs);
    EXPECT_NEAR(accuracy(m, pairs), 0.5, 0.05);
    const auto loo = evaluate_loo(pairs);
    EXPECT_EQ(loo.folds, pairs.size());
    EXPECT_NEAR(loo.accuracy, 0.5, 0.05);
}

TEST(Train, LeaveOneOutOnSeparableData) {
    const auto pairs = oracle::planted_pairs(80, 3);
    const auto loo = evaluate_loo(pairs);
    EXPECT_EQ(loo.folds, 80u);
    EXPECT_GE(loo.accuracy, 0.95);
}

TEST(Train, DegenerateInputs) {
    EXPECT_THROW(train({}), DegenerateDataError);
    std::vector<PairSample> one_class(5, PairSample{fv({1, 2, 3}), fv({3, 2, 1}), 1});
    EXPECT_THROW(train(one_class), DegenerateDataError);
}

TEST(Train, DifferenceMappingIsAntisymmetric) {
    const auto pairs = oracle::planted_pairs(100, 4);
    const auto m = train(pairs);
    for (const auto& p : pairs) {
        EXPECT_EQ(m.pair_logit(p.a, p.b), -m.pair_logit(p.b, p.a));
        if (m.pair_logit(p.a, p.b) != 0) {
            EXPECT_EQ(predict(m, p), -predict(m, {p.b, p.a, -p.label}));
        }
    }
}

TEST(Train, ConcatenateMappingLearnsTheOrder) {
    const auto pairs = oracle::planted_pairs(300, 5);
    TrainOptions opt;
    opt.mapping = Mapping::concatenate;
    const auto m = train(pairs, opt);
    EXPECT_EQ(m.weights.size(), 6u);
    EXPECT_GE(accuracy(m, pairs), 0.95);
    // Scores from the antisymmetric part order items like the planted cost.
    std::size_t agree = 0;
    for (const auto& p : pairs) agree += (score(m, p.a) < score(m, p.b)) == (p.label > 0);
    EXPECT_GE(static_cast<double>(agree) / static_cast<double>(pairs.size()), 0.95);
}

TEST(ModelJson, RoundTripAndMismatch) {
    const auto m = train(oracle::planted_pairs(50, 6));
    const auto back = rank_model_from_json(to_json(m));
    EXPECT_EQ(back.weights, m.weights);
    EXPECT_EQ(back.means, m.means);
    EXPECT_EQ(back.feature_names, m.feature_names);
    Json bad = to_json(m);
    bad["weights"].push_back(1.0);
    EXPECT_THROW(rank_model_from_json(bad), ModelMismatchError);
    bad = to_json(m);
    bad.erase("means");
    EXPECT_THROW(rank_model_from_json(bad), ModelMismatchError);
    EXPECT_THROW(score(m, FeatureVector{{"a"}, {1}}), ModelMismatchError);
}

TEST(Labels, MajorityOfEverySignTriple) {
    for (int a : {-1, 1})
        for (int b : {-1, 1})
            for (int c : {-1, 1}) {
                const std::array<int, 3> l = {a, b, c};
                EXPECT_EQ(aggregate_labels(l), a + b + c > 0 ? 1 : -1);
            }
    const std::array<int, 2> even = {1, -1};
    EXPECT_THROW(aggregate_labels(even), DegenerateDataError);
}

TEST(Labels, PairLabelsStoreBothOrientations) {
    PairLabels l;
    l.set("b", "a", 1);
    EXPECT_EQ(l.get("b", "a"), 1);
    EXPECT_EQ(l.get("a", "b"), -1);
    EXPECT_THROW(l.get("a", "c"), MissingPairError);
}

TEST(Monotonic, ConsistentLabelsReproduceTheOrder) {
    const std::vector<std::string> order = {"t2", "t5", "t1", "t4", "t3"};
    const auto r = check_monotonic({"t1", "t2", "t3", "t4", "t5"}, from_order(order));
    EXPECT_EQ(r.status, Monotonicity::monotonic);
    EXPECT_EQ(r.order, order);
    EXPECT_TRUE(r.misaligned.empty());
    EXPECT_FALSE(r.cycle);
}

TEST(Monotonic, PlantedCycleIsNonmonotonic) {
    PairLabels l;
    l.set("a", "b", 1);
    l.set("b", "c", 1);
    l.set("c", "a", 1);
    EXPECT_FALSE(some_order_consistent({"a", "b", "c"}, l));
    const auto r = check_monotonic({"a", "b", "c"}, l);
    EXPECT_EQ(r.status, Monotonicity::nonmonotonic);
    EXPECT_TRUE(r.cycle);
}

TEST(Monotonic, SingleFlipAgainstExhaustiveCheck) {
    const std::vector<std::string> ids = {"a", "b", "c", "d", "e"};
    for (std::size_t i = 0; i < ids.size(); ++i)
        for (std::size_t j = i + 1; j < ids.size(); ++j) {
            PairLabels l = from_order(ids);
            l.set(ids[i], ids[j], -1);
            const auto r = check_monotonic(ids, l);
            const bool consistent = some_order_consistent(ids, l);
            EXPECT_EQ(consistent, j == i + 1) << ids[i] << ids[j];
            EXPECT_EQ(r.status == Monotonicity::monotonic, consistent) << ids[i] << ids[j];
            EXPECT_EQ(r.cycle, !consistent);
            if (consistent) {
                auto swapped = ids;
                std::swap(swapped[i], swapped[j]);
                EXPECT_EQ(r.order, swapped);
            }
        }
}

// A correct comparison sort compares every adjacent output pair directly, so
// with complete labels no consecutive pair can disagree.
TEST(Monotonic, RandomTournamentsNeverMisalignAdjacentPairs) {
    const std::vector<std::string> ids = {"a", "b", "c", "d", "e", "f"};
    std::mt19937_64 rng(5);
    std::size_t cyclic = 0;
    for (int k = 0; k < 300; ++k) {
        PairLabels l;
        for (std::size_t x = 0; x < ids.size(); ++x)
            for (std::size_t y = x + 1; y < ids.size(); ++y) l.set(ids[x], ids[y], rng() % 2 ? 1 : -1);
        const auto r = check_monotonic(ids, l);
        EXPECT_TRUE(r.misaligned.empty());
        EXPECT_NE(r.status, Monotonicity::partial);
        EXPECT_EQ(r.cycle, !some_order_consistent(ids, l));
        EXPECT_EQ(std::set<std::string>(r.order.begin(), r.order.end()).size(), ids.size());
        cyclic += r.cycle;
    }
    EXPECT_GT(cyclic, 0u);
}

TEST(Monotonic, MissingPairIsAnError) {
    PairLabels l;
    l.set("a", "b", 1);
    EXPECT_THROW(check_monotonic({"a", "b", "c"}, l), MissingPairError);
}

TEST(Quintiles, DedupedUnionAndDeterminism) {
    std::vector<std::string> ids;
    std::vector<std::vector<double>> measures(3);
    std::mt19937_64 rng(9);
    for (int i = 0; i < 200; ++i) {
        char buf[8];
        std::snprintf(buf, sizeof buf, "t%04d", i + 1);
        ids.push_back(buf);
        for (auto& m : measures) m.push_back(static_cast<double>(rng() % 1000));
    }
    QuintileOptions opt;
    opt.seed = 42;
    const auto a = quintile_sample(ids, measures, opt);
    EXPECT_LE(a.size(), 30u);
    EXPECT_GE(a.size(), 10u);
    EXPECT_EQ(std::set<std::string>(a.begin(), a.end()).size(), a.size());
    EXPECT_EQ(quintile_sample(ids, measures, opt), a);
    opt.seed = 43;
    EXPECT_NE(quintile_sample(ids, measures, opt), a);
}

TEST(Quintiles, FewTargetsSampleAll) {
    std::vector<std::string> ids;
    std::vector<double> m;
    for (int i = 0; i < 10; ++i) {
        ids.push_back("t" + std::to_string(i));
        m.push_back(i);
    }
    const auto s = quintile_sample(ids, {m});
    EXPECT_EQ(s.size(), 10u);
}

TEST(Quintiles, DrawsFromEachFifth) {
    std::vector<std::string> ids;
    std::vector<double> m;
    for (int i = 0; i < 100; ++i) {
        ids.push_back(std::to_string(1000 + i));
        m.push_back(i);
    }
    const auto s = quintile_sample(ids, {m});
    std::array<int, 5> per{};
    for (const auto& id : s) ++per[static_cast<std::size_t>((std::stoi(id) - 1000) / 20)];
    for (int c : per) EXPECT_EQ(c, 2);
}

TEST(Quintiles, FewDistinctValuesUseLargestRemainder) {
    std::vector<std::string> ids;
    std::vector<double> m;
    for (int i = 0; i < 40; ++i) {
        ids.push_back("t" + std::to_string(100 + i));
        m.push_back(i < 28 ? 0.0 : 1.0);
    }
    const auto s = quintile_sample(ids, {m});
    ASSERT_EQ(s.size(), 10u);
    // Budget 10 split by stratum size: 10 * 28/40 = 7 and 10 * 12/40 = 3.
    const auto ones = std::count_if(s.begin(), s.end(), [](const std::string& id) { return std::stoi(id.substr(1)) >= 128; });
    EXPECT_EQ(ones, 3);
}
