#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "rvrec/chart.hpp"
#include "rvrec/error.hpp"
#include "rvrec/measures.hpp"
#include "rvrec/report.hpp"
#include "rvrec/trend.hpp"

namespace rvrec {

/// Feature families; combinations are unions kept in the order A, D, B1, B2.
enum FeatureFamily : unsigned { kFamilyA = 1, kFamilyD = 2, kFamilyB1 = 4, kFamilyB2 = 8 };

inline unsigned parse_family(std::string_view s) {
    unsigned f = 0;
    std::size_t start = 0;
    while (start <= s.size()) {
        const std::size_t end = std::min(s.find('+', start), s.size());
        const std::string_view part = s.substr(start, end - start);
        if (part == "A") f |= kFamilyA;
        else if (part == "D") f |= kFamilyD;
        else if (part == "B1") f |= kFamilyB1;
        else if (part == "B2") f |= kFamilyB2;
        else throw ConfigError("unknown feature family '" + std::string(part) + "'");
        start = end + 1;
    }
    return f;
}

inline std::string family_name(unsigned f) {
    std::string out;
    for (auto [bit, name] : {std::pair{kFamilyA, "A"}, {kFamilyD, "D"}, {kFamilyB1, "B1"}, {kFamilyB2, "B2"}})
        if (f & bit) out += (out.empty() ? "" : "+") + std::string(name);
    return out;
}

enum class Mapping { difference, concatenate };

inline std::string to_string(Mapping m) { return m == Mapping::difference ? "difference" : "concatenate"; }

inline Mapping parse_mapping(std::string_view s) {
    if (s == "difference") return Mapping::difference;
    if (s == "concatenate") return Mapping::concatenate;
    throw ConfigError("unknown mapping '" + std::string(s) + "'");
}

struct FeatureVector {
    std::vector<std::string> names;
    std::vector<double> values;
};

/// Infinite loss components (no overlapping trend domain) enter features at this value.
inline constexpr double kInfiniteLossFeature = 1e6;

/// True when the target's x and y carry the source's y and x fields.
inline bool is_transposed(const ChartSpec& source, const ChartSpec& target) {
    auto key = [](const ChartSpec& s, Channel c) { return detail::match_key(binding_of(*s.find(c))); };
    return key(source, Channel::x) != key(source, Channel::y) && key(target, Channel::x) == key(source, Channel::y) &&
           key(target, Channel::y) == key(source, Channel::x);
}

inline FeatureVector extract_features(const LossReport& r, const ChartSpec& source, const ChartSpec& target,
                                      unsigned family) {
    auto capped = [](double v) { return std::isfinite(v) ? v : kInfiniteLossFeature; };
    std::vector<std::pair<std::string, double>> id, cmp, tr, mask;
    auto add = [&](auto& out, const std::string& prefix, const std::map<std::string, double>& comps,
                   const std::vector<std::string>& keys) {
        for (const auto& k : keys) {
            auto it = comps.find(k);
            out.emplace_back(prefix + k, it == comps.end() ? 0.0 : capped(it->second));
            mask.emplace_back("present." + prefix + k, it == comps.end() ? 0.0 : 1.0);
        }
    };
    std::vector<std::string> channels, models;
    for (Channel c : kAllChannels) channels.push_back(to_string(c));
    for (TrendKind k : kAllTrendKinds) models.push_back(to_string(k));
    add(id, "id.", r.identification.components, channels);
    add(cmp, "cmp.", r.comparison.components, channels);
    add(tr, "trend.", r.trend.components, models);

    FeatureVector f;
    auto push = [&](const std::string& n, double v) {
        f.names.push_back(n);
        f.values.push_back(v);
    };
    auto sum = [](const auto& group) {
        std::vector<double> v;
        for (const auto& [n, x] : group) v.push_back(x);
        std::sort(v.begin(), v.end());
        return std::accumulate(v.begin(), v.end(), 0.0);
    };
    if (family & kFamilyA) {
        push("identification", sum(id));
        push("comparison", sum(cmp));
        push("trend", sum(tr));
    }
    if (family & kFamilyD) {
        for (const auto* group : {&id, &cmp, &tr, &mask})
            for (const auto& [n, v] : *group) push(n, v);
    }
    if (family & kFamilyB1) {
        push("dwidth", target.width - source.width);
        push("dheight", target.height - source.height);
    }
    if (family & kFamilyB2) push("transposed", is_transposed(source, target) ? 1.0 : 0.0);
    return f;
}

inline std::vector<double> pair_map(const FeatureVector& a, const FeatureVector& b, Mapping m) {
    if (a.names != b.names) throw IncompatibleFeaturesError("pair_map: feature names differ");
    std::vector<double> out;
    if (m == Mapping::difference) {
        for (std::size_t i = 0; i < a.values.size(); ++i) out.push_back(a.values[i] - b.values[i]);
    } else {
        out = a.values;
        out.insert(out.end(), b.values.begin(), b.values.end());
    }
    return out;
}

/// Linear pairwise ranker. Scores are costs: lower ranks higher. For the
/// difference mapping, `weights` has one entry per feature and a pair (a, b)
/// prefers a when w . (n(a) - n(b)) < 0, where n standardizes features. For
/// concatenation, `weights` holds [u; v] and the pair logit for "a preferred"
/// is u . n(a) + v . n(b) + bias; items are scored by its antisymmetric part.
struct RankModel {
    Mapping mapping = Mapping::difference;
    unsigned family = kFamilyA;
    std::vector<std::string> feature_names;
    std::vector<double> means;
    std::vector<double> stddevs;
    std::vector<double> weights;
    double bias = 0;
    std::uint64_t seed = 0;

    static RankModel weighted_sum(double wi, double wc, double wt) {
        RankModel m;
        m.feature_names = {"identification", "comparison", "trend"};
        m.means = {0, 0, 0};
        m.stddevs = {1, 1, 1};
        m.weights = {wi, wc, wt};
        return m;
    }

    std::vector<double> normalize(const std::vector<double>& v) const {
        std::vector<double> out(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - means[i]) / stddevs[i];
        return out;
    }

    /// Per-item cost weights.
    std::vector<double> cost_weights() const {
        if (mapping == Mapping::difference) return weights;
        const std::size_t d = feature_names.size();
        std::vector<double> c(d);
        for (std::size_t i = 0; i < d; ++i) c[i] = (weights[d + i] - weights[i]) / 2;
        return c;
    }

    /// Logit that a is preferred over b.
    double pair_logit(const FeatureVector& a, const FeatureVector& b) const {
        const auto na = normalize(a.values), nb = normalize(b.values);
        double z = 0;
        if (mapping == Mapping::difference) {
            for (std::size_t i = 0; i < na.size(); ++i) z -= weights[i] * (na[i] - nb[i]);
            return z;
        }
        const std::size_t d = na.size();
        for (std::size_t i = 0; i < d; ++i) z += weights[i] * na[i] + weights[d + i] * nb[i];
        return z + bias;
    }
};

/// Cost of a target; terms with zero weight are skipped so infinite
/// components do not turn into NaN.
inline double score(const RankModel& model, const FeatureVector& f) {
    if (f.names != model.feature_names) throw ModelMismatchError("score: model features do not match");
    const auto n = model.normalize(f.values);
    const auto w = model.cost_weights();
    double s = 0;
    for (std::size_t i = 0; i < n.size(); ++i)
        if (w[i] != 0) s += w[i] * n[i];
    return s;
}

inline Json to_json(const RankModel& m) {
    return {{"mapping", to_string(m.mapping)}, {"family", family_name(m.family)},
            {"featureNames", m.feature_names}, {"means", m.means},
            {"stddevs", m.stddevs},            {"weights", m.weights},
            {"bias", m.bias},                  {"seed", m.seed}};
}

inline RankModel rank_model_from_json(const Json& j) {
    try {
        RankModel m;
        m.mapping = parse_mapping(j.at("mapping").get<std::string>());
        m.family = parse_family(j.value("family", std::string("A")));
        m.feature_names = j.at("featureNames").get<std::vector<std::string>>();
        m.means = j.at("means").get<std::vector<double>>();
        m.stddevs = j.at("stddevs").get<std::vector<double>>();
        m.weights = j.at("weights").get<std::vector<double>>();
        m.bias = j.value("bias", 0.0);
        m.seed = j.value("seed", std::uint64_t{0});
        const std::size_t d = m.feature_names.size();
        const std::size_t wd = m.mapping == Mapping::difference ? d : 2 * d;
        if (m.means.size() != d || m.stddevs.size() != d || m.weights.size() != wd)
            throw ModelMismatchError("model: vector lengths do not match featureNames");
        for (double s : m.stddevs)
            if (!(s > 0)) throw ModelMismatchError("model: stddevs must be positive");
        return m;
    } catch (const Json::exception& e) {
        throw ModelMismatchError(std::string("model: ") + e.what());
    } catch (const ConfigError& e) {
        throw ModelMismatchError(std::string("model: ") + e.what());
    }
}

struct PairSample {
    FeatureVector a;
    FeatureVector b;
    int label = 1;  // +1: a preferred over b
};

struct TrainOptions {
    Mapping mapping = Mapping::difference;
    int epochs = 1000;
    double learning_rate = 0.5;
    double l2 = 1e-4;
    std::uint64_t seed = 0;
};

/// Full-batch gradient descent on the pairwise logistic loss over
/// standardized features.
inline RankModel train(const std::vector<PairSample>& pairs, const TrainOptions& opt = {}) {
    if (pairs.size() < 2) throw DegenerateDataError("train: need at least 2 pairs");
    bool pos = false, neg = false;
    for (const auto& p : pairs) {
        if (p.label != 1 && p.label != -1) throw DegenerateDataError("train: labels must be -1 or 1");
        (p.label > 0 ? pos : neg) = true;
        if (p.a.names != pairs.front().a.names || p.b.names != pairs.front().a.names)
            throw IncompatibleFeaturesError("train: feature names differ between pairs");
    }
    if (!pos || !neg) throw DegenerateDataError("train: labels contain a single class");

    RankModel m;
    m.mapping = opt.mapping;
    m.seed = opt.seed;
    m.feature_names = pairs.front().a.names;
    const std::size_t d = m.feature_names.size();

    // Statistics over every item appearing in a pair.
    m.means.assign(d, 0.0);
    m.stddevs.assign(d, 0.0);
    const double items = 2.0 * static_cast<double>(pairs.size());
    for (const auto& p : pairs)
        for (std::size_t i = 0; i < d; ++i) m.means[i] += p.a.values[i] + p.b.values[i];
    for (auto& v : m.means) v /= items;
    for (const auto& p : pairs)
        for (std::size_t i = 0; i < d; ++i) {
            const double da = p.a.values[i] - m.means[i], db = p.b.values[i] - m.means[i];
            m.stddevs[i] += da * da + db * db;
        }
    std::vector<bool> constant(d);
    for (std::size_t i = 0; i < d; ++i) {
        const double sd = std::sqrt(m.stddevs[i] / items);
        constant[i] = !(sd > 1e-12 * std::max(1.0, std::abs(m.means[i])));
        m.stddevs[i] = constant[i] ? 1.0 : sd;
    }

    // Each pair becomes x with logit z = w . x (+ bias), y = label.
    const bool diff = opt.mapping == Mapping::difference;
    const std::size_t wd = diff ? d : 2 * d;
    std::vector<std::vector<double>> xs;
    std::vector<double> ys;
    for (const auto& p : pairs) {
        const auto na = m.normalize(p.a.values), nb = m.normalize(p.b.values);
        std::vector<double> x(wd);
        for (std::size_t i = 0; i < d; ++i) {
            if (diff) x[i] = -(na[i] - nb[i]);
            else {
                x[i] = na[i];
                x[d + i] = nb[i];
            }
        }
        for (std::size_t i = 0; i < d; ++i)
            if (constant[i]) {
                x[i] = 0;
                if (!diff) x[d + i] = 0;
            }
        xs.push_back(std::move(x));
        ys.push_back(p.label);
    }

    std::vector<double> w(wd, 0.0), grad(wd);
    double bias = 0;
    const double n = static_cast<double>(pairs.size());
    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double gb = 0;
        for (std::size_t k = 0; k < xs.size(); ++k) {
            double z = diff ? 0.0 : bias;
            for (std::size_t i = 0; i < wd; ++i) z += w[i] * xs[k][i];
            // d/dz log(1 + exp(-y z)) = -y * sigmoid(-y z)
            const double yz = ys[k] * z;
            const double g = -ys[k] / (1.0 + std::exp(yz));
            for (std::size_t i = 0; i < wd; ++i) grad[i] += g * xs[k][i];
            gb += g;
        }
        for (std::size_t i = 0; i < wd; ++i) w[i] -= opt.learning_rate * (grad[i] / n + opt.l2 * w[i]);
        if (!diff) bias -= opt.learning_rate * gb / n;
    }
    // The difference mapping was trained on -(na - nb); store cost weights.
    m.weights = w;
    m.bias = bias;
    return m;
}

/// Predicted label for a pair: +1 when a is preferred.
inline int predict(const RankModel& m, const PairSample& p) { return m.pair_logit(p.a, p.b) >= 0 ? 1 : -1; }

inline double accuracy(const RankModel& m, std::span<const PairSample> pairs) {
    if (pairs.empty()) return 0.0;
    std::size_t ok = 0;
    for (const auto& p : pairs) ok += predict(m, p) == p.label;
    return static_cast<double>(ok) / static_cast<double>(pairs.size());
}

struct LooResult {
    double accuracy = 0;
    std::size_t folds = 0;
};

/// Leave-one-out accuracy: each pair is predicted by a model trained on the rest.
inline LooResult evaluate_loo(const std::vector<PairSample>& pairs, const TrainOptions& opt = {}) {
    if (pairs.size() < 3) throw DegenerateDataError("evaluate_loo: need at least 3 pairs");
    LooResult r;
    std::size_t ok = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        std::vector<PairSample> rest;
        rest.reserve(pairs.size() - 1);
        for (std::size_t j = 0; j < pairs.size(); ++j)
            if (j != i) rest.push_back(pairs[j]);
        const RankModel m = train(rest, opt);
        ok += predict(m, pairs[i]) == pairs[i].label;
        ++r.folds;
    }
    r.accuracy = static_cast<double>(ok) / static_cast<double>(r.folds);
    return r;
}

/// Majority sign of an odd number of +-1 labels.
inline int aggregate_labels(std::span<const int> labels) {
    if (labels.empty() || labels.size() % 2 == 0)
        throw DegenerateDataError("aggregate_labels: need an odd number of labels");
    int sum = 0;
    for (int l : labels) {
        if (l != 1 && l != -1) throw DegenerateDataError("aggregate_labels: labels must be -1 or 1");
        sum += l;
    }
    return sum > 0 ? 1 : -1;
}

/// Pair labels keyed by (a, b) with a < b; value +1 means a is preferred.
class PairLabels {
public:
    void set(const std::string& a, const std::string& b, int label) {
        if (a < b) labels_[{a, b}] = label;
        else labels_[{b, a}] = -label;
    }
    /// +1 when a is preferred over b.
    int get(const std::string& a, const std::string& b) const {
        auto it = labels_.find(a < b ? std::pair(a, b) : std::pair(b, a));
        if (it == labels_.end()) throw MissingPairError("no label for pair (" + a + ", " + b + ")");
        return a < b ? it->second : -it->second;
    }
    bool contains(const std::string& a, const std::string& b) const {
        return labels_.count(a < b ? std::pair(a, b) : std::pair(b, a)) != 0;
    }
    const std::map<std::pair<std::string, std::string>, int>& all() const { return labels_; }

private:
    std::map<std::pair<std::string, std::string>, int> labels_;
};

enum class Monotonicity { monotonic, partial, nonmonotonic };

inline std::string to_string(Monotonicity m) {
    switch (m) {
        case Monotonicity::monotonic: return "monotonic";
        case Monotonicity::partial: return "partial";
        case Monotonicity::nonmonotonic: return "nonmonotonic";
    }
    return {};
}

struct MonotonicityResult {
    Monotonicity status = Monotonicity::monotonic;
    std::vector<std::string> order;
    std::vector<std::pair<std::string, std::string>> misaligned;  // consecutive pairs of `order` against labels
    bool cycle = false;
};

/// Sorts by binary insertion using the labels as comparator, then re-checks
/// the produced order. Consistent labels sort without any backward pair.
/// Otherwise the order is partial when some consecutive pairs disagree with
/// their labels (those pairs are reported) and nonmonotonic when every
/// consecutive pair agrees but a cycle hides among non-adjacent pairs.
/// Binary insertion probes both neighbours of every slot, so with complete
/// labels the partial branch only guards against a future comparator change.
inline MonotonicityResult check_monotonic(const std::vector<std::string>& targets, const PairLabels& labels) {
    for (std::size_t i = 0; i < targets.size(); ++i)
        for (std::size_t j = i + 1; j < targets.size(); ++j) (void)labels.get(targets[i], targets[j]);

    MonotonicityResult r;
    for (const auto& t : targets) {
        std::size_t lo = 0, hi = r.order.size();
        while (lo < hi) {
            const std::size_t mid = lo + (hi - lo) / 2;
            if (labels.get(t, r.order[mid]) > 0) hi = mid;
            else lo = mid + 1;
        }
        r.order.insert(r.order.begin() + static_cast<std::ptrdiff_t>(lo), t);
    }
    for (std::size_t i = 0; i + 1 < r.order.size(); ++i)
        if (labels.get(r.order[i], r.order[i + 1]) < 0) r.misaligned.emplace_back(r.order[i], r.order[i + 1]);
    for (std::size_t i = 0; i < r.order.size() && !r.cycle; ++i)
        for (std::size_t j = i + 1; j < r.order.size() && !r.cycle; ++j)
            r.cycle = labels.get(r.order[i], r.order[j]) < 0;
    if (!r.cycle) r.status = Monotonicity::monotonic;
    else if (!r.misaligned.empty()) r.status = Monotonicity::partial;
    else r.status = Monotonicity::nonmonotonic;
    return r;
}

namespace detail {

/// Uniform index in [0, n) from a 64-bit engine, independent of the
/// standard library's distribution implementations.
inline std::size_t draw_index(std::mt19937_64& rng, std::size_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v;
    do v = rng();
    while (v >= limit);
    return static_cast<std::size_t>(v % n);
}

/// `k` distinct elements of `pool` drawn uniformly, in draw order.
inline std::vector<std::size_t> draw_without_replacement(std::vector<std::size_t> pool, std::size_t k,
                                                         std::mt19937_64& rng) {
    std::vector<std::size_t> out;
    k = std::min(k, pool.size());
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + draw_index(rng, pool.size() - i);
        std::swap(pool[i], pool[j]);
        out.push_back(pool[i]);
    }
    return out;
}

}  // namespace detail

struct QuintileOptions {
    std::size_t top_k = 100;
    std::size_t per_quintile = 2;
    std::uint64_t seed = 0;
};

/// For each measure, ranks targets ascending, keeps the top K, and draws
/// `per_quintile` ids from each fifth (or proportionally per distinct value
/// when a measure has fewer than 5). Returns the union in draw order.
inline std::vector<std::string> quintile_sample(const std::vector<std::string>& ids,
                                                const std::vector<std::vector<double>>& measures,
                                                const QuintileOptions& opt = {}) {
    std::mt19937_64 rng(opt.seed);
    std::vector<std::string> out;
    std::set<std::string> seen;
    auto emit = [&](std::size_t i) {
        if (seen.insert(ids[i]).second) out.push_back(ids[i]);
    };
    for (const auto& values : measures) {
        if (values.size() != ids.size()) throw ConfigError("quintile_sample: measure length differs from ids");
        std::vector<std::size_t> order(ids.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return std::tie(values[a], ids[a]) < std::tie(values[b], ids[b]);
        });
        order.resize(std::min(order.size(), opt.top_k));
        const std::size_t m = order.size();

        std::vector<std::vector<std::size_t>> strata;
        for (std::size_t i = 0; i < m;) {
            std::size_t j = i;
            while (j < m && values[order[j]] == values[order[i]]) ++j;
            strata.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                                order.begin() + static_cast<std::ptrdiff_t>(j));
            i = j;
        }
        const std::size_t budget = 5 * opt.per_quintile;
        if (strata.size() < 5) {
            // Largest-remainder allocation of the budget by stratum size.
            std::vector<std::size_t> quota(strata.size());
            std::vector<std::pair<double, std::size_t>> rem;
            std::size_t used = 0;
            for (std::size_t s = 0; s < strata.size(); ++s) {
                const double exact = static_cast<double>(budget) * static_cast<double>(strata[s].size()) / static_cast<double>(m);
                quota[s] = static_cast<std::size_t>(std::floor(exact));
                used += quota[s];
                rem.emplace_back(-(exact - std::floor(exact)), s);
            }
            std::sort(rem.begin(), rem.end());
            for (std::size_t r = 0; used < budget && r < rem.size(); ++r, ++used) ++quota[rem[r].second];
            for (std::size_t s = 0; s < strata.size(); ++s)
                for (std::size_t i : detail::draw_without_replacement(strata[s], quota[s], rng)) emit(i);
        } else {
            for (std::size_t q = 0; q < 5; ++q) {
                const std::size_t lo = q * m / 5, hi = (q + 1) * m / 5;
                std::vector<std::size_t> pool(order.begin() + static_cast<std::ptrdiff_t>(lo),
                                              order.begin() + static_cast<std::ptrdiff_t>(hi));
                for (std::size_t i : detail::draw_without_replacement(pool, opt.per_quintile, rng)) emit(i);
            }
        }
    }
    return out;
}

/// Indices ordered by ascending score, ties broken by id.
inline std::vector<std::size_t> rank_order(const std::vector<double>& scores, const std::vector<std::string>& ids) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] < scores[b];
        return ids[a] < ids[b];
    });
    return order;
}

}  // namespace rvrec
