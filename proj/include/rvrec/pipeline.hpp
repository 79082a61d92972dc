#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "rvrec/chart.hpp"
#include "rvrec/dataset.hpp"
#include "rvrec/enumerate.hpp"
#include "rvrec/error.hpp"
#include "rvrec/measures.hpp"
#include "rvrec/rank.hpp"
#include "rvrec/render.hpp"
#include "rvrec/report.hpp"

namespace rvrec {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr std::size_t kMaxRows = 50'000;

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw ConfigError("failed writing '" + path.string() + "'");
}

/// 64-bit FNV-1a, hex encoded.
inline std::string content_hash(std::string_view bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::array<double, 3> parse_weights(std::string_view s) {
    std::array<double, 3> w{};
    std::size_t start = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        const std::size_t end = i == 2 ? s.size() : s.find(',', start);
        if (end == std::string_view::npos) throw ConfigError("--weights: expected three comma-separated numbers");
        auto v = detail::parse_number(s.substr(start, end - start));
        if (!v || *v < 0) throw ConfigError("--weights: weights must be non-negative numbers");
        w[i] = *v;
        start = end + 1;
    }
    return w;
}

/// Everything cmd_rank depends on, already read from disk. The HTTP service
/// fills the same struct from a request body.
struct RankInputs {
    ChartSpec spec;
    std::string data_text;
    int target_width = 300;
    std::array<double, 3> weights = {1, 1, 1};
    std::optional<RankModel> model;
    std::string model_hash;
    PerceptualKernel kernel;
    std::string kernel_hash;
    std::uint64_t seed = 0;
    std::optional<std::size_t> subsample;
    std::string source_id = "source";
    unsigned threads = 0;  // 0: hardware concurrency
};

/// Keeps at most `n` rows chosen uniformly with `seed`, in original order.
inline Dataset subsample_rows(Dataset ds, std::size_t n, std::uint64_t seed) {
    if (ds.rows.size() <= n) return ds;
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> pool(ds.rows.size());
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
    auto picked = detail::draw_without_replacement(std::move(pool), n, rng);
    std::sort(picked.begin(), picked.end());
    std::vector<std::vector<Cell>> rows;
    rows.reserve(n);
    for (std::size_t i : picked) rows.push_back(std::move(ds.rows[i]));
    ds.rows = std::move(rows);
    return ds;
}

inline Dataset load_input_dataset(const RankInputs& in) {
    return load_dataset(in.data_text, in.spec.data.fields, in.spec.data.url);
}

/// Applies the subsample option and the row guard to a parsed dataset.
inline Dataset prepare_dataset(const RankInputs& in, Dataset ds) {
    if (in.subsample) ds = subsample_rows(std::move(ds), *in.subsample, in.seed);
    if (ds.rows.size() > kMaxRows)
        throw ConfigError("dataset has " + std::to_string(ds.rows.size()) + " rows; the limit is " +
                          std::to_string(kMaxRows) + " (use --subsample)");
    return ds;
}

/// Runs `fn(i)` for i in [0, n) on a pool of threads; results must be
/// written by index.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < n; i += threads) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

struct ScoredTarget {
    Target target;
    RenderedView view;
    LossReport report;
    double score = 0;
};

inline double weighted_score(const LossReport& r, const std::array<double, 3>& w) {
    const double totals[3] = {r.identification.total, r.comparison.total, r.trend.total};
    double s = 0;
    for (int i = 0; i < 3; ++i)
        if (w[i] != 0) s += w[i] * totals[i];
    return s;
}

/// Enumerates, evaluates and ranks every target for the source. `parsed` is
/// `in.data_text` loaded under the spec's schema.
inline Json rank_bundle(const RankInputs& in, Dataset parsed, const RenderOptions& opts = {}) {
    validate(in.spec);
    const Dataset ds = prepare_dataset(in, std::move(parsed));
    const RenderedView source = render(ds, in.spec, opts);
    const TargetSet set = generate_targets(in.spec, in.target_width, &ds, opts);

    std::vector<ScoredTarget> scored(set.targets.size());
    parallel_for(scored.size(), in.threads, [&](std::size_t i) {
        ScoredTarget& st = scored[i];
        st.target = set.targets[i];
        st.view = render(ds, st.target.spec, opts);
        st.report = evaluate(source, st.view, in.kernel);
        if (in.model) st.score = score(*in.model, extract_features(st.report, in.spec, st.target.spec, in.model->family));
        else st.score = weighted_score(st.report, in.weights);
    });

    std::vector<double> scores;
    std::vector<std::string> ids;
    for (const auto& st : scored) {
        scores.push_back(st.score);
        ids.push_back(st.target.id);
    }
    Json targets = Json::array();
    std::size_t rank = 0;
    for (std::size_t i : rank_order(scores, ids)) {
        const auto& st = scored[i];
        targets.push_back({{"id", st.target.id},
                           {"rank", ++rank},
                           {"score", detail::finite_or_null(st.score)},
                           {"descriptor", to_json(st.target.descriptor)},
                           {"spec", to_json(st.target.spec)},
                           {"dump", to_json(st.view)},
                           {"losses", to_json(st.report)}});
    }
    Json config = {{"targetWidth", in.target_width},
                   {"weights", in.weights},
                   {"seed", in.seed},
                   {"model", in.model ? Json(in.model_hash) : Json(nullptr)},
                   {"kernel", in.kernel_hash.empty() ? Json(nullptr) : Json(in.kernel_hash)},
                   {"subsample", in.subsample ? Json(*in.subsample) : Json(nullptr)},
                   {"datasetRows", ds.rows.size()},
                   {"droppedRows", ds.dropped_rows},
                   {"dataHash", content_hash(in.data_text)}};
    return {{"version", kVersion},
            {"config", std::move(config)},
            {"source", {{"id", in.source_id}, {"spec", to_json(in.spec)}, {"dump", to_json(source)}}},
            {"targets", std::move(targets)}};
}

inline Json rank_bundle(const RankInputs& in, const RenderOptions& opts = {}) {
    validate(in.spec);
    return rank_bundle(in, load_input_dataset(in), opts);
}

/// Serialized form shared by the CLI output file and the HTTP response.
inline std::string bundle_text(const Json& bundle) { return bundle.dump() + "\n"; }

struct LabelRow {
    std::string source;
    std::string a;
    std::string b;
    int label = 0;
    std::string labeler;
};

/// Label CSV with columns source_id,target_a,target_b,label,labeler_id.
inline std::vector<LabelRow> parse_labels(std::string_view text) {
    const auto records = detail::parse_csv(text);
    if (records.empty()) return {};
    const std::vector<std::string> names = {"source_id", "target_a", "target_b", "label", "labeler_id"};
    std::vector<std::size_t> col;
    for (const auto& n : names) {
        auto it = std::find_if(records[0].begin(), records[0].end(),
                               [&](const std::string& h) { return detail::trim(h) == n; });
        if (it == records[0].end()) throw SchemaError("labels: missing column '" + n + "'");
        col.push_back(static_cast<std::size_t>(it - records[0].begin()));
    }
    std::vector<LabelRow> rows;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        auto field = [&](std::size_t i) {
            if (col[i] >= rec.size()) throw SchemaError("labels: row " + std::to_string(r) + " is short");
            return std::string(detail::trim(rec[col[i]]));
        };
        LabelRow row{field(0), field(1), field(2), 0, field(4)};
        const std::string l = field(3);
        if (l == "1" || l == "+1") row.label = 1;
        else if (l == "-1") row.label = -1;
        else throw SchemaError("labels: row " + std::to_string(r) + ": label must be -1 or 1");
        if (row.a == row.b) throw SchemaError("labels: row " + std::to_string(r) + " compares a target with itself");
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Targets of one ranked bundle, indexed by id.
struct BundleIndex {
    std::string source_id;
    ChartSpec source_spec;
    std::map<std::string, std::pair<ChartSpec, LossReport>> targets;
};

inline BundleIndex index_bundle(const Json& bundle) {
    try {
        BundleIndex b;
        b.source_id = bundle.at("source").at("id").get<std::string>();
        b.source_spec = spec_from_json(bundle.at("source").at("spec"));
        for (const auto& t : bundle.at("targets"))
            b.targets.emplace(t.at("id").get<std::string>(),
                              std::pair(spec_from_json(t.at("spec")), loss_report_from_json(t.at("losses"))));
        return b;
    } catch (const Json::exception& e) {
        throw SchemaError(std::string("bundle: ") + e.what());
    }
}

struct TrainReport {
    RankModel model;
    LooResult loo;
    std::size_t labeled_pairs = 0;   // distinct (source, a, b) pairs in the file
    std::size_t tied_pairs = 0;      // dropped: no majority
    std::size_t dropped_trials = 0;  // dropped: nonmonotonic label sets
    std::size_t used_pairs = 0;
};

/// Aggregates repeated labels, drops trials whose labels admit no consistent
/// order, and fits the pairwise model. A trial is a connected set of targets
/// of one source linked by labeled pairs.
inline TrainReport train_from_labels(const std::vector<BundleIndex>& bundles, const std::vector<LabelRow>& rows,
                                     unsigned family, const TrainOptions& opt) {
    std::map<std::string, const BundleIndex*> by_source;
    for (const auto& b : bundles) by_source[b.source_id] = &b;

    std::map<std::tuple<std::string, std::string, std::string>, std::vector<int>> votes;
    for (const auto& r : rows) {
        const bool swap = r.b < r.a;
        votes[{r.source, swap ? r.b : r.a, swap ? r.a : r.b}].push_back(swap ? -r.label : r.label);
    }
    TrainReport rep;
    rep.labeled_pairs = votes.size();

    std::map<std::string, PairLabels> per_source;
    for (const auto& [key, v] : votes) {
        int sum = 0;
        for (int l : v) sum += l;
        if (sum == 0) {
            ++rep.tied_pairs;
            continue;
        }
        const int label = v.size() % 2 ? aggregate_labels(v) : (sum > 0 ? 1 : -1);
        per_source[std::get<0>(key)].set(std::get<1>(key), std::get<2>(key), label);
    }

    std::vector<PairSample> pairs;
    for (const auto& [source, labels] : per_source) {
        auto bit = by_source.find(source);
        if (bit == by_source.end()) throw SchemaError("labels: no bundle for source '" + source + "'");
        const BundleIndex& bundle = *bit->second;

        // Connected components over labeled pairs.
        std::map<std::string, std::string> parent;
        std::function<std::string(const std::string&)> find = [&](const std::string& x) -> std::string {
            auto it = parent.find(x);
            if (it == parent.end() || it->second == x) return parent[x] = x;
            return it->second = find(it->second);
        };
        for (const auto& [ab, l] : labels.all()) {
            const auto ra = find(ab.first), rb = find(ab.second);
            if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
        }
        std::map<std::string, std::vector<std::string>> trials;
        for (const auto& [x, p] : std::map<std::string, std::string>(parent)) trials[find(x)].push_back(x);

        for (const auto& [root, members] : trials) {
            bool complete = true;
            for (std::size_t i = 0; i < members.size() && complete; ++i)
                for (std::size_t j = i + 1; j < members.size() && complete; ++j)
                    complete = labels.contains(members[i], members[j]);
            if (complete && check_monotonic(members, labels).status == Monotonicity::nonmonotonic) {
                ++rep.dropped_trials;
                continue;
            }
            const std::set<std::string> in_trial(members.begin(), members.end());
            for (const auto& [ab, l] : labels.all()) {
                if (!in_trial.count(ab.first)) continue;
                auto ta = bundle.targets.find(ab.first), tb = bundle.targets.find(ab.second);
                if (ta == bundle.targets.end() || tb == bundle.targets.end())
                    throw SchemaError("labels: target '" + (ta == bundle.targets.end() ? ab.first : ab.second) +
                                      "' not in bundle for source '" + source + "'");
                pairs.push_back({extract_features(ta->second.second, bundle.source_spec, ta->second.first, family),
                                 extract_features(tb->second.second, bundle.source_spec, tb->second.first, family), l});
            }
        }
    }
    rep.used_pairs = pairs.size();
    rep.model = train(pairs, opt);
    rep.model.family = family;
    rep.loo = evaluate_loo(pairs, opt);
    return rep;
}

}  // namespace rvrec
