// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include "oracles/planted.hpp"
#include "oracles/transport.hpp"
#include "support.hpp"

using namespace rvrec;
namespace fs = std::filesystem;

namespace {

constexpr double kMargin = 1e-9;

struct Check {
    bool ok = true;
    std::ostringstream notes;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            if (ok) notes << "failed: ";
            else notes << "; ";
            notes << what;
            ok = false;
        }
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

/// Runs a shell command, returning (exit code, stdout).
std::pair<int, std::string> run(const std::string& cmd) {
    std::string out;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return {-1, out};
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
    const int status = pclose(p);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

const Target& find_target(const TargetSet& set, const std::function<bool(const TransformDescriptor&)>& pred,
                          const std::string& label) {
    for (const auto& t : set.targets)
        if (pred(t.descriptor)) return t;
    throw std::runtime_error("no target matching " + label);
}

// 1. Identity, symmetry and non-negativity over every fixture.
Check measure_properties() {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    std::size_t checked = 0;
    for (const char* name : tests::kFixtureNames) {
        const auto f = tests::load_fixture(name);
        const auto source = render(f.data, f.spec);
        const auto self = evaluate(source, source);
        c.require(self.identification.total == 0 && self.comparison.total == 0 && self.trend.total == 0,
                  std::string(name) + " loss(S,S) != 0");
        const auto set = generate_targets(f.spec, 300, &f.data);
        const std::size_t stride = std::max<std::size_t>(1, set.targets.size() / 24);
        std::size_t per_fixture = 0;
        for (std::size_t i = 0; i < set.targets.size(); i += stride, ++per_fixture) {
            const auto target = render(f.data, set.targets[i].spec);
            const auto st = evaluate(source, target), ts = evaluate(target, source);
            const std::string where = std::string(name) + "/" + set.targets[i].id;
            c.require(std::abs(st.identification.total - ts.identification.total) <= 1e-9, where + " identification asymmetric");
            c.require(std::abs(st.comparison.total - ts.comparison.total) <= 1e-9, where + " comparison asymmetric");
            for (const LossReport* r : {&st, &ts}) {
                for (const auto* comps : {&r->identification.components, &r->comparison.components, &r->trend.components})
                    for (const auto& [k, v] : *comps) c.require(v >= 0, where + " negative " + k);
            }
        }
        c.require(per_fixture >= 20, std::string(name) + " has fewer than 20 targets checked");
        checked += per_fixture;
    }
    const double secs = seconds_since(t0);
    c.require(secs < 60, "runtime " + fmt(secs) + " s");
    c.notes << (c.ok ? "" : "; ") << checked << " targets over 6 fixtures in " << fmt(secs) << " s";
    return c;
}

// 2. Qualitative orderings for the scatterplot (Ta) and histogram (Tb) targets.
Check qualitative_fixtures() {
    Check c;
    auto is_d0 = [](const TransformDescriptor& d) { return d.maxbins.empty() && !d.aggregate && !d.mark_change; };

    const auto sc = tests::load_fixture("scatter");
    const auto sset = generate_targets(sc.spec, 300, &sc.data);
    const auto ssrc = render(sc.data, sc.spec);
    auto counted = [](int h, int bins) {
        return [=](const TransformDescriptor& d) {
            return d.height == h && !d.transposed && d.aggregate == Aggregate::count && !d.mark_change &&
                   d.maxbins == std::map<Channel, int>{{Channel::x, bins}, {Channel::y, bins}};
        };
    };
    const Target& ta1 = find_target(sset, [&](const auto& d) { return d.height == 150 && !d.transposed && is_d0(d); }, "Ta1");
    const Target& ta2 = find_target(sset, [&](const auto& d) { return d.height == 600 && d.transposed && is_d0(d); }, "Ta2");
    const Target& ta3 = find_target(sset, counted(300, 5), "Ta3");
    const Target& ta4 = find_target(sset, counted(300, 15), "Ta4");
    auto eval_s = [&](const Target& t) { return evaluate(ssrc, render(sc.data, t.spec)); };
    const auto a1 = eval_s(ta1), a2 = eval_s(ta2), a3 = eval_s(ta3), a4 = eval_s(ta4);

    c.require(a1.identification.total == 0, "id(Ta1) = " + fmt(a1.identification.total));
    c.require(a2.identification.total == 0, "id(Ta2) = " + fmt(a2.identification.total));
    c.require(a2.comparison.components.at("x") == 0 && a2.comparison.components.at("y") == 0,
              "position cmp(Ta2) = " + fmt(a2.comparison.total));
    c.require(a3.identification.total > a4.identification.total + kMargin,
              "id(Ta3) " + fmt(a3.identification.total) + " <= id(Ta4) " + fmt(a4.identification.total));
    c.require(a1.trend.total + kMargin < a2.trend.total,
              "trend(Ta1) " + fmt(a1.trend.total) + " >= trend(Ta2) " + fmt(a2.trend.total));
    c.require(a3.trend.total + kMargin < a4.trend.total,
              "trend(Ta3) " + fmt(a3.trend.total) + " >= trend(Ta4) " + fmt(a4.trend.total));

    const auto hi = tests::load_fixture("histogram");
    const auto hset = generate_targets(hi.spec, 300, &hi.data);
    const auto hsrc = render(hi.data, hi.spec);
    auto rebinned = [](int h, bool tr, int bins) {
        return [=](const TransformDescriptor& d) {
            return d.height == h && d.transposed == tr && d.maxbins == std::map<Channel, int>{{Channel::x, bins}};
        };
    };
    const Target& tb1 = find_target(hset, [&](const auto& d) { return d.height == 150 && !d.transposed && is_d0(d); }, "Tb1");
    const Target& tb2 = find_target(hset, [&](const auto& d) { return d.height == 300 && d.transposed && is_d0(d); }, "Tb2");
    const Target& tb3 = find_target(hset, [&](const auto& d) { return d.height == 600 && d.transposed && is_d0(d); }, "Tb3");
    const Target& tb4 = find_target(hset, rebinned(400, false, 15), "Tb4");
    const Target& tb5 = find_target(hset, rebinned(600, true, 5), "Tb5");
    auto eval_h = [&](const Target& t) { return evaluate(hsrc, render(hi.data, t.spec)); };
    const auto b1 = eval_h(tb1), b2 = eval_h(tb2), b3 = eval_h(tb3), b4 = eval_h(tb4), b5 = eval_h(tb5);

    c.require(b1.identification.total == 0 && b2.identification.total == 0 && b3.identification.total == 0,
              "id(Tb1..Tb3) = " + fmt(b1.identification.total) + ", " + fmt(b2.identification.total) + ", " +
                  fmt(b3.identification.total));
    c.require(b5.identification.total >= b4.identification.total && b4.identification.total > kMargin,
              "id(Tb5) " + fmt(b5.identification.total) + ", id(Tb4) " + fmt(b4.identification.total));
    c.require(b5.trend.total + kMargin < b4.trend.total,
              "trend(Tb5) " + fmt(b5.trend.total) + " >= trend(Tb4) " + fmt(b4.trend.total));
    c.notes << (c.ok ? "" : "; ") << "id Ta3/Ta4 " << fmt(a3.identification.total) << "/" << fmt(a4.identification.total)
            << ", trend Ta1/Ta2 " << fmt(a1.trend.total) << "/" << fmt(a2.trend.total) << ", trend Ta3/Ta4 "
            << fmt(a3.trend.total) << "/" << fmt(a4.trend.total) << ", id Tb4/Tb5 " << fmt(b4.identification.total)
            << "/" << fmt(b5.identification.total) << ", trend Tb5/Tb4 " << fmt(b5.trend.total) << "/"
            << fmt(b4.trend.total);
    return c;
}

// 3. EMD against brute-force transport.
Check emd_oracle() {
    Check c;
    double worst = 0;
    const auto corpus = oracle::transport_corpus();
    for (const auto& tc : corpus) worst = std::max(worst, std::abs(emd_1d(tc.p, tc.q) - oracle::transport_distance(tc.p, tc.q)));
    c.require(worst < 1e-9, "max error " + fmt(worst));
    c.notes << (c.ok ? "" : "; ") << corpus.size() << " cases, max |error| " << fmt(worst);
    return c;
}

// 4. LOESS reproduction, OLS equivalence and rescale invariance.
Check loess_checks() {
    Check c;
    std::vector<Point2> linear;
    for (int i = 0; i < 50; ++i) linear.push_back({i * 6.0, 2 * i * 6.0 + 1});
    double resid = 0;
    const auto fit = loess_fit_2d(linear);
    for (std::size_t i = 0; i < linear.size(); ++i) resid = std::max(resid, std::abs(fit[i] - linear[i].y));
    c.require(resid < 1e-6, "linear residual " + fmt(resid));

    const std::vector<Point2> five = {{0, 0}, {1, 1}, {2, 0}, {3, 1}, {4, 0}};
    // Closed-form OLS: slope = cov(x, y) / var(x) = 0, intercept = mean(y) = 0.4.
    double ols_err = 0;
    for (double v : loess_fit_2d(five, 1.0)) ols_err = std::max(ols_err, std::abs(v - 0.4));
    c.require(ols_err < 1e-9, "OLS error " + fmt(ols_err));

    double rescale = 0;
    for (const char* name : tests::kFixtureNames) {
        const auto f = tests::load_fixture(name);
        ChartSpec half = f.spec;
        half.width /= 2;
        half.height /= 2;
        rescale = std::max(rescale, trend_loss(render(f.data, f.spec), render(f.data, half)).total);
    }
    c.require(rescale < 1e-6, "rescale trend " + fmt(rescale));
    c.notes << (c.ok ? "" : "; ") << "linear residual " << fmt(resid) << ", OLS error " << fmt(ols_err)
            << ", max rescale trend " << fmt(rescale);
    return c;
}

// 5. Heights and target counts against the rule-product script.
Check enumerator_checks() {
    Check c;
    c.require(enumerate_heights(600, 300, 300) == std::vector<int>{150, 200, 250, 300, 350, 400, 450, 500, 550, 600},
              "heights for 600x300 at width 300");
    const std::string script = (tests::fixtures().parent_path() / "oracles" / "target_counts.py").string();
    const auto [code, out] = run("python3 '" + script + "'");
    c.require(code == 0, "oracle script exit " + std::to_string(code));
    std::istringstream in(out);
    std::string name;
    std::size_t want = 0, fixtures = 0;
    while (in >> name >> want) {
        const auto f = tests::load_fixture(name);
        const std::size_t got = generate_targets(f.spec, 300, &f.data).targets.size();
        c.require(got == want, name + " " + std::to_string(got) + " != " + std::to_string(want));
        c.notes << (fixtures++ || !c.ok ? ", " : "") << name << " " << got;
    }
    c.require(fixtures == 6, "oracle listed " + std::to_string(fixtures) + " fixtures");
    return c;
}

// 6. Ranker on planted data, antisymmetry, label aggregation, monotonicity.
Check ranker_checks() {
    Check c;
    const auto pairs = oracle::planted_pairs(500, 2024);
    const auto loo = evaluate_loo(pairs);
    c.require(loo.folds == 500 && loo.accuracy >= 0.95, "LOO accuracy " + fmt(loo.accuracy));

    const auto m = train(pairs);
    bool anti = true;
    for (const auto& p : pairs) {
        anti = anti && m.pair_logit(p.a, p.b) == -m.pair_logit(p.b, p.a);
        const auto ab = pair_map(p.a, p.b, Mapping::difference), ba = pair_map(p.b, p.a, Mapping::difference);
        for (std::size_t i = 0; i < ab.size(); ++i) anti = anti && ab[i] == -ba[i];
    }
    c.require(anti, "difference mapping not antisymmetric");

    int triples = 0;
    for (int a : {-1, 1})
        for (int b : {-1, 1})
            for (int d : {-1, 1}) {
                const std::array<int, 3> l = {a, b, d};
                triples += aggregate_labels(l) == (a + b + d > 0 ? 1 : -1);
            }
    c.require(triples == 8, std::to_string(triples) + "/8 sign triples");

    PairLabels cycle;
    cycle.set("a", "b", 1);
    cycle.set("b", "c", 1);
    cycle.set("c", "a", 1);
    c.require(check_monotonic({"a", "b", "c"}, cycle).status == Monotonicity::nonmonotonic, "cycle not nonmonotonic");

    const std::vector<std::string> order = {"t3", "t1", "t5", "t2", "t4"};
    PairLabels consistent;
    for (std::size_t i = 0; i < order.size(); ++i)
        for (std::size_t j = i + 1; j < order.size(); ++j) consistent.set(order[i], order[j], 1);
    const auto r = check_monotonic({"t1", "t2", "t3", "t4", "t5"}, consistent);
    c.require(r.status == Monotonicity::monotonic && r.order == order && r.misaligned.empty(),
              "consistent labels not reproduced");
    c.notes << (c.ok ? "" : "; ") << "LOO accuracy " << fmt(loo.accuracy) << " over " << loo.folds << " pairs";
    return c;
}

// 7. Two CLI rank runs write identical bytes.
Check determinism() {
    Check c;
    const fs::path dir = fs::temp_directory_path() / ("rvrec_acceptance_" + std::to_string(getpid()));
    fs::create_directories(dir);
    const std::string base = std::string(RVREC_CLI) + " rank --spec '" + tests::spec_path("histogram").string() +
                             "' --data '" + (tests::fixtures() / "data" / "economy.json").string() + "' --out '";
    const auto r1 = run(base + (dir / "a.json").string() + "' 2>&1");
    const auto r2 = run(base + (dir / "b.json").string() + "' --threads 2 2>&1");
    c.require(r1.first == 0 && r2.first == 0, "rank exit " + std::to_string(r1.first) + "/" + std::to_string(r2.first));
    if (c.ok) {
        const std::string a = read_file(dir / "a.json"), b = read_file(dir / "b.json");
        c.require(a == b && !a.empty(), "outputs differ");
        c.notes << (c.ok ? "" : "; ") << a.size() << " bytes, identical";
    }
    fs::remove_all(dir);
    return c;
}

}  // namespace

int main() {
    const std::pair<const char*, std::function<Check()>> criteria[] = {
        {"measure identity, symmetry, non-negativity", measure_properties},
        {"qualitative Ta/Tb orderings", qualitative_fixtures},
        {"EMD equals brute-force transport", emd_oracle},
        {"LOESS reproduction, OLS and rescale invariance", loess_checks},
        {"enumerator heights and target counts", enumerator_checks},
        {"ranker LOO, antisymmetry, aggregation, monotonicity", ranker_checks},
        {"end-to-end determinism", determinism},
    };
    int failed = 0, n = 0;
    for (const auto& [label, fn] : criteria) {
        ++n;
        Check c;
        try {
            c = fn();
        } catch (const std::exception& e) {
            c.ok = false;
            c.notes << "exception: " << e.what();
        }
        failed += !c.ok;
        std::cout << "criterion " << n << ": " << (c.ok ? "PASS" : "FAIL") << " " << label << " (" << c.notes.str()
                  << ")" << std::endl;
    }
    return failed ? 1 : 0;
}
