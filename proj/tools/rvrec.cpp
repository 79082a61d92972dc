// Command-line front end: enumerate, rank, train and serve.

#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "CLI11.hpp"
#include "httplib.h"
#include "json.hpp"
#include "rvrec/rvrec.hpp"

namespace {

using rvrec::Json;

int exit_code_for(const rvrec::Error& e) {
    if (dynamic_cast<const rvrec::ConfigError*>(&e)) return 2;
    if (dynamic_cast<const rvrec::ModelMismatchError*>(&e)) return 4;
    if (dynamic_cast<const rvrec::DegenerateDataError*>(&e)) return 5;
    return 3;
}

struct Options {
    std::string spec;
    std::string data;
    int target_width = 300;
    std::string weights = "1,1,1";
    std::string model;
    std::string kernel;
    std::string out;
    std::uint64_t seed = 0;
    std::optional<std::size_t> subsample;
    std::string source_id;
    unsigned threads = 0;
};

rvrec::ChartSpec load_spec(const std::string& path) {
    return rvrec::parse_spec(rvrec::read_file(path));
}

/// Reads the kernel file (if any) into the inputs.
void load_kernel(const std::string& path, rvrec::RankInputs& in) {
    if (path.empty()) return;
    const std::string text = rvrec::read_file(path);
    in.kernel = rvrec::PerceptualKernel::from_csv(text);
    in.kernel_hash = rvrec::content_hash(text);
}

void load_model(const std::string& path, rvrec::RankInputs& in) {
    if (path.empty()) return;
    const std::string text = rvrec::read_file(path);
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw rvrec::ModelMismatchError(std::string("model: ") + e.what());
    }
    in.model = rvrec::rank_model_from_json(j);
    in.model_hash = rvrec::content_hash(text);
}

rvrec::RankInputs rank_inputs(const Options& o) {
    rvrec::RankInputs in;
    in.spec = load_spec(o.spec);
    in.data_text = rvrec::read_file(o.data);
    if (o.target_width <= 0) throw rvrec::ConfigError("--target-width must be positive");
    in.target_width = o.target_width;
    in.weights = rvrec::parse_weights(o.weights);
    in.seed = o.seed;
    in.subsample = o.subsample;
    in.threads = o.threads;
    in.source_id = o.source_id.empty() ? std::filesystem::path(o.spec).stem().string() : o.source_id;
    load_kernel(o.kernel, in);
    load_model(o.model, in);
    return in;
}

void emit(const std::string& out, const std::string& text) {
    if (out.empty() || out == "-") std::cout << text;
    else rvrec::write_file(out, text);
}

int cmd_enumerate(const Options& o) {
    const auto spec = load_spec(o.spec);
    if (o.target_width <= 0) throw rvrec::ConfigError("--target-width must be positive");
    std::optional<rvrec::Dataset> ds;
    if (!o.data.empty()) ds = rvrec::load_dataset(rvrec::read_file(o.data), spec.data.fields, spec.data.url);
    auto set = rvrec::generate_targets(spec, o.target_width, ds ? &*ds : nullptr);
    emit(o.out, rvrec::to_json(set).dump(2) + "\n");
    return 0;
}

int cmd_rank(const Options& o) {
    emit(o.out, rvrec::bundle_text(rvrec::rank_bundle(rank_inputs(o))));
    return 0;
}

struct TrainArgs {
    std::vector<std::string> bundles;
    std::string labels;
    std::string family = "A";
    std::string mapping = "difference";
    int epochs = 1000;
    double learning_rate = 0.5;
};

int cmd_train(const Options& o, const TrainArgs& t) {
    std::vector<rvrec::BundleIndex> bundles;
    for (const auto& path : t.bundles) {
        try {
            bundles.push_back(rvrec::index_bundle(Json::parse(rvrec::read_file(path))));
        } catch (const Json::parse_error& e) {
            throw rvrec::SyntaxError("bundle " + path + ": " + e.what());
        }
    }
    const auto rows = rvrec::parse_labels(rvrec::read_file(t.labels));
    rvrec::TrainOptions opt;
    opt.mapping = rvrec::parse_mapping(t.mapping);
    opt.epochs = t.epochs;
    opt.learning_rate = t.learning_rate;
    opt.seed = o.seed;
    const auto rep = rvrec::train_from_labels(bundles, rows, rvrec::parse_family(t.family), opt);
    emit(o.out, rvrec::to_json(rep.model).dump(2) + "\n");
    std::cerr << "pairs: " << rep.used_pairs << " used of " << rep.labeled_pairs << " (" << rep.tied_pairs
              << " tied, " << rep.dropped_trials << " nonmonotonic trials dropped)\n";
    std::cout << "loo_accuracy " << rep.loo.accuracy << "\n";
    return 0;
}

/// Parsed datasets keyed by content hash and schema; entries are immutable.
class DatasetCache {
public:
    std::shared_ptr<const rvrec::Dataset> get(const rvrec::RankInputs& in) {
        const std::string key = rvrec::content_hash(in.data_text) + "|" + Json(rvrec::to_json(in.spec)["data"]).dump();
        {
            std::lock_guard lock(mu_);
            if (auto it = entries_.find(key); it != entries_.end()) return it->second;
        }
        auto ds = std::make_shared<const rvrec::Dataset>(rvrec::load_input_dataset(in));
        std::lock_guard lock(mu_);
        return entries_.emplace(key, std::move(ds)).first->second;
    }

private:
    std::mutex mu_;
    std::unordered_map<std::string, std::shared_ptr<const rvrec::Dataset>> entries_;
};

int cmd_serve(const Options& o, int port, const std::string& static_dir) {
    rvrec::RankInputs base;
    load_kernel(o.kernel, base);
    load_model(o.model, base);
    base.target_width = o.target_width;
    base.seed = o.seed;
    base.threads = o.threads;
    const Json kernel_json = rvrec::to_json(base.kernel);
    DatasetCache cache;

    httplib::Server server;
    auto send_error = [](httplib::Response& res, int status, const std::string& name, const std::string& msg) {
        res.status = status;
        res.set_content(Json{{"error", name}, {"message", msg}}.dump(), "application/json");
    };

    server.Get("/api/health", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(Json{{"status", "ok"}, {"version", rvrec::kVersion}}.dump(), "application/json");
    });
    server.Get("/api/kernel", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content(kernel_json.dump(), "application/json");
    });
    server.Post("/api/rank", [&](const httplib::Request& req, httplib::Response& res) {
        rvrec::RankInputs in = base;
        try {
            Json body;
            try {
                body = Json::parse(req.body);
            } catch (const Json::parse_error& e) {
                throw rvrec::SyntaxError(std::string("request: ") + e.what());
            }
            if (!body.is_object() || !body.contains("spec")) throw rvrec::SchemaError("request: missing 'spec'");
            in.spec = rvrec::spec_from_json(body.at("spec"));
            if (body.contains("data")) in.data_text = body.at("data").get<std::string>();
            else if (body.contains("dataPath")) in.data_text = rvrec::read_file(body.at("dataPath").get<std::string>());
            else throw rvrec::SchemaError("request: need 'data' or 'dataPath'");
            if (body.contains("weights")) {
                const auto w = body.at("weights").get<std::vector<double>>();
                if (w.size() != 3) throw rvrec::SchemaError("request: weights must have 3 entries");
                for (std::size_t i = 0; i < 3; ++i) {
                    if (!(w[i] >= 0)) throw rvrec::SchemaError("request: weights must be non-negative");
                    in.weights[i] = w[i];
                }
            }
            if (body.contains("targetWidth")) in.target_width = body.at("targetWidth").get<int>();
            if (body.contains("seed")) in.seed = body.at("seed").get<std::uint64_t>();
            if (body.contains("sourceId")) in.source_id = body.at("sourceId").get<std::string>();
            if (in.target_width <= 0) throw rvrec::SchemaError("request: targetWidth must be positive");
        } catch (const rvrec::Error& e) {
            return send_error(res, 400, e.name(), e.what());
        } catch (const Json::exception& e) {
            return send_error(res, 400, "SchemaError", e.what());
        }
        try {
            rvrec::validate(in.spec);
            res.set_content(rvrec::bundle_text(rvrec::rank_bundle(in, *cache.get(in))), "application/json");
        } catch (const rvrec::ConfigError& e) {
            send_error(res, 400, e.name(), e.what());
        } catch (const rvrec::SchemaError& e) {
            send_error(res, 400, e.name(), e.what());
        } catch (const rvrec::SyntaxError& e) {
            send_error(res, 400, e.name(), e.what());
        } catch (const rvrec::Error& e) {
            send_error(res, 422, e.name(), e.what());
        }
    });
    if (!static_dir.empty() && !server.set_mount_point("/", static_dir))
        throw rvrec::ConfigError("--static: no such directory '" + static_dir + "'");

    if (!server.bind_to_port("127.0.0.1", port)) throw rvrec::ConfigError("cannot bind port " + std::to_string(port));
    std::cerr << "listening on http://127.0.0.1:" << port << "\n";
    server.listen_after_bind();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Responsive visualization recommender"};
    app.require_subcommand(1);
    Options o;
    TrainArgs t;
    int port = 8080;
    std::string static_dir;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--kernel", o.kernel, "Shape perceptual kernel CSV");
        sub->add_option("--seed", o.seed, "Random seed");
        sub->add_option("--out", o.out, "Output file (default: stdout)");
    };
    auto add_rank = [&](CLI::App* sub) {
        sub->add_option("--spec", o.spec, "Source chart spec JSON")->required();
        sub->add_option("--data", o.data, "Dataset CSV or JSON");
        sub->add_option("--target-width", o.target_width, "Target width in px");
        add_common(sub);
    };

    auto* enumerate = app.add_subcommand("enumerate", "List target designs for a source");
    add_rank(enumerate);

    auto* rank = app.add_subcommand("rank", "Evaluate and rank targets into a gallery bundle");
    add_rank(rank);
    rank->add_option("--weights", o.weights, "Identification,comparison,trend weights");
    rank->add_option("--model", o.model, "Trained rank model JSON");
    rank->add_option("--subsample", o.subsample, "Keep at most N dataset rows");
    rank->add_option("--source-id", o.source_id, "Source id recorded in the bundle");
    rank->add_option("--threads", o.threads, "Scoring threads (0: all cores)");

    auto* train = app.add_subcommand("train", "Fit a pairwise rank model from labels");
    train->add_option("--labels", t.labels, "Label CSV")->required();
    train->add_option("--bundle", t.bundles, "Ranked bundle(s) holding the labeled targets")->required();
    train->add_option("--family", t.family, "Feature family: A, D, B1, B2 or a '+' combination");
    train->add_option("--mapping", t.mapping, "difference or concatenate");
    train->add_option("--epochs", t.epochs, "Gradient descent epochs");
    train->add_option("--learning-rate", t.learning_rate, "Gradient descent step");
    add_common(train);

    auto* serve = app.add_subcommand("serve", "Serve the ranking API");
    serve->add_option("--port", port, "Port");
    serve->add_option("--model", o.model, "Trained rank model JSON");
    serve->add_option("--target-width", o.target_width, "Default target width");
    serve->add_option("--static", static_dir, "Directory served at /");
    serve->add_option("--threads", o.threads, "Scoring threads (0: all cores)");
    add_common(serve);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*enumerate) return cmd_enumerate(o);
        if (*rank) {
            if (o.data.empty()) throw rvrec::ConfigError("--data is required");
            return cmd_rank(o);
        }
        if (*train) return cmd_train(o, t);
        if (*serve) return cmd_serve(o, port, static_dir);
    } catch (const rvrec::Error& e) {
        std::cerr << "error: " << e.name() << ": " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
