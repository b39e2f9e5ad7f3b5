// Command-line front end: `index` validates and summarizes the corpus,
// `topic` emits ranked topic words for a set of query images, `evaluate`
// writes the mean-Jaccard curves for the configured experiments.

#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "imgtopic/imgtopic.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitMissingInput = 2;
constexpr int kExitParseFailure = 3;
constexpr int kExitUnknownId = 4;
constexpr int kExitEmptyResult = 5;
constexpr int kExitUsage = 64;

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
};

imgtopic::PipelineConfig load_config(const CommonArgs& args) {
    auto config = imgtopic::PipelineConfig::from_json_file(args.config_path);
    if (args.seed) config.lsh.seed = *args.seed;
    return config;
}

int cmd_index(const CommonArgs& args) {
    const auto config = load_config(args);
    const imgtopic::StopList stop = config.paths.stoplist.empty()
                                        ? imgtopic::StopList::default_english()
                                        : imgtopic::StopList::load(config.paths.stoplist);
    const auto corpus = imgtopic::TagCorpus::from_file(
        config.paths.triads, stop, {.click_weighting = config.corpus.click_weighting});
    const auto features = imgtopic::FeatureStore::load(config.paths.features);
    const imgtopic::LshIndex index(features, config.lsh.bits, config.lsh.seed);
    std::cout << "images=" << corpus.image_count() << " lexicon=" << corpus.lexicon().size()
              << " features=" << features.size() << " dim=" << features.dimension()
              << " bits=" << index.bits() << " buckets=" << index.bucket_count() << "\n";
    return kExitOk;
}

int cmd_topic(const CommonArgs& args, const std::vector<std::string>& query_ids,
              const std::string& queries_file, const std::string& method_name,
              const std::string& map_dict) {
    imgtopic::TopicMethod method = imgtopic::parse_method(method_name);
    auto config = load_config(args);
    if (!map_dict.empty()) {
        config.paths.dictionary = map_dict;
        if (method == imgtopic::TopicMethod::walk)
            method = imgtopic::TopicMethod::walk_map_crf;
        if (method == imgtopic::TopicMethod::tfidf)
            throw imgtopic::ContractError("--map cannot be combined with method tfidf");
    }
    if (imgtopic::method_uses_mapping(method) && config.paths.dictionary.empty())
        throw imgtopic::ContractError("method " + imgtopic::method_name(method) +
                                      " needs --map or paths.dictionary");
    if (query_ids.empty() && queries_file.empty())
        throw imgtopic::ContractError("topic: give query image ids or --queries-file");

    const auto ctx = imgtopic::PipelineContext::load(config);
    imgtopic::TopicResult result;
    if (!queries_file.empty()) {
        const auto store = imgtopic::FeatureStore::load(queries_file);
        std::vector<imgtopic::FeatureVector> queries;
        for (std::size_t i = 0; i < store.size(); ++i) queries.push_back(store.at(i));
        result = imgtopic::find_topic(*ctx, queries, method);
    } else {
        result = imgtopic::find_topic_by_ids(*ctx, query_ids, method);
    }

    nlohmann::json out;
    out["method"] = imgtopic::method_name(result.method);
    out["n_queries"] = result.n_queries;
    out["words"] = nlohmann::json::array();
    for (const auto& rw : result.words)
        out["words"].push_back({{"word", rw.word}, {"score", rw.score}});
    if (!result.mapping.empty()) {
        out["mapping"] = nlohmann::json::array();
        for (const auto& e : result.mapping)
            out["mapping"].push_back({{"source", e.source},
                                      {"target", e.target},
                                      {"unary", e.unary},
                                      {"kept", e.kept}});
    }
    std::cout << out.dump(2) << "\n";
    return kExitOk;
}

int cmd_evaluate(const CommonArgs& args, const std::string& modes_csv,
                 const std::string& methods_csv, const std::string& out_path) {
    const auto config = load_config(args);
    std::vector<imgtopic::OrderMode> modes;
    for (const auto& name : split_csv(modes_csv)) modes.push_back(imgtopic::parse_order_mode(name));
    std::vector<imgtopic::TopicMethod> methods;
    for (const auto& name : split_csv(methods_csv)) methods.push_back(imgtopic::parse_method(name));
    if (modes.empty() || methods.empty())
        throw imgtopic::ContractError("evaluate: empty --modes or --methods");

    const auto topics = imgtopic::load_topics(config.paths.topics);
    if (topics.empty()) throw imgtopic::EmptyResultError("evaluate: topics file has no topics");
    const auto ctx = imgtopic::PipelineContext::load(config);

    std::size_t max_images = 0;
    for (const auto& t : topics) max_images = std::max(max_images, t.images.size());
    std::vector<int> n_values;
    for (std::size_t n = 1; n <= max_images; ++n) n_values.push_back(static_cast<int>(n));

    imgtopic::EvalReport merged;
    for (const auto mode : modes) {
        for (const auto method : methods) {
            auto report = imgtopic::run_experiment(*ctx, topics, mode, method, n_values);
            double last_mean = report.cells.empty() ? 0.0 : report.cells.back().mean_jaccard;
            std::fprintf(stderr, "mode=%s method=%s topics=%zu skipped=%zu mean@%zu=%.6f\n",
                         imgtopic::order_mode_name(mode).c_str(),
                         imgtopic::method_name(method).c_str(),
                         topics.size() - report.skipped_topics.size(),
                         report.skipped_topics.size(), max_images, last_mean);
            for (auto& cell : report.cells) merged.cells.push_back(std::move(cell));
            for (auto& id : report.skipped_topics)
                merged.skipped_topics.push_back(std::move(id));
        }
    }

    if (out_path == "-") {
        imgtopic::emit_curves(merged, std::cout);
    } else {
        imgtopic::emit_curves(merged, out_path);
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"topic words for a set of query images"};
    app.require_subcommand(1);

    CommonArgs common;
    std::uint64_t seed_value = 0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", common.config_path, "pipeline config JSON")->required();
        cmd->add_option("--seed", seed_value, "override lsh.seed")->each([&](const std::string&) {
            common.seed = seed_value;
        });
    };

    auto* index_cmd = app.add_subcommand("index", "ingest corpus + features, print summary");
    add_common(index_cmd);

    auto* topic_cmd = app.add_subcommand("topic", "rank topic words for query images");
    add_common(topic_cmd);
    std::vector<std::string> query_ids;
    std::string queries_file;
    std::string method = "walk";
    std::string map_dict;
    topic_cmd->add_option("ids", query_ids, "query image ids from the indexed corpus");
    topic_cmd->add_option("--queries-file", queries_file, "feature file with query vectors");
    topic_cmd->add_option("--method", method,
                          "tfidf | walk | walk+map_baseline | walk+map_crf");
    topic_cmd->add_option("--map", map_dict, "dictionary file; maps output into it");

    auto* eval_cmd = app.add_subcommand("evaluate", "write mean-Jaccard curves as CSV");
    add_common(eval_cmd);
    std::string modes = "original,best_first,worst_first";
    std::string methods = "tfidf,walk,walk+map_baseline,walk+map_crf";
    std::string out_path = "-";
    eval_cmd->add_option("--modes", modes, "comma-separated order modes");
    eval_cmd->add_option("--methods", methods, "comma-separated methods");
    eval_cmd->add_option("--out", out_path, "CSV output path ('-' for stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (index_cmd->parsed()) return cmd_index(common);
        if (topic_cmd->parsed())
            return cmd_topic(common, query_ids, queries_file, method, map_dict);
        if (eval_cmd->parsed()) return cmd_evaluate(common, modes, methods, out_path);
        return kExitUsage;
    } catch (const imgtopic::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitMissingInput;
    } catch (const imgtopic::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParseFailure;
    } catch (const imgtopic::NotFoundError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUnknownId;
    } catch (const imgtopic::EmptyResultError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitEmptyResult;
    } catch (const imgtopic::ContractError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
