#pragma once

#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "imgtopic/corpus.hpp"
#include "imgtopic/embedding.hpp"
#include "imgtopic/error.hpp"
#include "imgtopic/query_repr.hpp"
#include "imgtopic/retrieval.hpp"
#include "imgtopic/selection.hpp"
#include "imgtopic/vocabmap.hpp"

namespace imgtopic {

enum class TopicMethod { tfidf, walk, walk_map_baseline, walk_map_crf };

inline bool method_uses_mapping(TopicMethod m) {
    return m == TopicMethod::walk_map_baseline || m == TopicMethod::walk_map_crf;
}

inline std::string method_name(TopicMethod m) {
    switch (m) {
        case TopicMethod::tfidf: return "tfidf";
        case TopicMethod::walk: return "walk";
        case TopicMethod::walk_map_baseline: return "walk+map_baseline";
        case TopicMethod::walk_map_crf: return "walk+map_crf";
    }
    throw ContractError("unknown method");
}

inline TopicMethod parse_method(std::string_view name) {
    if (name == "tfidf") return TopicMethod::tfidf;
    if (name == "walk") return TopicMethod::walk;
    if (name == "walk+map_baseline") return TopicMethod::walk_map_baseline;
    if (name == "walk+map_crf") return TopicMethod::walk_map_crf;
    throw ContractError("unknown method name: " + std::string(name));
}

enum class LambdaMode { inverse_l, zero };

// Every tunable of the pipeline in one place, loadable from a JSON file so
// an experiment run is reproducible from a single artifact.
struct PipelineConfig {
    struct Paths {
        std::string features;
        std::string triads;
        std::string stoplist;            // empty -> built-in English list
        std::string embeddings;
        std::string embeddings_format = "text";  // "text" | "binary"
        std::string dictionary;          // empty -> mapping unavailable
        std::string topics;
    } paths;

    struct Corpus {
        bool click_weighting = true;
    } corpus;

    struct Lsh {
        int bits = 10;
        std::uint64_t seed = 42;
    } lsh;

    struct Query {
        std::size_t k_neighbors = 20;
        DecayMode decay_mode = DecayMode::product;
    } query;

    struct Walk {
        double alpha = 0.85;
        double tol = 1e-9;
        int max_iter = 10000;
        std::size_t candidate_pool = 100;
        std::size_t top_n = 10;
    } walk;

    struct Crf {
        CrfSolver solver = CrfSolver::icm;
        LambdaMode lambda_mode = LambdaMode::inverse_l;
    } crf;

    void validate() const {
        if (lsh.bits < 1 || lsh.bits > 30) throw ContractError("config: lsh.bits must be in [1, 30]");
        if (query.k_neighbors < 1) throw ContractError("config: query.k_neighbors must be >= 1");
        if (walk.alpha < 0.0 || walk.alpha >= 1.0)
            throw ContractError("config: walk.alpha must be in [0, 1)");
        if (walk.tol <= 0.0) throw ContractError("config: walk.tol must be positive");
        if (walk.max_iter < 1) throw ContractError("config: walk.max_iter must be >= 1");
        if (walk.candidate_pool < 2)
            throw ContractError("config: walk.candidate_pool must be >= 2");
        if (walk.top_n < 1) throw ContractError("config: walk.top_n must be >= 1");
        if (paths.embeddings_format != "text" && paths.embeddings_format != "binary")
            throw ContractError("config: embeddings_format must be 'text' or 'binary'");
    }

    static PipelineConfig from_json(const nlohmann::json& j);
    static PipelineConfig from_json_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open config: " + path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("config is not valid JSON: ") + e.what(), 0);
        }
        return from_json(j);
    }
};

inline PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
    PipelineConfig c;
    try {
        if (j.contains("paths")) {
            const auto& p = j.at("paths");
            c.paths.features = p.value("features", c.paths.features);
            c.paths.triads = p.value("triads", c.paths.triads);
            c.paths.stoplist = p.value("stoplist", c.paths.stoplist);
            c.paths.embeddings = p.value("embeddings", c.paths.embeddings);
            c.paths.embeddings_format = p.value("embeddings_format", c.paths.embeddings_format);
            c.paths.dictionary = p.value("dictionary", c.paths.dictionary);
            c.paths.topics = p.value("topics", c.paths.topics);
        }
        if (j.contains("corpus")) {
            c.corpus.click_weighting =
                j.at("corpus").value("click_weighting", c.corpus.click_weighting);
        }
        if (j.contains("lsh")) {
            c.lsh.bits = j.at("lsh").value("bits", c.lsh.bits);
            c.lsh.seed = j.at("lsh").value("seed", c.lsh.seed);
        }
        if (j.contains("query")) {
            c.query.k_neighbors = j.at("query").value("k_neighbors", c.query.k_neighbors);
            const std::string mode =
                j.at("query").value("decay_mode", std::string("product"));
            if (mode == "product")
                c.query.decay_mode = DecayMode::product;
            else if (mode == "ratio")
                c.query.decay_mode = DecayMode::ratio;
            else
                throw ContractError("config: decay_mode must be 'product' or 'ratio'");
        }
        if (j.contains("walk")) {
            const auto& w = j.at("walk");
            c.walk.alpha = w.value("alpha", c.walk.alpha);
            c.walk.tol = w.value("tol", c.walk.tol);
            c.walk.max_iter = w.value("max_iter", c.walk.max_iter);
            c.walk.candidate_pool = w.value("candidate_pool", c.walk.candidate_pool);
            c.walk.top_n = w.value("top_n", c.walk.top_n);
        }
        if (j.contains("crf")) {
            const std::string solver = j.at("crf").value("solver", std::string("icm"));
            if (solver == "icm")
                c.crf.solver = CrfSolver::icm;
            else if (solver == "alpha_expansion")
                c.crf.solver = CrfSolver::alpha_expansion;
            else if (solver == "exhaustive")
                c.crf.solver = CrfSolver::exhaustive;
            else
                throw ContractError("config: unknown crf.solver '" + solver + "'");
            const std::string lm = j.at("crf").value("lambda_mode", std::string("inverse_l"));
            if (lm == "inverse_l")
                c.crf.lambda_mode = LambdaMode::inverse_l;
            else if (lm == "zero")
                c.crf.lambda_mode = LambdaMode::zero;
            else
                throw ContractError("config: unknown crf.lambda_mode '" + lm + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad config field: ") + e.what(), 0);
    }
    c.validate();
    return c;
}

// Everything a topic query needs, loaded once. The LSH index points into
// the feature store, so the context is pinned in place (no copy, no move).
class PipelineContext {
public:
    PipelineContext(TagCorpus corpus, FeatureStore features, EmbeddingTable embeddings,
                    PipelineConfig config, std::optional<Dictionary> dictionary = std::nullopt)
        : config_(std::move(config)),
          corpus_(std::move(corpus)),
          features_(std::move(features)),
          embeddings_(std::move(embeddings)),
          dictionary_(std::move(dictionary)),
          index_(features_, config_.lsh.bits, config_.lsh.seed) {}

    PipelineContext(const PipelineContext&) = delete;
    PipelineContext& operator=(const PipelineContext&) = delete;

    static std::unique_ptr<PipelineContext> load(const PipelineConfig& config) {
        config.validate();
        const StopList stop = config.paths.stoplist.empty()
                                  ? StopList::default_english()
                                  : StopList::load(config.paths.stoplist);
        TagCorpus corpus = TagCorpus::from_file(config.paths.triads, stop,
                                                {.click_weighting = config.corpus.click_weighting});
        FeatureStore features = FeatureStore::load(config.paths.features);
        EmbeddingTable embeddings = EmbeddingTable::load(
            config.paths.embeddings, config.paths.embeddings_format == "binary"
                                         ? EmbeddingFormat::binary
                                         : EmbeddingFormat::text);
        std::optional<Dictionary> dict;
        if (!config.paths.dictionary.empty())
            dict = Dictionary::load(config.paths.dictionary, embeddings);
        return std::make_unique<PipelineContext>(std::move(corpus), std::move(features),
                                                 std::move(embeddings), std::move(config),
                                                 std::move(dict));
    }

    const TagCorpus& corpus() const { return corpus_; }
    const FeatureStore& features() const { return features_; }
    const EmbeddingTable& embeddings() const { return embeddings_; }
    const LshIndex& index() const { return index_; }
    const PipelineConfig& config() const { return config_; }
    const std::optional<Dictionary>& dictionary() const { return dictionary_; }

private:
    PipelineConfig config_;
    TagCorpus corpus_;
    FeatureStore features_;
    EmbeddingTable embeddings_;
    std::optional<Dictionary> dictionary_;
    LshIndex index_;  // must come after features_
};

struct TopicResult {
    std::vector<RankedWord> words;
    TopicMethod method = TopicMethod::walk;
    std::size_t n_queries = 0;
    std::vector<MapEntry> mapping;  // populated only when mapping ran
};

// Runs the full flow for one set of query images: retrieval, per-query
// histograms, joint averaging, word selection, and optional dictionary
// mapping.
inline TopicResult find_topic(const PipelineContext& ctx, std::span<const FeatureVector> queries,
                              TopicMethod method) {
    if (queries.empty()) throw ContractError("find_topic: no query images");
    const auto& cfg = ctx.config();

    const std::size_t retrieve = std::max(cfg.query.k_neighbors, kTauWindow);
    std::vector<QueryHistogram> histograms;
    histograms.reserve(queries.size());
    for (const auto& q : queries) {
        auto neighbors = ctx.index().knn(q, retrieve);
        histograms.push_back(query_histogram(q.image_id, neighbors, ctx.corpus(),
                                             cfg.query.k_neighbors, cfg.query.decay_mode));
    }
    const auto joint = joint_histogram(histograms);

    TopicResult result;
    result.method = method;
    result.n_queries = queries.size();

    if (method == TopicMethod::tfidf) {
        result.words = tfidf_rank(joint, ctx.corpus().lexicon(), cfg.walk.top_n);
        return result;
    }

    const auto candidates = top_candidates(joint, cfg.walk.candidate_pool);
    std::vector<std::string> words(candidates.size());
    std::vector<double> scores(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        words[i] = candidates[i].word;
        scores[i] = candidates[i].score;
    }
    const auto graph = build_transition(words, scores, ctx.embeddings());
    const auto walked = random_walk(graph, cfg.walk.alpha, cfg.walk.tol, cfg.walk.max_iter);
    result.words = select_top(walked.scores, graph.words, cfg.walk.top_n);

    if (!method_uses_mapping(method)) return result;
    if (!ctx.dictionary())
        throw ContractError("method " + method_name(method) + " needs a dictionary");

    std::vector<std::string> open_words(result.words.size());
    for (std::size_t i = 0; i < result.words.size(); ++i) open_words[i] = result.words[i].word;
    auto problem = build_problem(open_words, *ctx.dictionary(), ctx.embeddings());
    if (cfg.crf.lambda_mode == LambdaMode::zero) problem.lambda = 0.0;
    const Labeling labeling = method == TopicMethod::walk_map_baseline
                                  ? baseline_map(problem)
                                  : crf_map(problem, cfg.crf.solver);
    result.mapping = mapping_report(problem, labeling);

    // Mapped words keep the rank and score of their first source word.
    std::vector<RankedWord> mapped;
    std::unordered_map<std::string, double> source_scores;
    for (const auto& rw : result.words) source_scores.emplace(rw.word, rw.score);
    for (const auto& entry : result.mapping) {
        if (entry.kept) mapped.push_back({entry.target, source_scores.at(entry.source)});
    }
    result.words = std::move(mapped);
    return result;
}

inline TopicResult find_topic_by_ids(const PipelineContext& ctx,
                                     std::span<const std::string> query_ids, TopicMethod method) {
    std::vector<FeatureVector> queries;
    queries.reserve(query_ids.size());
    for (const auto& id : query_ids) {
        const FeatureVector* fv = ctx.features().find(id);
        if (!fv) throw NotFoundError("unknown query image id: " + id);
        queries.push_back(*fv);
    }
    return find_topic(ctx, queries, method);
}

}  // namespace imgtopic
