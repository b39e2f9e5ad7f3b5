#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "imgtopic/corpus.hpp"
#include "imgtopic/detail/math.hpp"
#include "imgtopic/embedding.hpp"
#include "imgtopic/error.hpp"
#include "imgtopic/query_repr.hpp"

namespace imgtopic {

struct RankedWord {
    std::string word;
    double score = 0.0;
};

// Uniform average of per-query histograms; every query contributes mass
// 1/Q regardless of how many words it retained.
inline std::map<std::string, double> joint_histogram(std::span<const QueryHistogram> histograms) {
    if (histograms.empty()) throw ContractError("joint_histogram: no query histograms");
    std::map<std::string, double> joint;
    const double share = 1.0 / static_cast<double>(histograms.size());
    for (const auto& h : histograms) {
        for (const auto& [word, w] : h.weights) joint[word] += w * share;
    }
    return joint;
}

// Descending by score, ties by word; truncated to n.
inline std::vector<RankedWord> select_top(std::span<const double> scores,
                                          std::span<const std::string> words, std::size_t n) {
    if (n < 1) throw ContractError("select_top: n must be >= 1");
    if (scores.size() != words.size())
        throw ContractError("select_top: scores/words length mismatch");
    std::vector<RankedWord> ranked(words.size());
    for (std::size_t i = 0; i < words.size(); ++i) ranked[i] = {words[i], scores[i]};
    std::sort(ranked.begin(), ranked.end(), [](const RankedWord& a, const RankedWord& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.word < b.word;
    });
    if (ranked.size() > n) ranked.resize(n);
    return ranked;
}

// score(w) = joint_weight(w) * ln(corpus_size / df(w)). Words the lexicon
// never saw fall back to df = 1; `missing_df_words` counts them.
inline std::vector<RankedWord> tfidf_rank(const std::map<std::string, double>& joint,
                                          const Lexicon& lexicon, std::size_t n,
                                          std::size_t* missing_df_words = nullptr) {
    const double corpus_size = static_cast<double>(lexicon.corpus_size());
    if (corpus_size < 1) throw ContractError("tfidf_rank: empty corpus");
    std::size_t missing = 0;
    std::vector<std::string> words;
    std::vector<double> scores;
    words.reserve(joint.size());
    scores.reserve(joint.size());
    for (const auto& [word, weight] : joint) {
        auto df = lexicon.document_frequency(word);
        if (!df) ++missing;
        const double idf = std::log(corpus_size / static_cast<double>(df.value_or(1)));
        words.push_back(word);
        scores.push_back(weight * idf);
    }
    if (missing_df_words) *missing_df_words = missing;
    return select_top(scores, words, n);
}

// The top `pool` words of the joint histogram by weight (ties by word);
// the candidate node set for the word graph.
inline std::vector<RankedWord> top_candidates(const std::map<std::string, double>& joint,
                                              std::size_t pool) {
    std::vector<std::string> words;
    std::vector<double> weights;
    words.reserve(joint.size());
    for (const auto& [word, w] : joint) {
        words.push_back(word);
        weights.push_back(w);
    }
    return select_top(weights, words, pool);
}

// Candidate-word graph: node scores X0 (unit L1 mass) and a column-
// stochastic transition matrix with zero diagonal. Entry (i, j) is the
// probability of moving to node i from node j, stored row-major.
struct WordGraph {
    std::vector<std::string> words;
    std::vector<double> initial_scores;
    std::vector<double> transition;

    std::size_t size() const { return words.size(); }
    double p(std::size_t i, std::size_t j) const { return transition[i * words.size() + j]; }
};

// Builds the transition matrix from pairwise cosine similarity: raw edge
// s_ij = max(0, sim(w_i, w_j)) off the diagonal, then every column is
// normalized to sum 1. A column with no positive similarity falls back to
// uniform 1/(V-1) off-diagonal. Words without embeddings are dropped and
// the initial scores renormalized; `dropped_oov` counts them.
inline WordGraph build_transition(std::span<const std::string> words,
                                  std::span<const double> scores, const EmbeddingTable& table,
                                  std::size_t* dropped_oov = nullptr) {
    if (words.size() != scores.size())
        throw ContractError("build_transition: words/scores length mismatch");

    WordGraph graph;
    std::vector<std::span<const double>> vectors;
    std::size_t dropped = 0;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (!table.contains(words[i])) {
            ++dropped;
            continue;
        }
        graph.words.push_back(words[i]);
        graph.initial_scores.push_back(scores[i]);
        vectors.push_back(table.vector(words[i]));
    }
    if (dropped_oov) *dropped_oov = dropped;

    const std::size_t v = graph.words.size();
    if (v < 2)
        throw EmptyResultError("build_transition: need at least 2 embeddable words, have " +
                               std::to_string(v));

    double mass = 0.0;
    for (double s : graph.initial_scores) {
        if (s < 0.0) throw ContractError("build_transition: negative initial score");
        mass += s;
    }
    if (mass <= 0.0) throw ContractError("build_transition: initial scores sum to zero");
    for (double& s : graph.initial_scores) s /= mass;

    graph.transition.assign(v * v, 0.0);
    for (std::size_t j = 0; j < v; ++j) {
        double column_sum = 0.0;
        for (std::size_t i = 0; i < v; ++i) {
            if (i == j) continue;
            const double s = std::max(0.0, EmbeddingTable::similarity(vectors[i], vectors[j]));
            graph.transition[i * v + j] = s;
            column_sum += s;
        }
        if (column_sum > 0.0) {
            for (std::size_t i = 0; i < v; ++i) graph.transition[i * v + j] /= column_sum;
        } else {
            const double uniform = 1.0 / static_cast<double>(v - 1);
            for (std::size_t i = 0; i < v; ++i)
                graph.transition[i * v + j] = i == j ? 0.0 : uniform;
        }
    }
    return graph;
}

struct WalkResult {
    std::vector<double> scores;
    bool converged = false;
    int iterations = 0;
};

// Called with every iterate; for tests and instrumentation.
using WalkObserver = std::function<void(std::span<const double>)>;

// Iterates X <- alpha * P * X + (1 - alpha) * X0 until the L1 step change
// drops below tol. Column-stochastic P keeps each iterate at unit mass.
inline WalkResult random_walk(const WordGraph& graph, double alpha = 0.85, double tol = 1e-9,
                              int max_iter = 10000, const WalkObserver& on_iterate = {}) {
    if (alpha < 0.0 || alpha >= 1.0)
        throw ContractError("random_walk: alpha must be in [0, 1)");
    if (tol <= 0.0) throw ContractError("random_walk: tol must be positive");
    const std::size_t v = graph.size();

    WalkResult result;
    result.scores = graph.initial_scores;
    std::vector<double> next(v);
    for (int iter = 1; iter <= max_iter; ++iter) {
        for (std::size_t i = 0; i < v; ++i) {
            double acc = 0.0;
            const double* row = &graph.transition[i * v];
            for (std::size_t j = 0; j < v; ++j) acc += row[j] * result.scores[j];
            next[i] = alpha * acc + (1.0 - alpha) * graph.initial_scores[i];
        }
        const double step = detail::l1_distance(next, result.scores);
        result.scores.swap(next);
        result.iterations = iter;
        if (on_iterate) on_iterate(result.scores);
        if (step < tol) {
            result.converged = true;
            break;
        }
    }
    return result;
}

}  // namespace imgtopic
