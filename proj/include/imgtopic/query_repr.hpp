#pragma once

#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "imgtopic/corpus.hpp"
#include "imgtopic/error.hpp"
#include "imgtopic/retrieval.hpp"

namespace imgtopic {

// Placement of the decay constant in the neighbor weight.
// `product` is exp(-distance * tau); `ratio` is exp(-distance / tau).
enum class DecayMode { product, ratio };

// Words contributing less than this share of the histogram's total weight
// are treated as noise and discarded.
inline constexpr double kNoiseWeightShare = 0.001;

// Number of top neighbors whose mean distance sets the decay constant.
inline constexpr std::size_t kTauWindow = 20;

struct DecayConstant {
    double tau = 1.0;
    bool degenerate = false;  // all distances were zero; tau forced to 1
};

// tau = mean(distances) / 3, over the top-20 neighbor distances (or all of
// them when fewer exist).
inline DecayConstant decay_constant(std::span<const double> distances) {
    if (distances.empty()) throw ContractError("decay_constant: empty distance list");
    double sum = 0.0;
    for (double d : distances) sum += d;
    const double tau = sum / static_cast<double>(distances.size()) / 3.0;
    if (tau == 0.0) return {1.0, true};
    return {tau, false};
}

inline double neighbor_weight(double distance, double tau, DecayMode mode = DecayMode::product) {
    if (distance < 0.0) throw ContractError("neighbor_weight: negative distance");
    if (tau <= 0.0) throw ContractError("neighbor_weight: tau must be positive");
    return mode == DecayMode::product ? std::exp(-distance * tau) : std::exp(-distance / tau);
}

// L1-normalized word histogram describing one query image.
struct QueryHistogram {
    std::string query_id;
    std::map<std::string, double> weights;
    double tau = 1.0;
    bool degenerate_tau = false;
};

// Builds the textual representation of a query from its retrieved
// neighbors: each neighbor's histogram is L1-normalized per image, scaled
// by its distance weight, and summed. The sum is normalized, words below
// the noise share are discarded, and the survivors are renormalized.
//
// `neighbors` must be sorted ascending by distance; the first k entries are
// aggregated while the decay constant always uses the top-20 window.
inline QueryHistogram query_histogram(std::string_view query_id,
                                      std::span<const Neighbor> neighbors,
                                      const TagCorpus& corpus, std::size_t k,
                                      DecayMode mode = DecayMode::product) {
    if (k < 1) throw ContractError("query_histogram: k must be >= 1");
    if (neighbors.empty())
        throw EmptyResultError("query_histogram: no neighbors for query " +
                               std::string(query_id));

    std::vector<double> tau_window;
    tau_window.reserve(std::min(neighbors.size(), kTauWindow));
    for (std::size_t i = 0; i < neighbors.size() && i < kTauWindow; ++i)
        tau_window.push_back(neighbors[i].distance);
    const DecayConstant tau = decay_constant(tau_window);

    QueryHistogram result;
    result.query_id = std::string(query_id);
    result.tau = tau.tau;
    result.degenerate_tau = tau.degenerate;

    const std::size_t take = std::min(neighbors.size(), k);
    for (std::size_t i = 0; i < take; ++i) {
        const auto& record = corpus.text_histogram(neighbors[i].image_id);
        double image_mass = 0.0;
        for (const auto& [word_id, w] : record.histogram) image_mass += w;
        if (image_mass <= 0.0) continue;  // image with no surviving tags
        const double scale = neighbor_weight(neighbors[i].distance, tau.tau, mode) / image_mass;
        for (const auto& [word_id, w] : record.histogram) {
            result.weights[corpus.lexicon().word(word_id)] += w * scale;
        }
    }

    double total = 0.0;
    for (const auto& [word, w] : result.weights) total += w;
    if (total <= 0.0)
        throw EmptyResultError("query_histogram: no words for query " + std::string(query_id));
    for (auto& [word, w] : result.weights) w /= total;

    // 0.1% noise prune, then renormalize to unit mass.
    double kept = 0.0;
    for (auto it = result.weights.begin(); it != result.weights.end();) {
        if (it->second < kNoiseWeightShare) {
            it = result.weights.erase(it);
        } else {
            kept += it->second;
            ++it;
        }
    }
    if (result.weights.empty())
        throw EmptyResultError("query_histogram: every word pruned for query " +
                               std::string(query_id));
    for (auto& [word, w] : result.weights) w /= kept;
    return result;
}

}  // namespace imgtopic
