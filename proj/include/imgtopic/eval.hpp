#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "imgtopic/error.hpp"
#include "imgtopic/pipeline.hpp"

namespace imgtopic {

struct TopicImage {
    std::string id;
    double relevance = 0.0;
};

// One evaluation topic: its groundtruth word set plus the query images and
// their human relevance scores.
struct Topic {
    std::string topic_id;
    std::vector<std::string> groundtruth;
    std::vector<TopicImage> images;
};

// JSON array of {topic_id, words, images: [{id, relevance}]}. Groundtruth
// words are normalized through the tokenizer so comparisons happen in
// token space.
inline std::vector<Topic> load_topics(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open topics file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("topics file is not valid JSON: ") + e.what(), 0);
    }
    if (!j.is_array()) throw ParseError("topics file must be a JSON array", 0);
    std::vector<Topic> topics;
    const StopList empty_stop;
    try {
        for (const auto& tj : j) {
            Topic t;
            t.topic_id = tj.at("topic_id").get<std::string>();
            for (const auto& w : tj.at("words")) {
                for (auto& tok : tokenize(w.get<std::string>(), empty_stop))
                    t.groundtruth.push_back(std::move(tok));
            }
            if (t.groundtruth.empty())
                throw ParseError("topic " + t.topic_id + " has no usable groundtruth words", 0);
            for (const auto& ij : tj.at("images"))
                t.images.push_back({ij.at("id").get<std::string>(),
                                    ij.at("relevance").get<double>()});
            topics.push_back(std::move(t));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad topics entry: ") + e.what(), 0);
    }
    return topics;
}

// |G n O| / |G u O|; the groundtruth side must be nonempty.
inline double jaccard(const std::set<std::string>& groundtruth,
                      const std::set<std::string>& output) {
    if (groundtruth.empty()) throw ContractError("jaccard: empty groundtruth set");
    std::size_t intersection = 0;
    for (const auto& w : output) intersection += groundtruth.count(w);
    const std::size_t unioned = groundtruth.size() + output.size() - intersection;
    return static_cast<double>(intersection) / static_cast<double>(unioned);
}

enum class OrderMode { original, best_first, worst_first };

inline std::string order_mode_name(OrderMode m) {
    switch (m) {
        case OrderMode::original: return "original";
        case OrderMode::best_first: return "best_first";
        case OrderMode::worst_first: return "worst_first";
    }
    throw ContractError("unknown order mode");
}

inline OrderMode parse_order_mode(std::string_view name) {
    if (name == "original") return OrderMode::original;
    if (name == "best_first") return OrderMode::best_first;
    if (name == "worst_first") return OrderMode::worst_first;
    throw ContractError("unknown order mode: " + std::string(name));
}

// original keeps dataset order; best_first sorts by descending relevance,
// worst_first ascending; relevance ties fall back to the image id.
inline std::vector<std::string> order_images(const Topic& topic, OrderMode mode) {
    std::vector<TopicImage> images = topic.images;
    if (mode != OrderMode::original) {
        std::stable_sort(images.begin(), images.end(),
                         [mode](const TopicImage& a, const TopicImage& b) {
                             if (a.relevance != b.relevance)
                                 return mode == OrderMode::best_first
                                            ? a.relevance > b.relevance
                                            : a.relevance < b.relevance;
                             return a.id < b.id;
                         });
    }
    std::vector<std::string> out(images.size());
    for (std::size_t i = 0; i < images.size(); ++i) out[i] = images[i].id;
    return out;
}

struct EvalCell {
    OrderMode mode = OrderMode::original;
    TopicMethod method = TopicMethod::tfidf;
    int n_images = 0;
    double mean_jaccard = 0.0;
    std::vector<std::pair<std::string, double>> per_topic;
};

struct EvalReport {
    std::vector<EvalCell> cells;
    std::vector<std::string> skipped_topics;
};

// Runs the pipeline over every topic for each query budget n: the first n
// ordered images are the queries and the output is scored against the
// topic's groundtruth. Topics referencing images without feature vectors
// are skipped and recorded.
inline EvalReport run_experiment(const PipelineContext& ctx, std::span<const Topic> topics,
                                 OrderMode mode, TopicMethod method,
                                 std::span<const int> n_values) {
    EvalReport report;
    std::vector<const Topic*> usable;
    for (const auto& t : topics) {
        const bool resolvable =
            std::all_of(t.images.begin(), t.images.end(),
                        [&](const TopicImage& img) { return ctx.features().find(img.id); });
        if (resolvable)
            usable.push_back(&t);
        else
            report.skipped_topics.push_back(t.topic_id);
    }

    for (int n : n_values) {
        if (n < 1) throw ContractError("run_experiment: n_images must be >= 1");
        EvalCell cell;
        cell.mode = mode;
        cell.method = method;
        cell.n_images = n;
        double sum = 0.0;
        for (const Topic* t : usable) {
            auto ordered = order_images(*t, mode);
            const std::size_t take = std::min(ordered.size(), static_cast<std::size_t>(n));
            ordered.resize(take);
            const TopicResult result = find_topic_by_ids(ctx, ordered, method);
            std::set<std::string> output;
            for (const auto& rw : result.words) output.insert(rw.word);
            const std::set<std::string> groundtruth(t->groundtruth.begin(),
                                                    t->groundtruth.end());
            const double score = jaccard(groundtruth, output);
            cell.per_topic.emplace_back(t->topic_id, score);
            sum += score;
        }
        cell.mean_jaccard = usable.empty() ? 0.0 : sum / static_cast<double>(usable.size());
        report.cells.push_back(std::move(cell));
    }
    return report;
}

// CSV with one row per report cell, 6-decimal fixed-point means.
inline void emit_curves(const EvalReport& report, std::ostream& out) {
    out << "mode,method,n_images,mean_jaccard\n";
    char buf[32];
    for (const auto& cell : report.cells) {
        std::snprintf(buf, sizeof buf, "%.6f", cell.mean_jaccard);
        out << order_mode_name(cell.mode) << ',' << method_name(cell.method) << ','
            << cell.n_images << ',' << buf << '\n';
    }
}

inline void emit_curves(const EvalReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write curve file: " + path);
    emit_curves(report, out);
    if (!out) throw IoError("failed writing curve file: " + path);
}

inline std::string curves_to_string(const EvalReport& report) {
    std::ostringstream ss;
    emit_curves(report, ss);
    return ss.str();
}

}  // namespace imgtopic
