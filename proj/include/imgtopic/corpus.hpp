#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "imgtopic/error.hpp"

namespace imgtopic {

// One click-log entry: image K was clicked `click_count` times in the
// results of search text `query_text`.
struct TagTriad {
    std::string image_id;
    std::string query_text;
    std::int64_t click_count = 0;
};

// Set of tokens to drop during tokenization. Entries are kept only if they
// would survive the tokenizer unchanged, so membership tests are exact.
class StopList {
public:
    StopList() = default;

    explicit StopList(std::initializer_list<std::string_view> words) {
        for (auto w : words) add(w);
    }

    // Returns false if the entry is not a valid token (and was skipped).
    bool add(std::string_view word);

    bool contains(std::string_view token) const {
        return words_.count(std::string(token)) > 0;
    }

    std::size_t size() const { return words_.size(); }

    static StopList load(const std::string& path);

    // ~150 English function words, identical to data/stopwords_en.txt.
    static const StopList& default_english();

private:
    std::unordered_set<std::string> words_;
};

// Splits raw text into lowercase word tokens.
//
// Rules: ASCII letters are lowercased; maximal runs of [a-z0-9] and
// non-ASCII bytes form candidate tokens; any other ASCII byte separates.
// Candidates containing a byte outside [a-z0-9] (i.e. outside the modern
// Latin alphabet and ASCII digits) are dropped whole, as are tokens shorter
// than two characters and stop-listed tokens.
inline std::vector<std::string> tokenize(std::string_view text, const StopList& stop) {
    std::vector<std::string> out;
    std::string token;
    bool tainted = false;

    auto flush = [&] {
        if (!token.empty() && !tainted && token.size() >= 2 && !stop.contains(token)) {
            out.push_back(token);
        }
        token.clear();
        tainted = false;
    };

    for (unsigned char c : text) {
        if (c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
        const bool latin = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
        if (latin || c >= 0x80) {
            token.push_back(static_cast<char>(c));
            tainted = tainted || c >= 0x80;
        } else {
            flush();
        }
    }
    flush();
    return out;
}

inline bool StopList::add(std::string_view word) {
    std::string lower(word);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    auto toks = tokenize(lower, StopList{});
    if (toks.size() != 1 || toks[0] != lower) return false;
    words_.insert(std::move(toks[0]));
    return true;
}

inline StopList StopList::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open stop list: " + path);
    StopList stop;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        stop.add(line);
    }
    return stop;
}

// Word <-> dense id bijection plus per-word document frequencies.
class Lexicon {
public:
    int intern(std::string_view word) {
        auto it = ids_.find(std::string(word));
        if (it != ids_.end()) return it->second;
        const int id = static_cast<int>(words_.size());
        words_.emplace_back(word);
        ids_.emplace(words_.back(), id);
        return id;
    }

    std::optional<int> id_of(std::string_view word) const {
        auto it = ids_.find(std::string(word));
        if (it == ids_.end()) return std::nullopt;
        return it->second;
    }

    const std::string& word(int id) const {
        if (id < 0 || static_cast<std::size_t>(id) >= words_.size())
            throw ContractError("lexicon id out of range: " + std::to_string(id));
        return words_[static_cast<std::size_t>(id)];
    }

    std::size_t size() const { return words_.size(); }

    // Number of distinct images whose histogram contains the word.
    std::int64_t document_frequency(int id) const {
        if (id < 0 || static_cast<std::size_t>(id) >= df_.size())
            throw ContractError("lexicon id out of range: " + std::to_string(id));
        return df_[static_cast<std::size_t>(id)];
    }

    std::optional<std::int64_t> document_frequency(std::string_view word) const {
        auto id = id_of(word);
        if (!id) return std::nullopt;
        return document_frequency(*id);
    }

    std::size_t corpus_size() const { return corpus_size_; }

private:
    friend class TagCorpus;

    std::unordered_map<std::string, int> ids_;
    std::vector<std::string> words_;
    std::vector<std::int64_t> df_;
    std::size_t corpus_size_ = 0;
};

// Per-image word histogram. Keys are lexicon ids; weights are positive.
struct ImageTextRecord {
    std::string image_id;
    std::map<int, double> histogram;
};

// Immutable store of per-image word histograms built from click triads.
//
// The histogram weight of word w in image K is the sum over K's triads of
// click_count * (occurrences of w in the tokenized query text); with click
// weighting off every triad counts once regardless of clicks.
class TagCorpus {
public:
    struct Options {
        bool click_weighting = true;
    };

    static TagCorpus from_triads(std::span<const TagTriad> triads, const StopList& stop,
                                 Options options) {
        TagCorpus corpus;
        for (const auto& t : triads) {
            if (t.click_count < 1)
                throw ContractError("click_count must be positive for image " + t.image_id);
            corpus.add(t, stop, options);
        }
        corpus.finalize();
        return corpus;
    }

    static TagCorpus from_triads(std::span<const TagTriad> triads, const StopList& stop) {
        return from_triads(triads, stop, Options{});
    }

    // Parses `image_id<TAB>query_text<TAB>click_count` lines.
    static TagCorpus from_stream(std::istream& in, const StopList& stop, Options options) {
        TagCorpus corpus;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            corpus.add(parse_triad(line, line_no), stop, options);
        }
        corpus.finalize();
        return corpus;
    }

    static TagCorpus from_stream(std::istream& in, const StopList& stop) {
        return from_stream(in, stop, Options{});
    }

    static TagCorpus from_file(const std::string& path, const StopList& stop, Options options) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open triad file: " + path);
        return from_stream(in, stop, options);
    }

    static TagCorpus from_file(const std::string& path, const StopList& stop) {
        return from_file(path, stop, Options{});
    }

    static TagTriad parse_triad(std::string_view line, std::size_t line_no) {
        const auto tab1 = line.find('\t');
        const auto tab2 = tab1 == std::string_view::npos ? tab1 : line.find('\t', tab1 + 1);
        if (tab2 == std::string_view::npos)
            throw ParseError("triad line needs 3 tab-separated fields", line_no);
        TagTriad t;
        t.image_id = std::string(line.substr(0, tab1));
        t.query_text = std::string(line.substr(tab1 + 1, tab2 - tab1 - 1));
        const auto count_field = line.substr(tab2 + 1);
        if (t.image_id.empty() ||
            t.image_id.find_first_of(" \t") != std::string::npos)
            throw ParseError("bad image id '" + t.image_id + "'", line_no);
        try {
            std::size_t pos = 0;
            t.click_count = std::stoll(std::string(count_field), &pos);
            if (pos != count_field.size()) throw std::invalid_argument("trailing junk");
        } catch (const std::exception&) {
            throw ParseError("click count is not an integer: '" + std::string(count_field) + "'",
                             line_no);
        }
        if (t.click_count < 1)
            throw ParseError("click count must be >= 1, got " + std::to_string(t.click_count),
                             line_no);
        return t;
    }

    const ImageTextRecord& text_histogram(std::string_view image_id) const {
        auto it = index_.find(std::string(image_id));
        if (it == index_.end())
            throw NotFoundError("unknown image id: " + std::string(image_id));
        return records_[it->second];
    }

    bool contains(std::string_view image_id) const {
        return index_.count(std::string(image_id)) > 0;
    }

    const Lexicon& lexicon() const { return lexicon_; }
    std::size_t image_count() const { return records_.size(); }

    // Image ids in first-seen order.
    const std::vector<std::string>& image_ids() const { return ids_in_order_; }

private:
    TagCorpus() = default;

    void add(const TagTriad& triad, const StopList& stop, Options options) {
        auto [it, inserted] = index_.emplace(triad.image_id, records_.size());
        if (inserted) {
            records_.push_back(ImageTextRecord{triad.image_id, {}});
            ids_in_order_.push_back(triad.image_id);
        }
        auto& hist = records_[it->second].histogram;
        const double unit = options.click_weighting ? static_cast<double>(triad.click_count) : 1.0;
        for (const auto& tok : tokenize(triad.query_text, stop)) {
            hist[lexicon_.intern(tok)] += unit;
        }
    }

    void finalize() {
        lexicon_.df_.assign(lexicon_.size(), 0);
        for (const auto& rec : records_) {
            for (const auto& [word_id, weight] : rec.histogram) {
                (void)weight;
                ++lexicon_.df_[static_cast<std::size_t>(word_id)];
            }
        }
        lexicon_.corpus_size_ = records_.size();
    }

    Lexicon lexicon_;
    std::vector<ImageTextRecord> records_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<std::string> ids_in_order_;
};

inline const StopList& StopList::default_english() {
    static const StopList stop{
        "the",   "of",     "and",    "to",      "in",      "is",     "it",      "that",
        "this",  "was",    "for",    "on",      "are",     "as",     "with",    "his",
        "her",   "they",   "at",     "be",      "have",    "from",   "or",      "had",
        "by",    "not",    "but",    "what",    "all",     "were",   "we",      "when",
        "your",  "can",    "said",   "there",   "use",     "an",     "each",    "which",
        "she",   "do",     "how",    "their",   "if",      "will",   "up",      "other",
        "about", "out",    "many",   "then",    "them",    "these",  "so",      "some",
        "would", "into",   "has",    "more",    "two",     "him",    "see",     "no",
        "could", "than",   "been",   "its",     "who",     "now",    "did",     "get",
        "may",   "way",    "my",     "our",     "me",      "too",    "any",     "where",
        "most",  "us",     "very",   "you",     "he",      "also",   "after",   "before",
        "such",  "through","over",   "under",   "again",   "further","once",    "here",
        "why",   "both",   "few",    "between", "because", "being",  "during",  "above",
        "below", "off",    "own",    "same",    "should",  "does",   "doing",   "until",
        "while", "against","down",   "only",    "just",    "don",    "isn",     "aren",
        "wasn",  "weren",  "won",    "shouldn", "couldn",  "wouldn", "hasn",    "haven",
        "hadn",  "didn",   "doesn",  "mustn",   "needn",   "shan",   "mightn",  "itself",
        "himself","herself","themselves","myself","yourself","ourselves","yours","ours",
        "theirs","hers",   "whom",   "whose",   "am",      "those",  "having",  "anybody",
        "anyone","someone","something","anything","nothing","everything","everyone","nobody",
    };
    return stop;
}

}  // namespace imgtopic
