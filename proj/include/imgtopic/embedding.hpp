#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "imgtopic/detail/math.hpp"
#include "imgtopic/error.hpp"

namespace imgtopic {

enum class EmbeddingFormat { text, binary };

struct EmbeddingLoadReport {
    std::size_t duplicate_words = 0;   // earlier occurrence replaced
    std::size_t zero_norm_rejected = 0;
};

// Word -> D-dimensional vector table. Vectors are L2-normalized at insert,
// so cosine similarity is a plain inner product.
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    explicit EmbeddingTable(std::size_t dimension) : dimension_(dimension) {}

    std::size_t dimension() const { return dimension_; }
    std::size_t size() const { return words_.size(); }

    bool contains(std::string_view word) const { return ids_.count(std::string(word)) > 0; }

    // Returns false (vector rejected) when the norm is zero or non-finite.
    bool insert(std::string_view word, std::span<const double> values) {
        if (dimension_ == 0) dimension_ = values.size();
        if (values.size() != dimension_)
            throw ContractError("vector for '" + std::string(word) + "' has dimension " +
                                std::to_string(values.size()) + ", table has " +
                                std::to_string(dimension_));
        double norm = detail::l2_norm(values);
        if (!std::isfinite(norm) || norm == 0.0) return false;
        auto [it, inserted] = ids_.emplace(std::string(word), words_.size());
        if (inserted) {
            words_.emplace_back(word);
            data_.resize(data_.size() + dimension_);
        }
        double* dst = &data_[it->second * dimension_];
        for (std::size_t d = 0; d < dimension_; ++d) dst[d] = values[d] / norm;
        return true;
    }

    std::span<const double> vector(std::string_view word) const {
        auto it = ids_.find(std::string(word));
        if (it == ids_.end())
            throw NotFoundError("word not in embedding table: " + std::string(word));
        return {&data_[it->second * dimension_], dimension_};
    }

    const std::vector<std::string>& words() const { return words_; }

    // Cosine similarity in [-1, 1]. Throws NotFoundError for missing words.
    double similarity(std::string_view a, std::string_view b) const {
        return std::clamp(detail::dot(vector(a), vector(b)), -1.0, 1.0);
    }

    static double similarity(std::span<const double> a, std::span<const double> b) {
        return std::clamp(detail::dot(a, b), -1.0, 1.0);
    }

    // Argmax of similarity over the dictionary; ties keep the earlier entry.
    std::pair<std::string, double> nearest_in_dictionary(
        std::string_view word, std::span<const std::string> dictionary) const {
        if (dictionary.empty()) throw ContractError("nearest_in_dictionary: empty dictionary");
        auto wv = vector(word);
        std::size_t best = 0;
        double best_sim = similarity(wv, vector(dictionary[0]));
        for (std::size_t i = 1; i < dictionary.size(); ++i) {
            const double s = similarity(wv, vector(dictionary[i]));
            if (s > best_sim) {
                best_sim = s;
                best = i;
            }
        }
        return {dictionary[best], best_sim};
    }

    static EmbeddingTable load(const std::string& path, EmbeddingFormat format,
                               EmbeddingLoadReport* report = nullptr);
    void save(const std::string& path, EmbeddingFormat format) const;

private:
    std::size_t dimension_ = 0;
    std::vector<std::string> words_;
    std::vector<double> data_;  // size() * dimension_, row per word
    std::unordered_map<std::string, std::size_t> ids_;
};

namespace detail {

inline void parse_embedding_header(std::istream& in, std::size_t& vocab, std::size_t& dim) {
    std::string header;
    if (!std::getline(in, header)) throw ParseError("missing embedding header", 1);
    std::istringstream hs(header);
    long long v = -1, d = -1;
    if (!(hs >> v >> d) || v < 0 || d <= 0)
        throw ParseError("embedding header must be 'V D', got '" + header + "'", 1);
    std::string extra;
    if (hs >> extra) throw ParseError("embedding header must be 'V D', got '" + header + "'", 1);
    vocab = static_cast<std::size_t>(v);
    dim = static_cast<std::size_t>(d);
}

}  // namespace detail

inline EmbeddingTable EmbeddingTable::load(const std::string& path, EmbeddingFormat format,
                                           EmbeddingLoadReport* report) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open embedding file: " + path);

    std::size_t vocab = 0, dim = 0;
    detail::parse_embedding_header(in, vocab, dim);

    EmbeddingTable table(dim);
    EmbeddingLoadReport local;
    std::vector<double> values(dim);

    if (format == EmbeddingFormat::text) {
        std::string line;
        for (std::size_t i = 0; i < vocab; ++i) {
            const std::size_t line_no = i + 2;
            if (!std::getline(in, line))
                throw ParseError("expected " + std::to_string(vocab) + " embedding rows, got " +
                                     std::to_string(i),
                                 line_no);
            std::istringstream ls(line);
            std::string word;
            if (!(ls >> word)) throw ParseError("empty embedding row", line_no);
            for (std::size_t d = 0; d < dim; ++d) {
                if (!(ls >> values[d]))
                    throw ParseError("row for '" + word + "' has fewer than " +
                                         std::to_string(dim) + " values",
                                     line_no);
            }
            double extra;
            if (ls >> extra)
                throw ParseError("row for '" + word + "' has more than " + std::to_string(dim) +
                                     " values",
                                 line_no);
            if (table.contains(word)) ++local.duplicate_words;
            if (!table.insert(word, values)) ++local.zero_norm_rejected;
        }
    } else {
        std::vector<float> raw(dim);
        for (std::size_t i = 0; i < vocab; ++i) {
            std::string word;
            char c;
            while (in.get(c) && c != ' ') {
                if (c == '\n')
                    throw ParseError("unexpected newline in token", 0,
                                     static_cast<std::size_t>(in.tellg()));
                word.push_back(c);
            }
            if (!in)
                throw ParseError("truncated embedding file after " + std::to_string(i) + " words",
                                 0, static_cast<std::size_t>(in.tellg()));
            std::vector<char> buf(dim * 4);
            if (!in.read(buf.data(), static_cast<std::streamsize>(buf.size())))
                throw ParseError("truncated vector for '" + word + "'", 0,
                                 static_cast<std::size_t>(in.tellg()));
            for (std::size_t d = 0; d < dim; ++d) {
                const auto* b = reinterpret_cast<const unsigned char*>(&buf[d * 4]);
                std::uint32_t bits = static_cast<std::uint32_t>(b[0]) |
                                     static_cast<std::uint32_t>(b[1]) << 8 |
                                     static_cast<std::uint32_t>(b[2]) << 16 |
                                     static_cast<std::uint32_t>(b[3]) << 24;
                values[d] = static_cast<double>(std::bit_cast<float>(bits));
            }
            if (!in.get(c) || c != '\n')
                throw ParseError("missing newline after vector for '" + word + "'", 0,
                                 static_cast<std::size_t>(in.tellg()));
            if (table.contains(word)) ++local.duplicate_words;
            if (!table.insert(word, values)) ++local.zero_norm_rejected;
        }
    }
    if (report) *report = local;
    return table;
}

inline void EmbeddingTable::save(const std::string& path, EmbeddingFormat format) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write embedding file: " + path);
    out << words_.size() << ' ' << dimension_ << '\n';
    char num[64];
    for (std::size_t i = 0; i < words_.size(); ++i) {
        out << words_[i];
        const double* row = &data_[i * dimension_];
        if (format == EmbeddingFormat::text) {
            for (std::size_t d = 0; d < dimension_; ++d) {
                std::snprintf(num, sizeof num, "%.17g", row[d]);
                out << ' ' << num;
            }
            out << '\n';
        } else {
            out << ' ';
            for (std::size_t d = 0; d < dimension_; ++d) {
                const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(row[d]));
                const char bytes[4] = {static_cast<char>(bits & 0xff),
                                       static_cast<char>((bits >> 8) & 0xff),
                                       static_cast<char>((bits >> 16) & 0xff),
                                       static_cast<char>((bits >> 24) & 0xff)};
                out.write(bytes, 4);
            }
            out << '\n';
        }
    }
}

}  // namespace imgtopic
