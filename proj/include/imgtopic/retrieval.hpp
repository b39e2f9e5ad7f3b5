#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <fstream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "imgtopic/detail/math.hpp"
#include "imgtopic/error.hpp"

namespace imgtopic {

struct FeatureVector {
    std::string image_id;
    std::vector<double> values;
};

struct Neighbor {
    std::string image_id;
    double distance = 0.0;
};

// In-memory store of image feature vectors with a uniform dimension.
class FeatureStore {
public:
    void add(FeatureVector fv) {
        if (dimension_ == 0) dimension_ = fv.values.size();
        if (fv.values.size() != dimension_)
            throw ContractError("feature vector for '" + fv.image_id + "' has dimension " +
                                std::to_string(fv.values.size()) + ", store has " +
                                std::to_string(dimension_));
        for (double v : fv.values)
            if (!std::isfinite(v))
                throw ContractError("non-finite feature value for '" + fv.image_id + "'");
        auto [it, inserted] = index_.emplace(fv.image_id, items_.size());
        if (!inserted)
            throw ContractError("duplicate image id in feature store: " + fv.image_id);
        items_.push_back(std::move(fv));
    }

    // Text format: header `N D`, then N lines `image_id v1 ... vD`.
    static FeatureStore load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open feature file: " + path);
        std::string header;
        if (!std::getline(in, header)) throw ParseError("missing feature header", 1);
        std::istringstream hs(header);
        long long n = -1, d = -1;
        if (!(hs >> n >> d) || n < 0 || d <= 0)
            throw ParseError("feature header must be 'N D', got '" + header + "'", 1);
        FeatureStore store;
        std::string line;
        for (long long i = 0; i < n; ++i) {
            const std::size_t line_no = static_cast<std::size_t>(i) + 2;
            if (!std::getline(in, line))
                throw ParseError("expected " + std::to_string(n) + " feature rows, got " +
                                     std::to_string(i),
                                 line_no);
            std::istringstream ls(line);
            FeatureVector fv;
            if (!(ls >> fv.image_id)) throw ParseError("empty feature row", line_no);
            fv.values.resize(static_cast<std::size_t>(d));
            for (auto& v : fv.values)
                if (!(ls >> v))
                    throw ParseError("row for '" + fv.image_id + "' has fewer than " +
                                         std::to_string(d) + " values",
                                     line_no);
            double extra;
            if (ls >> extra)
                throw ParseError("row for '" + fv.image_id + "' has more than " +
                                     std::to_string(d) + " values",
                                 line_no);
            try {
                store.add(std::move(fv));
            } catch (const ContractError& e) {
                throw ParseError(e.what(), line_no);
            }
        }
        return store;
    }

    std::size_t size() const { return items_.size(); }
    std::size_t dimension() const { return dimension_; }
    bool empty() const { return items_.empty(); }

    const FeatureVector& at(std::size_t i) const { return items_[i]; }

    const FeatureVector* find(std::string_view image_id) const {
        auto it = index_.find(std::string(image_id));
        return it == index_.end() ? nullptr : &items_[it->second];
    }

private:
    std::size_t dimension_ = 0;
    std::vector<FeatureVector> items_;
    std::unordered_map<std::string, std::size_t> index_;
};

namespace detail {

inline void sort_neighbors(std::vector<Neighbor>& out) {
    std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.image_id < b.image_id;
    });
}

}  // namespace detail

// Exhaustive k-nearest-neighbor scan; the reference answer LSH approximates.
inline std::vector<Neighbor> exact_knn(const FeatureStore& store, std::span<const double> query,
                                       std::size_t k) {
    if (k < 1) throw ContractError("knn requires k >= 1");
    std::vector<Neighbor> out;
    out.reserve(store.size());
    for (std::size_t i = 0; i < store.size(); ++i) {
        const auto& fv = store.at(i);
        out.push_back({fv.image_id, detail::euclidean_distance(fv.values, query)});
    }
    detail::sort_neighbors(out);
    if (out.size() > k) out.resize(k);
    return out;
}

// Sign-of-projection LSH over b random hyperplanes. Bit i of a code is set
// iff hyperplane_i . v >= 0; vectors sharing a code land in one bucket.
// Queries take the candidates in the query's bucket and, while fewer than k
// are gathered, widen to buckets at growing Hamming radius before ranking
// candidates by exact Euclidean distance.
class LshIndex {
public:
    LshIndex(const FeatureStore& store, int bits, std::uint64_t seed)
        : LshIndex(store, sample_hyperplanes(bits, store.dimension(), seed), seed) {}

    // Test hook: explicit hyperplanes (unit length not required).
    LshIndex(const FeatureStore& store, std::vector<std::vector<double>> hyperplanes,
             std::uint64_t seed = 0)
        : store_(&store), hyperplanes_(std::move(hyperplanes)), seed_(seed) {
        if (store.empty()) throw ContractError("cannot index an empty feature store");
        if (hyperplanes_.empty() || hyperplanes_.size() > 30)
            throw ContractError("lsh bits must be in [1, 30], got " +
                                std::to_string(hyperplanes_.size()));
        for (const auto& h : hyperplanes_)
            if (h.size() != store.dimension())
                throw ContractError("hyperplane dimension mismatch");
        for (std::size_t i = 0; i < store.size(); ++i) {
            buckets_[hash(store.at(i).values)].push_back(i);
        }
    }

    int bits() const { return static_cast<int>(hyperplanes_.size()); }
    std::uint64_t seed() const { return seed_; }
    std::size_t bucket_count() const { return buckets_.size(); }
    const FeatureStore& store() const { return *store_; }

    std::size_t indexed_count() const {
        std::size_t n = 0;
        for (const auto& [code, ids] : buckets_) n += ids.size();
        return n;
    }

    std::uint32_t hash(std::span<const double> v) const {
        if (v.size() != store_->dimension())
            throw ContractError("query dimension " + std::to_string(v.size()) +
                                " does not match index dimension " +
                                std::to_string(store_->dimension()));
        std::uint32_t code = 0;
        for (std::size_t i = 0; i < hyperplanes_.size(); ++i) {
            if (detail::dot(hyperplanes_[i], v) >= 0.0) code |= (1u << i);
        }
        return code;
    }

    // max_radius < 0 means unlimited (probe up to Hamming distance b).
    std::vector<Neighbor> knn(std::span<const double> query, std::size_t k,
                              int max_radius = -1) const {
        if (k < 1) throw ContractError("knn requires k >= 1");
        const int b = bits();
        const int limit = max_radius < 0 ? b : std::min(max_radius, b);
        const std::uint32_t code = hash(query);

        std::vector<std::size_t> candidates;
        for (int radius = 0; radius <= limit; ++radius) {
            gather_at_radius(code, radius, candidates);
            if (candidates.size() >= k) break;
        }

        std::vector<Neighbor> out;
        out.reserve(candidates.size());
        for (std::size_t idx : candidates) {
            const auto& fv = store_->at(idx);
            out.push_back({fv.image_id, detail::euclidean_distance(fv.values, query)});
        }
        detail::sort_neighbors(out);
        if (out.size() > k) out.resize(k);
        return out;
    }

    std::vector<Neighbor> knn(const FeatureVector& query, std::size_t k,
                              int max_radius = -1) const {
        return knn(std::span<const double>(query.values), k, max_radius);
    }

private:
    static std::vector<std::vector<double>> sample_hyperplanes(int bits, std::size_t dim,
                                                               std::uint64_t seed) {
        if (bits < 1 || bits > 30)
            throw ContractError("lsh bits must be in [1, 30], got " + std::to_string(bits));
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::vector<std::vector<double>> planes(static_cast<std::size_t>(bits));
        for (auto& h : planes) {
            h.resize(dim);
            double norm = 0.0;
            do {
                for (auto& x : h) x = gauss(rng);
                norm = detail::l2_norm(h);
            } while (norm == 0.0);
            for (auto& x : h) x /= norm;
        }
        return planes;
    }

    // Appends members of every bucket at exactly `radius` bit flips from
    // `code`. Enumerates flipped codes when that is cheaper than scanning
    // the bucket table, otherwise filters buckets by popcount.
    void gather_at_radius(std::uint32_t code, int radius,
                          std::vector<std::size_t>& candidates) const {
        if (radius == 0) {
            append_bucket(code, candidates);
            return;
        }
        const int b = bits();
        double combos = 1.0;
        for (int i = 0; i < radius; ++i) combos = combos * (b - i) / (i + 1);
        if (combos <= static_cast<double>(buckets_.size()) * 2.0) {
            enumerate_flips(code, 0, radius, 0, candidates);
        } else {
            for (const auto& [stored, ids] : buckets_) {
                if (std::popcount(stored ^ code) == radius)
                    candidates.insert(candidates.end(), ids.begin(), ids.end());
            }
        }
    }

    void enumerate_flips(std::uint32_t code, int from, int remaining, std::uint32_t mask,
                         std::vector<std::size_t>& candidates) const {
        if (remaining == 0) {
            append_bucket(code ^ mask, candidates);
            return;
        }
        for (int i = from; i <= bits() - remaining; ++i) {
            enumerate_flips(code, i + 1, remaining - 1, mask | (1u << i), candidates);
        }
    }

    void append_bucket(std::uint32_t code, std::vector<std::size_t>& candidates) const {
        auto it = buckets_.find(code);
        if (it != buckets_.end())
            candidates.insert(candidates.end(), it->second.begin(), it->second.end());
    }

    const FeatureStore* store_;
    std::vector<std::vector<double>> hyperplanes_;
    std::uint64_t seed_ = 0;
    std::unordered_map<std::uint32_t, std::vector<std::size_t>> buckets_;
};

}  // namespace imgtopic
