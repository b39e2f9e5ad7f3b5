#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "imgtopic/embedding.hpp"

using namespace imgtopic;
using Catch::Matchers::WithinAbs;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("imgtopic_test_" + name);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

EmbeddingTable random_table(std::mt19937& rng, std::size_t words, std::size_t dim) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    EmbeddingTable table(dim);
    std::vector<double> v(dim);
    for (std::size_t i = 0; i < words; ++i) {
        for (auto& x : v) x = gauss(rng);
        REQUIRE(table.insert("w" + std::to_string(i), v));
    }
    return table;
}

}  // namespace

TEST_CASE("text embedding files parse", "[embedding]") {
    auto path = temp_file("emb.txt");
    write_file(path, "2 3\na 1 0 0\nb 0 1 0\n");
    const auto table = EmbeddingTable::load(path.string(), EmbeddingFormat::text);
    CHECK(table.dimension() == 3);
    CHECK(table.size() == 2);
    CHECK(table.contains("a"));
    CHECK(table.contains("b"));

    SECTION("row with wrong dimension fails") {
        write_file(path, "2 3\na 1 0 0\nb 0 1\n");
        CHECK_THROWS_AS(EmbeddingTable::load(path.string(), EmbeddingFormat::text), ParseError);
        write_file(path, "1 2\na 1 0 0\n");
        CHECK_THROWS_AS(EmbeddingTable::load(path.string(), EmbeddingFormat::text), ParseError);
    }
    SECTION("bad header fails") {
        write_file(path, "two 3\na 1 0 0\n");
        CHECK_THROWS_AS(EmbeddingTable::load(path.string(), EmbeddingFormat::text), ParseError);
    }
    SECTION("missing rows fail") {
        write_file(path, "3 3\na 1 0 0\n");
        CHECK_THROWS_AS(EmbeddingTable::load(path.string(), EmbeddingFormat::text), ParseError);
    }
    SECTION("duplicate words keep the last occurrence and are counted") {
        write_file(path, "3 2\na 1 0\na 0 1\nb 1 1\n");
        EmbeddingLoadReport report;
        const auto t = EmbeddingTable::load(path.string(), EmbeddingFormat::text, &report);
        CHECK(t.size() == 2);
        CHECK(report.duplicate_words == 1);
        CHECK_THAT(t.similarity("a", "b"), WithinAbs(1.0 / std::sqrt(2.0), 1e-12));
    }
    SECTION("zero-norm vectors are rejected per word") {
        write_file(path, "2 2\na 0 0\nb 1 0\n");
        EmbeddingLoadReport report;
        const auto t = EmbeddingTable::load(path.string(), EmbeddingFormat::text, &report);
        CHECK(t.size() == 1);
        CHECK_FALSE(t.contains("a"));
        CHECK(report.zero_norm_rejected == 1);
    }
}

TEST_CASE("similarity is the cosine of the stored vectors", "[embedding]") {
    EmbeddingTable table(2);
    REQUIRE(table.insert("east", std::vector<double>{1, 0}));
    REQUIRE(table.insert("north", std::vector<double>{0, 1}));
    REQUIRE(table.insert("northeast", std::vector<double>{1, 1}));
    REQUIRE(table.insert("east2", std::vector<double>{2, 0}));

    CHECK_THAT(table.similarity("east", "east"), WithinAbs(1.0, 1e-12));
    CHECK_THAT(table.similarity("east", "north"), WithinAbs(0.0, 1e-12));
    CHECK_THAT(table.similarity("northeast", "east"), WithinAbs(0.7071067811865475, 1e-9));
    CHECK_THROWS_AS(table.similarity("east", "missing"), NotFoundError);

    SECTION("positive rescaling leaves similarity unchanged") {
        CHECK_THAT(table.similarity("east2", "northeast"),
                   WithinAbs(table.similarity("east", "northeast"), 1e-9));
    }
}

TEST_CASE("similarity is exactly symmetric on random tables", "[embedding]") {
    std::mt19937 rng(11);
    const auto table = random_table(rng, 30, 16);
    for (int i = 0; i < 30; ++i) {
        const auto& a = table.words()[static_cast<std::size_t>(rng() % table.size())];
        const auto& b = table.words()[static_cast<std::size_t>(rng() % table.size())];
        CHECK(table.similarity(a, b) == table.similarity(b, a));
    }
}

TEST_CASE("nearest_in_dictionary matches an exhaustive scan", "[embedding]") {
    std::mt19937 rng(13);
    const auto table = random_table(rng, 40, 8);

    SECTION("a word in the dictionary maps to itself") {
        std::vector<std::string> dict{"w3", "w7", "w9"};
        auto [word, sim] = table.nearest_in_dictionary("w7", dict);
        CHECK(word == "w7");
        CHECK_THAT(sim, WithinAbs(1.0, 1e-12));
    }
    SECTION("single-entry dictionary") {
        std::vector<std::string> dict{"w0"};
        auto [word, sim] = table.nearest_in_dictionary("w5", dict);
        CHECK(word == "w0");
        CHECK_THAT(sim, WithinAbs(table.similarity("w5", "w0"), 1e-15));
    }
    SECTION("argmax over a 10-word dictionary") {
        std::vector<std::string> dict;
        for (int i = 0; i < 10; ++i) dict.push_back("w" + std::to_string(i));
        for (int trial = 10; trial < 40; ++trial) {
            const std::string query = "w" + std::to_string(trial);
            auto [word, sim] = table.nearest_in_dictionary(query, dict);
            std::string best;
            double best_sim = -2.0;
            for (const auto& d : dict) {
                const double s = table.similarity(query, d);
                if (s > best_sim) {
                    best_sim = s;
                    best = d;
                }
            }
            CHECK(word == best);
            CHECK_THAT(sim, WithinAbs(best_sim, 1e-15));
        }
    }
    SECTION("empty dictionary is a contract violation") {
        CHECK_THROWS_AS(table.nearest_in_dictionary("w0", {}), ContractError);
    }
}

TEST_CASE("save/load round trip preserves similarities", "[embedding]") {
    std::mt19937 rng(17);
    const auto table = random_table(rng, 50, 12);

    SECTION("text format") {
        auto path = temp_file("roundtrip.txt");
        table.save(path.string(), EmbeddingFormat::text);
        const auto again = EmbeddingTable::load(path.string(), EmbeddingFormat::text);
        REQUIRE(again.size() == table.size());
        for (int i = 0; i < 100; ++i) {
            const auto& a = table.words()[static_cast<std::size_t>(rng() % table.size())];
            const auto& b = table.words()[static_cast<std::size_t>(rng() % table.size())];
            CHECK_THAT(again.similarity(a, b), WithinAbs(table.similarity(a, b), 1e-12));
        }
    }
    SECTION("binary format stores 32-bit floats") {
        auto path = temp_file("roundtrip.bin");
        table.save(path.string(), EmbeddingFormat::binary);
        const auto again = EmbeddingTable::load(path.string(), EmbeddingFormat::binary);
        REQUIRE(again.size() == table.size());
        for (int i = 0; i < 100; ++i) {
            const auto& a = table.words()[static_cast<std::size_t>(rng() % table.size())];
            const auto& b = table.words()[static_cast<std::size_t>(rng() % table.size())];
            CHECK_THAT(again.similarity(a, b), WithinAbs(table.similarity(a, b), 1e-6));
        }
    }
}
