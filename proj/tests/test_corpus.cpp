#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "imgtopic/corpus.hpp"

using namespace imgtopic;

TEST_CASE("tokenize applies the splitting and dropping rules", "[corpus]") {
    const StopList the_only{"the"};
    CHECK(tokenize("The Printing Press", the_only) ==
          std::vector<std::string>{"printing", "press"});
    CHECK(tokenize("", the_only).empty());
    CHECK(tokenize("Karte-\xe5\x9f\x8e-missouri 1855", StopList{}) ==
          std::vector<std::string>{"karte", "missouri", "1855"});

    SECTION("short tokens and embedded non-latin words are dropped whole") {
        CHECK(tokenize("a b cd", StopList{}) == std::vector<std::string>{"cd"});
        // accented latin is outside the modern Latin alphabet
        CHECK(tokenize("caf\xc3\xa9 bar", StopList{}) == std::vector<std::string>{"bar"});
        CHECK(tokenize("x1 1855!!press,,ink", StopList{}) ==
              std::vector<std::string>{"x1", "1855", "press", "ink"});
    }
}

TEST_CASE("tokenize is idempotent", "[corpus]") {
    std::mt19937 rng(7);
    const std::string alphabet = "abcXYZ019 .,-_'\t\xc3\xa9\xe5\x9f";
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    std::uniform_int_distribution<int> len(0, 40);
    const StopList stop{"the", "of", "and"};
    for (int trial = 0; trial < 200; ++trial) {
        std::string text;
        const int n = len(rng);
        for (int i = 0; i < n; ++i) text.push_back(alphabet[pick(rng)]);
        const auto once = tokenize(text, stop);
        std::string joined;
        for (const auto& t : once) {
            if (!joined.empty()) joined.push_back(' ');
            joined += t;
        }
        CHECK(tokenize(joined, stop) == once);
    }
}

TEST_CASE("stop list keeps only entries that survive tokenization", "[corpus]") {
    StopList stop;
    CHECK(stop.add("the"));
    CHECK(stop.add("Data"));  // lowercased
    CHECK_FALSE(stop.add("a"));
    CHECK_FALSE(stop.add("two words"));
    CHECK_FALSE(stop.add("caf\xc3\xa9"));
    CHECK(stop.contains("the"));
    CHECK(stop.contains("data"));
    CHECK(stop.size() == 2);
}

TEST_CASE("default stop list matches the shipped file", "[corpus]") {
    const auto& builtin = StopList::default_english();
    REQUIRE(builtin.size() >= 140);
    const StopList from_file = StopList::load(IMGTOPIC_DATA_DIR "/stopwords_en.txt");
    CHECK(from_file.size() == builtin.size());
    for (const auto& probe : {"the", "of", "which", "themselves", "shouldn"}) {
        CHECK(builtin.contains(probe));
        CHECK(from_file.contains(probe));
    }
}

namespace {

TagCorpus corpus_from(std::initializer_list<TagTriad> triads, const StopList& stop = StopList{},
                      TagCorpus::Options options = {}) {
    std::vector<TagTriad> v(triads);
    return TagCorpus::from_triads(v, stop, options);
}

double weight_of(const TagCorpus& corpus, const ImageTextRecord& record,
                 const std::string& word) {
    auto id = corpus.lexicon().id_of(word);
    REQUIRE(id.has_value());
    auto it = record.histogram.find(*id);
    return it == record.histogram.end() ? 0.0 : it->second;
}

}  // namespace

TEST_CASE("ingest aggregates click-weighted word occurrences", "[corpus]") {
    SECTION("clicks multiply occurrences") {
        const auto corpus = corpus_from({{"img1", "press press", 3}});
        CHECK(weight_of(corpus, corpus.text_histogram("img1"), "press") == 6.0);
    }
    SECTION("triads of one image merge") {
        const auto corpus = corpus_from({{"img1", "press", 1}, {"img1", "ink", 1}});
        const auto& rec = corpus.text_histogram("img1");
        CHECK(weight_of(corpus, rec, "press") == 1.0);
        CHECK(weight_of(corpus, rec, "ink") == 1.0);
        CHECK(corpus.lexicon().document_frequency("press").value() == 1);
    }
    SECTION("document frequency counts distinct images") {
        const auto corpus = corpus_from({{"img1", "press room", 1},
                                         {"img2", "press", 2},
                                         {"img3", "ink", 1}});
        CHECK(corpus.lexicon().document_frequency("press").value() == 2);
        CHECK(corpus.lexicon().document_frequency("room").value() == 1);
        CHECK(corpus.lexicon().corpus_size() == 3);
        CHECK(corpus.image_count() == 3);
    }
    SECTION("click weighting can be disabled") {
        const auto corpus =
            corpus_from({{"img1", "press press", 3}}, StopList{}, {.click_weighting = false});
        CHECK(weight_of(corpus, corpus.text_histogram("img1"), "press") == 2.0);
    }
    SECTION("nonpositive click counts are rejected") {
        std::vector<TagTriad> bad{{"img1", "press", 0}};
        CHECK_THROWS_AS(TagCorpus::from_triads(bad, StopList{}), ContractError);
    }
}

TEST_CASE("triad stream parsing reports offending lines", "[corpus]") {
    const StopList stop;
    SECTION("well-formed stream") {
        std::istringstream in("img1\tprinting press\t3\nimg2\tink\t1\n");
        const auto corpus = TagCorpus::from_stream(in, stop);
        CHECK(corpus.image_count() == 2);
        CHECK(weight_of(corpus, corpus.text_histogram("img1"), "press") == 3.0);
    }
    SECTION("missing field") {
        std::istringstream in("img1\tpress\t3\nimg2 ink 1\n");
        try {
            TagCorpus::from_stream(in, stop);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line() == 2);
        }
    }
    SECTION("bad click count") {
        std::istringstream in("img1\tpress\tmany\n");
        CHECK_THROWS_AS(TagCorpus::from_stream(in, stop), ParseError);
    }
    SECTION("zero click count") {
        std::istringstream in("img1\tpress\t0\n");
        CHECK_THROWS_AS(TagCorpus::from_stream(in, stop), ParseError);
    }
}

TEST_CASE("text_histogram looks up ingested records", "[corpus]") {
    const auto corpus = corpus_from({{"img1", "press", 1}, {"img2", "ink", 2}});
    CHECK(corpus.text_histogram("img1").image_id == "img1");
    CHECK_THROWS_AS(corpus.text_histogram("nope"), NotFoundError);
    for (const auto& id : corpus.image_ids()) {
        CHECK(corpus.text_histogram(id).image_id == id);
    }
}

TEST_CASE("document frequencies match a brute-force recount", "[corpus]") {
    std::mt19937 rng(99);
    const std::vector<std::string> pool = {"press", "ink",  "paper", "type",  "plate",
                                           "roll",  "book", "page",  "metal", "press2"};
    std::uniform_int_distribution<int> image_pick(0, 29);
    std::uniform_int_distribution<std::size_t> word_pick(0, pool.size() - 1);
    std::uniform_int_distribution<int> clicks(1, 5);

    std::vector<TagTriad> triads;
    for (int i = 0; i < 400; ++i) {
        triads.push_back({"img" + std::to_string(image_pick(rng)),
                          pool[word_pick(rng)] + " " + pool[word_pick(rng)],
                          clicks(rng)});
    }
    const auto corpus = TagCorpus::from_triads(triads, StopList{});

    std::map<std::string, std::set<std::string>> images_with_word;
    for (const auto& t : triads) {
        for (const auto& tok : tokenize(t.query_text, StopList{}))
            images_with_word[tok].insert(t.image_id);
    }
    for (const auto& [word, images] : images_with_word) {
        CHECK(corpus.lexicon().document_frequency(word).value() ==
              static_cast<std::int64_t>(images.size()));
    }

    SECTION("histograms are invariant to triad order") {
        auto shuffled = triads;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        const auto corpus2 = TagCorpus::from_triads(shuffled, StopList{});
        REQUIRE(corpus2.image_count() == corpus.image_count());
        for (const auto& id : corpus.image_ids()) {
            const auto& a = corpus.text_histogram(id);
            const auto& b = corpus2.text_histogram(id);
            REQUIRE(a.histogram.size() == b.histogram.size());
            for (const auto& [word_id, w] : a.histogram) {
                const auto& word = corpus.lexicon().word(word_id);
                auto id2 = corpus2.lexicon().id_of(word);
                REQUIRE(id2.has_value());
                CHECK(b.histogram.at(*id2) == w);
            }
        }
    }
}
