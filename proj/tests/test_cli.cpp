#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunResult run_cli(const std::string& args) {
    static int counter = 0;
    const auto dir = fs::temp_directory_path();
    const auto out_path = dir / ("imgtopic_cli_out" + std::to_string(counter) + ".txt");
    const auto err_path = dir / ("imgtopic_cli_err" + std::to_string(counter) + ".txt");
    ++counter;
    const std::string cmd = std::string(IMGTOPIC_CLI_PATH) + " " + args + " > " +
                            out_path.string() + " 2> " + err_path.string();
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out_path);
    r.err = slurp(err_path);
    return r;
}

// Small two-topic fixture written once per process.
struct CliFixture {
    fs::path dir;
    fs::path config;

    CliFixture() {
        dir = fs::temp_directory_path() / "imgtopic_cli_fixture";
        fs::create_directories(dir);

        std::ofstream(dir / "features.txt")
            << "4 3\n"
               "img1 1 0 0\n"
               "img2 0.9 0.1 0\n"
               "img3 0 1 0\n"
               "img4 0 0.9 0.1\n";
        std::ofstream(dir / "triads.tsv")
            << "img1\tprinting press\t3\n"
               "img1\tink plate\t1\n"
               "img2\tpress plate\t2\n"
               "img2\tpress\t1\n"
               "img3\triver water\t2\n"
               "img3\twater boat\t1\n"
               "img4\triver boat\t2\n"
               "img4\tboat\t1\n";
        std::ofstream(dir / "embeddings.txt")
            << "9 3\n"
               "press 1 0 0\n"
               "ink 0.9 0.1 0\n"
               "plate 0.8 0.2 0\n"
               "printing 0.95 0 0.1\n"
               "river 0 1 0\n"
               "water 0.1 0.9 0\n"
               "boat 0 0.8 0.2\n"
               "print 0.97 0.05 0\n"
               "flow 0.05 0.95 0\n";
        std::ofstream(dir / "dict.txt") << "print\nflow\n";
        std::ofstream(dir / "topics.json") << R"([
            {"topic_id": "presswork", "words": ["press", "ink"],
             "images": [{"id": "img1", "relevance": 0.9}, {"id": "img2", "relevance": 0.5}]},
            {"topic_id": "rivers", "words": ["river", "water"],
             "images": [{"id": "img3", "relevance": 0.8}, {"id": "img4", "relevance": 0.6}]}
        ])";

        nlohmann::json cfg;
        cfg["paths"]["features"] = (dir / "features.txt").string();
        cfg["paths"]["triads"] = (dir / "triads.tsv").string();
        cfg["paths"]["embeddings"] = (dir / "embeddings.txt").string();
        cfg["paths"]["topics"] = (dir / "topics.json").string();
        cfg["lsh"]["bits"] = 4;
        cfg["walk"]["top_n"] = 3;
        config = dir / "config.json";
        std::ofstream(config) << cfg.dump(2);
    }
};

const CliFixture& fixture() {
    static CliFixture f;
    return f;
}

}  // namespace

TEST_CASE("index prints corpus counts and is deterministic", "[cli]") {
    const auto& f = fixture();
    const auto r = run_cli("index --config " + f.config.string());
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("images=4") != std::string::npos);
    CHECK(r.out.find("features=4") != std::string::npos);
    CHECK(r.out.find("lexicon=") != std::string::npos);

    const auto again = run_cli("index --config " + f.config.string());
    CHECK(again.out == r.out);
}

TEST_CASE("missing and malformed inputs use distinct exit codes", "[cli]") {
    const auto& f = fixture();

    SECTION("missing triad file exits 2") {
        nlohmann::json cfg = nlohmann::json::parse(slurp(f.config));
        cfg["paths"]["triads"] = (f.dir / "nope.tsv").string();
        const auto bad = f.dir / "config_missing.json";
        std::ofstream(bad) << cfg.dump();
        const auto r = run_cli("index --config " + bad.string());
        CHECK(r.exit_code == 2);
    }
    SECTION("malformed triad file exits 3 and names the line") {
        std::ofstream(f.dir / "bad_triads.tsv") << "img1\tpress\t3\nimg2 no tabs here\n";
        nlohmann::json cfg = nlohmann::json::parse(slurp(f.config));
        cfg["paths"]["triads"] = (f.dir / "bad_triads.tsv").string();
        const auto bad = f.dir / "config_badtriads.json";
        std::ofstream(bad) << cfg.dump();
        const auto r = run_cli("index --config " + bad.string());
        CHECK(r.exit_code == 3);
        CHECK(r.err.find("line 2") != std::string::npos);
    }
    SECTION("missing --config is a usage error") {
        const auto r = run_cli("index");
        CHECK(r.exit_code == 64);
    }
    SECTION("unknown method name exits 64") {
        const auto r = run_cli("topic --config " + f.config.string() + " --method sorcery img1");
        CHECK(r.exit_code == 64);
    }
}

TEST_CASE("topic emits ranked words as JSON", "[cli]") {
    const auto& f = fixture();

    SECTION("tfidf over one query") {
        const auto r =
            run_cli("topic --config " + f.config.string() + " --method tfidf img1 img2");
        INFO(r.err);
        REQUIRE(r.exit_code == 0);
        const auto j = nlohmann::json::parse(r.out);
        CHECK(j["method"] == "tfidf");
        CHECK(j["n_queries"] == 2);
        REQUIRE(j["words"].is_array());
        CHECK(j["words"].size() == 3);  // top_n from config
        for (const auto& w : j["words"]) {
            CHECK(w.contains("word"));
            CHECK(w.contains("score"));
        }
    }
    SECTION("walk finds the press cluster") {
        const auto r = run_cli("topic --config " + f.config.string() + " --method walk img1 img2");
        REQUIRE(r.exit_code == 0);
        const auto j = nlohmann::json::parse(r.out);
        std::set<std::string> words;
        for (const auto& w : j["words"]) words.insert(w["word"].get<std::string>());
        CHECK(words.count("press") == 1);
    }
    SECTION("mapped output stays inside the dictionary") {
        const auto r = run_cli("topic --config " + f.config.string() + " --map " +
                               (f.dir / "dict.txt").string() + " img1 img2");
        REQUIRE(r.exit_code == 0);
        const auto j = nlohmann::json::parse(r.out);
        CHECK(j["method"] == "walk+map_crf");
        REQUIRE(j.contains("mapping"));
        for (const auto& w : j["words"]) {
            const auto word = w["word"].get<std::string>();
            CHECK((word == "print" || word == "flow"));
        }
        for (const auto& e : j["mapping"]) {
            CHECK(e.contains("source"));
            CHECK(e.contains("target"));
            CHECK(e.contains("unary"));
            CHECK(e.contains("kept"));
        }
    }
    SECTION("unknown image id exits 4") {
        const auto r = run_cli("topic --config " + f.config.string() + " img404");
        CHECK(r.exit_code == 4);
    }
    SECTION("no embeddable candidates exits 5") {
        std::ofstream(f.dir / "embeddings_disjoint.txt") << "2 3\nxx 1 0 0\nyy 0 1 0\n";
        nlohmann::json cfg = nlohmann::json::parse(slurp(f.config));
        cfg["paths"]["embeddings"] = (f.dir / "embeddings_disjoint.txt").string();
        const auto alt = f.dir / "config_disjoint.json";
        std::ofstream(alt) << cfg.dump();
        const auto r = run_cli("topic --config " + alt.string() + " --method walk img1");
        CHECK(r.exit_code == 5);
    }
}

TEST_CASE("evaluate writes the curve CSV", "[cli]") {
    const auto& f = fixture();
    const auto csv_path = f.dir / "curves.csv";
    const auto r = run_cli("evaluate --config " + f.config.string() +
                           " --modes original,best_first --methods tfidf,walk --out " +
                           csv_path.string());
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    const auto csv = slurp(csv_path);
    std::istringstream in(csv);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "mode,method,n_images,mean_jaccard");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 2 * 2 * 2);  // modes x methods x n in {1, 2}
    CHECK(r.err.find("mode=original method=tfidf") != std::string::npos);

    SECTION("a rerun is byte identical") {
        const auto csv2_path = f.dir / "curves2.csv";
        const auto r2 = run_cli("evaluate --config " + f.config.string() +
                                " --modes original,best_first --methods tfidf,walk --out " +
                                csv2_path.string());
        REQUIRE(r2.exit_code == 0);
        CHECK(slurp(csv2_path) == csv);
    }
    SECTION("unknown mode exits 64") {
        const auto r3 = run_cli("evaluate --config " + f.config.string() + " --modes diagonal");
        CHECK(r3.exit_code == 64);
    }
}
