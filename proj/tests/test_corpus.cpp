#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "narrisk/corpus.hpp"
#include "narrisk/error.hpp"
#include "narrisk/textgrid.hpp"

using namespace narrisk;
namespace fs = std::filesystem;

namespace {

std::string line(const std::string& id, const std::string& split, int ri, const std::string& story = "cat",
                 const std::string& language = "afrikaans") {
    std::ostringstream s;
    s << R"({"child_id":")" << id << R"(","language":")" << language << R"(","story":")" << story
      << R"(","split":")" << split << R"(","ri":)" << ri << R"(,"utterances":[[0,1.5,"die kat klim"],[2,3,"val"]]})"
      << '\n';
    return s.str();
}

bool mentions(const ValidationError& e, const std::string& needle) {
    for (const auto& v : e.violations()) {
        if (v.find(needle) != std::string::npos) return true;
    }
    return false;
}

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / ("narrisk_corpus_" + std::to_string(::getpid()))) {
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("manifest with three valid records") {
    const std::string m = line("c1", "train", 1) + line("c2", "train", 0) + line("c3", "dev", 0, "dog");
    const auto corpus = parse_manifest(m, ".");
    REQUIRE(corpus.records.size() == 3);
    CHECK(corpus.records[0].child_id == "c1");
    CHECK(corpus.records[2].story == Story::dog);
    CHECK(corpus.records[2].split == Split::dev);
    CHECK(corpus.records[0].tokens().tokens.size() == 4);
    CHECK(validate(corpus).empty());
}

TEST_CASE("a child in two splits is rejected by name") {
    const std::string m = line("c1", "train", 1) + line("kid-42", "train", 0) + line("kid-42", "dev", 0, "dog");
    try {
        parse_manifest(m, ".");
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(mentions(e, "kid-42"));
    }
}

TEST_CASE("rejected until the offending records are removed") {
    std::string clean;
    for (int k = 0; k < 12; ++k) clean += line("c" + std::to_string(k), k % 3 == 0 ? "dev" : "train", k % 2);
    for (int leak = 0; leak < 12; ++leak) {
        const std::string other = (leak % 3 == 0) ? "test" : "dev";
        const std::string leaked = line("c" + std::to_string(leak), other, 0, "dog");
        CHECK_THROWS_AS(parse_manifest(clean + leaked, "."), ValidationError);
    }
    CHECK(parse_manifest(clean, ".").records.size() == 12);
}

TEST_CASE("200/38/28 partition loads") {
    std::string m;
    for (int k = 0; k < 200; ++k) m += line("tr" + std::to_string(k), "train", k % 3 == 0);
    for (int k = 0; k < 38; ++k) m += line("dv" + std::to_string(k), "dev", k % 3 == 0);
    for (int k = 0; k < 28; ++k) m += line("te" + std::to_string(k), "test", k % 3 == 0);
    const auto corpus = parse_manifest(m, ".");
    CHECK(corpus.select(Language::afrikaans, Split::train).size() == 200);
    CHECK(corpus.select(Language::afrikaans, Split::dev).size() == 38);
    CHECK(corpus.select(Language::afrikaans, Split::test).size() == 28);
    CHECK(corpus.select(Language::isixhosa).empty());
}

TEST_CASE("all problems are reported together") {
    const std::string m = line("c1", "train", 1) + line("c1", "train", 0) +
                          R"({"child_id":"c9","language":"zulu","story":"cow","split":"train"})" "\n" +
                          "not json\n";
    try {
        parse_manifest(m, ".");
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(mentions(e, "duplicate"));
        CHECK(mentions(e, "zulu"));
        CHECK(mentions(e, "cow"));
        CHECK(mentions(e, "line 4"));
    }
}

TEST_CASE("unlabeled records are accepted") {
    const std::string m = R"({"child_id":"u1","language":"isixhosa","story":"dog","split":"test","utterances":[[0,1,"molo"]]})";
    const auto corpus = parse_manifest(m, ".");
    REQUIRE(corpus.records.size() == 1);
    CHECK_FALSE(corpus.records[0].labeled());
}

TEST_CASE("overlapping utterances are a violation") {
    const std::string m =
        R"({"child_id":"o1","language":"afrikaans","story":"cat","split":"train","ri":0,"utterances":[[0,2,"a"],[1,3,"b"]]})";
    CHECK_THROWS_AS(parse_manifest(m, "."), ValidationError);
}

TEST_CASE("load_corpus resolves TextGrid paths and round-trips through write_manifest") {
    TempDir dir;
    const std::vector<Utterance> u{{"die kat", 0, 1.2}, {"klim op", 1.5, 2.75}};
    {
        std::ofstream(dir.path / "c1.TextGrid") << serialize_textgrid(u, TextGridForm::long_form);
        std::ofstream(dir.path / "manifest.jsonl")
            << R"({"child_id":"c1","language":"afrikaans","story":"cat","split":"train","ri":1,"textgrid_path":"c1.TextGrid"})"
            << "\n";
    }
    const auto corpus = load_corpus(dir.path / "manifest.jsonl");
    REQUIRE(corpus.records.size() == 1);
    CHECK(corpus.records[0].utterances == u);

    const auto again = parse_manifest(write_manifest(corpus), dir.path);
    CHECK(again.records[0].utterances == u);
    CHECK(again.records[0].ri == 1);

    CHECK_THROWS_AS(load_corpus(dir.path / "absent.jsonl"), IoError);
    std::ofstream(dir.path / "bad.jsonl")
        << R"({"child_id":"c2","language":"afrikaans","story":"cat","split":"train","textgrid_path":"nope.TextGrid"})"
        << "\n";
    CHECK_THROWS_AS(load_corpus(dir.path / "bad.jsonl"), ValidationError);
}
