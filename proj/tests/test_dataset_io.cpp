#include <fstream>

#include <catch2/catch_amalgamated.hpp>

#include "pesa/dataset_io.hpp"
#include "support/generators.hpp"

using namespace pesa;

namespace {

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

}  // namespace

TEST_CASE("tsv corpora load with stable derived ids") {
    testgen::TempDir dir;
    std::string path = dir.file("corpus.tsv");
    write_file(path,
               "prompt\tessay\n"
               "Topic A\tEssay A line one.\\n\\nParagraph two.\n"
               "Topic B\tEssay B.\n"
               "Topic C\tEssay C.\n");
    auto corpus = load_corpus(path, Split::Train);
    REQUIRE(corpus.pairs.size() == 3);
    CHECK(corpus.pairs[0].first.text == "Topic A");
    CHECK(corpus.pairs[0].second.paragraphs.size() == 2);

    auto reloaded = load_corpus(path, Split::Train);
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(corpus.pairs[i].first.id == reloaded.pairs[i].first.id);
    CHECK(corpus.content_hash == reloaded.content_hash);
}

TEST_CASE("an empty essay field fails loudly") {
    testgen::TempDir dir;
    std::string path = dir.file("corpus.tsv");
    write_file(path, "prompt\tessay\nTopic A\t\n");
    try {
        load_corpus(path, Split::Train);
        FAIL("expected EmptyFieldError");
    } catch (const EmptyFieldError& e) {
        CHECK(e.field == "essay");
        CHECK(e.line == 2);
    }
}

TEST_CASE("canonical jsonl corpora load and keep explicit ids") {
    testgen::TempDir dir;
    std::string path = dir.file("corpus.jsonl");
    write_file(path,
               R"({"id":"x1","prompt":"Topic A","essay":"Essay A."})"
               "\n"
               R"({"prompt":"Topic B","essay":"Essay B."})"
               "\n");
    auto corpus = load_corpus(path, Split::Valid);
    REQUIRE(corpus.pairs.size() == 2);
    CHECK(corpus.pairs[0].first.id == "x1");
    CHECK_FALSE(corpus.pairs[1].first.id.empty());
}

TEST_CASE("jsonl rows with missing fields are parse errors with line numbers") {
    testgen::TempDir dir;
    std::string path = dir.file("bad.jsonl");
    write_file(path, R"({"prompt":"only prompt"})" "\n");
    try {
        load_corpus(path, Split::Test);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 1") != std::string::npos);
    }
}

TEST_CASE("duplicate pair ids are rejected") {
    testgen::TempDir dir;
    std::string path = dir.file("dup.tsv");
    write_file(path,
               "prompt\tessay\n"
               "Same topic\tSame essay.\n"
               "Same topic\tSame essay.\n");
    CHECK_THROWS_AS(load_corpus(path, Split::Train), ParseError);
}

TEST_CASE("missing corpus files raise IoError") {
    CHECK_THROWS_AS(load_corpus("/nonexistent/corpus.tsv", Split::Train), IoError);
}

TEST_CASE("empty files load as empty corpora") {
    testgen::TempDir dir;
    std::string path = dir.file("empty.tsv");
    write_file(path, "");
    auto corpus = load_corpus(path, Split::Test);
    CHECK(corpus.pairs.empty());
    auto stats = corpus_stats(corpus);
    CHECK(stats.pair_count == 0);
    CHECK(stats.mean_paragraphs == 0.0);
    CHECK(stats.max_paragraphs == 0);
}

TEST_CASE("save_corpus emits the canonical format that reloads identically") {
    testgen::TempDir dir;
    std::string tsv = dir.file("corpus.tsv");
    write_file(tsv,
               "prompt\tessay\n"
               "Topic A\tOne.\\n\\nTwo.\n");
    auto corpus = load_corpus(tsv, Split::Train);
    std::string jsonl = dir.file("corpus.jsonl");
    save_corpus(corpus, jsonl);
    auto reloaded = load_corpus(jsonl, Split::Train);
    REQUIRE(reloaded.pairs.size() == 1);
    CHECK(reloaded.pairs[0].first.id == corpus.pairs[0].first.id);
    CHECK(reloaded.pairs[0].second == corpus.pairs[0].second);
}

TEST_CASE("corpus_stats reports paragraph spread") {
    testgen::TempDir dir;
    std::string path = dir.file("corpus.tsv");
    write_file(path,
               "prompt\tessay\n"
               "Topic A\tP1.\\n\\nP2.\\n\\nP3.\n"
               "Topic B\tP1.\\n\\nP2.\\n\\nP3.\\n\\nP4.\\n\\nP5.\n");
    auto stats = corpus_stats(load_corpus(path, Split::Train));
    CHECK(stats.pair_count == 2);
    CHECK(stats.mean_paragraphs == Catch::Approx(4.0));
    CHECK(stats.min_paragraphs == 3);
    CHECK(stats.max_paragraphs == 5);
    CHECK(stats.mean_prompt_chars == Catch::Approx(7.0));
}

TEST_CASE("split size assertions pass exactly and fail loudly") {
    testgen::TempDir dir;
    std::string path = dir.file("corpus.tsv");
    write_file(path,
               "prompt\tessay\n"
               "Topic A\tEssay A.\n"
               "Topic B\tEssay B.\n");
    auto corpus = load_corpus(path, Split::Valid);
    CHECK_NOTHROW(assert_split_size(corpus, 2));
    try {
        assert_split_size(corpus, 3);
        FAIL("expected SplitSizeMismatch");
    } catch (const SplitSizeMismatch& e) {
        CHECK(e.expected == 3);
        CHECK(e.actual == 2);
    }
}

TEST_CASE("split names parse both ways") {
    CHECK(split_from_name("train") == Split::Train);
    CHECK(split_from_name("validation") == Split::Valid);
    CHECK(split_name(Split::Test) == std::string("test"));
    CHECK_THROWS_AS(split_from_name("dev"), ConfigError);
}
