#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "qcg/corpus.hpp"
#include "qcg/errors.hpp"

using namespace qcg;
namespace fs = std::filesystem;

namespace {

// A document of n distinct tokens "t0 t1 t2 ...".
Document doc_of(int n, const std::string& id = "doc") {
    Document d;
    d.doc_id = id;
    for (int i = 0; i < n; ++i) {
        if (i) d.text += ' ';
        d.text += "t" + std::to_string(i);
    }
    return d;
}

fs::path temp_dir() {
    auto dir = fs::temp_directory_path() / ("qcg_corpus_test_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("a document that fits one window makes exactly one chunk") {
    auto chunks = chunk_document(doc_of(1200), ChunkingConfig{1200, 100});
    REQUIRE(chunks.size() == 1);
    CHECK(chunks[0].chunk_id == "doc-chunk-0");
    CHECK(chunks[0].token_count == 1200);
}

TEST_CASE("2400 tokens under 1200/100 chunk at offsets 0, 1100, 2200") {
    WordPunctTokenizer tok;
    Document d = doc_of(2400);
    auto chunks = chunk_document(d, ChunkingConfig{1200, 100});
    REQUIRE(chunks.size() == 3);
    // offsets computed by hand from stride = 1200 - 100 = 1100
    CHECK(tok.tokenize(chunks[0].text).front() == "t0");
    CHECK(tok.tokenize(chunks[1].text).front() == "t1100");
    CHECK(tok.tokenize(chunks[2].text).front() == "t2200");
    CHECK(chunks[0].token_count == 1200);
    CHECK(chunks[1].token_count == 1200);
    CHECK(chunks[2].token_count == 200);
    CHECK(chunks[2].chunk_id == "doc-chunk-2");
}

TEST_CASE("512 tokens under 512/64 is one full chunk") {
    auto chunks = chunk_document(doc_of(512), ChunkingConfig{512, 64});
    REQUIRE(chunks.size() == 1);
    CHECK(chunks[0].token_count == 512);
}

TEST_CASE("overlap >= chunk_size is rejected") {
    CHECK_THROWS_AS(chunk_document(doc_of(10), ChunkingConfig{100, 100}), ConfigError);
    CHECK_THROWS_AS(chunk_document(doc_of(10), ChunkingConfig{100, 150}), ConfigError);
    CHECK_THROWS_AS(chunk_document(doc_of(10), ChunkingConfig{100, -1}), ConfigError);
}

TEST_CASE("reconstruction and stride laws hold for random documents") {
    WordPunctTokenizer tok;
    std::mt19937 rng(11);
    std::uniform_int_distribution<int> n_dist(1, 700);
    std::uniform_int_distribution<int> size_dist(5, 120);
    for (int round = 0; round < 100; ++round) {
        int size = size_dist(rng);
        int overlap = std::uniform_int_distribution<int>(0, size - 1)(rng);
        Document d = doc_of(n_dist(rng));
        auto doc_tokens = tok.tokenize(d.text);
        auto chunks = chunk_document(d, ChunkingConfig{size, overlap});

        // reconstruction: drop `overlap` leading tokens from every non-first
        // chunk and the concatenation equals the document token stream
        std::vector<std::string> rebuilt;
        for (std::size_t i = 0; i < chunks.size(); ++i) {
            auto chunk_tokens = tok.tokenize(chunks[i].text);
            std::size_t skip = i == 0 ? 0 : static_cast<std::size_t>(overlap);
            REQUIRE(chunk_tokens.size() >= skip);
            rebuilt.insert(rebuilt.end(), chunk_tokens.begin() + skip, chunk_tokens.end());
        }
        CHECK(rebuilt == doc_tokens);

        // stride law: adjacent starts differ by size - overlap; every chunk
        // except the last is full
        for (std::size_t i = 0; i + 1 < chunks.size(); ++i)
            CHECK(chunks[i].token_count == size);
        // ordinals contiguous from 0
        for (std::size_t i = 0; i < chunks.size(); ++i)
            CHECK(chunks[i].chunk_id == "doc-chunk-" + std::to_string(i));
    }
}

TEST_CASE("identical inputs give identical chunk ids and boundaries") {
    Document d = doc_of(573);
    auto a = chunk_document(d, ChunkingConfig{64, 16});
    auto b = chunk_document(d, ChunkingConfig{64, 16});
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].chunk_id == b[i].chunk_id);
        CHECK(a[i].text == b[i].text);
    }
}

TEST_CASE("jsonl corpus loader") {
    auto dir = temp_dir();
    auto file = dir / "corpus.jsonl";
    {
        std::ofstream out(file);
        out << R"({"doc_id": "a", "text": "alpha beta", "metadata": {"title": "A"}})" << "\n";
        out << R"({"doc_id": "b", "text": "gamma delta"})" << "\n";
    }
    auto docs = load_corpus_jsonl(file);
    REQUIRE(docs.size() == 2);
    CHECK(docs[0].doc_id == "a");
    CHECK(docs[0].metadata.at("title") == "A");
    CHECK(docs[1].text == "gamma delta");

    SUBCASE("duplicate ids are rejected with the line number") {
        std::ofstream out(file, std::ios::app);
        out << R"({"doc_id": "a", "text": "again"})" << "\n";
        out.close();
        CHECK_THROWS_WITH_AS(load_corpus_jsonl(file),
                             doctest::Contains("line 3"), DataError);
    }
    SUBCASE("missing fields are rejected with the line number") {
        std::ofstream out(file, std::ios::app);
        out << R"({"doc_id": "c"})" << "\n";
        out.close();
        CHECK_THROWS_WITH_AS(load_corpus_jsonl(file), doctest::Contains("line 3"), DataError);
    }
    fs::remove_all(dir);
}

TEST_CASE("directory corpus loader uses filename stems as doc ids") {
    auto dir = temp_dir();
    auto sub = dir / "docs";
    fs::create_directories(sub);
    std::ofstream(sub / "one.txt") << "first document";
    std::ofstream(sub / "two.txt") << "second document";
    auto docs = load_corpus_dir(sub);
    REQUIRE(docs.size() == 2);
    CHECK(docs[0].doc_id == "one");
    CHECK(docs[1].doc_id == "two");
    fs::remove_all(dir);
}
