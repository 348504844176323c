#include <doctest.h>

#include <random>

#include "qcg/tokenizer.hpp"

using namespace qcg;

TEST_CASE("empty input yields no tokens") {
    WordPunctTokenizer tok;
    CHECK(tok.tokenize("").empty());
    CHECK(tok.tokenize(" \t\n").empty());
}

TEST_CASE("word and punctuation splitting matches the hand fixture") {
    WordPunctTokenizer tok;
    CHECK(tok.tokenize("Hello, world") == std::vector<std::string>{"Hello", ",", "world"});
    CHECK(tok.tokenize("don't stop") == std::vector<std::string>{"don", "'", "t", "stop"});
    CHECK(tok.tokenize("a_b c-d") == std::vector<std::string>{"a_b", "c", "-", "d"});
    CHECK(tok.tokenize("x=1+2") == std::vector<std::string>{"x", "=", "1", "+", "2"});
}

TEST_CASE("tokenization is deterministic") {
    WordPunctTokenizer tok;
    std::string text = "The Quick, brown fox -- jumps! over 42 lazy_dogs.";
    CHECK(tok.tokenize(text) == tok.tokenize(text));
}

TEST_CASE("join-then-retokenize is a fixed point") {
    WordPunctTokenizer tok;
    std::mt19937 rng(7);
    std::uniform_int_distribution<int> len(0, 80);
    // printable ASCII plus a couple of UTF-8 sequences
    const std::string alphabet =
        " \t\naabbccddee,.!?-_()[]{}0123456789\"'\xc3\xa9\xe2\x82\xac";
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    for (int round = 0; round < 200; ++round) {
        std::string text;
        int n = len(rng);
        for (int i = 0; i < n; ++i) text.push_back(alphabet[pick(rng)]);
        auto tokens = tok.tokenize(text);
        std::string joined = join_tokens(tokens);
        CHECK(tok.tokenize(joined) == tokens);
        // joining again changes nothing: the normal form is stable
        CHECK(join_tokens(tok.tokenize(joined)) == joined);
    }
}
