#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qcg {

// Token counts drive chunk boundaries and the generation context cap, so the
// tokenizer is injectable: swap in a provider-matched one when token parity
// with a hosted model matters. The built-in splitter is fully deterministic
// and needs no model files.
class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual std::vector<std::string> tokenize(std::string_view text) const = 0;
    virtual std::string name() const = 0;

    std::size_t count(std::string_view text) const { return tokenize(text).size(); }
};

// Splits into maximal word runs and single punctuation characters.
// A word char is an ASCII alnum, '_', or any byte >= 0x80 (keeps UTF-8
// sequences intact); whitespace separates; everything else is a one-char
// token. "Hello, world" -> ["Hello", ",", "world"].
class WordPunctTokenizer final : public Tokenizer {
public:
    std::vector<std::string> tokenize(std::string_view text) const override;
    std::string name() const override { return "wordpunct"; }
};

// Joins tokens with single spaces. join_tokens(tokenize(t)) is a fixed point
// of tokenize: re-tokenizing it yields the same token stream.
std::string join_tokens(std::span<const std::string> tokens);

const Tokenizer& default_tokenizer();

}  // namespace qcg
