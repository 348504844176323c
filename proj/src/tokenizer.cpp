#include "qcg/tokenizer.hpp"

#include <cctype>

namespace qcg {

namespace {

inline bool is_word_byte(unsigned char c) {
    return std::isalnum(c) != 0 || c == '_' || c >= 0x80;
}

inline bool is_space_byte(unsigned char c) { return std::isspace(c) != 0; }

}  // namespace

std::vector<std::string> WordPunctTokenizer::tokenize(std::string_view text) const {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        unsigned char c = static_cast<unsigned char>(text[i]);
        if (is_space_byte(c)) {
            ++i;
            continue;
        }
        if (is_word_byte(c)) {
            std::size_t start = i;
            while (i < n && is_word_byte(static_cast<unsigned char>(text[i]))) ++i;
            tokens.emplace_back(text.substr(start, i - start));
        } else {
            tokens.emplace_back(1, text[i]);
            ++i;
        }
    }
    return tokens;
}

std::string join_tokens(std::span<const std::string> tokens) {
    std::string out;
    std::size_t total = tokens.empty() ? 0 : tokens.size() - 1;
    for (const auto& t : tokens) total += t.size();
    out.reserve(total);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

const Tokenizer& default_tokenizer() {
    static const WordPunctTokenizer instance;
    return instance;
}

}  // namespace qcg
