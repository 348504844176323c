#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qcg/corpus.hpp"
#include "qcg/embedding.hpp"
#include "qcg/providers.hpp"

namespace qcg {

// One generated query-answer pair, bound to the chunk it was generated from.
struct QAPair {
    std::string chunk_id;
    int gen_index = 0;
    std::string query;
    std::string answer;
};

// A pair with its fidelity to the source chunk and the embedding of the
// concatenated query-answer text. The same embedding used for fidelity
// scoring becomes the graph node embedding.
struct ScoredPair {
    QAPair pair;
    double fidelity = 0.0;
    Embedding embedding;
};

struct ExpansionConfig {
    int pairs_per_chunk = 20;  // M
    double alpha = 0.8;        // retained fraction, in (0, 1]
    bool strict = false;       // retry generation once when fewer than M pairs parse

    void validate() const;
};

// Query-answer concatenation: single space separator, no dangling space when
// either side is empty.
std::string concat_qa(std::string_view query, std::string_view answer);

// ceil(alpha * n) computed with a small epsilon guard so grid values like
// 0.8 * 20 land on 16, not 17.
std::size_t top_alpha_count(double alpha, std::size_t n);

struct Doc2QueryParse {
    std::vector<QAPair> pairs;
    int dropped = 0;  // malformed or duplicate items skipped
};

// Tolerant parse of a Doc2Query response: strips code fences and surrounding
// prose, parses the JSON array of {index, query, answer}, and falls back to
// scanning for individual objects when the array as a whole is broken.
// Items without a usable query are dropped and counted. Throws ParseError
// when nothing usable is found.
Doc2QueryParse parse_doc2query_response(std::string_view text, const std::string& chunk_id);

struct ExpansionResult {
    std::vector<QAPair> pairs;
    int parse_warnings = 0;
    std::string raw_response;
    int generate_calls = 0;
};

// Renders the Doc2Query prompt for the chunk, calls the generator, and
// parses. An unparseable response gets one regeneration attempt before
// ExpansionParseError. Returns at most cfg.pairs_per_chunk pairs.
ExpansionResult generate_pairs(const Chunk& chunk, const ExpansionConfig& cfg, Generator& gen,
                               const GenerationParams& params = {});

// Embeds each pair's query (+) answer text plus the chunk, and sets
// fidelity = cosine(pair, chunk). Pass chunk_embedding to reuse an already
// computed chunk vector. Order preserved.
std::vector<ScoredPair> score_pairs(std::span<const QAPair> pairs, const Chunk& chunk,
                                    Embedder& embedder,
                                    const Embedding* chunk_embedding = nullptr);

// Keeps the top ceil(alpha * |scored|) pairs by fidelity (ties: lower
// gen_index first) and returns them re-sorted by gen_index.
std::vector<ScoredPair> filter_top_alpha(std::vector<ScoredPair> scored, double alpha);

// ---------------------------------------------------------------------------
// Expansion cache: append-only JSONL log keyed by (chunk_id, text hash, M).
// Lets index rebuilds and sweeps skip regeneration entirely.

struct CachedExpansion {
    std::string chunk_id;
    std::string text_hash;
    int pairs_per_chunk = 0;
    std::string raw_response;
    std::vector<QAPair> pairs;
    int parse_warnings = 0;
    std::string embedder_name;  // embedder the fidelities were computed with
    std::size_t embedder_dim = 0;
    std::vector<double> fidelities;  // parallel to pairs
    double alpha = 0.0;              // alpha the retained flags correspond to
    std::vector<bool> retained;      // parallel to pairs
};

class ExpansionCache {
public:
    explicit ExpansionCache(std::filesystem::path file);

    static std::string chunk_text_hash(const Chunk& chunk);

    const CachedExpansion* lookup(const Chunk& chunk, int pairs_per_chunk) const;
    void store(CachedExpansion record);

    std::size_t size() const { return records_.size(); }
    const std::filesystem::path& path() const { return file_; }

private:
    std::filesystem::path file_;
    std::map<std::string, CachedExpansion> records_;
};

}  // namespace qcg
