#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "qcg/tokenizer.hpp"

namespace qcg {

struct Document {
    std::string doc_id;
    std::string text;
    std::map<std::string, std::string> metadata;  // title, source, published_at, ...
};

struct ChunkingConfig {
    int chunk_size = 1200;  // tokens per window
    int overlap = 100;      // tokens shared by adjacent windows

    // Throws ConfigError unless 0 <= overlap < chunk_size and chunk_size >= 1.
    void validate() const;
};

struct Chunk {
    std::string chunk_id;  // "{doc_id}-chunk-{ordinal}"
    std::string doc_id;
    std::string text;
    int token_count = 0;
};

std::string make_chunk_id(const std::string& doc_id, int ordinal);

// Sliding window of cfg.chunk_size tokens with stride chunk_size - overlap.
// A trailing window that would add no new tokens is not emitted; the final
// chunk may be short. Chunk text is the window's tokens joined with single
// spaces, so re-tokenizing a chunk reproduces its window exactly.
std::vector<Chunk> chunk_document(const Document& doc, const ChunkingConfig& cfg,
                                  const Tokenizer& tokenizer = default_tokenizer());

std::vector<Chunk> chunk_corpus(const std::vector<Document>& docs, const ChunkingConfig& cfg,
                                const Tokenizer& tokenizer = default_tokenizer());

// One JSON document per line: {"doc_id": ..., "text": ..., "metadata": {...}?}.
// Throws DataError naming the offending line.
std::vector<Document> load_corpus_jsonl(const std::filesystem::path& path);

// Every regular file in the directory becomes one document; the filename stem
// is the doc_id. Deterministic (sorted by filename).
std::vector<Document> load_corpus_dir(const std::filesystem::path& dir);

// Dispatches on whether path is a directory.
std::vector<Document> load_corpus(const std::filesystem::path& path);

}  // namespace qcg
