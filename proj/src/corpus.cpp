#include "qcg/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "qcg/errors.hpp"

namespace qcg {

using nlohmann::json;

void ChunkingConfig::validate() const {
    if (chunk_size < 1) throw ConfigError("chunk_size must be >= 1");
    if (overlap < 0 || overlap >= chunk_size)
        throw ConfigError("overlap must satisfy 0 <= overlap < chunk_size (got overlap=" +
                          std::to_string(overlap) + ", chunk_size=" + std::to_string(chunk_size) +
                          ")");
}

std::string make_chunk_id(const std::string& doc_id, int ordinal) {
    return doc_id + "-chunk-" + std::to_string(ordinal);
}

std::vector<Chunk> chunk_document(const Document& doc, const ChunkingConfig& cfg,
                                  const Tokenizer& tokenizer) {
    cfg.validate();
    if (doc.doc_id.empty()) throw DataError("document with empty doc_id");

    const std::vector<std::string> tokens = tokenizer.tokenize(doc.text);
    std::vector<Chunk> chunks;
    if (tokens.empty()) return chunks;

    const std::size_t size = static_cast<std::size_t>(cfg.chunk_size);
    const std::size_t stride = size - static_cast<std::size_t>(cfg.overlap);
    std::size_t start = 0;
    int ordinal = 0;
    for (;;) {
        std::size_t end = std::min(start + size, tokens.size());
        std::span<const std::string> window(tokens.data() + start, end - start);
        chunks.push_back(Chunk{make_chunk_id(doc.doc_id, ordinal), doc.doc_id,
                               join_tokens(window), static_cast<int>(window.size())});
        ++ordinal;
        if (end >= tokens.size()) break;  // previous window reached the end
        start += stride;
    }
    return chunks;
}

std::vector<Chunk> chunk_corpus(const std::vector<Document>& docs, const ChunkingConfig& cfg,
                                const Tokenizer& tokenizer) {
    std::vector<Chunk> all;
    for (const auto& doc : docs) {
        auto chunks = chunk_document(doc, cfg, tokenizer);
        all.insert(all.end(), std::make_move_iterator(chunks.begin()),
                   std::make_move_iterator(chunks.end()));
    }
    return all;
}

namespace {

Document parse_document_record(const json& j, std::size_t line_no) {
    auto require_string = [&](const char* field) -> std::string {
        if (!j.contains(field) || !j.at(field).is_string())
            throw DataError("corpus line " + std::to_string(line_no) + ": missing string field '" +
                            field + "'");
        return j.at(field).get<std::string>();
    };
    Document doc;
    doc.doc_id = require_string("doc_id");
    doc.text = require_string("text");
    if (doc.doc_id.empty())
        throw DataError("corpus line " + std::to_string(line_no) + ": empty doc_id");
    if (doc.text.empty())
        throw DataError("corpus line " + std::to_string(line_no) + ": empty text");
    if (j.contains("metadata")) {
        const json& meta = j.at("metadata");
        if (!meta.is_object())
            throw DataError("corpus line " + std::to_string(line_no) + ": metadata must be an object");
        for (const auto& [key, value] : meta.items()) {
            doc.metadata[key] = value.is_string() ? value.get<std::string>() : value.dump();
        }
    }
    return doc;
}

}  // namespace

std::vector<Document> load_corpus_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open corpus file: " + path.string());
    std::vector<Document> docs;
    std::set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw DataError("corpus line " + std::to_string(line_no) + ": invalid JSON (" +
                            e.what() + ")");
        }
        Document doc = parse_document_record(j, line_no);
        if (!seen_ids.insert(doc.doc_id).second)
            throw DataError("corpus line " + std::to_string(line_no) + ": duplicate doc_id '" +
                            doc.doc_id + "'");
        docs.push_back(std::move(doc));
    }
    return docs;
}

std::vector<Document> load_corpus_dir(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw DataError("corpus directory does not exist: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<Document> docs;
    std::set<std::string> seen_ids;
    for (const auto& file : files) {
        std::ifstream in(file, std::ios::binary);
        if (!in) throw DataError("cannot open corpus file: " + file.string());
        std::ostringstream buf;
        buf << in.rdbuf();
        Document doc;
        doc.doc_id = file.stem().string();
        doc.text = buf.str();
        if (doc.text.empty()) throw DataError("empty corpus file: " + file.string());
        if (!seen_ids.insert(doc.doc_id).second)
            throw DataError("duplicate doc_id from filename stem: '" + doc.doc_id + "'");
        docs.push_back(std::move(doc));
    }
    return docs;
}

std::vector<Document> load_corpus(const std::filesystem::path& path) {
    if (std::filesystem::is_directory(path)) return load_corpus_dir(path);
    return load_corpus_jsonl(path);
}

}  // namespace qcg
