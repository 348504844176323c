#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qcg/dataset.hpp"
#include "qcg/eval.hpp"
#include "qcg/run_config.hpp"

namespace qcg {

struct BuildReport {
    int documents = 0;
    int chunks = 0;
    int pairs_generated = 0;
    int pairs_retained = 0;
    int parse_warnings = 0;
    int cache_hits = 0;
    int cache_misses = 0;
    std::size_t intra_edges = 0;
    std::size_t query_nodes = 0;
    std::uint64_t generate_calls = 0;
    std::uint64_t embed_texts = 0;

    nlohmann::json to_json() const;
};

// Scoring artifacts for one chunk: every parsed pair with its fidelity and
// embedding. Filtering at any alpha is a pure function of this.
struct ExpandedChunk {
    Chunk chunk;
    Embedding chunk_embedding;
    std::vector<ScoredPair> scored;
    int parse_warnings = 0;
};

struct ExpandedCorpus {
    std::vector<ExpandedChunk> chunks;
    ChunkingConfig chunking;
    int pairs_per_chunk = 0;
    std::string embedder_name;
    std::size_t embedding_dim = 0;
};

// Chunks the documents, generates (or loads from cache) query-answer pairs
// per chunk, and scores them. Generation may be skipped entirely when every
// chunk hits the cache; otherwise a generator is required.
ExpandedCorpus expand_corpus(const std::vector<Document>& docs, const ChunkingConfig& chunking,
                             const ExpansionConfig& expansion, Embedder& embedder,
                             Generator* generator, ExpansionCache* cache, int threads,
                             BuildReport* report = nullptr);

// Filters each chunk's pairs at alpha and assembles the graph, reusing the
// corpus's chunk and pair embeddings (no provider calls).
QCGraph assemble_graph(const ExpandedCorpus& corpus, double alpha, const GraphConfig& graph_cfg,
                       Embedder& embedder, int threads, BuildReport* report = nullptr);

// Full build: corpus -> expansion -> filter -> graph.
QCGraph build_pipeline(const std::vector<Document>& docs, const RunConfig& config,
                       Embedder& embedder, Generator* generator, ExpansionCache* cache,
                       BuildReport* report = nullptr);

// ---------------------------------------------------------------------------
// Hyperparameter sweeps

enum class SweepAxis { alpha, k, n, h, gamma, embedder, chunking };

SweepAxis sweep_axis_from_string(const std::string& name);
std::string to_string(SweepAxis axis);

struct SweepRow {
    std::string value;
    Report report;
};

struct SweepResult {
    SweepAxis axis = SweepAxis::h;
    std::vector<SweepRow> rows;

    nlohmann::json to_json() const;
};

struct SweepOptions {
    EvalOptions eval;
    // Values outside the candidate grids (alpha {0.2..1.0}, k 1..5,
    // h {0,1,2}, n {5,10,15,20}, gamma {1.0,1.5}) are rejected unless
    // explicitly allowed.
    bool allow_out_of_range = false;
    int threads = 1;
};

using EmbedderFactory =
    std::function<std::shared_ptr<Embedder>(const std::string& spec)>;

// Evaluates the dataset once per axis value, rebuilding only what the axis
// invalidates: gamma/n/h reuse the graph as-is, k rebuilds edges from stored
// embeddings, alpha refilters and reassembles, embedder/chunking redo
// scoring (generation always comes from the cache or generator). Question
// embeddings are computed once per embedder.
SweepResult sweep(SweepAxis axis, const std::vector<std::string>& values,
                  const std::vector<Document>& docs, const std::vector<QAItem>& items,
                  const RunConfig& base, Generator* generator, ExpansionCache* cache,
                  const SweepOptions& options, EmbedderFactory embedder_factory = {});

}  // namespace qcg
