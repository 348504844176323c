#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "qcg/corpus.hpp"
#include "qcg/embedding.hpp"
#include "qcg/expansion.hpp"
#include "qcg/providers.hpp"

namespace qcg {

// A retained query-answer pair as a graph node. q_id = "{chunk_id}-{gen_index}".
struct QueryNode {
    std::string q_id;
    std::string chunk_id;
    std::string query;
    std::string answer;
    double fidelity = 0.0;
    Embedding embedding;  // of query (+) answer, unit norm

    bool operator==(const QueryNode&) const = default;
};

std::string make_query_id(const std::string& chunk_id, int gen_index);

// Chunk plus every embedding variant the retrieval modes need. The expanded
// variants re-embed the chunk text with its generated pairs appended; they
// back the document-expansion baselines and cost nothing at query time.
struct ChunkEntry {
    Chunk chunk;
    Embedding embedding;         // chunk text alone
    Embedding d2q_embedding;     // chunk text + all generated pairs
    Embedding d2qmm_embedding;   // chunk text + retained pairs only

    bool operator==(const ChunkEntry&) const = default;
};

inline bool operator==(const Chunk& a, const Chunk& b) {
    return a.chunk_id == b.chunk_id && a.doc_id == b.doc_id && a.text == b.text &&
           a.token_count == b.token_count;
}

struct GraphConfig {
    int k = 2;                // intra out-degree
    bool symmetrize = false;  // add reverse edges (out-degree may then exceed k)

    void validate() const;
    bool operator==(const GraphConfig&) const = default;
};

// Full snapshot of how an index was built; embedded in the index file so a
// loaded graph explains itself.
struct BuildConfig {
    ChunkingConfig chunking;
    ExpansionConfig expansion;
    GraphConfig graph;
    std::string embedder_name;
    std::size_t embedding_dim = 0;
    std::string tokenizer_name;

    bool operator==(const BuildConfig&) const = default;
};

inline bool operator==(const ChunkingConfig& a, const ChunkingConfig& b) {
    return a.chunk_size == b.chunk_size && a.overlap == b.overlap;
}
inline bool operator==(const ExpansionConfig& a, const ExpansionConfig& b) {
    return a.pairs_per_chunk == b.pairs_per_chunk && a.alpha == b.alpha;
}

// Directed exact-KNN edges over node embeddings: for each node, the k most
// cosine-similar other nodes, most similar first, ties to the
// lexicographically smaller q_id. k >= |nodes| is clamped to |nodes| - 1
// with a warning. With symmetrize, reverse edges are merged in keeping the
// (similarity, id) order.
std::vector<std::vector<std::uint32_t>> knn_edges(std::span<const QueryNode> nodes, int k,
                                                  bool symmetrize = false, int threads = 1);

// The two-layer query-centric index. Immutable once constructed; reads are
// safe from any number of threads.
class QCGraph {
public:
    QCGraph() = default;

    // Takes pre-sorted (by id) chunk and node arrays plus edge arrays in node
    // order; validates every structural invariant.
    QCGraph(std::vector<ChunkEntry> chunks, std::vector<QueryNode> nodes,
            std::vector<std::vector<std::uint32_t>> intra, std::vector<std::uint32_t> inter,
            BuildConfig config);

    std::size_t num_chunks() const { return chunks_.size(); }
    std::size_t num_queries() const { return nodes_.size(); }
    std::size_t num_intra_edges() const;

    const std::vector<ChunkEntry>& chunk_entries() const { return chunks_; }
    const std::vector<QueryNode>& query_nodes() const { return nodes_; }
    const std::vector<std::vector<std::uint32_t>>& intra() const { return intra_; }
    const std::vector<std::uint32_t>& inter() const { return inter_; }

    const ChunkEntry& chunk_at(std::uint32_t index) const { return chunks_[index]; }
    const QueryNode& node_at(std::uint32_t index) const { return nodes_[index]; }
    std::uint32_t chunk_of_node(std::uint32_t node_index) const { return inter_[node_index]; }

    std::optional<std::uint32_t> chunk_index(const std::string& chunk_id) const;
    std::optional<std::uint32_t> node_index(const std::string& q_id) const;

    const BuildConfig& build_config() const { return config_; }

    bool structurally_equal(const QCGraph& other) const;

private:
    std::vector<ChunkEntry> chunks_;  // sorted by chunk_id
    std::vector<QueryNode> nodes_;    // sorted by q_id
    std::vector<std::vector<std::uint32_t>> intra_;
    std::vector<std::uint32_t> inter_;
    std::unordered_map<std::string, std::uint32_t> chunk_by_id_;
    std::unordered_map<std::string, std::uint32_t> node_by_id_;
    BuildConfig config_;
};

struct GraphBuildInput {
    std::vector<Chunk> chunks;
    std::vector<ScoredPair> retained;   // become query nodes
    std::vector<QAPair> all_pairs;      // for the d2q chunk variant; may be empty
    // Precomputed chunk-text embeddings parallel to `chunks`; embedded here
    // when absent.
    std::vector<Embedding> chunk_embeddings;
    bool baseline_embeddings = true;    // build the d2q/d2qmm chunk variants
    int threads = 1;
    BuildConfig meta;                   // chunking/expansion/tokenizer fields pass through
};

// Assembles nodes, computes whatever embeddings are missing, builds intra
// KNN edges and inter membership edges. Throws DataError when the retained
// set is empty (an index without a query layer is unusable) or when a pair
// references an unknown chunk.
QCGraph build_graph(GraphBuildInput input, const GraphConfig& cfg, Embedder& embedder);

}  // namespace qcg
