#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qcg/graph.hpp"
#include "qcg/prompts.hpp"
#include "qcg/providers.hpp"
#include "qcg/tokenizer.hpp"

namespace qcg {

enum class RetrievalMode { qcg, naive, d2q, d2qmm };

std::string to_string(RetrievalMode mode);
RetrievalMode retrieval_mode_from_string(const std::string& name);

struct RetrievalConfig {
    double gamma = 1.5;          // threshold on s(q_u, q) = cos + epsilon
    int max_nodes = 10;          // n, cap on retrieved query nodes
    int hops = 1;                // h
    int top_k = 5;               // K, chunks handed to generation
    double epsilon = 1.0;        // fixed shift keeping scores in [0, 2]
    int context_token_cap = 6000;
    // Use only the first k' neighbors of each node's similarity-ordered edge
    // list; equivalent to an index built with smaller k, without a rebuild.
    std::optional<int> k_override;

    void validate() const;
};

struct ScoredQuery {
    std::string q_id;
    double score = 0.0;  // cos + epsilon
};

struct ChunkScore {
    double score = 0.0;                     // mean raw cosine over contributing queries
    double max_cosine = -1.0;               // tie-breaker
    std::vector<std::string> contributing;  // q_ids in Q* linked to this chunk, sorted
};

struct RetrievalTrace {
    std::string user_query;
    RetrievalMode mode = RetrievalMode::qcg;
    std::vector<ScoredQuery> retrieved;       // Q_r, score order
    std::map<std::string, int> hop_distance;  // Q*, id -> first-discovery depth
    std::map<std::string, ChunkScore> chunk_scores;
    std::vector<std::string> sorted_chunk_ids;  // every scored chunk, rank order
    std::vector<std::string> topk_chunk_ids;

    nlohmann::json to_json() const;
};

// Step 1: embed the user query, score every query node with cos + epsilon,
// keep those >= gamma, sort descending (ties: smaller q_id), cap at n.
std::vector<ScoredQuery> retrieve_queries(const Embedding& user_embedding, const QCGraph& graph,
                                          const RetrievalConfig& cfg);

// Step 2: BFS along directed intra out-edges for `hops` rounds starting from
// the retrieved set. Returns every reached node with its first-discovery
// depth (seeds at 0). Visited nodes are not re-expanded.
std::map<std::string, int> expand_neighbors(std::span<const ScoredQuery> retrieved,
                                            const QCGraph& graph, int hops,
                                            std::optional<int> k_override = std::nullopt);

// Step 3: chunks reachable over inter edges from the expanded set; each
// scored by the arithmetic mean of raw cosine (no epsilon) between the user
// query and its contributing queries.
std::map<std::string, ChunkScore> score_chunks(const std::map<std::string, int>& expanded,
                                               const Embedding& user_embedding,
                                               const QCGraph& graph);

// Full retrieval in the given mode. qcg composes steps 1-3 then ranks by
// s(c) (ties: higher max contributing cosine, then smaller chunk_id); the
// baseline modes rank chunks directly by cosine against the plain, d2q, or
// d2qmm chunk embedding.
RetrievalTrace retrieve(const std::string& user_query, const QCGraph& graph, Embedder& embedder,
                        const RetrievalConfig& cfg, RetrievalMode mode);

// Same, with a precomputed user-query embedding (saves repeat embed calls in
// sweeps).
RetrievalTrace retrieve_with_embedding(const Embedding& user_embedding,
                                       const std::string& user_query, const QCGraph& graph,
                                       const RetrievalConfig& cfg, RetrievalMode mode);

struct GenerationOutcome {
    std::string answer;
    std::vector<std::string> included_chunk_ids;  // survivors of the token cap, rank order
    int prompt_tokens = 0;
};

// Step 4: renders the response prompt with the top-K chunks in rank order,
// dropping lowest-ranked whole chunks until the prompt fits the token cap,
// then calls the generator. Zero surviving chunks still produces an answer
// (the prompt says to admit not knowing).
GenerationOutcome generate_answer(const std::string& user_query, const RetrievalTrace& trace,
                                  const QCGraph& graph, Generator& gen,
                                  const GenerationParams& params, const RetrievalConfig& cfg,
                                  const Tokenizer& tokenizer = default_tokenizer());

}  // namespace qcg
