#include "qcg/retrieval.hpp"

#include <algorithm>
#include <cmath>

#include "qcg/errors.hpp"

namespace qcg {

using nlohmann::json;

std::string to_string(RetrievalMode mode) {
    switch (mode) {
        case RetrievalMode::qcg: return "qcg";
        case RetrievalMode::naive: return "naive";
        case RetrievalMode::d2q: return "d2q";
        case RetrievalMode::d2qmm: return "d2qmm";
    }
    return "qcg";
}

RetrievalMode retrieval_mode_from_string(const std::string& name) {
    if (name == "qcg") return RetrievalMode::qcg;
    if (name == "naive") return RetrievalMode::naive;
    if (name == "d2q") return RetrievalMode::d2q;
    if (name == "d2qmm") return RetrievalMode::d2qmm;
    throw ConfigError("unknown retrieval mode '" + name + "' (expected qcg|naive|d2q|d2qmm)");
}

void RetrievalConfig::validate() const {
    if (gamma < 0.0 || gamma > 2.0) throw ConfigError("gamma must be in [0, 2]");
    if (max_nodes < 1) throw ConfigError("max_nodes (n) must be >= 1");
    if (hops < 0) throw ConfigError("hops (h) must be >= 0");
    if (top_k < 1) throw ConfigError("top_k (K) must be >= 1");
    if (epsilon != 1.0) throw ConfigError("epsilon is fixed at 1.0");
    if (context_token_cap < 1) throw ConfigError("context_token_cap must be >= 1");
    if (k_override && *k_override < 1) throw ConfigError("k_override must be >= 1");
}

std::vector<ScoredQuery> retrieve_queries(const Embedding& user_embedding, const QCGraph& graph,
                                          const RetrievalConfig& cfg) {
    cfg.validate();
    std::vector<ScoredQuery> kept;
    for (const auto& node : graph.query_nodes()) {
        double s = cosine_sim(user_embedding, node.embedding) + cfg.epsilon;
        if (s >= cfg.gamma) kept.push_back(ScoredQuery{node.q_id, s});
    }
    std::sort(kept.begin(), kept.end(), [](const ScoredQuery& a, const ScoredQuery& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.q_id < b.q_id;
    });
    if (kept.size() > static_cast<std::size_t>(cfg.max_nodes))
        kept.resize(static_cast<std::size_t>(cfg.max_nodes));
    return kept;
}

std::map<std::string, int> expand_neighbors(std::span<const ScoredQuery> retrieved,
                                            const QCGraph& graph, int hops,
                                            std::optional<int> k_override) {
    if (hops < 0) throw ConfigError("hops must be >= 0");
    std::map<std::string, int> distance;
    std::vector<std::uint32_t> frontier;
    for (const auto& sq : retrieved) {
        auto idx = graph.node_index(sq.q_id);
        if (!idx) throw DataError("retrieved query '" + sq.q_id + "' not in graph");
        if (distance.emplace(sq.q_id, 0).second) frontier.push_back(*idx);
    }
    for (int depth = 1; depth <= hops && !frontier.empty(); ++depth) {
        std::vector<std::uint32_t> next;
        for (std::uint32_t i : frontier) {
            const auto& neighbors = graph.intra()[i];
            std::size_t limit = neighbors.size();
            if (k_override)
                limit = std::min(limit, static_cast<std::size_t>(*k_override));
            for (std::size_t e = 0; e < limit; ++e) {
                std::uint32_t j = neighbors[e];
                if (distance.emplace(graph.node_at(j).q_id, depth).second) next.push_back(j);
            }
        }
        frontier = std::move(next);
    }
    return distance;
}

std::map<std::string, ChunkScore> score_chunks(const std::map<std::string, int>& expanded,
                                               const Embedding& user_embedding,
                                               const QCGraph& graph) {
    struct Accumulator {
        double sum = 0.0;
        double max_cos = -1.0;
        std::vector<std::string> ids;
    };
    std::map<std::string, Accumulator> acc;
    for (const auto& [q_id, depth] : expanded) {
        auto idx = graph.node_index(q_id);
        if (!idx) throw DataError("expanded query '" + q_id + "' not in graph");
        const QueryNode& node = graph.node_at(*idx);
        double cos = cosine_sim(user_embedding, node.embedding);
        const std::string& chunk_id = graph.chunk_at(graph.chunk_of_node(*idx)).chunk.chunk_id;
        Accumulator& a = acc[chunk_id];
        a.sum += cos;
        a.max_cos = std::max(a.max_cos, cos);
        a.ids.push_back(q_id);  // map iteration keeps these sorted
    }
    std::map<std::string, ChunkScore> scores;
    for (auto& [chunk_id, a] : acc) {
        ChunkScore cs;
        cs.score = a.sum / static_cast<double>(a.ids.size());
        cs.max_cosine = a.max_cos;
        cs.contributing = std::move(a.ids);
        scores.emplace(chunk_id, std::move(cs));
    }
    return scores;
}

namespace {

std::vector<std::string> rank_chunk_scores(const std::map<std::string, ChunkScore>& scores) {
    std::vector<const std::pair<const std::string, ChunkScore>*> items;
    items.reserve(scores.size());
    for (const auto& kv : scores) items.push_back(&kv);
    std::sort(items.begin(), items.end(), [](const auto* a, const auto* b) {
        if (a->second.score != b->second.score) return a->second.score > b->second.score;
        if (a->second.max_cosine != b->second.max_cosine)
            return a->second.max_cosine > b->second.max_cosine;
        return a->first < b->first;
    });
    std::vector<std::string> ranked;
    ranked.reserve(items.size());
    for (const auto* kv : items) ranked.push_back(kv->first);
    return ranked;
}

RetrievalTrace retrieve_by_chunk_embedding(const Embedding& user_embedding,
                                           const std::string& user_query, const QCGraph& graph,
                                           const RetrievalConfig& cfg, RetrievalMode mode) {
    RetrievalTrace trace;
    trace.user_query = user_query;
    trace.mode = mode;
    for (const auto& entry : graph.chunk_entries()) {
        const Embedding* embedding = &entry.embedding;
        if (mode == RetrievalMode::d2q) embedding = &entry.d2q_embedding;
        if (mode == RetrievalMode::d2qmm) embedding = &entry.d2qmm_embedding;
        if (embedding->empty())
            throw DataError("index has no " + to_string(mode) +
                            " chunk embeddings; rebuild with baseline embeddings enabled");
        ChunkScore cs;
        cs.score = cosine_sim(user_embedding, *embedding);
        cs.max_cosine = cs.score;
        trace.chunk_scores.emplace(entry.chunk.chunk_id, std::move(cs));
    }
    trace.sorted_chunk_ids = rank_chunk_scores(trace.chunk_scores);
    trace.topk_chunk_ids.assign(
        trace.sorted_chunk_ids.begin(),
        trace.sorted_chunk_ids.begin() +
            std::min<std::size_t>(trace.sorted_chunk_ids.size(),
                                  static_cast<std::size_t>(cfg.top_k)));
    return trace;
}

}  // namespace

RetrievalTrace retrieve_with_embedding(const Embedding& user_embedding,
                                       const std::string& user_query, const QCGraph& graph,
                                       const RetrievalConfig& cfg, RetrievalMode mode) {
    cfg.validate();
    if (graph.num_chunks() == 0) throw DataError("cannot retrieve from an empty index");

    if (mode != RetrievalMode::qcg)
        return retrieve_by_chunk_embedding(user_embedding, user_query, graph, cfg, mode);

    RetrievalTrace trace;
    trace.user_query = user_query;
    trace.mode = mode;
    trace.retrieved = retrieve_queries(user_embedding, graph, cfg);
    trace.hop_distance = expand_neighbors(trace.retrieved, graph, cfg.hops, cfg.k_override);
    trace.chunk_scores = score_chunks(trace.hop_distance, user_embedding, graph);
    trace.sorted_chunk_ids = rank_chunk_scores(trace.chunk_scores);
    trace.topk_chunk_ids.assign(
        trace.sorted_chunk_ids.begin(),
        trace.sorted_chunk_ids.begin() +
            std::min<std::size_t>(trace.sorted_chunk_ids.size(),
                                  static_cast<std::size_t>(cfg.top_k)));
    return trace;
}

RetrievalTrace retrieve(const std::string& user_query, const QCGraph& graph, Embedder& embedder,
                        const RetrievalConfig& cfg, RetrievalMode mode) {
    return retrieve_with_embedding(embedder.embed(user_query), user_query, graph, cfg, mode);
}

json RetrievalTrace::to_json() const {
    json topk_qids = json::array();
    json scores = json::object();
    for (const auto& sq : retrieved) {
        topk_qids.push_back(sq.q_id);
        scores[sq.q_id] = sq.score;
    }
    // Q* minus Q_r, ordered by (hop, id).
    json extra = json::array();
    {
        std::vector<std::pair<int, std::string>> extras;
        for (const auto& [q_id, depth] : hop_distance)
            if (depth > 0) extras.emplace_back(depth, q_id);
        std::sort(extras.begin(), extras.end());
        for (const auto& [depth, q_id] : extras) extra.push_back(q_id);
    }
    json hops = json::object();
    for (const auto& [q_id, depth] : hop_distance) hops[q_id] = depth;
    json chunk_to_queries = json::object();
    json chunk_score_json = json::object();
    for (const auto& [chunk_id, cs] : chunk_scores) {
        chunk_to_queries[chunk_id] = cs.contributing;
        chunk_score_json[chunk_id] = cs.score;
    }
    return json{{"question", user_query},
                {"mode", to_string(mode)},
                {"topk_qids", topk_qids},
                {"query_scores", scores},
                {"extra_qids_via_knn", extra},
                {"hop_distances", hops},
                {"chunk_to_queries", chunk_to_queries},
                {"chunk_scores", chunk_score_json},
                {"sorted_chunk_ids", sorted_chunk_ids},
                {"topk_chunk_ids", topk_chunk_ids}};
}

GenerationOutcome generate_answer(const std::string& user_query, const RetrievalTrace& trace,
                                  const QCGraph& graph, Generator& gen,
                                  const GenerationParams& params, const RetrievalConfig& cfg,
                                  const Tokenizer& tokenizer) {
    std::vector<ContextBlock> blocks;
    blocks.reserve(trace.topk_chunk_ids.size());
    for (const auto& chunk_id : trace.topk_chunk_ids) {
        auto idx = graph.chunk_index(chunk_id);
        if (!idx) throw DataError("trace references unknown chunk '" + chunk_id + "'");
        blocks.push_back(ContextBlock{chunk_id, graph.chunk_at(*idx).chunk.text});
    }

    // Drop whole chunks from the bottom of the ranking until the prompt fits.
    std::string prompt = render_response_prompt(blocks, user_query);
    std::size_t tokens = tokenizer.count(prompt);
    while (tokens > static_cast<std::size_t>(cfg.context_token_cap) && !blocks.empty()) {
        blocks.pop_back();
        prompt = render_response_prompt(blocks, user_query);
        tokens = tokenizer.count(prompt);
    }

    GenerationOutcome outcome;
    outcome.prompt_tokens = static_cast<int>(tokens);
    for (const auto& block : blocks) outcome.included_chunk_ids.push_back(block.chunk_id);
    outcome.answer = gen.generate(prompt, params);
    return outcome;
}

}  // namespace qcg
