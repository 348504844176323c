#include "qcg/graph.hpp"

#include <algorithm>
#include <set>

#include "qcg/errors.hpp"
#include "qcg/util.hpp"

namespace qcg {

void GraphConfig::validate() const {
    if (k < 1) throw ConfigError("graph k must be >= 1");
}

std::string make_query_id(const std::string& chunk_id, int gen_index) {
    return chunk_id + "-" + std::to_string(gen_index);
}

std::vector<std::vector<std::uint32_t>> knn_edges(std::span<const QueryNode> nodes, int k,
                                                  bool symmetrize, int threads) {
    const std::size_t n = nodes.size();
    std::vector<std::vector<std::uint32_t>> edges(n);
    if (n == 0) return edges;
    if (k < 1) throw ConfigError("knn_edges: k must be >= 1");
    if (static_cast<std::size_t>(k) >= n) {
        log_warn("knn_edges: k=" + std::to_string(k) + " >= node count " + std::to_string(n) +
                 ", clamping to " + std::to_string(n - 1));
        k = static_cast<int>(n - 1);
    }
    if (k == 0) return edges;

    struct Candidate {
        double sim;
        std::uint32_t index;
    };
    auto closer = [&](const Candidate& a, const Candidate& b) {
        if (a.sim != b.sim) return a.sim > b.sim;
        return nodes[a.index].q_id < nodes[b.index].q_id;
    };

    parallel_for(n, threads, [&](std::size_t i) {
        std::vector<Candidate> candidates;
        candidates.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            candidates.push_back(
                Candidate{cosine_sim(nodes[i].embedding, nodes[j].embedding),
                          static_cast<std::uint32_t>(j)});
        }
        std::partial_sort(candidates.begin(), candidates.begin() + k, candidates.end(), closer);
        edges[i].reserve(static_cast<std::size_t>(k));
        for (int e = 0; e < k; ++e) edges[i].push_back(candidates[static_cast<std::size_t>(e)].index);
    });

    if (symmetrize) {
        std::vector<std::set<std::uint32_t>> present(n);
        for (std::size_t i = 0; i < n; ++i)
            present[i].insert(edges[i].begin(), edges[i].end());
        std::vector<std::vector<std::uint32_t>> extra(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::uint32_t j : edges[i]) {
                if (!present[j].contains(static_cast<std::uint32_t>(i))) {
                    extra[j].push_back(static_cast<std::uint32_t>(i));
                    present[j].insert(static_cast<std::uint32_t>(i));
                }
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (extra[i].empty()) continue;
            std::vector<Candidate> merged;
            merged.reserve(edges[i].size() + extra[i].size());
            for (std::uint32_t j : edges[i])
                merged.push_back(Candidate{cosine_sim(nodes[i].embedding, nodes[j].embedding), j});
            for (std::uint32_t j : extra[i])
                merged.push_back(Candidate{cosine_sim(nodes[i].embedding, nodes[j].embedding), j});
            std::sort(merged.begin(), merged.end(), closer);
            edges[i].clear();
            for (const auto& c : merged) edges[i].push_back(c.index);
        }
    }
    return edges;
}

QCGraph::QCGraph(std::vector<ChunkEntry> chunks, std::vector<QueryNode> nodes,
                 std::vector<std::vector<std::uint32_t>> intra, std::vector<std::uint32_t> inter,
                 BuildConfig config)
    : chunks_(std::move(chunks)),
      nodes_(std::move(nodes)),
      intra_(std::move(intra)),
      inter_(std::move(inter)),
      config_(std::move(config)) {
    for (std::uint32_t i = 0; i < chunks_.size(); ++i) {
        if (i > 0 && !(chunks_[i - 1].chunk.chunk_id < chunks_[i].chunk.chunk_id))
            throw DataError("graph chunks must be strictly sorted by chunk_id");
        chunk_by_id_.emplace(chunks_[i].chunk.chunk_id, i);
    }
    for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
        if (i > 0 && !(nodes_[i - 1].q_id < nodes_[i].q_id))
            throw DataError("graph nodes must be strictly sorted by q_id");
        node_by_id_.emplace(nodes_[i].q_id, i);
    }
    if (intra_.size() != nodes_.size() || inter_.size() != nodes_.size())
        throw DataError("graph edge arrays must match node count");
    for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
        if (inter_[i] >= chunks_.size())
            throw DataError("inter edge from '" + nodes_[i].q_id + "' points past chunk table");
        if (chunks_[inter_[i]].chunk.chunk_id != nodes_[i].chunk_id)
            throw DataError("inter edge from '" + nodes_[i].q_id + "' disagrees with chunk_id");
        for (std::uint32_t j : intra_[i]) {
            if (j >= nodes_.size())
                throw DataError("intra edge from '" + nodes_[i].q_id + "' points past node table");
            if (j == i) throw DataError("self-loop on '" + nodes_[i].q_id + "'");
        }
    }
}

std::size_t QCGraph::num_intra_edges() const {
    std::size_t total = 0;
    for (const auto& e : intra_) total += e.size();
    return total;
}

std::optional<std::uint32_t> QCGraph::chunk_index(const std::string& chunk_id) const {
    auto it = chunk_by_id_.find(chunk_id);
    if (it == chunk_by_id_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::uint32_t> QCGraph::node_index(const std::string& q_id) const {
    auto it = node_by_id_.find(q_id);
    if (it == node_by_id_.end()) return std::nullopt;
    return it->second;
}

bool QCGraph::structurally_equal(const QCGraph& other) const {
    return chunks_ == other.chunks_ && nodes_ == other.nodes_ && intra_ == other.intra_ &&
           inter_ == other.inter_ && config_ == other.config_;
}

QCGraph build_graph(GraphBuildInput input, const GraphConfig& cfg, Embedder& embedder) {
    cfg.validate();
    if (input.retained.empty())
        throw DataError("no retained query-answer pairs; refusing to build an empty query layer");
    if (input.chunks.empty()) throw DataError("no chunks to index");

    std::vector<std::size_t> chunk_order(input.chunks.size());
    for (std::size_t i = 0; i < chunk_order.size(); ++i) chunk_order[i] = i;
    std::sort(chunk_order.begin(), chunk_order.end(), [&](std::size_t a, std::size_t b) {
        return input.chunks[a].chunk_id < input.chunks[b].chunk_id;
    });

    std::vector<ChunkEntry> chunks;
    chunks.reserve(input.chunks.size());
    std::unordered_map<std::string, std::uint32_t> chunk_by_id;
    for (std::size_t pos : chunk_order) {
        const Chunk& c = input.chunks[pos];
        if (!chunk_by_id.emplace(c.chunk_id, static_cast<std::uint32_t>(chunks.size())).second)
            throw DataError("duplicate chunk_id '" + c.chunk_id + "'");
        ChunkEntry entry;
        entry.chunk = c;
        if (!input.chunk_embeddings.empty()) {
            if (input.chunk_embeddings.size() != input.chunks.size())
                throw DataError("chunk_embeddings must parallel chunks");
            entry.embedding = input.chunk_embeddings[pos];
        }
        chunks.push_back(std::move(entry));
    }

    // Chunk-text embeddings for any entry that arrived without one.
    {
        std::vector<std::string> texts;
        std::vector<std::size_t> targets;
        for (std::size_t i = 0; i < chunks.size(); ++i) {
            if (chunks[i].embedding.empty()) {
                texts.push_back(chunks[i].chunk.text);
                targets.push_back(i);
            }
        }
        if (!texts.empty()) {
            auto embedded = embedder.embed_batch(texts);
            for (std::size_t i = 0; i < targets.size(); ++i)
                chunks[targets[i]].embedding = std::move(embedded[i]);
        }
    }

    // Query nodes from the retained pairs, sorted by q_id.
    std::vector<QueryNode> nodes;
    nodes.reserve(input.retained.size());
    for (const auto& sp : input.retained) {
        auto it = chunk_by_id.find(sp.pair.chunk_id);
        if (it == chunk_by_id.end())
            throw DataError("retained pair references unknown chunk '" + sp.pair.chunk_id + "'");
        QueryNode node;
        node.q_id = make_query_id(sp.pair.chunk_id, sp.pair.gen_index);
        node.chunk_id = sp.pair.chunk_id;
        node.query = sp.pair.query;
        node.answer = sp.pair.answer;
        node.fidelity = sp.fidelity;
        node.embedding = sp.embedding;
        nodes.push_back(std::move(node));
    }
    std::sort(nodes.begin(), nodes.end(),
              [](const QueryNode& a, const QueryNode& b) { return a.q_id < b.q_id; });
    for (std::size_t i = 1; i < nodes.size(); ++i) {
        if (nodes[i - 1].q_id == nodes[i].q_id)
            throw DataError("duplicate query node id '" + nodes[i].q_id + "'");
    }

    {
        std::vector<std::string> texts;
        std::vector<std::size_t> targets;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (nodes[i].embedding.empty()) {
                texts.push_back(concat_qa(nodes[i].query, nodes[i].answer));
                targets.push_back(i);
            }
        }
        if (!texts.empty()) {
            auto embedded = embedder.embed_batch(texts);
            for (std::size_t i = 0; i < targets.size(); ++i)
                nodes[targets[i]].embedding = std::move(embedded[i]);
        }
    }

    // Expanded-chunk embeddings for the document-expansion baselines.
    if (input.baseline_embeddings) {
        std::vector<std::string> d2q_texts(chunks.size());
        std::vector<std::string> d2qmm_texts(chunks.size());
        for (std::size_t i = 0; i < chunks.size(); ++i) {
            d2q_texts[i] = chunks[i].chunk.text;
            d2qmm_texts[i] = chunks[i].chunk.text;
        }
        auto append_pair = [&](std::vector<std::string>& texts, const QAPair& pair) {
            auto it = chunk_by_id.find(pair.chunk_id);
            if (it == chunk_by_id.end())
                throw DataError("pair references unknown chunk '" + pair.chunk_id + "'");
            std::string& text = texts[it->second];
            text += ' ';
            text += concat_qa(pair.query, pair.answer);
        };
        for (const auto& pair : input.all_pairs) append_pair(d2q_texts, pair);
        for (const auto& sp : input.retained) append_pair(d2qmm_texts, sp.pair);

        std::vector<std::string> batch;
        batch.reserve(chunks.size() * 2);
        batch.insert(batch.end(), d2q_texts.begin(), d2q_texts.end());
        batch.insert(batch.end(), d2qmm_texts.begin(), d2qmm_texts.end());
        auto embedded = embedder.embed_batch(batch);
        for (std::size_t i = 0; i < chunks.size(); ++i) {
            chunks[i].d2q_embedding = std::move(embedded[i]);
            chunks[i].d2qmm_embedding = std::move(embedded[chunks.size() + i]);
        }
    }

    auto intra = knn_edges(nodes, cfg.k, cfg.symmetrize, input.threads);
    std::vector<std::uint32_t> inter(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) inter[i] = chunk_by_id.at(nodes[i].chunk_id);

    BuildConfig config = input.meta;
    config.graph = cfg;
    config.embedder_name = embedder.name();
    config.embedding_dim = embedder.dim();

    return QCGraph(std::move(chunks), std::move(nodes), std::move(intra), std::move(inter),
                   std::move(config));
}

}  // namespace qcg
