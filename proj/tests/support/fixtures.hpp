#pragma once

// Shared fixture builders for the unit and acceptance suites.

#include <cmath>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "qcg/corpus.hpp"
#include "qcg/graph.hpp"
#include "qcg/index_io.hpp"
#include "qcg/prompts.hpp"
#include "qcg/providers.hpp"

namespace fixtures {

inline qcg::Embedding random_unit_embedding(std::mt19937& rng, std::size_t dim) {
    std::normal_distribution<float> normal(0.0f, 1.0f);
    qcg::Embedding e;
    e.values.resize(dim);
    for (auto& v : e.values) v = normal(rng);
    qcg::l2_normalize(e);
    if (qcg::l2_norm(e) == 0.0) e.values[0] = 1.0f;
    return e;
}

// Unit vector whose cosine against (1, 0, 0, ...) is exactly `cos`.
inline qcg::Embedding embedding_with_cos(double cos, std::size_t dim = 4) {
    qcg::Embedding e;
    e.values.assign(dim, 0.0f);
    e.values[0] = static_cast<float>(cos);
    e.values[1] = static_cast<float>(std::sqrt(std::max(0.0, 1.0 - cos * cos)));
    return e;
}

inline qcg::Embedding axis_embedding(std::size_t dim = 4, std::size_t axis = 0) {
    qcg::Embedding e;
    e.values.assign(dim, 0.0f);
    e.values[axis] = 1.0f;
    return e;
}

// A structurally diverse random graph for persistence tests. Built through
// the QCGraph constructor directly so edge shapes are arbitrary.
inline qcg::QCGraph random_graph(std::mt19937& rng) {
    std::uniform_int_distribution<int> chunk_count_dist(1, 6);
    std::uniform_int_distribution<int> node_count_dist(1, 5);
    std::uniform_int_distribution<int> dim_pick(0, 1);
    std::uniform_int_distribution<int> word_dist(0, 9999);
    std::uniform_int_distribution<int> k_dist(1, 4);
    std::bernoulli_distribution with_expanded(0.5);

    const std::size_t dim = dim_pick(rng) == 0 ? 8 : 32;
    const bool expanded = with_expanded(rng);

    std::vector<qcg::ChunkEntry> chunks;
    std::vector<qcg::QueryNode> nodes;
    int chunk_count = chunk_count_dist(rng);
    for (int c = 0; c < chunk_count; ++c) {
        qcg::ChunkEntry entry;
        entry.chunk.doc_id = "doc-" + std::to_string(c);
        entry.chunk.chunk_id = entry.chunk.doc_id + "-chunk-0";
        entry.chunk.text = "word" + std::to_string(word_dist(rng)) + " word" +
                           std::to_string(word_dist(rng));
        entry.chunk.token_count = 2;
        entry.embedding = random_unit_embedding(rng, dim);
        if (expanded) {
            entry.d2q_embedding = random_unit_embedding(rng, dim);
            entry.d2qmm_embedding = random_unit_embedding(rng, dim);
        }
        int node_count = node_count_dist(rng);
        for (int q = 0; q < node_count; ++q) {
            qcg::QueryNode node;
            node.chunk_id = entry.chunk.chunk_id;
            node.q_id = qcg::make_query_id(node.chunk_id, q);
            node.query = "query " + std::to_string(word_dist(rng));
            node.answer = "answer " + std::to_string(word_dist(rng));
            node.fidelity = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
            node.embedding = random_unit_embedding(rng, dim);
            nodes.push_back(std::move(node));
        }
        chunks.push_back(std::move(entry));
    }
    std::sort(chunks.begin(), chunks.end(), [](const auto& a, const auto& b) {
        return a.chunk.chunk_id < b.chunk.chunk_id;
    });
    std::sort(nodes.begin(), nodes.end(),
              [](const auto& a, const auto& b) { return a.q_id < b.q_id; });

    std::map<std::string, std::uint32_t> chunk_index;
    for (std::uint32_t i = 0; i < chunks.size(); ++i)
        chunk_index[chunks[i].chunk.chunk_id] = i;
    std::vector<std::uint32_t> inter;
    for (const auto& node : nodes) inter.push_back(chunk_index.at(node.chunk_id));

    auto intra = nodes.size() > 1
                     ? qcg::knn_edges(nodes, std::min<int>(k_dist(rng),
                                                           static_cast<int>(nodes.size()) - 1))
                     : std::vector<std::vector<std::uint32_t>>(nodes.size());

    qcg::BuildConfig config;
    config.chunking = {128, 16};
    config.expansion.pairs_per_chunk = 5;
    config.expansion.alpha = 0.8;
    config.graph.k = 2;
    config.embedder_name = "hash";
    config.embedding_dim = dim;
    config.tokenizer_name = "wordpunct";

    return qcg::QCGraph(std::move(chunks), std::move(nodes), std::move(intra), std::move(inter),
                        std::move(config));
}

// ---------------------------------------------------------------------------
// Scripted-corpus plumbing: docs plus canned Doc2Query responses that the
// pipeline will consume. Responses are registered against the exact prompt
// the pipeline renders for each (tokenized) chunk.

struct ScriptedCorpus {
    std::vector<qcg::Document> docs;
    // doc_id -> pairs fed to the generator fixture, per chunk ordinal 0
    std::map<std::string, std::vector<std::pair<std::string, std::string>>> pairs;
};

inline void register_doc2query_fixtures(qcg::ScriptedGenerator& gen, const ScriptedCorpus& corpus,
                                        const qcg::ChunkingConfig& chunking, int pairs_per_chunk) {
    for (const auto& doc : corpus.docs) {
        auto chunks = qcg::chunk_document(doc, chunking);
        for (const auto& chunk : chunks) {
            auto it = corpus.pairs.find(doc.doc_id);
            if (it == corpus.pairs.end()) continue;
            nlohmann::json array = nlohmann::json::array();
            int index = 0;
            for (const auto& [query, answer] : it->second) {
                array.push_back(nlohmann::json{{"index", index}, {"query", query},
                                               {"answer", answer}});
                ++index;
            }
            gen.add_response(qcg::render_doc2query_prompt(chunk.text, pairs_per_chunk),
                             array.dump(2));
        }
    }
}

// ---------------------------------------------------------------------------
// The multi-hop bridging world: four single-chunk documents where the second
// evidence chunk is only reachable through a query-to-query edge.
//
//   travel  - Wolfgang tells LiHua about the Hong Kong trip (evidence)
//   band    - band practice chat; Yuriko mentions the trip (evidence,
//             vocabulary disjoint from the question)
//   photos  - distractor sharing the question's surface vocabulary
//   pantry  - unrelated distractor
//
// The question shares vocabulary with travel's text and queries, and with
// photos' text (to fool chunk-level retrieval), but with none of band's
// text. One travel query and one band query share a private vocabulary
// ("band practice schedule"), forming the 1-hop bridge.

struct BridgingWorld {
    ScriptedCorpus corpus;
    std::string question;
    std::vector<std::string> evidence_chunk_ids;  // travel, band
    std::string travel_chunk_id = "travel-chunk-0";
    std::string band_chunk_id = "band-chunk-0";
    std::string photos_chunk_id = "photos-chunk-0";
    std::string pantry_chunk_id = "pantry-chunk-0";
    qcg::ChunkingConfig chunking{64, 8};
    int pairs_per_chunk = 3;
};

inline BridgingWorld bridging_world() {
    BridgingWorld world;
    world.question = "who knows wolfgang is going to hong kong for the trip";
    world.evidence_chunk_ids = {world.travel_chunk_id, world.band_chunk_id};

    world.corpus.docs = {
        {"travel",
         "wolfgang told lihua he is going to hong kong for a trip next week and asked about "
         "snacks",
         {}},
        {"band",
         "yuriko and chae talked with wolfgang before rehearsal about harmonies rhythms and "
         "recordings for the jam",
         {}},
        {"photos",
         "wolfgang wolfgang hong kong hong kong photos pictures going going trip trip camera "
         "golden hour shots",
         {}},
        {"pantry",
         "the pantry restock list has lentils rice beans oats flour sugar and olive oil for "
         "the winter season",
         {}},
    };

    world.corpus.pairs["travel"] = {
        {"who knows wolfgang is going to hong kong", "lihua knows about the trip"},
        {"where is wolfgang going for the trip", "hong kong"},
        {"did wolfgang mention the band practice schedule before the trip",
         "yes wolfgang mentioned the band practice schedule"},
    };
    world.corpus.pairs["band"] = {
        {"what did wolfgang say about the band practice schedule",
         "wolfgang said the band practice schedule continues while he is away"},
        {"which songs did yuriko suggest for rehearsal", "chasing cars and tears in heaven"},
        {"who reminded the group to share recordings", "chae reminded everyone"},
    };
    world.corpus.pairs["photos"] = {
        {"what lighting works best for photography", "golden hour light"},
        {"which composition methods were recommended", "leading lines and low angles"},
        {"what should a photographer vary for mood", "angles high and low"},
    };
    world.corpus.pairs["pantry"] = {
        {"what grains are on the restock list", "rice oats and flour"},
        {"which legumes are listed", "lentils and beans"},
        {"what oil is stocked for winter", "olive oil"},
    };
    return world;
}

}  // namespace fixtures
