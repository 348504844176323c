#pragma once

// Independent reference implementations the real code is checked against.
// Deliberately written with plain arrays and nested loops, no qcg graph
// structures, so they cannot share a bug with the production path.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace oracle {

inline double cosine(const std::vector<float>& a, const std::vector<float>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    double c = dot / (std::sqrt(na) * std::sqrt(nb));
    if (c > 1.0) c = 1.0;
    if (c < -1.0) c = -1.0;
    return c;
}

// Exhaustive KNN by repeated full scans: for each node, select the k best
// (similarity, id) candidates one at a time.
inline std::vector<std::vector<std::uint32_t>> brute_knn(
    const std::vector<std::vector<float>>& embeddings, const std::vector<std::string>& ids,
    int k) {
    const std::size_t n = embeddings.size();
    int effective_k = k;
    if (static_cast<std::size_t>(effective_k) >= n) effective_k = static_cast<int>(n) - 1;
    std::vector<std::vector<std::uint32_t>> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::set<std::size_t> taken;
        for (int round = 0; round < effective_k; ++round) {
            bool found = false;
            std::size_t best = 0;
            double best_sim = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i || taken.count(j)) continue;
                double sim = cosine(embeddings[i], embeddings[j]);
                if (!found || sim > best_sim || (sim == best_sim && ids[j] < ids[best])) {
                    best = j;
                    best_sim = sim;
                    found = true;
                }
            }
            if (!found) break;
            taken.insert(best);
            out[i].push_back(static_cast<std::uint32_t>(best));
        }
    }
    return out;
}

struct RetrievalInput {
    // node arrays, all parallel
    std::vector<std::vector<float>> node_embeddings;
    std::vector<std::string> node_ids;
    std::vector<std::size_t> node_chunk;  // index into chunk_ids
    std::vector<std::string> chunk_ids;
    std::vector<float> user_embedding;
    double gamma = 0.0;
    int n = 1;
    int h = 0;
    int top_k = 1;
    int k = 1;  // knn degree used when building edges
};

// Straight-line reimplementation of the whole qcg retrieval pipeline.
inline std::vector<std::string> straight_line_topk(const RetrievalInput& in) {
    const std::size_t n_nodes = in.node_embeddings.size();

    // step 0: rebuild the same edges the index would hold
    std::vector<std::vector<std::uint32_t>> edges =
        brute_knn(in.node_embeddings, in.node_ids, in.k);

    // step 1: threshold + cap
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < n_nodes; ++i) order.push_back(i);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        double sa = cosine(in.user_embedding, in.node_embeddings[a]) + 1.0;
        double sb = cosine(in.user_embedding, in.node_embeddings[b]) + 1.0;
        if (sa != sb) return sa > sb;
        return in.node_ids[a] < in.node_ids[b];
    });
    std::vector<std::size_t> retrieved;
    for (std::size_t idx : order) {
        double s = cosine(in.user_embedding, in.node_embeddings[idx]) + 1.0;
        if (s >= in.gamma && retrieved.size() < static_cast<std::size_t>(in.n))
            retrieved.push_back(idx);
    }

    // step 2: h rounds of neighbor collection
    std::set<std::size_t> expanded(retrieved.begin(), retrieved.end());
    std::set<std::size_t> frontier(retrieved.begin(), retrieved.end());
    for (int hop = 0; hop < in.h; ++hop) {
        std::set<std::size_t> next;
        for (std::size_t i : frontier) {
            for (std::uint32_t j : edges[i]) {
                if (!expanded.count(j)) {
                    expanded.insert(j);
                    next.insert(j);
                }
            }
        }
        frontier = next;
        if (frontier.empty()) break;
    }

    // step 3: mean cosine per chunk
    struct Score {
        double sum = 0.0;
        int count = 0;
        double max_cos = -2.0;
    };
    std::map<std::string, Score> chunk_scores;
    for (std::size_t i : expanded) {
        double cos = cosine(in.user_embedding, in.node_embeddings[i]);
        Score& s = chunk_scores[in.chunk_ids[in.node_chunk[i]]];
        s.sum += cos;
        s.count += 1;
        if (cos > s.max_cos) s.max_cos = cos;
    }
    std::vector<std::pair<std::string, Score>> ranked(chunk_scores.begin(), chunk_scores.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        double sa = a.second.sum / a.second.count;
        double sb = b.second.sum / b.second.count;
        if (sa != sb) return sa > sb;
        if (a.second.max_cos != b.second.max_cos) return a.second.max_cos > b.second.max_cos;
        return a.first < b.first;
    });
    std::vector<std::string> topk;
    for (const auto& [chunk_id, score] : ranked) {
        if (topk.size() >= static_cast<std::size_t>(in.top_k)) break;
        topk.push_back(chunk_id);
    }
    return topk;
}

}  // namespace oracle
