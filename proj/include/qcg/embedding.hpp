#pragma once

#include <cstddef>
#include <vector>

namespace qcg {

// Dense vector. Everything stored in an index is l2-normalized (unit norm
// within 1e-6), which keeps cosine similarity a plain dot product and the
// shifted retrieval score s = cos + 1 inside [0, 2].
struct Embedding {
    std::vector<float> values;

    Embedding() = default;
    explicit Embedding(std::vector<float> v) : values(std::move(v)) {}

    std::size_t dim() const { return values.size(); }
    bool empty() const { return values.empty(); }

    bool operator==(const Embedding& other) const = default;
};

double l2_norm(const Embedding& e);

// Scales to unit norm. A zero vector is left untouched.
void l2_normalize(Embedding& e);

// dot(u, v) / (|u| * |v|), accumulated in double and clamped to [-1, 1].
// Exactly symmetric. Throws qcg::Error on dimension mismatch.
double cosine_sim(const Embedding& u, const Embedding& v);

}  // namespace qcg
