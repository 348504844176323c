#include "qcg/embedding.hpp"

#include <algorithm>
#include <cmath>

#include "qcg/errors.hpp"

namespace qcg {

double l2_norm(const Embedding& e) {
    double sum = 0.0;
    for (float v : e.values) sum += static_cast<double>(v) * static_cast<double>(v);
    return std::sqrt(sum);
}

void l2_normalize(Embedding& e) {
    double norm = l2_norm(e);
    if (norm == 0.0) return;
    for (float& v : e.values) v = static_cast<float>(v / norm);
}

double cosine_sim(const Embedding& u, const Embedding& v) {
    if (u.dim() != v.dim())
        throw Error("cosine_sim: dimension mismatch (" + std::to_string(u.dim()) + " vs " +
                    std::to_string(v.dim()) + ")");
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.values.size(); ++i) {
        double a = u.values[i];
        double b = v.values[i];
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if (nu == 0.0 || nv == 0.0) return 0.0;
    double cos = dot / (std::sqrt(nu) * std::sqrt(nv));
    return std::clamp(cos, -1.0, 1.0);
}

}  // namespace qcg
