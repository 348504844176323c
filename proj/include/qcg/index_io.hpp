#pragma once

#include <filesystem>

#include "qcg/graph.hpp"

namespace qcg {

// How embedding payloads are written. Both round-trip float32 values
// bit-exactly; binary is the default, decimal exists for diffable indexes.
enum class EmbeddingsMode : std::uint8_t { binary = 0, decimal = 1 };

// Single self-describing file: magic, format version, build_config header,
// then checksummed sections (chunks, nodes, edges, embeddings).
void save_index(const QCGraph& graph, const std::filesystem::path& path,
                EmbeddingsMode mode = EmbeddingsMode::binary);

// Inverse of save_index. Throws IndexVersionError on a version the reader
// does not speak, IndexChecksumError naming the damaged section, and
// IndexTruncatedError on short reads.
QCGraph load_index(const std::filesystem::path& path);

inline constexpr std::uint32_t kIndexFormatVersion = 1;

}  // namespace qcg
