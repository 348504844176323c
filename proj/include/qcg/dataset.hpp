#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace qcg {

// One annotated evidence unit. Chunk-level evidence lists the exact chunk
// ids that count as hits; doc-level evidence counts any retrieved chunk of
// the document.
struct EvidenceRef {
    std::string doc_id;
    std::vector<std::string> chunk_ids;
    bool doc_level = false;
};

struct QAItem {
    std::string question;
    std::string gold_answer;
    std::string qtype;  // Single | Multi | Inference | Comparison | Temporal | Null | raw label
    std::vector<EvidenceRef> evidence;

    bool is_null_type() const { return qtype == "Null"; }
};

enum class DatasetSchema { lihua, multihop, generic };

DatasetSchema dataset_schema_from_string(const std::string& name);

// JSONL loader. lihua records carry chunk-level evidence
// ({"doc_id","chunk_id"} objects); multihop records carry doc-level
// evidence ({"doc_id","chunk_id":[...]}) and type names like
// "comparison_query". Unknown type strings pass through as-is. `limit`
// keeps only the first N items. Throws DataError naming the offending line.
std::vector<QAItem> load_dataset(const std::filesystem::path& path, DatasetSchema schema,
                                 std::optional<int> limit = std::nullopt);

}  // namespace qcg
