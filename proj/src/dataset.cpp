#include "qcg/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include <nlohmann/json.hpp>

#include "qcg/errors.hpp"

namespace qcg {

using nlohmann::json;

DatasetSchema dataset_schema_from_string(const std::string& name) {
    if (name == "lihua") return DatasetSchema::lihua;
    if (name == "multihop") return DatasetSchema::multihop;
    if (name == "generic") return DatasetSchema::generic;
    throw ConfigError("unknown dataset schema '" + name + "' (expected lihua|multihop|generic)");
}

namespace {

std::string lowered(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string normalize_type(const std::string& raw) {
    std::string low = lowered(raw);
    if (low == "single" || low == "single_query" || low == "singlehop") return "Single";
    if (low == "multi" || low == "multi_query" || low == "multihop") return "Multi";
    if (low == "null" || low == "null_query" || low == "unanswerable") return "Null";
    if (low == "inference" || low == "inference_query") return "Inference";
    if (low == "comparison" || low == "comparison_query") return "Comparison";
    if (low == "temporal" || low == "temporal_query") return "Temporal";
    return raw;  // raw passthrough label
}

std::vector<std::string> chunk_ids_of(const json& value) {
    std::vector<std::string> ids;
    if (value.is_string()) {
        ids.push_back(value.get<std::string>());
    } else if (value.is_array()) {
        for (const auto& v : value)
            if (v.is_string()) ids.push_back(v.get<std::string>());
    }
    return ids;
}

QAItem parse_item(const json& j, DatasetSchema schema, std::size_t line_no) {
    auto fail = [&](const std::string& msg) -> DataError {
        return DataError("dataset line " + std::to_string(line_no) + ": " + msg);
    };
    if (!j.is_object()) throw fail("record is not an object");
    if (!j.contains("question") || !j.at("question").is_string())
        throw fail("missing string field 'question'");
    if (!j.contains("answer") || !j.at("answer").is_string())
        throw fail("missing string field 'answer'");

    QAItem item;
    item.question = j.at("question").get<std::string>();
    item.gold_answer = j.at("answer").get<std::string>();
    if (j.contains("type") && j.at("type").is_string())
        item.qtype = normalize_type(j.at("type").get<std::string>());
    else if (schema == DatasetSchema::generic)
        item.qtype = "Other";
    else
        throw fail("missing string field 'type'");

    const bool doc_level = schema == DatasetSchema::multihop;
    if (j.contains("evidence")) {
        const json& evidence = j.at("evidence");
        if (!evidence.is_array()) throw fail("'evidence' must be an array");
        for (const auto& ev : evidence) {
            EvidenceRef ref;
            if (ev.is_string()) {
                // bare doc id
                ref.doc_id = ev.get<std::string>();
                ref.doc_level = true;
            } else if (ev.is_object()) {
                ref.doc_id = ev.value("doc_id", std::string{});
                if (ev.contains("chunk_id")) ref.chunk_ids = chunk_ids_of(ev.at("chunk_id"));
                if (ev.contains("chunk_ids")) ref.chunk_ids = chunk_ids_of(ev.at("chunk_ids"));
                ref.doc_level = doc_level || ref.chunk_ids.empty();
            } else {
                throw fail("evidence entries must be objects or doc-id strings");
            }
            if (ref.doc_id.empty() && ref.chunk_ids.empty())
                throw fail("evidence entry has neither doc_id nor chunk ids");
            item.evidence.push_back(std::move(ref));
        }
    }
    if (schema != DatasetSchema::generic && !item.is_null_type() && item.evidence.empty())
        throw fail("non-Null item must list at least one evidence chunk");
    return item;
}

}  // namespace

std::vector<QAItem> load_dataset(const std::filesystem::path& path, DatasetSchema schema,
                                 std::optional<int> limit) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file: " + path.string());
    std::vector<QAItem> items;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw DataError("dataset line " + std::to_string(line_no) + ": invalid JSON (" +
                            e.what() + ")");
        }
        items.push_back(parse_item(j, schema, line_no));
        if (limit && items.size() >= static_cast<std::size_t>(*limit)) break;
    }
    return items;
}

}  // namespace qcg
