#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qcg/dataset.hpp"
#include "qcg/retrieval.hpp"

namespace qcg {

// Binary LLM-as-judge verdict. Renders the evaluation prompt, decodes
// deterministically (temperature 0), and parses {"score": 0|1}. One
// reprompt on parse failure, then JudgeParseError.
int judge(const std::string& question, const std::string& gold, const std::string& candidate,
          Generator& gen);

// Lowercased, punctuation-stripped, whitespace-collapsed equality. The
// cheap automatic metric reported alongside the judge verdict.
bool exact_match(const std::string& gold, const std::string& candidate);

struct RecallResult {
    std::vector<bool> per_evidence;  // parallel to item.evidence
    double recall = 0.0;             // hits / |evidence|
};

// For each annotated evidence unit, whether any of the top-K chunk ids hits
// it (chunk-level: id match; doc-level: the chunk's doc matches).
// doc_of_chunk maps a chunk id to its doc id ("" when unknown).
RecallResult evidence_recall(const std::vector<std::string>& topk_chunk_ids, const QAItem& item,
                             const std::function<std::string(const std::string&)>& doc_of_chunk);

struct EvalRecord {
    QAItem item;
    RetrievalTrace trace;
    bool generated = false;  // an answer was produced for this item
    std::string answer;
    std::optional<int> judge_score;  // absent: not judged, or judge errored
    bool judge_errored = false;
    bool exact = false;
    std::optional<RecallResult> recall;  // absent for Null items

    nlohmann::json to_json() const;
};

struct TypeStats {
    int count = 0;
    int judged = 0;
    int judge_correct = 0;
    int exact_correct = 0;
    double recall_sum = 0.0;
    int recall_count = 0;
};

struct Report {
    int total_items = 0;
    int generated_items = 0;
    int judged_items = 0;
    int judge_correct = 0;
    int judge_errors = 0;
    int exact_correct = 0;
    double recall_sum = 0.0;
    int recall_count = 0;
    std::map<std::string, TypeStats> per_type;  // only types that occur

    std::optional<double> judge_accuracy() const;
    double exact_match_accuracy() const;
    std::optional<double> mean_evidence_recall() const;

    nlohmann::json to_json() const;
    std::string to_table() const;
};

Report aggregate(const std::vector<EvalRecord>& records);

struct EvalOptions {
    bool with_generation = false;  // produce answers (requires a generator)
    bool with_judge = false;       // run the LLM judge on generated answers
    int parallelism = 1;
    GenerationParams generation_params;
    // Precomputed question embeddings parallel to items (sweeps reuse them).
    const std::vector<Embedding>* question_embeddings = nullptr;
};

// Retrieves (and optionally generates + judges) every item. Records come
// back in item order regardless of parallelism.
std::vector<EvalRecord> run_items(const QCGraph& graph, const std::vector<QAItem>& items,
                                  Embedder& embedder, Generator* gen,
                                  const RetrievalConfig& cfg, RetrievalMode mode,
                                  const EvalOptions& options);

// Writes one JSON record per item plus the aggregate report.
void write_results(const std::vector<EvalRecord>& records, const Report& report,
                   const std::filesystem::path& dir);

}  // namespace qcg
