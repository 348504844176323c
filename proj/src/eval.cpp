#include "qcg/eval.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "qcg/errors.hpp"
#include "qcg/prompts.hpp"
#include "qcg/util.hpp"

namespace qcg {

using nlohmann::json;

namespace {

// Pulls {"score": X} out of a response that may wrap the object in prose.
std::optional<int> parse_judge_score(const std::string& response) {
    for (std::size_t pos = response.find('{'); pos != std::string::npos;
         pos = response.find('{', pos + 1)) {
        int depth = 0;
        bool in_string = false, escaped = false;
        for (std::size_t i = pos; i < response.size(); ++i) {
            char c = response[i];
            if (in_string) {
                if (escaped)
                    escaped = false;
                else if (c == '\\')
                    escaped = true;
                else if (c == '"')
                    in_string = false;
                continue;
            }
            if (c == '"') in_string = true;
            else if (c == '{') ++depth;
            else if (c == '}') {
                if (--depth == 0) {
                    json parsed = json::parse(response.substr(pos, i - pos + 1), nullptr, false);
                    if (parsed.is_object() && parsed.contains("score")) {
                        const json& score = parsed.at("score");
                        if (score.is_number_integer()) {
                            int value = score.get<int>();
                            if (value == 0 || value == 1) return value;
                        }
                    }
                    break;
                }
            }
        }
    }
    return std::nullopt;
}

}  // namespace

int judge(const std::string& question, const std::string& gold, const std::string& candidate,
          Generator& gen) {
    const std::string prompt = render_judge_prompt(question, gold, candidate);
    const GenerationParams params = deterministic_params();
    std::string response = gen.generate(prompt, params);
    auto score = parse_judge_score(response);
    if (!score) {
        response = gen.generate(prompt, params);  // one reprompt
        score = parse_judge_score(response);
    }
    if (!score)
        throw JudgeParseError("judge returned no parseable {\"score\": 0|1} after reprompt; got: \"" +
                              response.substr(0, 160) + "\"");
    return *score;
}

bool exact_match(const std::string& gold, const std::string& candidate) {
    auto normalize = [](const std::string& s) {
        std::string out;
        bool pending_space = false;
        for (unsigned char c : s) {
            if (std::isalnum(c) || c >= 0x80) {
                if (pending_space && !out.empty()) out.push_back(' ');
                pending_space = false;
                out.push_back(static_cast<char>(std::tolower(c)));
            } else {
                pending_space = true;
            }
        }
        return out;
    };
    return normalize(gold) == normalize(candidate);
}

RecallResult evidence_recall(const std::vector<std::string>& topk_chunk_ids, const QAItem& item,
                             const std::function<std::string(const std::string&)>& doc_of_chunk) {
    if (item.evidence.empty())
        throw DataError("evidence_recall called on an item with no evidence");
    RecallResult result;
    result.per_evidence.reserve(item.evidence.size());
    int hits = 0;
    for (const auto& ref : item.evidence) {
        bool hit = false;
        for (const auto& chunk_id : topk_chunk_ids) {
            if (!ref.chunk_ids.empty() &&
                std::find(ref.chunk_ids.begin(), ref.chunk_ids.end(), chunk_id) !=
                    ref.chunk_ids.end()) {
                hit = true;
                break;
            }
            if (ref.doc_level && !ref.doc_id.empty() && doc_of_chunk(chunk_id) == ref.doc_id) {
                hit = true;
                break;
            }
        }
        result.per_evidence.push_back(hit);
        hits += hit ? 1 : 0;
    }
    result.recall = static_cast<double>(hits) / static_cast<double>(item.evidence.size());
    return result;
}

json EvalRecord::to_json() const {
    json evidence = json::array();
    for (const auto& ref : item.evidence) {
        evidence.push_back(json{{"doc_id", ref.doc_id},
                                {"chunk_id", ref.chunk_ids},
                                {"doc_level", ref.doc_level}});
    }
    json j{{"question", item.question},
           {"answer", item.gold_answer},
           {"type", item.qtype},
           {"evidence", evidence},
           {"results", trace.to_json()}};
    j["results"]["response"] = answer;
    if (judge_score) j["score"] = *judge_score;
    if (judge_errored) j["judge_error"] = true;
    j["exact_match"] = exact;
    if (recall) {
        j["evidence_hits"] = recall->per_evidence;
        j["evidence_recall"] = recall->recall;
    }
    return j;
}

std::optional<double> Report::judge_accuracy() const {
    if (judged_items == 0) return std::nullopt;
    return static_cast<double>(judge_correct) / judged_items;
}

double Report::exact_match_accuracy() const {
    return total_items == 0 ? 0.0 : static_cast<double>(exact_correct) / total_items;
}

std::optional<double> Report::mean_evidence_recall() const {
    if (recall_count == 0) return std::nullopt;
    return recall_sum / recall_count;
}

json Report::to_json() const {
    json types = json::object();
    for (const auto& [name, stats] : per_type) {
        json t{{"count", stats.count},
               {"exact_match_accuracy",
                stats.count ? static_cast<double>(stats.exact_correct) / stats.count : 0.0}};
        if (stats.judged) t["judge_accuracy"] = static_cast<double>(stats.judge_correct) / stats.judged;
        if (stats.recall_count) t["evidence_recall"] = stats.recall_sum / stats.recall_count;
        types[name] = std::move(t);
    }
    json j{{"total_items", total_items},
           {"judge_errors", judge_errors},
           {"per_type", types}};
    if (generated_items > 0) j["exact_match_accuracy"] = exact_match_accuracy();
    if (auto acc = judge_accuracy()) j["judge_accuracy"] = *acc;
    if (auto rec = mean_evidence_recall()) j["evidence_recall"] = *rec;
    return j;
}

std::string Report::to_table() const {
    std::ostringstream out;
    auto pct = [](double v) {
        std::ostringstream s;
        s.setf(std::ios::fixed);
        s.precision(2);
        s << v * 100.0 << "%";
        return s.str();
    };
    out << "items: " << total_items << "\n";
    if (auto acc = judge_accuracy()) out << "judge accuracy:   " << pct(*acc) << "\n";
    if (judge_errors > 0) out << "judge errors:     " << judge_errors << "\n";
    if (generated_items > 0) out << "exact match:      " << pct(exact_match_accuracy()) << "\n";
    if (auto rec = mean_evidence_recall()) out << "evidence recall:  " << pct(*rec) << "\n";
    for (const auto& [name, stats] : per_type) {
        out << "  " << name << " (" << stats.count << ")";
        if (stats.judged)
            out << "  judge " << pct(static_cast<double>(stats.judge_correct) / stats.judged);
        if (generated_items > 0)
            out << "  exact "
                << pct(stats.count ? static_cast<double>(stats.exact_correct) / stats.count : 0.0);
        if (stats.recall_count) out << "  recall " << pct(stats.recall_sum / stats.recall_count);
        out << "\n";
    }
    return out.str();
}

Report aggregate(const std::vector<EvalRecord>& records) {
    if (records.empty()) throw DataError("aggregate called with no records");
    Report report;
    for (const auto& rec : records) {
        ++report.total_items;
        if (rec.generated) ++report.generated_items;
        TypeStats& t = report.per_type[rec.item.qtype];
        ++t.count;
        if (rec.judge_errored) ++report.judge_errors;
        if (rec.judge_score) {
            ++report.judged_items;
            ++t.judged;
            report.judge_correct += *rec.judge_score;
            t.judge_correct += *rec.judge_score;
        }
        if (rec.exact) {
            ++report.exact_correct;
            ++t.exact_correct;
        }
        if (rec.recall) {
            report.recall_sum += rec.recall->recall;
            ++report.recall_count;
            t.recall_sum += rec.recall->recall;
            ++t.recall_count;
        }
    }
    return report;
}

std::vector<EvalRecord> run_items(const QCGraph& graph, const std::vector<QAItem>& items,
                                  Embedder& embedder, Generator* gen,
                                  const RetrievalConfig& cfg, RetrievalMode mode,
                                  const EvalOptions& options) {
    if ((options.with_generation || options.with_judge) && gen == nullptr)
        throw ConfigError("generation/judging requested but no generator configured");
    if (options.question_embeddings && options.question_embeddings->size() != items.size())
        throw ConfigError("question_embeddings must parallel items");

    auto doc_of_chunk = [&graph](const std::string& chunk_id) -> std::string {
        auto idx = graph.chunk_index(chunk_id);
        return idx ? graph.chunk_at(*idx).chunk.doc_id : std::string{};
    };

    std::vector<EvalRecord> records(items.size());
    parallel_for(items.size(), options.parallelism, [&](std::size_t i) {
        const QAItem& item = items[i];
        EvalRecord rec;
        rec.item = item;
        if (options.question_embeddings) {
            rec.trace = retrieve_with_embedding((*options.question_embeddings)[i], item.question,
                                                graph, cfg, mode);
        } else {
            rec.trace = retrieve(item.question, graph, embedder, cfg, mode);
        }
        if (!item.evidence.empty())
            rec.recall = evidence_recall(rec.trace.topk_chunk_ids, item, doc_of_chunk);
        if (options.with_generation) {
            auto outcome = generate_answer(item.question, rec.trace, graph, *gen,
                                           options.generation_params, cfg);
            rec.generated = true;
            rec.answer = outcome.answer;
            rec.exact = exact_match(item.gold_answer, rec.answer);
            if (options.with_judge) {
                try {
                    rec.judge_score = judge(item.question, item.gold_answer, rec.answer, *gen);
                } catch (const JudgeParseError& e) {
                    rec.judge_errored = true;  // excluded from accuracy, counted in the report
                    log_warn(std::string("judge error: ") + e.what());
                }
            }
        }
        records[i] = std::move(rec);
    });
    return records;
}

void write_results(const std::vector<EvalRecord>& records, const Report& report,
                   const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream items(dir / "records.jsonl");
    if (!items) throw DataError("cannot write results to " + dir.string());
    for (const auto& rec : records) items << rec.to_json().dump() << "\n";
    std::ofstream rep(dir / "report.json");
    rep << report.to_json().dump(2) << "\n";
}

}  // namespace qcg
