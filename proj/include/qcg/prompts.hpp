#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace qcg {

namespace detail {
extern const char* const kDoc2QueryTemplate;
extern const char* const kResponseTemplate;
extern const char* const kJudgeTemplate;
}  // namespace detail

struct ContextBlock {
    std::string chunk_id;
    std::string text;
};

// Doc2Query instruction sheet with the requested query count and the source
// chunk appended as an input section.
std::string render_doc2query_prompt(std::string_view chunk_text, int num_queries);

// Answer-generation prompt: instruction sheet, the retrieved chunks in rank
// order as data tables, then the user question.
std::string render_response_prompt(const std::vector<ContextBlock>& chunks,
                                   std::string_view question);

// Binary-verdict evaluation prompt over (question, gold, candidate).
std::string render_judge_prompt(std::string_view question, std::string_view gold,
                                std::string_view candidate);

}  // namespace qcg
