#include "qcg/prompts.hpp"

#include "qcg/errors.hpp"

namespace qcg {

namespace {

void replace_once(std::string& text, std::string_view placeholder, const std::string& value) {
    auto pos = text.find(placeholder);
    if (pos == std::string::npos)
        throw Error("prompt template is missing placeholder: " + std::string(placeholder));
    text.replace(pos, placeholder.size(), value);
}

}  // namespace

std::string render_doc2query_prompt(std::string_view chunk_text, int num_queries) {
    if (num_queries < 1) throw ConfigError("num_queries must be >= 1");
    std::string prompt = detail::kDoc2QueryTemplate;
    replace_once(prompt, "{{NUM_QUERIES}}", std::to_string(num_queries));
    replace_once(prompt, "{{LAST_INDEX}}", std::to_string(num_queries - 1));
    prompt += "\n---Input Chunk---\n\n";
    prompt += chunk_text;
    prompt += "\n";
    return prompt;
}

std::string render_response_prompt(const std::vector<ContextBlock>& chunks,
                                   std::string_view question) {
    std::string prompt = detail::kResponseTemplate;
    prompt += "\n---Data tables---\n";
    for (const auto& block : chunks) {
        prompt += "\n-----Chunk ";
        prompt += block.chunk_id;
        prompt += "-----\n";
        prompt += block.text;
        prompt += "\n";
    }
    prompt += "\n---User Question---\n\n";
    prompt += question;
    prompt += "\n";
    return prompt;
}

std::string render_judge_prompt(std::string_view question, std::string_view gold,
                                std::string_view candidate) {
    std::string prompt = detail::kJudgeTemplate;
    prompt += "\n---Question---\n\n";
    prompt += question;
    prompt += "\n\n---Gold-standard Answer---\n\n";
    prompt += gold;
    prompt += "\n\n---Candidate Answer---\n\n";
    prompt += candidate;
    prompt += "\n";
    return prompt;
}

}  // namespace qcg
