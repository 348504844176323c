#include "qcg/prompts.hpp"

namespace qcg::detail {

const char* const kDoc2QueryTemplate =
    R"qcgprompt(---Role---

You are a **Doc2Query** assistant.  

---Goal---

Given a text chunk, generate {{NUM_QUERIES}} distinct user queries that can be directly answered by that chunk.  
For each query, also provide an exact answer and a relevance score.

---Generation rules---

1. **Answerability** - Every query must be answerable using only information in the chunk. 

2. **Comprehensive coverage** - Collectively, the all generated queries should cover all key ideas in the chunk from different viewpoints or levels of detail.  

3. **Diversity requirements** - Ensure diversity along the following dimensions:
   - *Question-style variety* - Mix interrogative forms (who/what/why/how/where/when/did), imperative prompts ("List...", "Summarize..."), comparative questions, conditional or speculative forms, etc.
   - *Content-perspective variety* - Include queries on facts, definitions, methods, reasons, outcomes, examples, comparisons, limitations, and so on.  
   - *Information granularity* - Combine macro (overall purpose, high-level summary) and micro (specific figures, terms, steps) queries.  
   - *User-intent variety* - Simulate intents such as confirmation, evaluation, usability, diagnosis, and decision-making (e.g., "Is this approach more efficient than ...?").  
   - *Linguistic expression variety* - Vary wording, syntax (active <--> passive), and synonyms; avoid repeating near-identical phrases.  
   - *No redundancy* - Each query must be meaningfully distinct; eliminate trivial rephrases that offer no new angle.
   - *Chunk-grounded specificity* - Queries must be grounded in specific factual points from the chunk. Avoid vague or generic formulations such as "What did X say?" or "Tell me more about Y" that lack anchoring in actual content.

4. **Required fields** - Each output item must be based on the given chunk and include the following fields:
    - **query** - A question or search phrase a user might ask.  
    - **answer** - A concise answer taken verbatim (or nearly verbatim) from the chunk.  

---Example---

1. **Input Chunk**
    - Alice met with Bob at the Central Cafe on Tuesday to discuss their upcoming collaborative research project. During the meeting, Bob suggested incorporating advanced AI methodologies into their experimental design, which Alice enthusiastically supported. They agreed to present their initial findings at the International AI Conference next March.

2. **Generated Queries**
    - Where did Alice and Bob meet?
    - When did the meeting take place?
    - What was the main topic discussed during the meeting?
    - Who suggested incorporating advanced AI methodologies?
    - Did Alice support Bob's suggestion about AI methodologies?
    - When will Alice and Bob present their initial findings?
    - At which conference will their findings be presented?
    - What kind of methodologies were discussed?
    - What is the nature of Alice and Bob's project?
    - Who participated in the meeting at Central Cafe?

---Output format---

Return *only* the following JSON array; do not include any additional text. Include an `index` field for each query.

[
  {"index": 0, "query": "", "answer": ""},
  {"index": 1, "query": "", "answer": ""},
  ...
  {"index": {{LAST_INDEX}}, "query": "", "answer": ""}
]
)qcgprompt";

const char* const kResponseTemplate =
    R"qcgprompt(---Role---

You are a helpful assistant responding to questions about data in the tables provided.

---Goal---

Generate a response of the target length and format that responds to the user's question, summarizing all information in the input data tables appropriate for the response length and format, and incorporating any relevant general knowledge.
If you don't know the answer, just say so. Do not make anything up.
Do not include information where the supporting evidence for it is not provided.

---Target response length and format---

Multiple Paragraphs

Add sections and commentary to the response as appropriate for the length and format. Style the response in markdown.
)qcgprompt";

const char* const kJudgeTemplate =
    R"qcgprompt(---Role---

You are a helpful evaluation assistant.
You will be given a question, a gold-standard answer, and a candidate answer generated via retrieval-augmented generation (RAG).

---Goal---

Evaluate the candidate answer against the gold-standard answer based on factual accuracy and completeness in answering the question.

Scoring Criteria:
- score=1 (Correct): The candidate answer is factually accurate and fully or reasonably paraphrases the gold-standard answer.
- score=0 (Incorrect): The candidate answer is factually incorrect, irrelevant, incomplete, or does not answer the question.

---Output Format---

Provide your evaluation in the following JSON format:

{
  "score": X
}
where X is either 1 or 0.
)qcgprompt";

}  // namespace qcg::detail
