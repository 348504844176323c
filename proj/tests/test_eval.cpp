#include <doctest.h>

#include "qcg/errors.hpp"
#include "qcg/eval.hpp"
#include "qcg/prompts.hpp"

using namespace qcg;

namespace {

QAItem item_of(const std::string& qtype, std::vector<EvidenceRef> evidence = {}) {
    QAItem item;
    item.question = "the question";
    item.gold_answer = "the gold answer";
    item.qtype = qtype;
    item.evidence = std::move(evidence);
    return item;
}

}  // namespace

TEST_CASE("judge parses a clean verdict and decodes deterministically") {
    ScriptedGenerator gen;
    gen.add_response(render_judge_prompt("q", "gold", "cand"), R"({"score": 1})");
    CHECK(judge("q", "gold", "cand", gen) == 1);
    auto calls = gen.calls();
    REQUIRE(calls.size() == 1);
    CHECK(calls[0].params.temperature == 0.0);  // judge path overrides sampling
}

TEST_CASE("judge tolerates prose around the verdict object") {
    ScriptedGenerator gen;
    gen.add_response(render_judge_prompt("q", "gold", "cand"),
                     "Sure. After careful review:\n{\"score\": 0}\nHope that helps!");
    CHECK(judge("q", "gold", "cand", gen) == 0);
}

TEST_CASE("judge reprompts once, then errors without silently scoring zero") {
    ScriptedGenerator gen;
    gen.add_response(render_judge_prompt("q", "gold", "cand"), "io cannot evaluate this");
    CHECK_THROWS_AS(judge("q", "gold", "cand", gen), JudgeParseError);
    CHECK(gen.stats().generate_calls == 2);
}

TEST_CASE("judge rejects out-of-range scores") {
    ScriptedGenerator gen;
    gen.add_response(render_judge_prompt("q", "gold", "cand"), R"({"score": 7})");
    CHECK_THROWS_AS(judge("q", "gold", "cand", gen), JudgeParseError);
}

TEST_CASE("exact match ignores case, punctuation, and spacing") {
    CHECK(exact_match("LiHua & Chae & Yuriko", "lihua chae yuriko"));
    CHECK(exact_match("Hong Kong.", "hong  kong"));
    CHECK_FALSE(exact_match("Hong Kong", "Hong Kong island"));
}

TEST_CASE("evidence recall counts per-unit hits") {
    auto doc_of = [](const std::string& chunk_id) {
        return chunk_id.substr(0, chunk_id.find("-chunk-"));
    };
    SUBCASE("superset topk hits everything") {
        auto item = item_of("Multi", {{"a", {"a-chunk-0"}, false}, {"b", {"b-chunk-0"}, false}});
        auto r = evidence_recall({"a-chunk-0", "b-chunk-0", "c-chunk-0"}, item, doc_of);
        CHECK(r.recall == 1.0);
        CHECK(r.per_evidence == std::vector<bool>{true, true});
    }
    SUBCASE("disjoint topk hits nothing") {
        auto item = item_of("Multi", {{"a", {"a-chunk-0"}, false}});
        auto r = evidence_recall({"x-chunk-0"}, item, doc_of);
        CHECK(r.recall == 0.0);
    }
    SUBCASE("doc-level evidence: 3 of 4 docs covered gives 0.75") {
        auto item = item_of("Multi", {{"d1", {}, true},
                                      {"d2", {}, true},
                                      {"d3", {}, true},
                                      {"d4", {}, true}});
        auto r = evidence_recall({"d1-chunk-0", "d2-chunk-3", "d3-chunk-1", "x-chunk-0"},
                                 item, doc_of);
        CHECK(r.recall == 0.75);
        CHECK(r.per_evidence == std::vector<bool>{true, true, true, false});
    }
    SUBCASE("doc-level evidence also hits through listed chunk ids") {
        auto item = item_of("Multi", {{"doc-451",
                                       {"doc-451-chunk-0", "doc-451-chunk-1"},
                                       true}});
        auto r = evidence_recall({"doc-451-chunk-1"}, item, doc_of);
        CHECK(r.recall == 1.0);
    }
    SUBCASE("items without evidence are a usage error") {
        auto item = item_of("Null");
        CHECK_THROWS_AS(evidence_recall({"a-chunk-0"}, item, doc_of), DataError);
    }
}

TEST_CASE("aggregate arithmetic") {
    std::vector<EvalRecord> records(3);
    records[0].item = item_of("Multi");
    records[0].generated = true;
    records[0].judge_score = 1;
    records[1].item = item_of("Multi");
    records[1].generated = true;
    records[1].judge_score = 0;
    records[2].item = item_of("Single");
    records[2].generated = true;
    records[2].judge_score = 1;
    records[2].exact = true;

    Report report = aggregate(records);
    CHECK(report.total_items == 3);
    CHECK(*report.judge_accuracy() == doctest::Approx(2.0 / 3.0));
    CHECK(report.exact_match_accuracy() == doctest::Approx(1.0 / 3.0));
    CHECK(report.per_type.at("Multi").judged == 2);
    CHECK(report.per_type.at("Multi").judge_correct == 1);
    CHECK(report.per_type.at("Single").judge_correct == 1);

    SUBCASE("per-type counts weighted by bucket size reproduce the overall accuracy") {
        int correct = 0, judged = 0;
        for (const auto& [name, stats] : report.per_type) {
            correct += stats.judge_correct;
            judged += stats.judged;
        }
        CHECK(static_cast<double>(correct) / judged == *report.judge_accuracy());
    }
    SUBCASE("absent buckets are omitted, not zeroed") {
        CHECK(report.per_type.count("Null") == 0);
        CHECK(report.to_json().at("per_type").contains("Null") == false);
    }
}

TEST_CASE("judge errors are excluded from accuracy but counted") {
    std::vector<EvalRecord> records(2);
    records[0].item = item_of("Single");
    records[0].judge_score = 1;
    records[1].item = item_of("Single");
    records[1].judge_errored = true;  // no score
    Report report = aggregate(records);
    CHECK(report.judge_errors == 1);
    CHECK(report.judged_items == 1);
    CHECK(*report.judge_accuracy() == 1.0);
}

TEST_CASE("aggregate refuses an empty record set") {
    CHECK_THROWS_AS(aggregate({}), DataError);
}

TEST_CASE("run_items survives judge failures and reports them") {
    // one-chunk world built through the real pipeline pieces
    HashEmbedder embedder(64);
    GraphBuildInput input;
    Chunk chunk;
    chunk.chunk_id = "d-chunk-0";
    chunk.doc_id = "d";
    chunk.text = "alpha beta gamma delta";
    chunk.token_count = 4;
    input.chunks = {chunk};
    ScoredPair sp;
    sp.pair = QAPair{"d-chunk-0", 0, "alpha beta", "gamma"};
    sp.embedding = embedder.embed("alpha beta gamma");
    input.retained.push_back(sp);
    input.baseline_embeddings = false;
    auto graph = build_graph(input, GraphConfig{1, false}, embedder);

    QAItem item;
    item.question = "alpha beta?";
    item.gold_answer = "gamma";
    item.qtype = "Single";
    item.evidence = {{"d", {"d-chunk-0"}, false}};

    RetrievalConfig cfg;
    cfg.gamma = 0.0;
    cfg.max_nodes = 5;
    cfg.hops = 0;
    cfg.top_k = 1;

    ScriptedGenerator gen;
    auto trace = retrieve(item.question, graph, embedder, cfg, RetrievalMode::qcg);
    std::vector<ContextBlock> blocks;
    for (const auto& chunk_id : trace.topk_chunk_ids)
        blocks.push_back(
            ContextBlock{chunk_id, graph.chunk_at(*graph.chunk_index(chunk_id)).chunk.text});
    gen.add_response(render_response_prompt(blocks, item.question), "gamma");
    gen.add_response(render_judge_prompt(item.question, item.gold_answer, "gamma"),
                     "utterly unparseable");  // judge will fail twice

    EvalOptions options;
    options.with_generation = true;
    options.with_judge = true;
    auto records = run_items(graph, {item}, embedder, &gen, cfg, RetrievalMode::qcg, options);
    REQUIRE(records.size() == 1);
    CHECK(records[0].judge_errored);
    CHECK_FALSE(records[0].judge_score.has_value());
    CHECK(records[0].exact);  // generation still happened and matched gold

    Report report = aggregate(records);
    CHECK(report.judge_errors == 1);
    CHECK(report.judged_items == 0);
    CHECK_FALSE(report.judge_accuracy().has_value());
}

TEST_CASE("identical runs serialize to identical report bytes") {
    std::vector<EvalRecord> records(2);
    records[0].item = item_of("Multi");
    records[0].judge_score = 1;
    records[0].recall = RecallResult{{true, false}, 0.5};
    records[1].item = item_of("Null");
    records[1].judge_score = 0;
    auto a = aggregate(records).to_json().dump();
    auto b = aggregate(records).to_json().dump();
    CHECK(a == b);
}
