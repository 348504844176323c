// qcg: build, query, evaluate, and sweep query-centric graph RAG indexes.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qcg/dataset.hpp"
#include "qcg/eval.hpp"
#include "qcg/index_io.hpp"
#include "qcg/pipeline.hpp"
#include "qcg/run_config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Exit codes: 0 ok, 1 unexpected, 2 config, 3 transport, 4 parse, 5 data.
int guarded(const std::function<void()>& fn) {
    try {
        fn();
        return 0;
    } catch (const qcg::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const qcg::TransportError& e) {
        std::cerr << "transport error: " << e.what() << "\n";
        return 3;
    } catch (const qcg::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 4;
    } catch (const qcg::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 5;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

struct CommonOpts {
    std::string workdir = ".";
    std::string config_file;
    std::string preset;
    std::string embedder;
    std::string generator;
    std::optional<int> chunk_size, overlap, pairs_per_chunk, k, n, h, top_k, cap, parallelism;
    std::optional<double> alpha, gamma;
    bool symmetrize = false;
    bool strict = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--workdir", o.workdir, "Directory relative paths resolve against");
    cmd->add_option("-c,--config", o.config_file, "JSON run-config file (flags override it)");
    cmd->add_option("--preset", o.preset, "Hyperparameter preset: lihua or multihop");
    cmd->add_option("--embedder", o.embedder, "Embedder spec: hash[:dim] or http[:dim]");
    cmd->add_option("--generator", o.generator,
                    "Generator spec: none, http, or scripted:<fixtures.json>");
    cmd->add_option("--chunk-size", o.chunk_size, "Tokens per chunk");
    cmd->add_option("--overlap", o.overlap, "Token overlap between chunks");
    cmd->add_option("-M,--pairs-per-chunk", o.pairs_per_chunk, "Generated pairs per chunk");
    cmd->add_option("--alpha", o.alpha, "Retained fraction of pairs, in (0,1]");
    cmd->add_option("-k,--knn", o.k, "Intra-edge neighbors per query node");
    cmd->add_flag("--symmetrize", o.symmetrize, "Add reverse intra edges");
    cmd->add_option("--gamma", o.gamma, "Query score threshold in [0,2]");
    cmd->add_option("-n,--max-nodes", o.n, "Max retrieved query nodes");
    cmd->add_option("--hops", o.h, "Neighbor expansion hops");
    cmd->add_option("-K,--topk", o.top_k, "Chunks passed to generation");
    cmd->add_option("--context-cap", o.cap, "Generation context token cap");
    cmd->add_option("-j,--parallelism", o.parallelism, "Worker threads");
    cmd->add_flag("--strict", o.strict, "Retry generation once when fewer than M pairs parse");
}

fs::path resolve(const std::string& workdir, const std::string& path) {
    fs::path p(path);
    return p.is_absolute() ? p : fs::path(workdir) / p;
}

qcg::RunConfig resolve_config(const CommonOpts& o) {
    qcg::RunConfig cfg;
    if (!o.config_file.empty())
        cfg = qcg::RunConfig::from_file(resolve(o.workdir, o.config_file));
    if (!o.preset.empty()) cfg.apply_preset(o.preset);
    if (o.chunk_size) cfg.chunking.chunk_size = *o.chunk_size;
    if (o.overlap) cfg.chunking.overlap = *o.overlap;
    if (o.pairs_per_chunk) cfg.expansion.pairs_per_chunk = *o.pairs_per_chunk;
    if (o.alpha) cfg.expansion.alpha = *o.alpha;
    if (o.strict) cfg.expansion.strict = true;
    if (o.k) cfg.graph.k = *o.k;
    if (o.symmetrize) cfg.graph.symmetrize = true;
    if (o.gamma) cfg.retrieval.gamma = *o.gamma;
    if (o.n) cfg.retrieval.max_nodes = *o.n;
    if (o.h) cfg.retrieval.hops = *o.h;
    if (o.top_k) cfg.retrieval.top_k = *o.top_k;
    if (o.cap) cfg.retrieval.context_token_cap = *o.cap;
    if (o.parallelism) cfg.parallelism = *o.parallelism;
    if (!o.embedder.empty()) cfg.embedder_spec = o.embedder;
    if (!o.generator.empty()) {
        cfg.generator_spec = o.generator;
        if (cfg.generator_spec.rfind("scripted:", 0) == 0) {
            auto fixture = cfg.generator_spec.substr(9);
            cfg.generator_spec = "scripted:" + resolve(o.workdir, fixture).string();
        }
    }
    cfg.validate();
    return cfg;
}

// Picks an embedder matching what the index was built with unless the user
// named one explicitly.
std::shared_ptr<qcg::Embedder> embedder_for_index(const qcg::QCGraph& graph,
                                                  const qcg::RunConfig& cfg,
                                                  bool explicit_spec) {
    const auto& bc = graph.build_config();
    std::string spec = cfg.embedder_spec;
    if (!explicit_spec) spec = bc.embedder_name + ":" + std::to_string(bc.embedding_dim);
    auto embedder = qcg::make_embedder_spec(spec, cfg.embed_provider);
    if (embedder->dim() != bc.embedding_dim)
        throw qcg::ConfigError("embedder dim " + std::to_string(embedder->dim()) +
                               " does not match index dim " + std::to_string(bc.embedding_dim));
    return embedder;
}

void echo_config(const qcg::RunConfig& cfg) {
    std::cerr << "resolved config: " << cfg.to_json().dump() << "\n";
}

// ---------------------------------------------------------------------------

int cmd_build(const CommonOpts& common, const std::string& corpus, const std::string& out,
              const std::string& cache_path, const std::string& report_path,
              const std::string& embeddings_mode) {
    return guarded([&] {
        qcg::RunConfig cfg = resolve_config(common);
        if (!corpus.empty()) cfg.corpus_path = corpus;
        if (cfg.corpus_path.empty()) throw qcg::ConfigError("build needs --corpus");
        echo_config(cfg);

        // On failure the offending stage is named; a partially filled
        // expansion cache survives for the next attempt.
        auto stage = [](const char* name, auto&& fn) -> decltype(fn()) {
            try {
                return fn();
            } catch (...) {
                std::cerr << "build aborted during stage: " << name << "\n";
                throw;
            }
        };

        auto docs = stage("load-corpus",
                          [&] { return qcg::load_corpus(resolve(common.workdir, cfg.corpus_path)); });
        auto embedder = qcg::make_embedder(cfg);
        auto generator = qcg::make_generator(cfg);
        std::optional<qcg::ExpansionCache> cache;
        if (!cache_path.empty()) cache.emplace(resolve(common.workdir, cache_path));

        qcg::BuildReport report;
        qcg::QCGraph graph = stage("expand-and-index", [&] {
            return qcg::build_pipeline(docs, cfg, *embedder, generator.get(),
                                       cache ? &*cache : nullptr, &report);
        });
        auto mode = embeddings_mode == "decimal" ? qcg::EmbeddingsMode::decimal
                                                 : qcg::EmbeddingsMode::binary;
        stage("save-index", [&] { qcg::save_index(graph, resolve(common.workdir, out), mode); });

        json summary{{"config", cfg.to_json()}, {"report", report.to_json()}, {"index", out}};
        if (!report_path.empty()) {
            std::ofstream rep(resolve(common.workdir, report_path));
            rep << summary.dump(2) << "\n";
        }
        std::cout << summary["report"].dump(2) << "\n";
    });
}

int cmd_query(const CommonOpts& common, const std::string& index_path,
              const std::string& question, const std::string& mode_name,
              std::optional<int> k_override, const std::string& trace_out, bool no_generate,
              bool explicit_embedder) {
    return guarded([&] {
        qcg::RunConfig cfg = resolve_config(common);
        cfg.mode = qcg::retrieval_mode_from_string(mode_name);
        if (k_override) cfg.retrieval.k_override = *k_override;
        echo_config(cfg);

        qcg::QCGraph graph = qcg::load_index(resolve(common.workdir, index_path));
        auto embedder = embedder_for_index(graph, cfg, explicit_embedder);

        qcg::RetrievalTrace trace =
            qcg::retrieve(question, graph, *embedder, cfg.retrieval, cfg.mode);

        auto generator = qcg::make_generator(cfg);
        if (generator && !no_generate) {
            auto outcome = qcg::generate_answer(question, trace, graph, *generator,
                                                cfg.generation_params, cfg.retrieval);
            std::cout << outcome.answer << "\n";
        } else {
            std::cout << "top-" << trace.topk_chunk_ids.size() << " chunks:\n";
            for (const auto& chunk_id : trace.topk_chunk_ids) {
                std::cout << "  " << chunk_id;
                auto it = trace.chunk_scores.find(chunk_id);
                if (it != trace.chunk_scores.end()) std::cout << "  s=" << it->second.score;
                std::cout << "\n";
            }
        }
        if (!trace_out.empty()) {
            json j = trace.to_json();
            j["config"] = cfg.to_json();
            std::ofstream out(resolve(common.workdir, trace_out));
            out << j.dump(2) << "\n";
        }
    });
}

int cmd_eval(const CommonOpts& common, const std::string& index_path,
             const std::string& dataset_path, const std::string& schema_name,
             std::optional<int> limit, const std::string& metric, const std::string& mode_name,
             const std::string& results_dir, const std::string& report_path,
             bool explicit_embedder) {
    return guarded([&] {
        qcg::RunConfig cfg = resolve_config(common);
        cfg.mode = qcg::retrieval_mode_from_string(mode_name);
        echo_config(cfg);

        qcg::QCGraph graph = qcg::load_index(resolve(common.workdir, index_path));
        auto embedder = embedder_for_index(graph, cfg, explicit_embedder);
        auto items = qcg::load_dataset(resolve(common.workdir, dataset_path),
                                       qcg::dataset_schema_from_string(schema_name), limit);
        if (items.empty()) throw qcg::DataError("dataset is empty");

        qcg::EvalOptions options;
        options.parallelism = cfg.parallelism;
        options.generation_params = cfg.generation_params;
        options.with_generation = metric != "evidence-recall";
        options.with_judge = metric == "judge" || metric == "both";
        auto generator = qcg::make_generator(cfg);

        auto records = qcg::run_items(graph, items, *embedder, generator.get(), cfg.retrieval,
                                      cfg.mode, options);
        qcg::Report report = qcg::aggregate(records);
        std::cout << report.to_table();

        json j{{"config", cfg.to_json()}, {"report", report.to_json()}};
        if (!report_path.empty()) {
            std::ofstream out(resolve(common.workdir, report_path));
            out << j.dump(2) << "\n";
        }
        if (!results_dir.empty())
            qcg::write_results(records, report, resolve(common.workdir, results_dir));
    });
}

int cmd_sweep(const CommonOpts& common, const std::string& corpus,
              const std::string& dataset_path, const std::string& schema_name,
              std::optional<int> limit, const std::string& axis_name,
              const std::string& values_csv, const std::string& cache_path,
              const std::string& metric, const std::string& mode_name, bool allow_any,
              const std::string& report_path) {
    return guarded([&] {
        qcg::RunConfig cfg = resolve_config(common);
        cfg.mode = qcg::retrieval_mode_from_string(mode_name);
        if (!corpus.empty()) cfg.corpus_path = corpus;
        if (cfg.corpus_path.empty()) throw qcg::ConfigError("sweep needs --corpus");
        echo_config(cfg);

        auto docs = qcg::load_corpus(resolve(common.workdir, cfg.corpus_path));
        auto items = qcg::load_dataset(resolve(common.workdir, dataset_path),
                                       qcg::dataset_schema_from_string(schema_name), limit);
        auto generator = qcg::make_generator(cfg);
        std::optional<qcg::ExpansionCache> cache;
        if (!cache_path.empty()) cache.emplace(resolve(common.workdir, cache_path));

        std::vector<std::string> values;
        std::string token;
        for (char c : values_csv) {
            if (c == ',') {
                if (!token.empty()) values.push_back(token);
                token.clear();
            } else {
                token.push_back(c);
            }
        }
        if (!token.empty()) values.push_back(token);

        qcg::SweepOptions options;
        options.threads = cfg.parallelism;
        options.allow_out_of_range = allow_any;
        options.eval.parallelism = cfg.parallelism;
        options.eval.generation_params = cfg.generation_params;
        options.eval.with_generation = metric != "evidence-recall";
        options.eval.with_judge = metric == "judge" || metric == "both";

        auto result = qcg::sweep(qcg::sweep_axis_from_string(axis_name), values, docs, items,
                                 cfg, generator.get(), cache ? &*cache : nullptr, options);
        for (const auto& row : result.rows) {
            std::cout << "--- " << axis_name << " = " << row.value << " ---\n"
                      << row.report.to_table();
        }
        if (!report_path.empty()) {
            json j{{"config", cfg.to_json()}, {"sweep", result.to_json()}};
            std::ofstream out(resolve(common.workdir, report_path));
            out << j.dump(2) << "\n";
        }
    });
}

int cmd_inspect(const CommonOpts& common, const std::string& index_path, int samples,
                bool as_json) {
    return guarded([&] {
        qcg::QCGraph graph = qcg::load_index(resolve(common.workdir, index_path));

        std::map<std::size_t, int> degree_histogram;
        for (const auto& edges : graph.intra()) ++degree_histogram[edges.size()];
        std::map<std::string, int> retained_per_chunk;
        for (const auto& entry : graph.chunk_entries())
            retained_per_chunk[entry.chunk.chunk_id] = 0;
        for (std::size_t i = 0; i < graph.num_queries(); ++i)
            ++retained_per_chunk[graph.chunk_at(graph.chunk_of_node(static_cast<std::uint32_t>(i)))
                                     .chunk.chunk_id];

        const std::size_t sample_count =
            std::min<std::size_t>(static_cast<std::size_t>(std::max(samples, 0)),
                                  graph.num_queries());
        if (as_json) {
            json hist = json::object();
            for (const auto& [deg, count] : degree_histogram)
                hist[std::to_string(deg)] = count;
            json per_chunk = json::object();
            for (const auto& [chunk_id, count] : retained_per_chunk) per_chunk[chunk_id] = count;
            json neighborhoods = json::array();
            for (std::size_t i = 0; i < sample_count; ++i) {
                json neighbors = json::array();
                for (auto j : graph.intra()[i]) neighbors.push_back(graph.node_at(j).q_id);
                neighborhoods.push_back(
                    json{{"q_id", graph.node_at(static_cast<std::uint32_t>(i)).q_id},
                         {"neighbors", neighbors}});
            }
            json j{{"chunks", graph.num_chunks()},
                   {"query_nodes", graph.num_queries()},
                   {"intra_edges", graph.num_intra_edges()},
                   {"degree_histogram", hist},
                   {"retained_per_chunk", per_chunk},
                   {"sample_neighborhoods", neighborhoods},
                   {"build",
                    {{"embedder", graph.build_config().embedder_name},
                     {"dim", graph.build_config().embedding_dim},
                     {"k", graph.build_config().graph.k},
                     {"M", graph.build_config().expansion.pairs_per_chunk},
                     {"alpha", graph.build_config().expansion.alpha}}}};
            std::cout << j.dump(2) << "\n";
            return;
        }

        std::cout << "chunks:       " << graph.num_chunks() << "\n"
                  << "query nodes:  " << graph.num_queries() << "\n"
                  << "intra edges:  " << graph.num_intra_edges() << "\n"
                  << "built with:   embedder=" << graph.build_config().embedder_name << ":"
                  << graph.build_config().embedding_dim << " k=" << graph.build_config().graph.k
                  << " M=" << graph.build_config().expansion.pairs_per_chunk
                  << " alpha=" << graph.build_config().expansion.alpha << "\n";
        std::cout << "out-degree histogram:\n";
        for (const auto& [deg, count] : degree_histogram)
            std::cout << "  " << deg << ": " << count << "\n";
        std::cout << "retained pairs per chunk:\n";
        for (const auto& [chunk_id, count] : retained_per_chunk)
            std::cout << "  " << chunk_id << ": " << count << "\n";
        std::cout << "sample neighborhoods:\n";
        for (std::size_t i = 0; i < sample_count; ++i) {
            std::cout << "  " << graph.node_at(static_cast<std::uint32_t>(i)).q_id << " ->";
            for (auto j : graph.intra()[i]) std::cout << " " << graph.node_at(j).q_id;
            std::cout << "\n";
        }
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"query-centric graph RAG"};
    app.require_subcommand(1);

    CommonOpts build_opts, query_opts, eval_opts, sweep_opts, inspect_opts;

    auto* build = app.add_subcommand("build", "Build an index from a corpus");
    add_common(build, build_opts);
    std::string build_corpus, build_out, build_cache, build_report;
    std::string build_embeddings_mode = "binary";
    build->add_option("--corpus", build_corpus, "Corpus JSONL file or directory of text files");
    build->add_option("-o,--out", build_out, "Index file to write")->required();
    build->add_option("--cache", build_cache, "Expansion cache file (reused across builds)");
    build->add_option("--report", build_report, "Write the build report JSON here");
    build->add_option("--embeddings-format", build_embeddings_mode,
                      "Embedding payload encoding: binary or decimal")
        ->check(CLI::IsMember({"binary", "decimal"}));

    auto* query = app.add_subcommand("query", "Ask one question against an index");
    add_common(query, query_opts);
    std::string query_index, query_question, query_mode = "qcg", query_trace;
    std::optional<int> query_k_override;
    bool query_no_generate = false;
    query->add_option("--index", query_index, "Index file")->required();
    query->add_option("question", query_question, "The question")->required();
    query->add_option("--mode", query_mode, "Retrieval mode: qcg|naive|d2q|d2qmm");
    query->add_option("--k-override", query_k_override,
                      "Truncate stored neighbor lists to this k (no rebuild)");
    query->add_option("--trace-out", query_trace, "Write the full retrieval trace JSON here");
    query->add_flag("--no-generate", query_no_generate, "Print retrieved chunks, skip generation");

    auto* eval_cmd = app.add_subcommand("eval", "Evaluate an index against a QA dataset");
    add_common(eval_cmd, eval_opts);
    std::string eval_index, eval_dataset, eval_schema = "generic", eval_metric = "evidence-recall";
    std::string eval_mode = "qcg", eval_results, eval_report;
    std::optional<int> eval_limit;
    eval_cmd->add_option("--index", eval_index, "Index file")->required();
    eval_cmd->add_option("--dataset", eval_dataset, "QA dataset JSONL")->required();
    eval_cmd->add_option("--schema", eval_schema, "Dataset schema: lihua|multihop|generic");
    eval_cmd->add_option("--limit", eval_limit, "Evaluate only the first N items");
    eval_cmd->add_option("--metric", eval_metric, "judge, evidence-recall, or both")
        ->check(CLI::IsMember({"judge", "evidence-recall", "both"}));
    eval_cmd->add_option("--mode", eval_mode, "Retrieval mode: qcg|naive|d2q|d2qmm");
    eval_cmd->add_option("--results-dir", eval_results, "Write per-item records here");
    eval_cmd->add_option("--report", eval_report, "Write the aggregate report JSON here");

    auto* sweep_cmd = app.add_subcommand("sweep", "Evaluate across one hyperparameter axis");
    add_common(sweep_cmd, sweep_opts);
    std::string sweep_corpus, sweep_dataset, sweep_schema = "generic", sweep_axis, sweep_values;
    std::string sweep_cache, sweep_metric = "evidence-recall", sweep_mode = "qcg", sweep_report;
    std::optional<int> sweep_limit;
    bool sweep_allow_any = false;
    sweep_cmd->add_option("--corpus", sweep_corpus, "Corpus JSONL file or directory");
    sweep_cmd->add_option("--dataset", sweep_dataset, "QA dataset JSONL")->required();
    sweep_cmd->add_option("--schema", sweep_schema, "Dataset schema: lihua|multihop|generic");
    sweep_cmd->add_option("--limit", sweep_limit, "Evaluate only the first N items");
    sweep_cmd->add_option("--axis", sweep_axis, "alpha|k|n|h|gamma|embedder|chunking")->required();
    sweep_cmd->add_option("--values", sweep_values, "Comma-separated axis values")->required();
    sweep_cmd->add_option("--cache", sweep_cache, "Expansion cache file");
    sweep_cmd->add_option("--metric", sweep_metric, "judge, evidence-recall, or both")
        ->check(CLI::IsMember({"judge", "evidence-recall", "both"}));
    sweep_cmd->add_option("--mode", sweep_mode, "Retrieval mode: qcg|naive|d2q|d2qmm");
    sweep_cmd->add_flag("--allow-any-values", sweep_allow_any,
                        "Accept values outside the candidate grids");
    sweep_cmd->add_option("--report", sweep_report, "Write the sweep report JSON here");

    auto* inspect = app.add_subcommand("inspect", "Describe an index file");
    add_common(inspect, inspect_opts);
    std::string inspect_index;
    int inspect_samples = 3;
    bool inspect_json = false;
    inspect->add_option("--index", inspect_index, "Index file")->required();
    inspect->add_option("--samples", inspect_samples, "Sample neighborhoods to print");
    inspect->add_flag("--json", inspect_json, "Machine-readable output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (build->parsed())
        return cmd_build(build_opts, build_corpus, build_out, build_cache, build_report,
                         build_embeddings_mode);
    if (query->parsed())
        return cmd_query(query_opts, query_index, query_question, query_mode, query_k_override,
                         query_trace, query_no_generate, !query_opts.embedder.empty());
    if (eval_cmd->parsed())
        return cmd_eval(eval_opts, eval_index, eval_dataset, eval_schema, eval_limit, eval_metric,
                        eval_mode, eval_results, eval_report, !eval_opts.embedder.empty());
    if (sweep_cmd->parsed())
        return cmd_sweep(sweep_opts, sweep_corpus, sweep_dataset, sweep_schema, sweep_limit,
                         sweep_axis, sweep_values, sweep_cache, sweep_metric, sweep_mode,
                         sweep_allow_any, sweep_report);
    if (inspect->parsed()) return cmd_inspect(inspect_opts, inspect_index, inspect_samples,
                                              inspect_json);
    return 2;
}
