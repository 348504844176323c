#include "qcg/pipeline.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "qcg/errors.hpp"
#include "qcg/util.hpp"

namespace qcg {

using nlohmann::json;

json BuildReport::to_json() const {
    return json{{"documents", documents},
                {"chunks", chunks},
                {"pairs_generated", pairs_generated},
                {"pairs_retained", pairs_retained},
                {"parse_warnings", parse_warnings},
                {"cache_hits", cache_hits},
                {"cache_misses", cache_misses},
                {"query_nodes", query_nodes},
                {"intra_edges", intra_edges},
                {"generate_calls", generate_calls},
                {"embed_texts", embed_texts}};
}

ExpandedCorpus expand_corpus(const std::vector<Document>& docs, const ChunkingConfig& chunking,
                             const ExpansionConfig& expansion, Embedder& embedder,
                             Generator* generator, ExpansionCache* cache, int threads,
                             BuildReport* report) {
    expansion.validate();
    std::vector<Chunk> chunks = chunk_corpus(docs, chunking);
    if (chunks.empty()) throw DataError("corpus produced no chunks");

    std::vector<std::string> chunk_texts;
    chunk_texts.reserve(chunks.size());
    for (const auto& c : chunks) chunk_texts.push_back(c.text);
    std::vector<Embedding> chunk_embeddings = embedder.embed_batch(chunk_texts);

    ExpandedCorpus corpus;
    corpus.chunking = chunking;
    corpus.pairs_per_chunk = expansion.pairs_per_chunk;
    corpus.embedder_name = embedder.name();
    corpus.embedding_dim = embedder.dim();
    corpus.chunks.resize(chunks.size());

    std::mutex cache_mutex;
    int cache_hits = 0, cache_misses = 0;

    parallel_for(chunks.size(), threads, [&](std::size_t i) {
        ExpandedChunk& out = corpus.chunks[i];
        out.chunk = chunks[i];
        out.chunk_embedding = chunk_embeddings[i];

        std::vector<QAPair> pairs;
        std::string raw_response;
        bool from_cache = false;
        if (cache != nullptr) {
            std::lock_guard<std::mutex> lock(cache_mutex);
            if (const CachedExpansion* hit = cache->lookup(chunks[i], expansion.pairs_per_chunk)) {
                pairs = hit->pairs;
                out.parse_warnings = hit->parse_warnings;
                from_cache = true;
                ++cache_hits;
            }
        }
        if (!from_cache) {
            if (generator == nullptr)
                throw ConfigError("chunk '" + chunks[i].chunk_id +
                                  "' is not in the expansion cache and no generator is configured");
            ExpansionResult result = generate_pairs(chunks[i], expansion, *generator);
            pairs = std::move(result.pairs);
            raw_response = std::move(result.raw_response);
            out.parse_warnings = result.parse_warnings;
            {
                std::lock_guard<std::mutex> lock(cache_mutex);
                ++cache_misses;
            }
        }

        out.scored = score_pairs(pairs, chunks[i], embedder, &out.chunk_embedding);

        // Persist fresh expansions immediately so an aborted run keeps its
        // progress.
        if (!from_cache && cache != nullptr) {
            CachedExpansion rec;
            rec.chunk_id = chunks[i].chunk_id;
            rec.text_hash = ExpansionCache::chunk_text_hash(chunks[i]);
            rec.pairs_per_chunk = expansion.pairs_per_chunk;
            rec.raw_response = std::move(raw_response);
            rec.pairs = pairs;
            rec.parse_warnings = out.parse_warnings;
            rec.embedder_name = embedder.name();
            rec.embedder_dim = embedder.dim();
            for (const auto& sp : out.scored) rec.fidelities.push_back(sp.fidelity);
            rec.alpha = expansion.alpha;
            auto retained = filter_top_alpha(out.scored, expansion.alpha);
            std::map<int, bool> kept;
            for (const auto& sp : retained) kept[sp.pair.gen_index] = true;
            for (const auto& sp : out.scored)
                rec.retained.push_back(kept.count(sp.pair.gen_index) > 0);
            std::lock_guard<std::mutex> lock(cache_mutex);
            cache->store(std::move(rec));
        }
    });

    if (report != nullptr) {
        report->documents = static_cast<int>(docs.size());
        report->chunks = static_cast<int>(chunks.size());
        report->cache_hits = cache_hits;
        report->cache_misses = cache_misses;
        for (const auto& ec : corpus.chunks) {
            report->pairs_generated += static_cast<int>(ec.scored.size());
            report->parse_warnings += ec.parse_warnings;
        }
    }
    return corpus;
}

QCGraph assemble_graph(const ExpandedCorpus& corpus, double alpha, const GraphConfig& graph_cfg,
                       Embedder& embedder, int threads, BuildReport* report,
                       bool baseline_embeddings);

QCGraph assemble_graph(const ExpandedCorpus& corpus, double alpha, const GraphConfig& graph_cfg,
                       Embedder& embedder, int threads, BuildReport* report) {
    return assemble_graph(corpus, alpha, graph_cfg, embedder, threads, report, true);
}

QCGraph assemble_graph(const ExpandedCorpus& corpus, double alpha, const GraphConfig& graph_cfg,
                       Embedder& embedder, int threads, BuildReport* report,
                       bool baseline_embeddings) {
    GraphBuildInput input;
    input.threads = threads;
    input.baseline_embeddings = baseline_embeddings;
    input.chunks.reserve(corpus.chunks.size());
    input.chunk_embeddings.reserve(corpus.chunks.size());
    for (const auto& ec : corpus.chunks) {
        input.chunks.push_back(ec.chunk);
        input.chunk_embeddings.push_back(ec.chunk_embedding);
        auto retained = filter_top_alpha(ec.scored, alpha);
        for (auto& sp : retained) input.retained.push_back(std::move(sp));
        for (const auto& sp : ec.scored) input.all_pairs.push_back(sp.pair);
    }
    input.meta.chunking = corpus.chunking;
    input.meta.expansion.pairs_per_chunk = corpus.pairs_per_chunk;
    input.meta.expansion.alpha = alpha;
    input.meta.tokenizer_name = default_tokenizer().name();

    QCGraph graph = build_graph(std::move(input), graph_cfg, embedder);
    if (report != nullptr) {
        report->pairs_retained = static_cast<int>(graph.num_queries());
        report->query_nodes = graph.num_queries();
        report->intra_edges = graph.num_intra_edges();
    }
    return graph;
}

QCGraph build_pipeline(const std::vector<Document>& docs, const RunConfig& config,
                       Embedder& embedder, Generator* generator, ExpansionCache* cache,
                       BuildReport* report) {
    config.validate();
    ProviderStats embed_before = embedder.stats();
    ProviderStats gen_before = generator ? generator->stats() : ProviderStats{};

    ExpandedCorpus corpus = expand_corpus(docs, config.chunking, config.expansion, embedder,
                                          generator, cache, config.parallelism, report);
    QCGraph graph = assemble_graph(corpus, config.expansion.alpha, config.graph, embedder,
                                   config.parallelism, report);

    if (report != nullptr) {
        report->embed_texts = embedder.stats().embed_texts - embed_before.embed_texts;
        report->generate_calls =
            (generator ? generator->stats().generate_calls : 0) - gen_before.generate_calls;
    }
    return graph;
}

// ---------------------------------------------------------------------------
// Sweeps

SweepAxis sweep_axis_from_string(const std::string& name) {
    if (name == "alpha") return SweepAxis::alpha;
    if (name == "k") return SweepAxis::k;
    if (name == "n") return SweepAxis::n;
    if (name == "h") return SweepAxis::h;
    if (name == "gamma") return SweepAxis::gamma;
    if (name == "embedder") return SweepAxis::embedder;
    if (name == "chunking") return SweepAxis::chunking;
    throw ConfigError("unknown sweep axis '" + name +
                      "' (expected alpha|k|n|h|gamma|embedder|chunking)");
}

std::string to_string(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::alpha: return "alpha";
        case SweepAxis::k: return "k";
        case SweepAxis::n: return "n";
        case SweepAxis::h: return "h";
        case SweepAxis::gamma: return "gamma";
        case SweepAxis::embedder: return "embedder";
        case SweepAxis::chunking: return "chunking";
    }
    return "h";
}

json SweepResult::to_json() const {
    json rows_json = json::array();
    for (const auto& row : rows)
        rows_json.push_back(json{{"value", row.value}, {"report", row.report.to_json()}});
    return json{{"axis", to_string(axis)}, {"rows", rows_json}};
}

namespace {

bool near_any(double v, std::initializer_list<double> grid) {
    for (double g : grid)
        if (std::fabs(v - g) < 1e-9) return true;
    return false;
}

void check_candidate_range(SweepAxis axis, const std::string& value, bool allow_any) {
    if (allow_any) return;
    bool ok = true;
    switch (axis) {
        case SweepAxis::alpha: ok = near_any(std::stod(value), {0.2, 0.4, 0.6, 0.8, 1.0}); break;
        case SweepAxis::k: {
            int k = std::stoi(value);
            ok = k >= 1 && k <= 5;
            break;
        }
        case SweepAxis::h: {
            int h = std::stoi(value);
            ok = h >= 0 && h <= 2;
            break;
        }
        case SweepAxis::n: {
            int n = std::stoi(value);
            ok = n == 5 || n == 10 || n == 15 || n == 20;
            break;
        }
        case SweepAxis::gamma: ok = near_any(std::stod(value), {1.0, 1.5}); break;
        case SweepAxis::embedder:
        case SweepAxis::chunking: ok = true; break;
    }
    if (!ok)
        throw ConfigError("sweep value '" + value + "' is outside the candidate range for axis " +
                          to_string(axis) + "; pass --allow-any-values to override");
}

ChunkingConfig parse_chunking_value(const std::string& value) {
    auto slash = value.find('/');
    if (slash == std::string::npos)
        throw ConfigError("chunking sweep values look like '1200/100', got '" + value + "'");
    ChunkingConfig cfg;
    try {
        cfg.chunk_size = std::stoi(value.substr(0, slash));
        cfg.overlap = std::stoi(value.substr(slash + 1));
    } catch (...) {
        throw ConfigError("bad chunking sweep value '" + value + "'");
    }
    cfg.validate();
    return cfg;
}

}  // namespace

SweepResult sweep(SweepAxis axis, const std::vector<std::string>& values,
                  const std::vector<Document>& docs, const std::vector<QAItem>& items,
                  const RunConfig& base, Generator* generator, ExpansionCache* cache,
                  const SweepOptions& options, EmbedderFactory embedder_factory) {
    if (values.empty()) throw ConfigError("sweep needs at least one value");
    if (items.empty()) throw ConfigError("sweep needs a dataset");
    if (!embedder_factory) {
        embedder_factory = [&base](const std::string& spec) {
            return make_embedder_spec(spec, base.embed_provider);
        };
    }

    std::map<std::string, std::shared_ptr<Embedder>> embedders;
    std::map<std::string, std::vector<Embedding>> question_embeddings;
    std::map<std::string, ExpandedCorpus> corpora;
    std::map<std::string, std::shared_ptr<QCGraph>> graphs;

    auto embedder_for = [&](const std::string& spec) -> std::shared_ptr<Embedder> {
        auto it = embedders.find(spec);
        if (it != embedders.end()) return it->second;
        auto made = embedder_factory(spec);
        embedders.emplace(spec, made);
        return made;
    };

    const bool needs_baseline =
        base.mode == RetrievalMode::d2q || base.mode == RetrievalMode::d2qmm;

    SweepResult result;
    result.axis = axis;
    for (const auto& value : values) {
        check_candidate_range(axis, value, options.allow_out_of_range);

        RunConfig cfg = base;
        try {
            switch (axis) {
                case SweepAxis::alpha: cfg.expansion.alpha = std::stod(value); break;
                case SweepAxis::k: cfg.graph.k = std::stoi(value); break;
                case SweepAxis::n: cfg.retrieval.max_nodes = std::stoi(value); break;
                case SweepAxis::h: cfg.retrieval.hops = std::stoi(value); break;
                case SweepAxis::gamma: cfg.retrieval.gamma = std::stod(value); break;
                case SweepAxis::embedder: cfg.embedder_spec = value; break;
                case SweepAxis::chunking: cfg.chunking = parse_chunking_value(value); break;
            }
        } catch (const ConfigError&) {
            throw;
        } catch (...) {
            throw ConfigError("cannot parse sweep value '" + value + "' for axis " +
                              to_string(axis));
        }
        cfg.validate();

        auto embedder = embedder_for(cfg.embedder_spec);

        std::string corpus_key = cfg.embedder_spec + "|" + std::to_string(cfg.chunking.chunk_size) +
                                 "/" + std::to_string(cfg.chunking.overlap);
        auto corpus_it = corpora.find(corpus_key);
        if (corpus_it == corpora.end()) {
            ExpandedCorpus corpus = expand_corpus(docs, cfg.chunking, cfg.expansion, *embedder,
                                                  generator, cache, options.threads);
            corpus_it = corpora.emplace(corpus_key, std::move(corpus)).first;
        }

        char alpha_key[32];
        std::snprintf(alpha_key, sizeof(alpha_key), "%.12g", cfg.expansion.alpha);
        std::string graph_key = corpus_key + "|a=" + alpha_key + "|k=" +
                                std::to_string(cfg.graph.k);
        auto graph_it = graphs.find(graph_key);
        if (graph_it == graphs.end()) {
            auto graph = std::make_shared<QCGraph>(
                assemble_graph(corpus_it->second, cfg.expansion.alpha, cfg.graph, *embedder,
                               options.threads, nullptr, needs_baseline));
            graph_it = graphs.emplace(graph_key, std::move(graph)).first;
        }

        auto qe_it = question_embeddings.find(cfg.embedder_spec);
        if (qe_it == question_embeddings.end()) {
            std::vector<std::string> questions;
            questions.reserve(items.size());
            for (const auto& item : items) questions.push_back(item.question);
            qe_it = question_embeddings.emplace(cfg.embedder_spec, embedder->embed_batch(questions))
                        .first;
        }

        EvalOptions eval_options = options.eval;
        eval_options.question_embeddings = &qe_it->second;
        auto records = run_items(*graph_it->second, items, *embedder, generator, cfg.retrieval,
                                 base.mode, eval_options);
        result.rows.push_back(SweepRow{value, aggregate(records)});
    }
    return result;
}

}  // namespace qcg
