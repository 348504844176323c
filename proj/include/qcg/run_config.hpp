#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "qcg/corpus.hpp"
#include "qcg/expansion.hpp"
#include "qcg/graph.hpp"
#include "qcg/providers.hpp"
#include "qcg/retrieval.hpp"

namespace qcg {

// Everything one run needs, resolvable from a config file plus flag
// overrides. Serialized verbatim into every artifact so runs are
// reproducible from their outputs.
struct RunConfig {
    std::string corpus_path;
    ChunkingConfig chunking;
    ExpansionConfig expansion;
    GraphConfig graph;
    RetrievalConfig retrieval;
    RetrievalMode mode = RetrievalMode::qcg;

    // "hash:<dim>" for the offline double, "http:<dim>" for a hosted
    // embedding API (provider settings below).
    std::string embedder_spec = "hash:256";
    // "none", "scripted:<fixtures.json>", or "http".
    std::string generator_spec = "none";
    ProviderConfig embed_provider;
    ProviderConfig gen_provider;
    GenerationParams generation_params;

    std::string dataset_preset;  // "", "lihua", or "multihop"
    int parallelism = 4;

    // Per-dataset defaults:
    //   lihua:    M=20 alpha=0.8 h=1 k=2 n=10 gamma=1.5
    //   multihop: M=20 alpha=0.8 h=1 k=3 n=15 gamma=1.0
    void apply_preset(const std::string& name);

    void validate() const;

    nlohmann::json to_json() const;
    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig from_file(const std::filesystem::path& path);
};

std::shared_ptr<Embedder> make_embedder(const RunConfig& config);
std::shared_ptr<Embedder> make_embedder_spec(const std::string& spec,
                                             const ProviderConfig& provider);
// Returns nullptr for "none".
std::shared_ptr<Generator> make_generator(const RunConfig& config);

}  // namespace qcg
