#include "qcg/run_config.hpp"

#include <fstream>

#include "qcg/errors.hpp"

namespace qcg {

using nlohmann::json;

void RunConfig::apply_preset(const std::string& name) {
    expansion.pairs_per_chunk = 20;
    expansion.alpha = 0.8;
    retrieval.hops = 1;
    if (name == "lihua") {
        graph.k = 2;
        retrieval.max_nodes = 10;
        retrieval.gamma = 1.5;
    } else if (name == "multihop") {
        graph.k = 3;
        retrieval.max_nodes = 15;
        retrieval.gamma = 1.0;
    } else {
        throw ConfigError("unknown preset '" + name + "' (expected lihua|multihop)");
    }
    dataset_preset = name;
}

void RunConfig::validate() const {
    chunking.validate();
    expansion.validate();
    graph.validate();
    retrieval.validate();
}

json RunConfig::to_json() const {
    auto provider_json = [](const ProviderConfig& p) {
        return json{{"endpoint", p.endpoint},
                    {"model", p.model},
                    {"credential_env", p.credential_env},
                    {"timeout_s", p.timeout_s},
                    {"max_attempts", p.retry.max_attempts},
                    {"base_delay_ms", p.retry.base_delay_ms},
                    {"batch_size", p.batch_size}};
    };
    return json{
        {"corpus", corpus_path},
        {"chunking", {{"chunk_size", chunking.chunk_size}, {"overlap", chunking.overlap}}},
        {"expansion",
         {{"M", expansion.pairs_per_chunk}, {"alpha", expansion.alpha}, {"strict", expansion.strict}}},
        {"graph", {{"k", graph.k}, {"symmetrize", graph.symmetrize}}},
        {"retrieval",
         {{"gamma", retrieval.gamma},
          {"n", retrieval.max_nodes},
          {"h", retrieval.hops},
          {"K", retrieval.top_k},
          {"epsilon", retrieval.epsilon},
          {"context_token_cap", retrieval.context_token_cap}}},
        {"mode", to_string(mode)},
        {"embedder", embedder_spec},
        {"generator", generator_spec},
        {"embed_provider", provider_json(embed_provider)},
        {"gen_provider", provider_json(gen_provider)},
        {"generation",
         {{"temperature", generation_params.temperature},
          {"top_p", generation_params.top_p},
          {"top_k", generation_params.top_k},
          {"max_tokens", generation_params.max_tokens},
          {"max_input_tokens", generation_params.max_input_tokens}}},
        {"preset", dataset_preset},
        {"parallelism", parallelism}};
}

RunConfig RunConfig::from_json(const json& j) {
    RunConfig c;
    try {
        if (j.contains("preset") && j.at("preset").is_string() &&
            !j.at("preset").get<std::string>().empty())
            c.apply_preset(j.at("preset").get<std::string>());
        if (j.contains("corpus")) c.corpus_path = j.at("corpus").get<std::string>();
        if (j.contains("chunking")) {
            const json& ch = j.at("chunking");
            c.chunking.chunk_size = ch.value("chunk_size", c.chunking.chunk_size);
            c.chunking.overlap = ch.value("overlap", c.chunking.overlap);
        }
        if (j.contains("expansion")) {
            const json& ex = j.at("expansion");
            c.expansion.pairs_per_chunk = ex.value("M", c.expansion.pairs_per_chunk);
            c.expansion.alpha = ex.value("alpha", c.expansion.alpha);
            c.expansion.strict = ex.value("strict", c.expansion.strict);
        }
        if (j.contains("graph")) {
            const json& g = j.at("graph");
            c.graph.k = g.value("k", c.graph.k);
            c.graph.symmetrize = g.value("symmetrize", c.graph.symmetrize);
        }
        if (j.contains("retrieval")) {
            const json& r = j.at("retrieval");
            c.retrieval.gamma = r.value("gamma", c.retrieval.gamma);
            c.retrieval.max_nodes = r.value("n", c.retrieval.max_nodes);
            c.retrieval.hops = r.value("h", c.retrieval.hops);
            c.retrieval.top_k = r.value("K", c.retrieval.top_k);
            c.retrieval.context_token_cap =
                r.value("context_token_cap", c.retrieval.context_token_cap);
        }
        if (j.contains("mode")) c.mode = retrieval_mode_from_string(j.at("mode").get<std::string>());
        if (j.contains("embedder")) c.embedder_spec = j.at("embedder").get<std::string>();
        if (j.contains("generator")) c.generator_spec = j.at("generator").get<std::string>();
        auto provider_from = [](const json& p) {
            ProviderConfig cfg;
            cfg.endpoint = p.value("endpoint", std::string{});
            cfg.model = p.value("model", std::string{});
            cfg.credential_env = p.value("credential_env", std::string{});
            cfg.timeout_s = p.value("timeout_s", cfg.timeout_s);
            cfg.retry.max_attempts = p.value("max_attempts", cfg.retry.max_attempts);
            cfg.retry.base_delay_ms = p.value("base_delay_ms", cfg.retry.base_delay_ms);
            cfg.batch_size = p.value("batch_size", cfg.batch_size);
            return cfg;
        };
        if (j.contains("embed_provider")) c.embed_provider = provider_from(j.at("embed_provider"));
        if (j.contains("gen_provider")) c.gen_provider = provider_from(j.at("gen_provider"));
        if (j.contains("generation")) {
            const json& g = j.at("generation");
            c.generation_params.temperature = g.value("temperature", c.generation_params.temperature);
            c.generation_params.top_p = g.value("top_p", c.generation_params.top_p);
            c.generation_params.top_k = g.value("top_k", c.generation_params.top_k);
            c.generation_params.max_tokens = g.value("max_tokens", c.generation_params.max_tokens);
            c.generation_params.max_input_tokens =
                g.value("max_input_tokens", c.generation_params.max_input_tokens);
        }
        if (j.contains("parallelism")) c.parallelism = j.at("parallelism").get<int>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad run config: ") + e.what());
    }
    return c;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
    return from_json(j);
}

namespace {

// "hash:256" -> {"hash", 256}; bare "hash" keeps the default dim.
std::pair<std::string, std::size_t> parse_embedder_spec(const std::string& spec) {
    auto colon = spec.find(':');
    std::string kind = spec.substr(0, colon);
    std::size_t dim = kind == "http" ? 384 : 256;
    if (colon != std::string::npos) {
        try {
            dim = static_cast<std::size_t>(std::stoul(spec.substr(colon + 1)));
        } catch (...) {
            throw ConfigError("bad embedder spec '" + spec + "'");
        }
    }
    return {kind, dim};
}

}  // namespace

std::shared_ptr<Embedder> make_embedder_spec(const std::string& spec,
                                             const ProviderConfig& provider) {
    auto [kind, dim] = parse_embedder_spec(spec);
    if (kind == "hash") return std::make_shared<HashEmbedder>(dim);
    if (kind == "http") return std::make_shared<HttpEmbedder>(provider, dim);
    throw ConfigError("unknown embedder spec '" + spec + "' (expected hash[:dim]|http[:dim])");
}

std::shared_ptr<Embedder> make_embedder(const RunConfig& config) {
    return make_embedder_spec(config.embedder_spec, config.embed_provider);
}

std::shared_ptr<Generator> make_generator(const RunConfig& config) {
    const std::string& spec = config.generator_spec;
    if (spec.empty() || spec == "none") return nullptr;
    if (spec == "http") return std::make_shared<HttpGenerator>(config.gen_provider);
    if (spec.rfind("scripted:", 0) == 0) {
        std::filesystem::path path = spec.substr(std::string("scripted:").size());
        return std::make_shared<ScriptedGenerator>(path);
    }
    throw ConfigError("unknown generator spec '" + spec +
                      "' (expected none|http|scripted:<fixtures.json>)");
}

}  // namespace qcg
