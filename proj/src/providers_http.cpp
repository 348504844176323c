#include <cstdlib>
#include <utility>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "qcg/providers.hpp"

namespace qcg {

using nlohmann::json;

namespace {

// "http://host:port/v1" -> {"http://host:port", "/v1"}
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
    auto scheme_end = endpoint.find("://");
    std::size_t path_start =
        endpoint.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_start == std::string::npos) return {endpoint, ""};
    return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

httplib::Headers auth_headers(const ProviderConfig& config) {
    httplib::Headers headers;
    if (!config.credential_env.empty()) {
        if (const char* secret = std::getenv(config.credential_env.c_str())) {
            headers.emplace("Authorization", std::string("Bearer ") + secret);
        }
    }
    return headers;
}

std::string post_json(const ProviderConfig& config, const std::string& path,
                      const json& body) {
    auto [origin, base_path] = split_endpoint(config.endpoint);
    httplib::Client client(origin);
    client.set_connection_timeout(static_cast<time_t>(config.timeout_s));
    client.set_read_timeout(static_cast<time_t>(config.timeout_s));
    auto res = client.Post(base_path + path, auth_headers(config), body.dump(),
                           "application/json");
    if (!res)
        throw TransportError("request to " + config.endpoint + path + " failed: " +
                             httplib::to_string(res.error()));
    if (res->status >= 500)
        throw TransportError("request to " + config.endpoint + path + " failed with status " +
                             std::to_string(res->status));
    if (res->status != 200)
        throw TransportError("request to " + config.endpoint + path +
                             " rejected with status " + std::to_string(res->status) + ": " +
                             res->body.substr(0, 200));
    return res->body;
}

}  // namespace

// ---------------------------------------------------------------------------
// HttpEmbedder

HttpEmbedder::HttpEmbedder(ProviderConfig config, std::size_t dim)
    : config_(std::move(config)), dim_(dim) {
    if (config_.endpoint.empty()) throw ConfigError("embedding endpoint not configured");
}

std::vector<Embedding> HttpEmbedder::do_embed_batch(std::span<const std::string> texts) {
    std::vector<Embedding> out(texts.size());
    const std::size_t batch = std::max(1, config_.batch_size);
    for (std::size_t offset = 0; offset < texts.size(); offset += batch) {
        std::size_t end = std::min(offset + batch, texts.size());
        json body{{"model", config_.model}, {"input", json::array()}};
        for (std::size_t i = offset; i < end; ++i) body["input"].push_back(texts[i]);

        std::string response_body;
        int attempts = 0;
        try {
            response_body = retry_transport(
                config_.retry, [&] { return post_json(config_, "/embeddings", body); },
                &attempts);
        } catch (const TransportError& e) {
            std::vector<std::size_t> indices;
            for (std::size_t i = offset; i < end; ++i) indices.push_back(i);
            last_attempts_.store(attempts);
            throw TransportError(e.what(), e.attempts(), std::move(indices));
        }
        last_attempts_.store(attempts);

        json parsed;
        try {
            parsed = json::parse(response_body);
        } catch (const json::parse_error& e) {
            throw TransportError("malformed embeddings response from " + config_.endpoint +
                                 ": " + e.what());
        }
        if (!parsed.contains("data") || !parsed.at("data").is_array() ||
            parsed.at("data").size() != end - offset)
            throw TransportError("embeddings response from " + config_.endpoint +
                                 " has wrong item count");
        for (const auto& item : parsed.at("data")) {
            std::size_t index = item.value("index", static_cast<std::size_t>(0));
            if (index >= end - offset)
                throw TransportError("embeddings response index out of range");
            Embedding e;
            for (const auto& v : item.at("embedding")) e.values.push_back(v.get<float>());
            if (e.dim() != dim_)
                throw TransportError("embedding dim " + std::to_string(e.dim()) +
                                     " does not match configured dim " + std::to_string(dim_));
            l2_normalize(e);
            out[offset + index] = std::move(e);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// HttpGenerator

HttpGenerator::HttpGenerator(ProviderConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty()) throw ConfigError("generation endpoint not configured");
}

std::string HttpGenerator::do_generate(const std::string& prompt,
                                       const GenerationParams& params) {
    json body{{"model", config_.model},
              {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
              {"temperature", params.temperature},
              {"top_p", params.top_p},
              {"top_k", params.top_k},
              {"max_tokens", params.max_tokens}};

    int attempts = 0;
    std::string response_body = retry_transport(
        config_.retry, [&] { return post_json(config_, "/chat/completions", body); },
        &attempts);
    last_attempts_.store(attempts);

    try {
        json parsed = json::parse(response_body);
        return parsed.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw TransportError("malformed chat response from " + config_.endpoint + ": " +
                             e.what());
    }
}

}  // namespace qcg
