#include "qcg/providers.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "qcg/tokenizer.hpp"
#include "qcg/util.hpp"

namespace qcg {

using nlohmann::json;

GenerationParams deterministic_params() {
    GenerationParams p;
    p.temperature = 0.0;
    return p;
}

std::string retry_transport(const RetryPolicy& policy, const std::function<std::string()>& fn,
                            int* attempts_out) {
    int attempts = 0;
    const int budget = std::max(1, policy.max_attempts);
    for (;;) {
        ++attempts;
        try {
            std::string result = fn();
            if (attempts_out) *attempts_out = attempts;
            return result;
        } catch (const TransportError& e) {
            if (attempts >= budget) {
                if (attempts_out) *attempts_out = attempts;
                throw TransportError(std::string(e.what()) + " (after " +
                                         std::to_string(attempts) + " attempts)",
                                     attempts, e.batch_indices());
            }
            int delay = policy.base_delay_ms << (attempts - 1);
            if (delay > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }
    }
}

std::vector<Embedding> Embedder::embed_batch(std::span<const std::string> texts) {
    embed_batches_.fetch_add(1, std::memory_order_relaxed);
    embed_texts_.fetch_add(texts.size(), std::memory_order_relaxed);
    return do_embed_batch(texts);
}

Embedding Embedder::embed(const std::string& text) {
    std::vector<std::string> one{text};
    return embed_batch(one)[0];
}

ProviderStats Embedder::stats() const {
    return ProviderStats{embed_batches_.load(), embed_texts_.load(), 0};
}

std::string Generator::generate(const std::string& prompt, const GenerationParams& params) {
    if (params.max_input_tokens > 0) {
        std::size_t prompt_tokens = default_tokenizer().count(prompt);
        if (prompt_tokens > static_cast<std::size_t>(params.max_input_tokens))
            throw ConfigError("prompt of " + std::to_string(prompt_tokens) +
                              " tokens exceeds max_input_tokens=" +
                              std::to_string(params.max_input_tokens));
    }
    generate_calls_.fetch_add(1, std::memory_order_relaxed);
    return do_generate(prompt, params);
}

ProviderStats Generator::stats() const { return ProviderStats{0, 0, generate_calls_.load()}; }

// ---------------------------------------------------------------------------
// HashEmbedder

HashEmbedder::HashEmbedder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
    if (dim_ < 8) throw ConfigError("hash embedder dim must be >= 8");
}

std::string HashEmbedder::name() const { return "hash"; }

Embedding HashEmbedder::embed_one(const std::string& text) const {
    std::string lowered(text);
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    std::vector<std::string> tokens = default_tokenizer().tokenize(lowered);

    Embedding e;
    e.values.assign(dim_, 0.0f);
    auto add_feature = [&](std::string_view feature, float weight) {
        std::uint64_t h = mix64(fnv1a64(feature) ^ seed_);
        std::size_t bucket = static_cast<std::size_t>(h % dim_);
        float sign = (h >> 63) ? 1.0f : -1.0f;
        e.values[bucket] += sign * weight;
    };
    for (const auto& t : tokens) add_feature(t, 1.0f);
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
        add_feature(tokens[i] + "\x1f" + tokens[i + 1], 0.5f);
    }
    if (tokens.empty()) e.values[0] = 1.0f;  // keep the unit-norm contract for empty text
    l2_normalize(e);
    return e;
}

std::vector<Embedding> HashEmbedder::do_embed_batch(std::span<const std::string> texts) {
    std::vector<Embedding> out(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) out[i] = embed_one(texts[i]);
    return out;
}

// ---------------------------------------------------------------------------
// ScriptedGenerator

std::string ScriptedGenerator::fingerprint(std::string_view prompt) {
    return fnv1a64_hex(prompt);
}

void ScriptedGenerator::add_response(std::string_view prompt, std::string response) {
    responses_[fingerprint(prompt)] = std::move(response);
}

void ScriptedGenerator::add_response_for_fingerprint(std::string fp, std::string response) {
    responses_[std::move(fp)] = std::move(response);
}

ScriptedGenerator::ScriptedGenerator(const std::filesystem::path& fixture_file) {
    std::ifstream in(fixture_file);
    if (!in) throw DataError("cannot open fixture file: " + fixture_file.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw DataError("invalid fixture file " + fixture_file.string() + ": " + e.what());
    }
    if (!j.contains("fixtures") || !j.at("fixtures").is_object())
        throw DataError("fixture file missing 'fixtures' object: " + fixture_file.string());
    for (const auto& [fp, response] : j.at("fixtures").items()) {
        if (!response.is_string())
            throw DataError("fixture response for " + fp + " must be a string");
        add_response_for_fingerprint(fp, response.get<std::string>());
    }
}

void ScriptedGenerator::save(const std::filesystem::path& path) const {
    json fixtures = json::object();
    for (const auto& [fp, response] : responses_) fixtures[fp] = response;
    json j{{"fixtures", fixtures}};
    std::ofstream out(path);
    if (!out) throw DataError("cannot write fixture file: " + path.string());
    out << j.dump(2) << "\n";
}

std::vector<ScriptedGenerator::Call> ScriptedGenerator::calls() const {
    std::lock_guard<std::mutex> lock(calls_mutex_);
    return calls_;
}

std::string ScriptedGenerator::do_generate(const std::string& prompt,
                                           const GenerationParams& params) {
    std::string fp = fingerprint(prompt);
    {
        std::lock_guard<std::mutex> lock(calls_mutex_);
        calls_.push_back(Call{fp, params});
    }
    auto it = responses_.find(fp);
    if (it == responses_.end()) {
        std::string excerpt = prompt.substr(0, 120);
        throw FixtureError("no fixture for prompt fingerprint " + fp + "; prompt starts: \"" +
                           excerpt + "\"");
    }
    return it->second;
}

// ---------------------------------------------------------------------------
// FlakyGenerator

FlakyGenerator::FlakyGenerator(std::shared_ptr<Generator> inner, int failures, RetryPolicy policy)
    : inner_(std::move(inner)), remaining_failures_(failures), policy_(policy) {}

std::string FlakyGenerator::do_generate(const std::string& prompt,
                                        const GenerationParams& params) {
    int attempts = 0;
    std::string result = retry_transport(
        policy_,
        [&]() -> std::string {
            if (remaining_failures_.fetch_sub(1) > 0)
                throw TransportError("injected transport failure");
            return inner_->generate(prompt, params);
        },
        &attempts);
    last_attempts_.store(attempts);
    return result;
}

}  // namespace qcg
