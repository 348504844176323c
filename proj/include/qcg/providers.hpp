#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qcg/embedding.hpp"
#include "qcg/errors.hpp"

namespace qcg {

struct GenerationParams {
    double temperature = 0.7;
    double top_p = 0.8;
    int top_k = 20;
    int max_tokens = 8192;
    int max_input_tokens = 129024;
};

// Greedy decoding for the judge path.
GenerationParams deterministic_params();

struct RetryPolicy {
    int max_attempts = 3;
    int base_delay_ms = 100;  // doubles per attempt
};

struct ProviderConfig {
    std::string endpoint;        // e.g. "http://host:port/v1"
    std::string model;
    std::string credential_env;  // env var holding the secret; the secret itself is never stored
    double timeout_s = 60.0;
    RetryPolicy retry;
    int batch_size = 32;
};

struct ProviderStats {
    std::uint64_t embed_batches = 0;
    std::uint64_t embed_texts = 0;
    std::uint64_t generate_calls = 0;
};

// Runs fn, retrying on TransportError with exponential backoff. Rethrows the
// last error (with the total attempt count) once the budget is exhausted.
// attempts_out, when given, receives the number of attempts made.
std::string retry_transport(const RetryPolicy& policy, const std::function<std::string()>& fn,
                            int* attempts_out = nullptr);

class Embedder {
public:
    virtual ~Embedder() = default;

    // One unit-norm embedding per input, order preserved.
    std::vector<Embedding> embed_batch(std::span<const std::string> texts);
    Embedding embed(const std::string& text);

    virtual std::size_t dim() const = 0;
    virtual std::string name() const = 0;

    ProviderStats stats() const;

protected:
    virtual std::vector<Embedding> do_embed_batch(std::span<const std::string> texts) = 0;

private:
    std::atomic<std::uint64_t> embed_batches_{0};
    std::atomic<std::uint64_t> embed_texts_{0};
};

class Generator {
public:
    virtual ~Generator() = default;

    std::string generate(const std::string& prompt, const GenerationParams& params);

    virtual std::string name() const = 0;

    ProviderStats stats() const;

protected:
    virtual std::string do_generate(const std::string& prompt, const GenerationParams& params) = 0;

private:
    std::atomic<std::uint64_t> generate_calls_{0};
};

// Deterministic offline embedder: signed feature hashing of token unigrams
// and bigrams, l2-normalized. Same text, same bits, across runs and
// platforms. Texts sharing vocabulary land close; disjoint-vocabulary texts
// land near orthogonal (checked statistically, not exact).
class HashEmbedder final : public Embedder {
public:
    explicit HashEmbedder(std::size_t dim = 256, std::uint64_t seed = 0x51e03daf98c51741ull);

    std::size_t dim() const override { return dim_; }
    std::string name() const override;

protected:
    std::vector<Embedding> do_embed_batch(std::span<const std::string> texts) override;

private:
    Embedding embed_one(const std::string& text) const;

    std::size_t dim_;
    std::uint64_t seed_;
};

// Closed-world generation double: canned responses keyed by prompt
// fingerprint. Unknown prompts raise FixtureError; there is no silent empty
// output. Register everything up front; lookups are immutable and
// thread-safe afterwards.
class ScriptedGenerator final : public Generator {
public:
    ScriptedGenerator() = default;
    // Loads {"fixtures": {"<fingerprint>": "<response>", ...}}.
    explicit ScriptedGenerator(const std::filesystem::path& fixture_file);

    static std::string fingerprint(std::string_view prompt);

    void add_response(std::string_view prompt, std::string response);
    void add_response_for_fingerprint(std::string fingerprint, std::string response);

    void save(const std::filesystem::path& path) const;

    std::string name() const override { return "scripted"; }

    struct Call {
        std::string fingerprint;
        GenerationParams params;
    };
    std::vector<Call> calls() const;

protected:
    std::string do_generate(const std::string& prompt, const GenerationParams& params) override;

private:
    std::map<std::string, std::string> responses_;
    mutable std::mutex calls_mutex_;
    std::vector<Call> calls_;
};

// Wraps a generator and fails the first `failures` calls with
// TransportError. Exercises retry paths without a network.
class FlakyGenerator final : public Generator {
public:
    FlakyGenerator(std::shared_ptr<Generator> inner, int failures, RetryPolicy policy);

    std::string name() const override { return "flaky:" + inner_->name(); }
    int last_attempts() const { return last_attempts_.load(); }

protected:
    std::string do_generate(const std::string& prompt, const GenerationParams& params) override;

private:
    std::shared_ptr<Generator> inner_;
    std::atomic<int> remaining_failures_;
    RetryPolicy policy_;
    std::atomic<int> last_attempts_{0};
};

// OpenAI-style /embeddings endpoint.
class HttpEmbedder final : public Embedder {
public:
    HttpEmbedder(ProviderConfig config, std::size_t dim);

    std::size_t dim() const override { return dim_; }
    std::string name() const override { return config_.model; }
    int last_attempts() const { return last_attempts_.load(); }

protected:
    std::vector<Embedding> do_embed_batch(std::span<const std::string> texts) override;

private:
    ProviderConfig config_;
    std::size_t dim_;
    std::atomic<int> last_attempts_{0};
};

// OpenAI-style /chat/completions endpoint.
class HttpGenerator final : public Generator {
public:
    explicit HttpGenerator(ProviderConfig config);

    std::string name() const override { return config_.model; }
    int last_attempts() const { return last_attempts_.load(); }

protected:
    std::string do_generate(const std::string& prompt, const GenerationParams& params) override;

private:
    ProviderConfig config_;
    std::atomic<int> last_attempts_{0};
};

}  // namespace qcg
