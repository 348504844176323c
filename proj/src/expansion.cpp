#include "qcg/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "qcg/errors.hpp"
#include "qcg/prompts.hpp"
#include "qcg/util.hpp"

namespace qcg {

using nlohmann::json;

void ExpansionConfig::validate() const {
    if (pairs_per_chunk < 1) throw ConfigError("pairs_per_chunk (M) must be >= 1");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must be in (0, 1]");
}

std::string concat_qa(std::string_view query, std::string_view answer) {
    if (answer.empty()) return std::string(query);
    if (query.empty()) return std::string(answer);
    std::string out;
    out.reserve(query.size() + 1 + answer.size());
    out += query;
    out += ' ';
    out += answer;
    return out;
}

std::size_t top_alpha_count(double alpha, std::size_t n) {
    if (n == 0) return 0;
    double raw = alpha * static_cast<double>(n);
    auto count = static_cast<std::size_t>(std::ceil(raw - 1e-9));
    return std::clamp<std::size_t>(count, 1, n);
}

// ---------------------------------------------------------------------------
// Response parsing

namespace {

// Content between the first pair of ``` fences, or the input unchanged.
std::string_view strip_code_fences(std::string_view text) {
    auto open = text.find("```");
    if (open == std::string_view::npos) return text;
    auto content_start = text.find('\n', open);
    if (content_start == std::string_view::npos) return text;
    ++content_start;
    auto close = text.find("```", content_start);
    if (close == std::string_view::npos) return text.substr(content_start);
    return text.substr(content_start, close - content_start);
}

std::optional<QAPair> item_to_pair(const json& item, const std::string& chunk_id,
                                   int position) {
    if (!item.is_object()) return std::nullopt;
    if (!item.contains("query") || !item.at("query").is_string()) return std::nullopt;
    QAPair pair;
    pair.chunk_id = chunk_id;
    pair.query = item.at("query").get<std::string>();
    if (pair.query.empty()) return std::nullopt;
    if (item.contains("answer") && item.at("answer").is_string())
        pair.answer = item.at("answer").get<std::string>();
    if (item.contains("index") && item.at("index").is_number_integer())
        pair.gen_index = item.at("index").get<int>();
    else
        pair.gen_index = position;
    if (pair.gen_index < 0) return std::nullopt;
    return pair;
}

// Scans for balanced top-level {...} spans, respecting JSON string quoting.
std::vector<std::string> scan_objects(std::string_view text) {
    std::vector<std::string> objects;
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    std::size_t start = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_string) {
            if (escaped)
                escaped = false;
            else if (c == '\\')
                escaped = true;
            else if (c == '"')
                in_string = false;
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{') {
            if (depth == 0) start = i;
            ++depth;
        } else if (c == '}') {
            if (depth > 0 && --depth == 0)
                objects.emplace_back(text.substr(start, i - start + 1));
        }
    }
    return objects;
}

std::string excerpt_of(std::string_view text) {
    std::string out(text.substr(0, 160));
    std::replace(out.begin(), out.end(), '\n', ' ');
    return out;
}

}  // namespace

Doc2QueryParse parse_doc2query_response(std::string_view text, const std::string& chunk_id) {
    std::string_view body = strip_code_fences(text);

    Doc2QueryParse result;
    auto collect = [&](const json& array) {
        int position = 0;
        std::set<int> seen_indices;
        for (const auto& item : array) {
            auto pair = item_to_pair(item, chunk_id, position);
            ++position;
            if (!pair || !seen_indices.insert(pair->gen_index).second) {
                ++result.dropped;
                continue;
            }
            result.pairs.push_back(std::move(*pair));
        }
    };

    auto open = body.find('[');
    auto close = body.rfind(']');
    if (open != std::string_view::npos && close != std::string_view::npos && close > open) {
        std::string_view candidate = body.substr(open, close - open + 1);
        json parsed = json::parse(candidate, nullptr, false);
        if (parsed.is_array()) {
            collect(parsed);
            return result;
        }
    }

    // Salvage pass: the array as a whole is broken; pull out whatever
    // well-formed items remain.
    std::vector<std::string> objects = scan_objects(body);
    json salvaged = json::array();
    int broken = 0;
    for (const auto& obj : objects) {
        json parsed = json::parse(obj, nullptr, false);
        if (parsed.is_discarded()) {
            ++broken;
            continue;
        }
        salvaged.push_back(std::move(parsed));
    }
    if (salvaged.empty())
        throw ParseError("no JSON array of query-answer items found in response; got: \"" +
                         excerpt_of(text) + "\"");
    collect(salvaged);
    result.dropped += broken;
    if (result.pairs.empty())
        throw ParseError("response contained no usable query-answer items; got: \"" +
                         excerpt_of(text) + "\"");
    return result;
}

// ---------------------------------------------------------------------------
// Generation

ExpansionResult generate_pairs(const Chunk& chunk, const ExpansionConfig& cfg, Generator& gen,
                               const GenerationParams& params) {
    cfg.validate();
    if (chunk.text.empty()) throw DataError("cannot expand empty chunk '" + chunk.chunk_id + "'");

    const std::string prompt = render_doc2query_prompt(chunk.text, cfg.pairs_per_chunk);

    ExpansionResult result;
    auto attempt = [&]() -> std::optional<Doc2QueryParse> {
        result.raw_response = gen.generate(prompt, params);
        ++result.generate_calls;
        try {
            return parse_doc2query_response(result.raw_response, chunk.chunk_id);
        } catch (const ParseError&) {
            return std::nullopt;
        }
    };

    std::optional<Doc2QueryParse> parsed = attempt();
    if (!parsed) parsed = attempt();  // one regeneration before giving up
    if (!parsed)
        throw ExpansionParseError(chunk.chunk_id,
                                  "unparseable response after one repair attempt; got: \"" +
                                      excerpt_of(result.raw_response) + "\"");

    if (cfg.strict && parsed->pairs.size() < static_cast<std::size_t>(cfg.pairs_per_chunk)) {
        auto second = attempt();
        if (second && second->pairs.size() > parsed->pairs.size()) parsed = std::move(second);
    }

    result.pairs = std::move(parsed->pairs);
    result.parse_warnings = parsed->dropped;
    if (result.pairs.size() > static_cast<std::size_t>(cfg.pairs_per_chunk)) {
        result.parse_warnings +=
            static_cast<int>(result.pairs.size() - static_cast<std::size_t>(cfg.pairs_per_chunk));
        result.pairs.resize(static_cast<std::size_t>(cfg.pairs_per_chunk));
    }
    return result;
}

std::vector<ScoredPair> score_pairs(std::span<const QAPair> pairs, const Chunk& chunk,
                                    Embedder& embedder, const Embedding* chunk_embedding) {
    for (const auto& pair : pairs) {
        if (pair.chunk_id != chunk.chunk_id)
            throw DataError("pair for chunk '" + pair.chunk_id +
                            "' scored against chunk '" + chunk.chunk_id + "'");
    }
    std::vector<std::string> texts;
    texts.reserve(pairs.size() + 1);
    for (const auto& pair : pairs) texts.push_back(concat_qa(pair.query, pair.answer));
    if (chunk_embedding == nullptr) texts.push_back(chunk.text);

    std::vector<Embedding> embeddings =
        texts.empty() ? std::vector<Embedding>{} : embedder.embed_batch(texts);
    Embedding chunk_emb =
        chunk_embedding ? *chunk_embedding : std::move(embeddings.back());

    std::vector<ScoredPair> scored;
    scored.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        ScoredPair sp;
        sp.pair = pairs[i];
        sp.embedding = std::move(embeddings[i]);
        sp.fidelity = cosine_sim(sp.embedding, chunk_emb);
        scored.push_back(std::move(sp));
    }
    return scored;
}

std::vector<ScoredPair> filter_top_alpha(std::vector<ScoredPair> scored, double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must be in (0, 1]");
    if (scored.empty()) return scored;
    std::stable_sort(scored.begin(), scored.end(), [](const ScoredPair& a, const ScoredPair& b) {
        if (a.fidelity != b.fidelity) return a.fidelity > b.fidelity;
        return a.pair.gen_index < b.pair.gen_index;
    });
    scored.resize(top_alpha_count(alpha, scored.size()));
    std::sort(scored.begin(), scored.end(), [](const ScoredPair& a, const ScoredPair& b) {
        return a.pair.gen_index < b.pair.gen_index;
    });
    return scored;
}

// ---------------------------------------------------------------------------
// Cache

namespace {

std::string cache_key(const std::string& chunk_id, const std::string& text_hash, int m) {
    return chunk_id + "\x1f" + text_hash + "\x1f" + std::to_string(m);
}

json cached_to_json(const CachedExpansion& rec) {
    json pairs = json::array();
    for (const auto& p : rec.pairs)
        pairs.push_back(json{{"index", p.gen_index}, {"query", p.query}, {"answer", p.answer}});
    return json{{"chunk_id", rec.chunk_id},
                {"text_hash", rec.text_hash},
                {"M", rec.pairs_per_chunk},
                {"raw_response", rec.raw_response},
                {"pairs", pairs},
                {"parse_warnings", rec.parse_warnings},
                {"embedder", rec.embedder_name},
                {"dim", rec.embedder_dim},
                {"fidelities", rec.fidelities},
                {"alpha", rec.alpha},
                {"retained", rec.retained}};
}

CachedExpansion cached_from_json(const json& j, std::size_t line_no) {
    try {
        CachedExpansion rec;
        rec.chunk_id = j.at("chunk_id").get<std::string>();
        rec.text_hash = j.at("text_hash").get<std::string>();
        rec.pairs_per_chunk = j.at("M").get<int>();
        rec.raw_response = j.value("raw_response", std::string{});
        for (const auto& item : j.at("pairs")) {
            QAPair p;
            p.chunk_id = rec.chunk_id;
            p.gen_index = item.at("index").get<int>();
            p.query = item.at("query").get<std::string>();
            p.answer = item.value("answer", std::string{});
            rec.pairs.push_back(std::move(p));
        }
        rec.parse_warnings = j.value("parse_warnings", 0);
        rec.embedder_name = j.value("embedder", std::string{});
        rec.embedder_dim = j.value("dim", static_cast<std::size_t>(0));
        if (j.contains("fidelities")) rec.fidelities = j.at("fidelities").get<std::vector<double>>();
        rec.alpha = j.value("alpha", 0.0);
        if (j.contains("retained")) rec.retained = j.at("retained").get<std::vector<bool>>();
        return rec;
    } catch (const json::exception& e) {
        throw DataError("expansion cache line " + std::to_string(line_no) + ": " + e.what());
    }
}

}  // namespace

ExpansionCache::ExpansionCache(std::filesystem::path file) : file_(std::move(file)) {
    std::ifstream in(file_);
    if (!in) return;  // nothing cached yet
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error&) {
            // A torn final line from an aborted run is expected; everything
            // before it stays usable.
            log_warn("expansion cache: skipping unparseable line " + std::to_string(line_no));
            continue;
        }
        CachedExpansion rec = cached_from_json(j, line_no);
        std::string key = cache_key(rec.chunk_id, rec.text_hash, rec.pairs_per_chunk);
        records_[key] = std::move(rec);
    }
}

std::string ExpansionCache::chunk_text_hash(const Chunk& chunk) {
    return fnv1a64_hex(chunk.text);
}

const CachedExpansion* ExpansionCache::lookup(const Chunk& chunk, int pairs_per_chunk) const {
    auto it = records_.find(cache_key(chunk.chunk_id, chunk_text_hash(chunk), pairs_per_chunk));
    return it == records_.end() ? nullptr : &it->second;
}

void ExpansionCache::store(CachedExpansion record) {
    std::ofstream out(file_, std::ios::app);
    if (!out) throw DataError("cannot append to expansion cache: " + file_.string());
    out << cached_to_json(record).dump() << "\n";
    out.flush();
    std::string key = cache_key(record.chunk_id, record.text_hash, record.pairs_per_chunk);
    records_[key] = std::move(record);
}

}  // namespace qcg
