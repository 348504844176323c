#include "qcg/index_io.hpp"

#include <bit>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>
#include <zlib.h>

#include "qcg/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "index format is little-endian; big-endian hosts are not supported");

namespace qcg {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'Q', 'C', 'G', 'I', 'N', 'D', 'E', 'X'};

std::uint32_t crc_of(const std::string& payload) {
    return static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(payload.data()),
                static_cast<uInt>(payload.size())));
}

// -- little-endian scalar plumbing ------------------------------------------

template <typename T>
void put(std::string& out, T value) {
    char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    out.append(bytes, sizeof(T));
}

class Reader {
public:
    Reader(const std::string& data, std::string section) : data_(data), section_(std::move(section)) {}

    template <typename T>
    T get() {
        if (pos_ + sizeof(T) > data_.size())
            throw IndexTruncatedError("index file ends inside section '" + section_ + "'");
        T value;
        std::memcpy(&value, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }

    std::string bytes(std::size_t n) {
        if (pos_ + n > data_.size())
            throw IndexTruncatedError("index file ends inside section '" + section_ + "'");
        std::string out = data_.substr(pos_, n);
        pos_ += n;
        return out;
    }

    bool done() const { return pos_ == data_.size(); }

private:
    const std::string& data_;
    std::string section_;
    std::size_t pos_ = 0;
};

// -- embeddings --------------------------------------------------------------

void put_embedding(std::string& out, const Embedding& e, EmbeddingsMode mode) {
    if (mode == EmbeddingsMode::binary) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(e.dim()));
        for (float v : e.values) put<float>(out, v);
    } else {
        char buf[48];
        out += std::to_string(e.dim());
        for (float v : e.values) {
            // 9 significant digits round-trip any IEEE float32 exactly.
            std::snprintf(buf, sizeof(buf), " %.9g", static_cast<double>(v));
            out += buf;
        }
        out += '\n';
    }
}

Embedding get_embedding(Reader& reader, EmbeddingsMode mode, std::string& decimal_buffer,
                        std::size_t& decimal_pos) {
    Embedding e;
    if (mode == EmbeddingsMode::binary) {
        auto dim = reader.get<std::uint32_t>();
        e.values.reserve(dim);
        for (std::uint32_t i = 0; i < dim; ++i) e.values.push_back(reader.get<float>());
        return e;
    }
    // decimal: one line per vector, leading dim
    auto line_end = decimal_buffer.find('\n', decimal_pos);
    if (line_end == std::string::npos)
        throw IndexTruncatedError("embeddings section ends mid-vector");
    std::istringstream line(decimal_buffer.substr(decimal_pos, line_end - decimal_pos));
    decimal_pos = line_end + 1;
    std::size_t dim = 0;
    if (!(line >> dim)) throw IndexFormatError("bad decimal embedding header");
    e.values.reserve(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        double v;
        if (!(line >> v)) throw IndexTruncatedError("embeddings section ends mid-vector");
        e.values.push_back(static_cast<float>(v));
    }
    return e;
}

// -- section payload builders -----------------------------------------------

std::string chunks_payload(const QCGraph& g) {
    json arr = json::array();
    for (const auto& entry : g.chunk_entries()) {
        arr.push_back(json{{"chunk_id", entry.chunk.chunk_id},
                           {"doc_id", entry.chunk.doc_id},
                           {"text", entry.chunk.text},
                           {"token_count", entry.chunk.token_count}});
    }
    return arr.dump();
}

std::string nodes_payload(const QCGraph& g) {
    json arr = json::array();
    for (const auto& node : g.query_nodes()) {
        arr.push_back(json{{"q_id", node.q_id},
                           {"chunk_id", node.chunk_id},
                           {"query", node.query},
                           {"answer", node.answer},
                           {"fidelity", node.fidelity}});
    }
    return arr.dump();
}

std::string edges_payload(const QCGraph& g) {
    std::string out;
    for (std::size_t i = 0; i < g.num_queries(); ++i) {
        put<std::uint32_t>(out, g.inter()[i]);
        const auto& neighbors = g.intra()[i];
        put<std::uint16_t>(out, static_cast<std::uint16_t>(neighbors.size()));
        for (std::uint32_t j : neighbors) put<std::uint32_t>(out, j);
    }
    return out;
}

std::string embeddings_payload(const QCGraph& g, EmbeddingsMode mode) {
    std::string out;
    bool has_expanded = !g.chunk_entries().empty() && !g.chunk_entries()[0].d2q_embedding.empty();
    put<std::uint8_t>(out, has_expanded ? 1 : 0);
    for (const auto& entry : g.chunk_entries()) put_embedding(out, entry.embedding, mode);
    if (has_expanded) {
        for (const auto& entry : g.chunk_entries()) put_embedding(out, entry.d2q_embedding, mode);
        for (const auto& entry : g.chunk_entries()) put_embedding(out, entry.d2qmm_embedding, mode);
    }
    for (const auto& node : g.query_nodes()) put_embedding(out, node.embedding, mode);
    return out;
}

json build_config_json(const BuildConfig& c) {
    return json{{"chunking", {{"chunk_size", c.chunking.chunk_size}, {"overlap", c.chunking.overlap}}},
                {"expansion", {{"M", c.expansion.pairs_per_chunk}, {"alpha", c.expansion.alpha}}},
                {"graph", {{"k", c.graph.k}, {"symmetrize", c.graph.symmetrize}}},
                {"embedder", c.embedder_name},
                {"embedding_dim", c.embedding_dim},
                {"tokenizer", c.tokenizer_name}};
}

BuildConfig build_config_from_json(const json& j) {
    BuildConfig c;
    c.chunking.chunk_size = j.at("chunking").at("chunk_size").get<int>();
    c.chunking.overlap = j.at("chunking").at("overlap").get<int>();
    c.expansion.pairs_per_chunk = j.at("expansion").at("M").get<int>();
    c.expansion.alpha = j.at("expansion").at("alpha").get<double>();
    c.graph.k = j.at("graph").at("k").get<int>();
    c.graph.symmetrize = j.at("graph").at("symmetrize").get<bool>();
    c.embedder_name = j.at("embedder").get<std::string>();
    c.embedding_dim = j.at("embedding_dim").get<std::size_t>();
    c.tokenizer_name = j.at("tokenizer").get<std::string>();
    return c;
}

void write_section(std::ostream& out, const std::string& name, const std::string& payload) {
    std::string framed;
    put<std::uint32_t>(framed, static_cast<std::uint32_t>(name.size()));
    framed += name;
    put<std::uint64_t>(framed, payload.size());
    out.write(framed.data(), static_cast<std::streamsize>(framed.size()));
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    std::string crc;
    put<std::uint32_t>(crc, crc_of(payload));
    out.write(crc.data(), static_cast<std::streamsize>(crc.size()));
}

std::string read_exact(std::istream& in, std::size_t n, const char* what) {
    std::string buf(n, '\0');
    in.read(buf.data(), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n)
        throw IndexTruncatedError(std::string("index file truncated while reading ") + what);
    return buf;
}

std::string read_section(std::istream& in, const std::string& expected_name) {
    std::string header = read_exact(in, 4, "section header");
    std::uint32_t name_len;
    std::memcpy(&name_len, header.data(), 4);
    if (name_len > 64) throw IndexFormatError("implausible section name length");
    std::string name = read_exact(in, name_len, "section name");
    if (name != expected_name)
        throw IndexFormatError("expected section '" + expected_name + "', found '" + name + "'");
    std::string len_bytes = read_exact(in, 8, ("length of section '" + name + "'").c_str());
    std::uint64_t payload_len;
    std::memcpy(&payload_len, len_bytes.data(), 8);
    std::string payload = read_exact(in, payload_len, ("section '" + name + "'").c_str());
    std::string crc_bytes = read_exact(in, 4, ("checksum of section '" + name + "'").c_str());
    std::uint32_t stored_crc;
    std::memcpy(&stored_crc, crc_bytes.data(), 4);
    if (stored_crc != crc_of(payload))
        throw IndexChecksumError(name, "stored checksum does not match payload");
    return payload;
}

}  // namespace

void save_index(const QCGraph& graph, const std::filesystem::path& path, EmbeddingsMode mode) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write index file: " + path.string());

    std::string head;
    head.append(kMagic, sizeof(kMagic));
    put<std::uint32_t>(head, kIndexFormatVersion);
    put<std::uint8_t>(head, static_cast<std::uint8_t>(mode));
    json meta = build_config_json(graph.build_config());
    meta["num_chunks"] = graph.num_chunks();
    meta["num_queries"] = graph.num_queries();
    std::string meta_str = meta.dump();
    put<std::uint32_t>(head, static_cast<std::uint32_t>(meta_str.size()));
    head += meta_str;
    out.write(head.data(), static_cast<std::streamsize>(head.size()));

    write_section(out, "chunks", chunks_payload(graph));
    write_section(out, "nodes", nodes_payload(graph));
    write_section(out, "edges", edges_payload(graph));
    write_section(out, "embeddings", embeddings_payload(graph, mode));
    if (!out) throw DataError("failed writing index file: " + path.string());
}

QCGraph load_index(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open index file: " + path.string());

    std::string magic = read_exact(in, sizeof(kMagic), "magic");
    if (std::memcmp(magic.data(), kMagic, sizeof(kMagic)) != 0)
        throw IndexFormatError("not a qcg index file: " + path.string());
    std::string version_bytes = read_exact(in, 4, "format version");
    std::uint32_t version;
    std::memcpy(&version, version_bytes.data(), 4);
    if (version != kIndexFormatVersion)
        throw IndexVersionError("index format version " + std::to_string(version) +
                                " is not supported (expected " +
                                std::to_string(kIndexFormatVersion) + ")");
    std::string mode_byte = read_exact(in, 1, "embeddings mode");
    auto mode = static_cast<EmbeddingsMode>(static_cast<std::uint8_t>(mode_byte[0]));
    if (mode != EmbeddingsMode::binary && mode != EmbeddingsMode::decimal)
        throw IndexFormatError("unknown embeddings mode");
    std::string meta_len_bytes = read_exact(in, 4, "header length");
    std::uint32_t meta_len;
    std::memcpy(&meta_len, meta_len_bytes.data(), 4);
    std::string meta_str = read_exact(in, meta_len, "header");
    json meta;
    try {
        meta = json::parse(meta_str);
    } catch (const json::parse_error& e) {
        throw IndexFormatError(std::string("corrupt index header: ") + e.what());
    }
    BuildConfig config;
    std::size_t num_chunks, num_queries;
    try {
        config = build_config_from_json(meta);
        num_chunks = meta.at("num_chunks").get<std::size_t>();
        num_queries = meta.at("num_queries").get<std::size_t>();
    } catch (const json::exception& e) {
        throw IndexFormatError(std::string("corrupt index header: ") + e.what());
    }

    std::string chunks_str = read_section(in, "chunks");
    std::string nodes_str = read_section(in, "nodes");
    std::string edges_str = read_section(in, "edges");
    std::string embeddings_str = read_section(in, "embeddings");

    std::vector<ChunkEntry> chunks;
    std::vector<QueryNode> nodes;
    try {
        json chunk_arr = json::parse(chunks_str);
        chunks.reserve(chunk_arr.size());
        for (const auto& item : chunk_arr) {
            ChunkEntry entry;
            entry.chunk.chunk_id = item.at("chunk_id").get<std::string>();
            entry.chunk.doc_id = item.at("doc_id").get<std::string>();
            entry.chunk.text = item.at("text").get<std::string>();
            entry.chunk.token_count = item.at("token_count").get<int>();
            chunks.push_back(std::move(entry));
        }
        json node_arr = json::parse(nodes_str);
        nodes.reserve(node_arr.size());
        for (const auto& item : node_arr) {
            QueryNode node;
            node.q_id = item.at("q_id").get<std::string>();
            node.chunk_id = item.at("chunk_id").get<std::string>();
            node.query = item.at("query").get<std::string>();
            node.answer = item.at("answer").get<std::string>();
            node.fidelity = item.at("fidelity").get<double>();
            nodes.push_back(std::move(node));
        }
    } catch (const json::exception& e) {
        throw IndexFormatError(std::string("corrupt chunk/node section: ") + e.what());
    }
    if (chunks.size() != num_chunks || nodes.size() != num_queries)
        throw IndexFormatError("header counts disagree with section contents");

    Reader edges(edges_str, "edges");
    std::vector<std::vector<std::uint32_t>> intra(nodes.size());
    std::vector<std::uint32_t> inter(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        inter[i] = edges.get<std::uint32_t>();
        auto degree = edges.get<std::uint16_t>();
        intra[i].reserve(degree);
        for (std::uint16_t e = 0; e < degree; ++e) intra[i].push_back(edges.get<std::uint32_t>());
    }
    if (!edges.done()) throw IndexFormatError("trailing bytes in edges section");

    Reader embeddings(embeddings_str, "embeddings");
    std::string decimal_buffer;
    std::size_t decimal_pos = 0;
    bool has_expanded = embeddings.get<std::uint8_t>() != 0;
    if (mode == EmbeddingsMode::decimal) {
        decimal_buffer = embeddings_str.substr(1);
    }
    auto next_embedding = [&] { return get_embedding(embeddings, mode, decimal_buffer, decimal_pos); };
    for (auto& entry : chunks) entry.embedding = next_embedding();
    if (has_expanded) {
        for (auto& entry : chunks) entry.d2q_embedding = next_embedding();
        for (auto& entry : chunks) entry.d2qmm_embedding = next_embedding();
    }
    for (auto& node : nodes) node.embedding = next_embedding();

    return QCGraph(std::move(chunks), std::move(nodes), std::move(intra), std::move(inter),
                   std::move(config));
}

}  // namespace qcg
