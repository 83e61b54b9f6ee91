#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "glore/error.hpp"
#include "glore/graph.hpp"
#include "glore/gru.hpp"
#include "glore/random.hpp"
#include "glore/tensor.hpp"
#include "glore/token.hpp"
#include "glore/tsv.hpp"

namespace glore {

/// Dense token index. Index 0 is <GO>, index 1 is <UNK>; both are reserved
/// and can never collide with a real token.
class Vocabulary {
public:
    static constexpr std::size_t go = 0;
    static constexpr std::size_t unk = 1;

    Vocabulary() : names_{"<GO>", "<UNK>"} {}

    std::size_t add(const std::string& key) {
        auto [it, inserted] = index_.try_emplace(key, names_.size());
        if (inserted)
            names_.push_back(key);
        return it->second;
    }

    std::size_t lookup(const std::string& key) const {
        auto it = index_.find(key);
        return it == index_.end() ? unk : it->second;
    }

    bool contains(const std::string& key) const { return index_.contains(key); }

    std::vector<std::size_t> encode(const TextualRelation& t) const {
        std::vector<std::size_t> ids;
        ids.reserve(t.size());
        for (const auto& tok : t.tokens())
            ids.push_back(lookup(tok.key()));
        return ids;
    }

    std::size_t size() const noexcept { return names_.size(); }
    const std::string& name(std::size_t i) const { return names_.at(i); }

    /// All tokens of all textual relations in the graph, in graph order.
    static Vocabulary from_graph(const RelationGraph& g) {
        Vocabulary v;
        for (const auto& t : g.textual)
            for (const auto& tok : t.tokens())
                v.add(tok.key());
        return v;
    }

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
        return a.names_ == b.names_;
    }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct ModelDims {
    std::size_t embed = 32;
    std::size_t state = 32;
    std::size_t relations = 0;

    friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

/// Every trainable tensor. Also used as the gradient container.
struct ModelParams {
    Matrix embeddings;   // V x d; encoder and decoder share it (including <GO>)
    GruParams encoder;
    GruParams decoder;
    Matrix projection;   // h x |R|
    Matrix bias;         // |R| x 1

    ModelParams() = default;
    ModelParams(std::size_t vocab, const ModelDims& dims)
        : embeddings(vocab, dims.embed), encoder(dims.embed, dims.state),
          decoder(dims.embed, dims.state), projection(dims.state, dims.relations),
          bias(dims.relations, 1) {}

    template <typename Fn>
    void for_each(Fn&& fn) {
        visit_all(*this, fn);
    }
    template <typename Fn>
    void for_each(Fn&& fn) const {
        visit_all(*this, fn);
    }

    ModelParams zeros_like() const {
        ModelParams z = *this;
        z.for_each([](const std::string&, Matrix& m) { m.fill(0.0); });
        return z;
    }

    void add(const ModelParams& other, double scale = 1.0) {
        std::vector<const Matrix*> src;
        other.for_each([&](const std::string&, const Matrix& m) { src.push_back(&m); });
        std::size_t k = 0;
        for_each([&](const std::string&, Matrix& m) {
            auto dst = m.values();
            auto s = src[k++]->values();
            for (std::size_t i = 0; i < dst.size(); ++i)
                dst[i] += scale * s[i];
        });
    }

    double squared_norm() const {
        double s = 0.0;
        for_each([&](const std::string&, const Matrix& m) {
            for (double v : m.values())
                s += v * v;
        });
        return s;
    }

    bool all_finite() const {
        bool ok = true;
        for_each([&](const std::string&, const Matrix& m) {
            for (double v : m.values())
                ok = ok && std::isfinite(v);
        });
        return ok;
    }

    friend bool operator==(const ModelParams&, const ModelParams&) = default;

private:
    template <typename Self, typename Fn>
    static void visit_all(Self& self, Fn& fn) {
        fn(std::string("embeddings"), self.embeddings);
        GruParams::visit(self.encoder, "encoder.", fn);
        GruParams::visit(self.decoder, "decoder.", fn);
        fn(std::string("projection"), self.projection);
        fn(std::string("bias"), self.bias);
    }
};

/// Encoder GRU over token embeddings, one decoder GRU step fed <GO> with the
/// encoder's final state, then a softmax over KB relations.
struct EmbeddingModel {
    Vocabulary vocab;
    std::vector<std::string> relations;
    ModelDims dims;
    ModelParams params;

    EmbeddingModel() = default;
    EmbeddingModel(Vocabulary v, std::vector<std::string> rels, std::size_t embed,
                   std::size_t state)
        : vocab(std::move(v)), relations(std::move(rels)),
          dims{embed, state, relations.size()}, params(vocab.size(), dims) {}

    /// Uniform(-scale, scale) on every weight; biases start at zero.
    void randomize(std::uint64_t seed, double scale = 0.1) {
        Rng rng(seed);
        params.for_each([&](const std::string& name, Matrix& m) {
            const bool is_bias = name == "bias" || name.ends_with(".bz") ||
                                 name.ends_with(".br") || name.ends_with(".bh");
            for (double& v : m.values())
                v = is_bias ? 0.0 : rng.uniform(-scale, scale);
        });
    }

    std::optional<std::size_t> relation_index(std::string_view name) const {
        for (std::size_t j = 0; j < relations.size(); ++j)
            if (relations[j] == name)
                return j;
        return std::nullopt;
    }

    friend bool operator==(const EmbeddingModel&, const EmbeddingModel&) = default;
};

/// Everything the backward pass needs for one textual relation.
struct ForwardCache {
    std::vector<std::size_t> ids;
    std::vector<GruStep> encoder;
    GruStep decoder;
    Vector logits;
    Vector log_probs;
    Vector probs;
};

inline ForwardCache forward(const EmbeddingModel& m, std::span<const std::size_t> ids) {
    if (ids.empty())
        throw DataError("cannot encode an empty token sequence");
    ForwardCache fc;
    fc.ids.assign(ids.begin(), ids.end());
    Vector h(m.dims.state, 0.0);
    fc.encoder.reserve(ids.size());
    for (std::size_t id : ids) {
        fc.encoder.push_back(gru_forward(m.params.encoder, m.params.embeddings.row(id), h));
        h = fc.encoder.back().h;
    }
    fc.decoder = gru_forward(m.params.decoder, m.params.embeddings.row(Vocabulary::go), h);
    fc.logits.assign(m.params.bias.values().begin(), m.params.bias.values().end());
    linalg::gemv_t_acc(m.params.projection, fc.decoder.h, fc.logits);
    fc.log_probs = linalg::log_softmax(fc.logits);
    fc.probs = linalg::softmax(fc.logits);
    return fc;
}

inline ForwardCache forward(const EmbeddingModel& m, const TextualRelation& t) {
    const auto ids = m.vocab.encode(t);
    return forward(m, ids);
}

/// Backpropagate d(objective)/d(logits) into `grad`.
inline void backward(const EmbeddingModel& m, const ForwardCache& fc,
                     std::span<const double> dlogits, ModelParams& grad) {
    const auto& p = m.params;
    linalg::outer_acc(grad.projection, fc.decoder.h, dlogits);
    for (std::size_t j = 0; j < dlogits.size(); ++j)
        grad.bias.values()[j] += dlogits[j];

    Vector ds(m.dims.state, 0.0);
    linalg::gemv_acc(p.projection, dlogits, ds);

    Vector dx, dh;
    gru_backward(p.decoder, fc.decoder, ds, grad.decoder, dx, dh);
    auto go_row = grad.embeddings.row(Vocabulary::go);
    for (std::size_t k = 0; k < dx.size(); ++k)
        go_row[k] += dx[k];

    for (std::size_t l = fc.encoder.size(); l-- > 0;) {
        Vector dh_prev;
        gru_backward(p.encoder, fc.encoder[l], dh, grad.encoder, dx, dh_prev);
        auto row = grad.embeddings.row(fc.ids[l]);
        for (std::size_t k = 0; k < dx.size(); ++k)
            row[k] += dx[k];
        dh = std::move(dh_prev);
    }
}

/// Final encoder state h_m.
inline Vector encode(const EmbeddingModel& m, const TextualRelation& t) {
    if (t.empty())
        throw DataError("cannot encode an empty textual relation");
    Vector h(m.dims.state, 0.0);
    for (const auto& tok : t.tokens())
        h = gru_forward(m.params.encoder, m.params.embeddings.row(m.vocab.lookup(tok.key())), h).h;
    return h;
}

/// p(r | t) for every KB relation, given the encoder state.
inline Vector predict_distribution(const EmbeddingModel& m, std::span<const double> state) {
    const auto dec = gru_forward(m.params.decoder, m.params.embeddings.row(Vocabulary::go), state);
    Vector logits(m.params.bias.values().begin(), m.params.bias.values().end());
    linalg::gemv_t_acc(m.params.projection, dec.h, logits);
    return linalg::softmax(logits);
}

inline Vector predict_distribution(const EmbeddingModel& m, const TextualRelation& t) {
    return predict_distribution(m, encode(m, t));
}

// ---------------------------------------------------------------------------
// Checkpoints: a versioned TSV of tensors. Values use the shortest
// round-trip decimal form, so save -> load is bit-exact and the bytes only
// depend on the model.

inline constexpr std::string_view checkpoint_magic = "glore-checkpoint";
inline constexpr int checkpoint_version = 1;

inline std::string format_checkpoint(const EmbeddingModel& m) {
    std::string out;
    out += std::string(checkpoint_magic) + '\t' + std::to_string(checkpoint_version) + '\n';
    out += "dims\t" + std::to_string(m.dims.embed) + '\t' + std::to_string(m.dims.state) + '\t' +
           std::to_string(m.dims.relations) + '\n';
    for (const auto& r : m.relations)
        out += "relation\t" + r + '\n';
    for (std::size_t i = 2; i < m.vocab.size(); ++i)
        out += "token\t" + m.vocab.name(i) + '\n';
    m.params.for_each([&](const std::string& name, const Matrix& t) {
        out += "tensor\t" + name + '\t' + std::to_string(t.rows()) + '\t' +
               std::to_string(t.cols()) + '\n';
        for (std::size_t r = 0; r < t.rows(); ++r) {
            const auto row = t.row(r);
            for (std::size_t c = 0; c < row.size(); ++c) {
                if (c > 0)
                    out += '\t';
                out += tsv::format_double(row[c]);
            }
            out += '\n';
        }
    });
    return out;
}

inline void save_checkpoint(const EmbeddingModel& m, const std::filesystem::path& path) {
    tsv::write_file(path, format_checkpoint(m));
}

inline EmbeddingModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open checkpoint " + path.string());
    std::string line;
    auto next = [&](const char* what) {
        if (!std::getline(in, line))
            throw DataError("truncated checkpoint: expected " + std::string(what));
        return tsv::split(line);
    };
    auto head = next("header");
    if (head.size() != 2 || head[0] != checkpoint_magic)
        throw DataError("not a checkpoint file: " + path.string());
    if (tsv::parse_uint(head[1], "version") != checkpoint_version)
        throw DataError("unsupported checkpoint version " + std::string(head[1]));
    auto dims = next("dims");
    if (dims.size() != 4 || dims[0] != "dims")
        throw DataError("checkpoint is missing its dims line");
    const auto d = tsv::parse_uint(dims[1], "embed");
    const auto h = tsv::parse_uint(dims[2], "state");
    const auto nr = tsv::parse_uint(dims[3], "relations");

    std::vector<std::string> relations;
    Vocabulary vocab;
    std::vector<std::string> pending;
    while (true) {
        auto f = next("tensor");
        if (f[0] == "relation" && f.size() == 2) {
            relations.emplace_back(f[1]);
        } else if (f[0] == "token" && f.size() == 2) {
            vocab.add(std::string(f[1]));
        } else if (f[0] == "tensor") {
            pending.assign(f.begin(), f.end());
            break;
        } else {
            throw DataError("unexpected checkpoint line: " + line);
        }
    }
    if (relations.size() != nr)
        throw DataError("checkpoint declares " + std::to_string(nr) + " relations but lists " +
                        std::to_string(relations.size()));

    EmbeddingModel m(std::move(vocab), std::move(relations), d, h);
    m.params.for_each([&](const std::string& name, Matrix& t) {
        if (pending.empty())
            pending = [&] {
                auto f = next(name.c_str());
                return std::vector<std::string>(f.begin(), f.end());
            }();
        if (pending.size() != 4 || pending[0] != "tensor" || pending[1] != name)
            throw DataError("expected tensor '" + name + "' in checkpoint");
        const auto rows = tsv::parse_uint(pending[2], "rows");
        const auto cols = tsv::parse_uint(pending[3], "cols");
        if (rows != t.rows() || cols != t.cols())
            throw DataError("dimension mismatch for tensor '" + name + "': file has " +
                            std::to_string(rows) + "x" + std::to_string(cols) + ", model needs " +
                            std::to_string(t.rows()) + "x" + std::to_string(t.cols()));
        pending.clear();
        for (std::size_t r = 0; r < rows; ++r) {
            auto f = next(name.c_str());
            if (f.size() != cols)
                throw DataError("tensor '" + name + "' row " + std::to_string(r) + " has " +
                                std::to_string(f.size()) + " values");
            auto row = t.row(r);
            for (std::size_t c = 0; c < cols; ++c)
                row[c] = tsv::parse_double(f[c], name);
        }
    });
    return m;
}

/// Copy vectors for known tokens from a "token<TAB>v1 v2 ..." file into the
/// embedding table. Returns the number of rows replaced.
inline std::size_t load_pretrained_embeddings(EmbeddingModel& m,
                                              const std::filesystem::path& path) {
    std::size_t replaced = 0;
    tsv::for_each_record(path, 2, [&](const auto& f, std::size_t lineno) {
        const std::string key(f[0]);
        if (!m.vocab.contains(key))
            return;
        std::vector<double> values;
        std::istringstream ss{std::string(f[1])};
        std::string tok;
        while (ss >> tok)
            values.push_back(tsv::parse_double(tok, "embedding value"));
        if (values.size() != m.dims.embed)
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": vector has " +
                            std::to_string(values.size()) + " values, model expects " +
                            std::to_string(m.dims.embed));
        auto row = m.params.embeddings.row(m.vocab.lookup(key));
        std::copy(values.begin(), values.end(), row.begin());
        ++replaced;
    });
    return replaced;
}

} // namespace glore
