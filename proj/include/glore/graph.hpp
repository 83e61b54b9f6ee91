#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "glore/error.hpp"
#include "glore/random.hpp"
#include "glore/token.hpp"
#include "glore/tsv.hpp"

namespace glore {

/// Ordered (head, tail) entity pair; (a, b) and (b, a) are different pairs.
struct EntityPair {
    std::string head;
    std::string tail;

    auto operator<=>(const EntityPair&) const = default;
};

struct KbRelation {
    std::string name;
    bool is_na = false;

    auto operator<=>(const KbRelation&) const = default;
};

struct GraphOptions {
    /// Each submitted sentence occurrence counts once. When false, a repeated
    /// (sentence_id, head, tail) submission is rejected.
    bool allow_duplicates = true;
    /// Occurrences whose entity pair holds no KB relation count towards the
    /// NA column.
    bool count_na_pairs = true;
    std::string na_relation = "NA";
};

struct GraphEdge {
    std::size_t textual = 0;
    std::size_t relation = 0;
    std::uint64_t count = 0;
    double weight = 0.0;
};

/// Bipartite graph between textual relations (rows) and KB relations
/// (columns). Edges exist exactly where the raw co-occurrence count is
/// positive and are kept sorted by (row, column). `weighted` tells whether
/// the edge weights have been filled in by one of the normalizations.
struct RelationGraph {
    std::vector<TextualRelation> textual;   // sorted by canonical key
    std::vector<KbRelation> relations;      // sorted by name
    std::vector<GraphEdge> edges;
    bool weighted = false;

    std::optional<std::size_t> find_textual(std::string_view key) const {
        auto it = std::lower_bound(textual.begin(), textual.end(), key,
                                   [](const TextualRelation& t, std::string_view k) {
                                       return t.canonical_key() < k;
                                   });
        if (it == textual.end() || it->canonical_key() != key)
            return std::nullopt;
        return static_cast<std::size_t>(it - textual.begin());
    }

    std::optional<std::size_t> find_relation(std::string_view name) const {
        for (std::size_t j = 0; j < relations.size(); ++j)
            if (relations[j].name == name)
                return j;
        return std::nullopt;
    }

    std::span<const GraphEdge> row(std::size_t i) const {
        auto lo = std::lower_bound(edges.begin(), edges.end(), i,
                                   [](const GraphEdge& e, std::size_t r) { return e.textual < r; });
        auto hi = std::upper_bound(lo, edges.end(), i,
                                   [](std::size_t r, const GraphEdge& e) { return r < e.textual; });
        return {lo, hi};
    }

    std::uint64_t row_sum(std::size_t i) const {
        std::uint64_t s = 0;
        for (const auto& e : row(i))
            s += e.count;
        return s;
    }

    std::uint64_t count(std::size_t i, std::size_t j) const {
        for (const auto& e : row(i))
            if (e.relation == j)
                return e.count;
        return 0;
    }

    /// Dense copy of the raw counts, rows x columns.
    std::vector<std::vector<std::uint64_t>> dense_counts() const {
        std::vector<std::vector<std::uint64_t>> m(textual.size(),
                                                  std::vector<std::uint64_t>(relations.size(), 0));
        for (const auto& e : edges)
            m[e.textual][e.relation] = e.count;
        return m;
    }
};

/// Accumulates corpus occurrences and KB facts. Single writer; independent
/// builders over corpus shards combine with merge().
class GraphBuilder {
public:
    explicit GraphBuilder(GraphOptions options = {}) : options_(std::move(options)) {}

    const GraphOptions& options() const noexcept { return options_; }

    void accumulate_fact(const std::string& head, const std::string& tail,
                         const TextualRelation& t, const std::string& sentence_id) {
        if (t.empty())
            throw DataError("cannot accumulate an empty textual relation");
        if (!options_.allow_duplicates) {
            auto [it, inserted] = seen_.insert({sentence_id, head, tail});
            if (!inserted)
                throw DataError("duplicate sentence record '" + sentence_id + "' for (" + head +
                                ", " + tail + ")");
        }
        auto [it, inserted] = supports_.try_emplace(t.canonical_key());
        if (inserted)
            it->second.relation = t;
        ++it->second.pairs[EntityPair{head, tail}];
    }

    void register_kb_fact(const std::string& head, const std::string& tail,
                          const std::string& relation) {
        kb_[relation].insert(EntityPair{head, tail});
    }

    /// Element-wise count addition; associative and commutative.
    void merge(const GraphBuilder& other) {
        for (const auto& [key, support] : other.supports_) {
            auto [it, inserted] = supports_.try_emplace(key);
            if (inserted)
                it->second.relation = support.relation;
            for (const auto& [pair, m] : support.pairs)
                it->second.pairs[pair] += m;
        }
        for (const auto& [rel, pairs] : other.kb_)
            kb_[rel].insert(pairs.begin(), pairs.end());
        for (const auto& s : other.seen_) {
            if (!options_.allow_duplicates && seen_.contains(s))
                throw DataError("duplicate sentence record '" + std::get<0>(s) +
                                "' across merged shards");
            seen_.insert(s);
        }
    }

    /// m_{S(t)}(head, tail); 0 when absent.
    std::uint64_t multiplicity(std::string_view key, const EntityPair& pair) const {
        auto it = supports_.find(std::string(key));
        if (it == supports_.end())
            return 0;
        auto p = it->second.pairs.find(pair);
        return p == it->second.pairs.end() ? 0 : p->second;
    }

    /// Number of distinct entity pairs in S(t).
    std::size_t support_size(std::string_view key) const {
        auto it = supports_.find(std::string(key));
        return it == supports_.end() ? 0 : it->second.pairs.size();
    }

    bool has_textual(std::string_view key) const {
        return supports_.contains(std::string(key));
    }

    const std::set<EntityPair>& kb_support(const std::string& relation) const {
        static const std::set<EntityPair> empty;
        auto it = kb_.find(relation);
        return it == kb_.end() ? empty : it->second;
    }

    /// n_ij = sum over (e, e') in S(r_j) of m_{S(t_i)}(e, e'). Weights are
    /// left empty. Textual relations with an all-zero row are kept so that
    /// callers can decide between pruning and failing.
    RelationGraph build_counts() const {
        RelationGraph g;
        std::set<std::string> names;
        for (const auto& [rel, pairs] : kb_)
            names.insert(rel);
        if (options_.count_na_pairs)
            names.insert(options_.na_relation);
        for (const auto& n : names)
            g.relations.push_back({n, n == options_.na_relation});

        std::map<EntityPair, std::vector<std::size_t>> holds;
        for (std::size_t j = 0; j < g.relations.size(); ++j) {
            auto it = kb_.find(g.relations[j].name);
            if (it == kb_.end())
                continue;
            for (const auto& p : it->second)
                holds[p].push_back(j);
        }
        std::optional<std::size_t> na_col;
        if (options_.count_na_pairs)
            na_col = g.find_relation(options_.na_relation);

        std::vector<const Support*> rows;
        rows.reserve(supports_.size());
        for (const auto& [key, support] : supports_)
            rows.push_back(&support);
        std::sort(rows.begin(), rows.end(), [](const Support* a, const Support* b) {
            return a->relation.canonical_key() < b->relation.canonical_key();
        });

        std::vector<std::uint64_t> counts(g.relations.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            g.textual.push_back(rows[i]->relation);
            std::fill(counts.begin(), counts.end(), 0);
            for (const auto& [pair, m] : rows[i]->pairs) {
                auto it = holds.find(pair);
                if (it != holds.end()) {
                    for (std::size_t j : it->second)
                        counts[j] += m;
                } else if (na_col) {
                    counts[*na_col] += m;
                }
            }
            for (std::size_t j = 0; j < counts.size(); ++j)
                if (counts[j] > 0)
                    g.edges.push_back({i, j, counts[j], 0.0});
        }
        return g;
    }

private:
    struct Support {
        TextualRelation relation;
        std::map<EntityPair, std::uint64_t> pairs;
    };

    GraphOptions options_;
    std::unordered_map<std::string, Support> supports_;
    std::map<std::string, std::set<EntityPair>> kb_;
    std::set<std::tuple<std::string, std::string, std::string>> seen_;
};

/// Drop textual relations whose total count is below `min_row_sum`. Rows
/// that sum to zero are always dropped. Weights are cleared.
inline RelationGraph prune_rows(const RelationGraph& g, std::uint64_t min_row_sum = 1) {
    const std::uint64_t threshold = std::max<std::uint64_t>(min_row_sum, 1);
    RelationGraph out;
    out.relations = g.relations;
    std::vector<std::uint64_t> sums(g.textual.size(), 0);
    for (const auto& e : g.edges)
        sums[e.textual] += e.count;
    std::vector<std::size_t> remap(g.textual.size(), SIZE_MAX);
    for (std::size_t i = 0; i < g.textual.size(); ++i) {
        if (sums[i] < threshold)
            continue;
        remap[i] = out.textual.size();
        out.textual.push_back(g.textual[i]);
    }
    for (const auto& e : g.edges)
        if (remap[e.textual] != SIZE_MAX)
            out.edges.push_back({remap[e.textual], e.relation, e.count, 0.0});
    return out;
}

/// w_ij = n_ij / sum_j' n_ij'. Throws DataError naming the first textual
/// relation whose row sums to zero.
inline RelationGraph normalize_conditional(const RelationGraph& g) {
    RelationGraph out = g;
    std::vector<std::uint64_t> sums(g.textual.size(), 0);
    for (const auto& e : g.edges)
        sums[e.textual] += e.count;
    for (std::size_t i = 0; i < sums.size(); ++i)
        if (sums[i] == 0)
            throw DataError("textual relation '" + g.textual[i].canonical_key() +
                            "' has no co-occurrences");
    for (auto& e : out.edges)
        e.weight = static_cast<double>(e.count) / static_cast<double>(sums[e.textual]);
    out.weighted = true;
    return out;
}

/// Positive PMI with context-distribution smoothing: column marginals are
/// raised to `alpha` and renormalized. No alpha means plain PPMI.
inline RelationGraph normalize_ppmi(const RelationGraph& g, std::optional<double> alpha = {}) {
    const double a = alpha.value_or(1.0);
    RelationGraph out = g;
    std::vector<double> rows(g.textual.size(), 0.0), cols(g.relations.size(), 0.0);
    double total = 0.0;
    for (const auto& e : g.edges) {
        rows[e.textual] += static_cast<double>(e.count);
        cols[e.relation] += static_cast<double>(e.count);
        total += static_cast<double>(e.count);
    }
    double smoothed_total = 0.0;
    for (double& c : cols) {
        c = c > 0.0 ? std::pow(c, a) : 0.0;
        smoothed_total += c;
    }
    for (auto& e : out.edges) {
        const double p_ij = static_cast<double>(e.count) / total;
        const double p_i = rows[e.textual] / total;
        const double p_j = cols[e.relation] / smoothed_total;
        e.weight = std::max(0.0, std::log(p_ij / (p_i * p_j)));
    }
    out.weighted = true;
    return out;
}

struct EdgeSplit {
    std::vector<std::size_t> train;   // indices into RelationGraph::edges
    std::vector<std::size_t> validation;
};

/// Two independent uniform samples without replacement. The sets may
/// overlap each other.
inline EdgeSplit split_edges(const RelationGraph& g, std::size_t train_size,
                             std::size_t val_size, std::uint64_t seed) {
    const std::size_t n = g.edges.size();
    if (train_size > n || val_size > n)
        throw DataError("requested split (" + std::to_string(train_size) + ", " +
                        std::to_string(val_size) + ") exceeds edge count " + std::to_string(n));
    Rng train_rng(derive_seed(seed, "split/train"));
    Rng val_rng(derive_seed(seed, "split/validation"));
    return {train_rng.sample_without_replacement(n, train_size),
            val_rng.sample_without_replacement(n, val_size)};
}

/// canonical_key, relation, raw count, weight; one edge per line, sorted by
/// (canonical_key, relation). Unweighted graphs write an empty weight.
inline std::string format_graph_tsv(const RelationGraph& g) {
    std::string out;
    for (const auto& e : g.edges) {
        out += g.textual[e.textual].canonical_key();
        out += '\t';
        out += g.relations[e.relation].name;
        out += '\t';
        out += std::to_string(e.count);
        out += '\t';
        if (g.weighted)
            out += tsv::format_double(e.weight);
        out += '\n';
    }
    return out;
}

inline void write_graph_tsv(const RelationGraph& g, const std::filesystem::path& path) {
    tsv::write_file(path, format_graph_tsv(g));
}

inline RelationGraph read_graph_tsv(const std::filesystem::path& path,
                                    const std::string& na_relation = "NA") {
    struct Row {
        std::string key, rel;
        std::uint64_t count;
        std::optional<double> weight;
    };
    std::vector<Row> rows;
    std::map<std::string, TextualRelation> textual;
    std::set<std::string> names;
    tsv::for_each_record(path, 4, [&](const auto& f, std::size_t) {
        Row r{std::string(f[0]), std::string(f[1]), tsv::parse_uint(f[2], "raw_count"), {}};
        if (r.count == 0)
            throw DataError("zero-count edge in graph file");
        if (!f[3].empty())
            r.weight = tsv::parse_double(f[3], "weight");
        if (!textual.contains(r.key))
            textual.emplace(r.key, parse_textual_relation(r.key));
        names.insert(r.rel);
        rows.push_back(std::move(r));
    });
    RelationGraph g;
    for (auto& [key, t] : textual)
        g.textual.push_back(std::move(t));
    for (const auto& n : names)
        g.relations.push_back({n, n == na_relation});
    g.weighted = !rows.empty() && rows.front().weight.has_value();
    for (const auto& r : rows) {
        if (r.weight.has_value() != g.weighted)
            throw DataError("graph file mixes weighted and unweighted edges");
        g.edges.push_back({*g.find_textual(r.key), *g.find_relation(r.rel), r.count,
                           r.weight.value_or(0.0)});
    }
    std::sort(g.edges.begin(), g.edges.end(), [](const GraphEdge& a, const GraphEdge& b) {
        return std::tie(a.textual, a.relation) < std::tie(b.textual, b.relation);
    });
    for (std::size_t k = 1; k < g.edges.size(); ++k)
        if (g.edges[k].textual == g.edges[k - 1].textual &&
            g.edges[k].relation == g.edges[k - 1].relation)
            throw DataError("duplicate edge (" + g.textual[g.edges[k].textual].canonical_key() +
                            ", " + g.relations[g.edges[k].relation].name + ") in graph file");
    return g;
}

} // namespace glore
