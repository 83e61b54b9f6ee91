#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "glore/error.hpp"
#include "glore/eval.hpp"
#include "glore/io.hpp"
#include "glore/merge.hpp"
#include "glore/random.hpp"
#include "glore/token.hpp"
#include "glore/tsv.hpp"

namespace glore {

/// Parameters of the synthetic distant-supervision corpus. Each sentence
/// picks a textual relation (Zipf-distributed frequency), draws its true KB
/// relation from `true_mapping`, and is attached to an entity pair holding
/// that relation. Each entity pair is registered in the KB under a wrong
/// relation with probability `noise_rate`, which mislabels every sentence
/// of that pair.
struct SyntheticSpec {
    std::size_t num_kb_relations = 20;   // including NA
    std::size_t num_textual_relations = 200;
    std::size_t num_sentences = 20000;
    std::size_t num_entity_pairs = 0;    // 0: num_sentences / 4
    double noise_rate = 0.3;
    double zipf_exponent = 1.0;          // 0: uniform textual frequencies
    std::uint64_t seed = 1;
    std::string na_relation = "NA";

    /// Row per textual relation, column per KB relation. Generated from the
    /// seed when left empty.
    std::vector<std::vector<double>> true_mapping;

    // Held-out candidates for merge / evaluation. None when zero.
    std::size_t num_test_pairs = 0;
    std::size_t max_contexts = 3;
    double base_corruption = 0.5;

    void validate() const {
        if (num_kb_relations < 1 || num_textual_relations < 1)
            throw ConfigError("synthetic spec needs at least one KB and one textual relation");
        if (!(noise_rate >= 0.0 && noise_rate < 1.0))
            throw ConfigError("noise_rate must be in [0, 1)");
        if (noise_rate > 0.0 && num_kb_relations < 2)
            throw ConfigError("noise needs at least two KB relations");
        if (!(base_corruption >= 0.0 && base_corruption <= 1.0))
            throw ConfigError("base_corruption must be in [0, 1]");
        if (!true_mapping.empty()) {
            if (true_mapping.size() != num_textual_relations)
                throw ConfigError("true_mapping has the wrong number of rows");
            for (const auto& row : true_mapping) {
                if (row.size() != num_kb_relations)
                    throw ConfigError("true_mapping row has the wrong number of columns");
                double s = 0.0;
                for (double v : row) {
                    if (v < 0.0)
                        throw ConfigError("true_mapping has a negative entry");
                    s += v;
                }
                if (std::abs(s - 1.0) > 1e-9)
                    throw ConfigError("true_mapping row does not sum to 1");
            }
        }
    }
};

struct CorpusRecord {
    std::string sentence_id;
    std::string head;
    std::string tail;
    std::string path;
};

struct SyntheticData {
    std::vector<std::string> relations;          // index 0 is NA
    std::vector<TextualRelation> textual;
    std::vector<std::vector<double>> true_mapping;
    std::vector<double> frequency;               // sampling weight per textual relation
    std::vector<CorpusRecord> corpus;
    FactSet kb;

    // Populated when num_test_pairs > 0.
    std::vector<CorpusRecord> contexts;          // train and test pairs
    std::vector<ScoredFact> base_train;
    std::vector<ScoredFact> base_test;
    FactSet holdout;

    /// Index of the true relation with the highest probability.
    std::size_t true_argmax(std::size_t t) const {
        const auto& row = true_mapping.at(t);
        return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    }
};

namespace detail {

inline std::string relation_name(std::size_t j, const std::string& na) {
    if (j == 0)
        return na;
    const auto digits = std::to_string(j);
    return "rel" + std::string(digits.size() < 2 ? 2 - digits.size() : 0, '0') + digits;
}

inline const std::vector<std::string>& synthetic_dep_labels() {
    static const std::vector<std::string> labels = {
        "nsubj", "nsubjpass", "dobj", "nmod:in", "nmod:of", "nmod:at",
        "appos", "compound", "amod", "conj", "nmod:poss", "xcomp"};
    return labels;
}

/// Random dependency paths over a small shared vocabulary: a dependency
/// token, one or two (word, dependency) blocks. Tokens carry no information
/// about the relation, so each path has to be learned from its own
/// statistics.
inline std::vector<TextualRelation> synthetic_paths(std::size_t n, Rng& rng) {
    const auto& deps = synthetic_dep_labels();
    constexpr std::size_t words = 30;
    auto dir = [&] { return rng.bernoulli(0.5) ? Direction::Left : Direction::Right; };
    std::set<std::string> seen;
    std::vector<TextualRelation> out;
    out.reserve(n);
    for (std::size_t t = 0; t < n; ++t) {
        for (int attempt = 0;; ++attempt) {
            if (attempt > 10000)
                throw ConfigError("could not generate distinct textual relations");
            std::vector<Token> toks;
            toks.push_back(Token::dep(deps[rng.index(deps.size())], dir()));
            const std::size_t blocks = 1 + rng.index(2);
            for (std::size_t b = 0; b < blocks; ++b) {
                toks.push_back(Token::word("w" + std::to_string(rng.index(words))));
                toks.push_back(Token::dep(deps[rng.index(deps.size())], dir()));
            }
            TextualRelation tr(std::move(toks));
            if (seen.insert(tr.canonical_key()).second) {
                out.push_back(std::move(tr));
                break;
            }
        }
    }
    return out;
}

/// Dominant relation with mass in [0.55, 0.9]; the rest spread over two
/// other relations.
inline std::vector<double> synthetic_row(std::size_t relations, std::size_t dominant, Rng& rng) {
    std::vector<double> row(relations, 0.0);
    if (relations == 1) {
        row[0] = 1.0;
        return row;
    }
    const double main = rng.uniform(0.55, 0.9);
    row[dominant] = main;
    std::vector<std::size_t> others;
    for (std::size_t j = 0; j < relations; ++j)
        if (j != dominant)
            others.push_back(j);
    const std::size_t k = std::min<std::size_t>(2, others.size());
    const auto picks = rng.sample_without_replacement(others.size(), k);
    const double split = k == 2 ? rng.uniform(0.2, 0.8) : 1.0;
    row[others[picks[0]]] += (1.0 - main) * split;
    if (k == 2)
        row[others[picks[1]]] += (1.0 - main) * (1.0 - split);
    return row;
}

inline double base_score(bool correct, double corruption, Rng& rng) {
    if (rng.bernoulli(corruption))
        return rng.uniform();
    return correct ? 0.5 + 0.5 * rng.uniform() : 0.5 * rng.uniform();
}

} // namespace detail

inline SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    const std::size_t R = spec.num_kb_relations;
    const std::size_t T = spec.num_textual_relations;
    SyntheticData d;
    for (std::size_t j = 0; j < R; ++j)
        d.relations.push_back(detail::relation_name(j, spec.na_relation));

    Rng map_rng(derive_seed(spec.seed, "synth/mapping"));
    if (spec.true_mapping.empty())
        for (std::size_t t = 0; t < T; ++t)
            d.true_mapping.push_back(detail::synthetic_row(R, map_rng.index(R), map_rng));
    else
        d.true_mapping = spec.true_mapping;
    Rng path_rng(derive_seed(spec.seed, "synth/paths"));
    d.textual = detail::synthetic_paths(T, path_rng);

    // Zipf weights over a random rank order.
    Rng freq_rng(derive_seed(spec.seed, "synth/frequency"));
    std::vector<std::size_t> rank(T);
    for (std::size_t t = 0; t < T; ++t)
        rank[t] = t;
    freq_rng.shuffle(rank);
    d.frequency.assign(T, 0.0);
    for (std::size_t r = 0; r < T; ++r)
        d.frequency[rank[r]] = 1.0 / std::pow(static_cast<double>(r + 1), spec.zipf_exponent);

    // Entity pairs, round-robin over relations so every relation has pairs.
    const std::size_t P = spec.num_entity_pairs > 0
                              ? spec.num_entity_pairs
                              : std::max<std::size_t>(R, spec.num_sentences / 4);
    std::vector<std::vector<std::size_t>> pairs_of(R);
    std::vector<std::size_t> pair_relation(P);
    for (std::size_t p = 0; p < P; ++p) {
        pair_relation[p] = p % R;
        pairs_of[p % R].push_back(p);
    }
    auto head_of = [](std::size_t p) { return "e" + std::to_string(2 * p); };
    auto tail_of = [](std::size_t p) { return "e" + std::to_string(2 * p + 1); };

    // Distant supervision labels, with noise.
    Rng kb_rng(derive_seed(spec.seed, "synth/kb"));
    std::vector<std::size_t> registered(P);
    for (std::size_t p = 0; p < P; ++p) {
        std::size_t label = pair_relation[p];
        if (kb_rng.bernoulli(spec.noise_rate)) {
            // uniformly among the other relations
            std::size_t other = kb_rng.index(R - 1);
            label = other >= label ? other + 1 : other;
        }
        registered[p] = label;
        if (label != 0)
            d.kb.insert(Fact{head_of(p), d.relations[label], tail_of(p)});
    }

    Rng sent_rng(derive_seed(spec.seed, "synth/sentences"));
    std::vector<bool> used(P, false);
    for (std::size_t s = 0; s < spec.num_sentences; ++s) {
        const std::size_t t = sent_rng.categorical(d.frequency);
        const std::size_t r = sent_rng.categorical(d.true_mapping[t]);
        const auto& pool = pairs_of[r];
        const std::size_t p = pool[sent_rng.index(pool.size())];
        used[p] = true;
        d.corpus.push_back({"s" + std::to_string(s), head_of(p), tail_of(p),
                            d.textual[t].canonical_key()});
    }

    if (spec.num_test_pairs == 0)
        return d;

    Rng cand_rng(derive_seed(spec.seed, "synth/candidates"));
    d.contexts.reserve(d.corpus.size());
    for (const auto& c : d.corpus)
        d.contexts.push_back({c.sentence_id, c.head, c.tail, c.path});
    for (std::size_t p = 0; p < P; ++p) {
        if (!used[p])
            continue;
        for (std::size_t j = 0; j < R; ++j)
            d.base_train.push_back({Fact{head_of(p), d.relations[j], tail_of(p)},
                                    detail::base_score(j == registered[p], spec.base_corruption,
                                                       cand_rng)});
    }

    // P(t | r) for drawing contexts of held-out pairs.
    std::vector<std::vector<double>> t_given_r(R, std::vector<double>(T, 0.0));
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t j = 0; j < R; ++j)
            t_given_r[j][t] = d.frequency[t] * d.true_mapping[t][j];

    std::size_t sid = 0;
    for (std::size_t q = 0; q < spec.num_test_pairs; ++q) {
        const std::size_t r = cand_rng.index(R);
        double mass = 0.0;
        for (double v : t_given_r[r])
            mass += v;
        if (mass <= 0.0)
            continue;
        const std::string head = "x" + std::to_string(2 * q);
        const std::string tail = "x" + std::to_string(2 * q + 1);
        const std::size_t n = 1 + cand_rng.index(std::max<std::size_t>(1, spec.max_contexts));
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t t = cand_rng.categorical(t_given_r[r]);
            d.contexts.push_back({"test" + std::to_string(sid++), head, tail,
                                  d.textual[t].canonical_key()});
        }
        if (r != 0)
            d.holdout.insert(Fact{head, d.relations[r], tail});
        for (std::size_t j = 0; j < R; ++j)
            d.base_test.push_back({Fact{head, d.relations[j], tail},
                                   detail::base_score(j == r, spec.base_corruption, cand_rng)});
    }
    return d;
}

inline std::string format_corpus(std::span<const CorpusRecord> records) {
    std::string out;
    for (const auto& r : records)
        out += r.sentence_id + '\t' + r.head + '\t' + r.tail + '\t' + r.path + '\n';
    return out;
}

inline std::string format_contexts(std::span<const CorpusRecord> records) {
    std::string out;
    for (const auto& r : records)
        out += r.head + '\t' + r.tail + '\t' + r.sentence_id + '\t' + r.path + '\n';
    return out;
}

/// canonical_key  relation  probability, non-zero entries only.
inline std::string format_truth(const SyntheticData& d) {
    std::vector<std::size_t> order(d.textual.size());
    for (std::size_t t = 0; t < order.size(); ++t)
        order[t] = t;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return d.textual[a].canonical_key() < d.textual[b].canonical_key();
    });
    std::string out;
    for (std::size_t t : order)
        for (std::size_t j = 0; j < d.relations.size(); ++j)
            if (d.true_mapping[t][j] > 0.0)
                out += d.textual[t].canonical_key() + '\t' + d.relations[j] + '\t' +
                       tsv::format_double(d.true_mapping[t][j]) + '\n';
    return out;
}

struct SyntheticFiles {
    std::filesystem::path corpus, kb, truth, contexts, base_train, base_test, holdout;
};

inline SyntheticFiles synthetic_file_names(const std::filesystem::path& dir) {
    return {dir / "corpus.tsv",     dir / "kb.tsv",        dir / "truth.tsv",
            dir / "contexts.tsv",   dir / "base_train.tsv", dir / "base_test.tsv",
            dir / "holdout.tsv"};
}

inline SyntheticFiles write_synthetic(const SyntheticData& d, const std::filesystem::path& dir) {
    const auto f = synthetic_file_names(dir);
    tsv::write_file(f.corpus, format_corpus(d.corpus));
    tsv::write_file(f.kb, io::format_facts(d.kb));
    tsv::write_file(f.truth, format_truth(d));
    if (!d.contexts.empty()) {
        tsv::write_file(f.contexts, format_contexts(d.contexts));
        tsv::write_file(f.base_train, io::format_base_scores(d.base_train));
        tsv::write_file(f.base_test, io::format_base_scores(d.base_test));
        tsv::write_file(f.holdout, io::format_facts(d.holdout));
    }
    return f;
}

} // namespace glore
