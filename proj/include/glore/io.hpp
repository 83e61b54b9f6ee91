#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "glore/eval.hpp"
#include "glore/graph.hpp"
#include "glore/merge.hpp"
#include "glore/tsv.hpp"

namespace glore::io {

// Corpus facts:  sentence_id  head  tail  path_text
inline void read_corpus(const std::filesystem::path& path, GraphBuilder& builder) {
    tsv::for_each_record(path, 4, [&](const auto& f, std::size_t) {
        builder.accumulate_fact(std::string(f[1]), std::string(f[2]),
                                parse_textual_relation(f[3]), std::string(f[0]));
    });
}

// KB facts:  head  relation  tail
inline FactSet read_kb_facts(const std::filesystem::path& path) {
    FactSet facts;
    tsv::for_each_record(path, 3, [&](const auto& f, std::size_t) {
        facts.insert(Fact{std::string(f[0]), std::string(f[1]), std::string(f[2])});
    });
    return facts;
}

inline void register_kb(const FactSet& facts, GraphBuilder& builder) {
    for (const auto& f : facts)
        builder.register_kb_fact(f.head, f.tail, f.relation);
}

inline std::string format_facts(const FactSet& facts) {
    std::string out;
    for (const auto& f : facts)
        out += f.head + '\t' + f.relation + '\t' + f.tail + '\n';
    return out;
}

// Base scores:  head  relation  tail  E
inline std::vector<ScoredFact> read_base_scores(const std::filesystem::path& path) {
    std::vector<ScoredFact> out;
    std::set<Fact> seen;
    tsv::for_each_record(path, 4, [&](const auto& f, std::size_t lineno) {
        Fact fact{std::string(f[0]), std::string(f[1]), std::string(f[2])};
        if (!seen.insert(fact).second)
            throw DataError(path.string() + ":" + std::to_string(lineno) +
                            ": duplicate candidate");
        out.push_back({std::move(fact), tsv::parse_double(f[3], "E_score")});
    });
    return out;
}

inline std::string format_base_scores(std::span<const ScoredFact> scores) {
    std::string out;
    for (const auto& s : scores)
        out += s.fact.head + '\t' + s.fact.relation + '\t' + s.fact.tail + '\t' +
               tsv::format_double(s.score) + '\n';
    return out;
}

using ContextMap = std::map<EntityPair, std::vector<Context>>;

// Contexts:  head  tail  sentence_id  path_text
inline ContextMap read_contexts(const std::filesystem::path& path) {
    ContextMap out;
    tsv::for_each_record(path, 4, [&](const auto& f, std::size_t) {
        out[EntityPair{std::string(f[0]), std::string(f[1])}].push_back(
            Context{std::string(f[2]), parse_textual_relation(f[3])});
    });
    return out;
}

/// Candidate with its base score and uncapped sentence-score sum.
struct ScoredCandidate {
    Fact fact;
    CandidateScores scores;
};

// Scored candidates:  head  relation  tail  E  G_sum
inline std::string format_scored_candidates(std::span<const ScoredCandidate> rows) {
    std::string out;
    for (const auto& r : rows)
        out += r.fact.head + '\t' + r.fact.relation + '\t' + r.fact.tail + '\t' +
               tsv::format_double(r.scores.e) + '\t' + tsv::format_double(r.scores.g_sum) + '\n';
    return out;
}

inline std::vector<ScoredCandidate> read_scored_candidates(const std::filesystem::path& path) {
    std::vector<ScoredCandidate> out;
    tsv::for_each_record(path, 5, [&](const auto& f, std::size_t) {
        out.push_back({Fact{std::string(f[0]), std::string(f[1]), std::string(f[2])},
                       {tsv::parse_double(f[3], "E"), tsv::parse_double(f[4], "G")}});
    });
    return out;
}

struct MergedRow {
    Fact fact;
    double e = 0.0;
    double g = 0.0;   // capped
    double merged = 0.0;
};

/// head  relation  tail  E  G  E~, sorted by E~ descending with ties broken
/// by (head, relation, tail).
inline std::string format_merged(std::vector<MergedRow> rows) {
    std::sort(rows.begin(), rows.end(), [](const MergedRow& a, const MergedRow& b) {
        return ranks_before(a.fact, a.merged, b.fact, b.merged);
    });
    std::string out;
    for (const auto& r : rows)
        out += r.fact.head + '\t' + r.fact.relation + '\t' + r.fact.tail + '\t' +
               tsv::format_double(r.e) + '\t' + tsv::format_double(r.g) + '\t' +
               tsv::format_double(r.merged) + '\n';
    return out;
}

inline std::vector<MergedRow> read_merged(const std::filesystem::path& path) {
    std::vector<MergedRow> out;
    tsv::for_each_record(path, 6, [&](const auto& f, std::size_t) {
        out.push_back({Fact{std::string(f[0]), std::string(f[1]), std::string(f[2])},
                       tsv::parse_double(f[3], "E"), tsv::parse_double(f[4], "G"),
                       tsv::parse_double(f[5], "merged")});
    });
    return out;
}

inline std::string format_merge_model(const MergeModel& m) {
    return "w1\t" + tsv::format_double(m.w1) + "\nw2\t" + tsv::format_double(m.w2) + "\ncap\t" +
           tsv::format_double(m.cap) + '\n';
}

inline MergeModel read_merge_model(const std::filesystem::path& path) {
    MergeModel m;
    tsv::for_each_record(path, 2, [&](const auto& f, std::size_t) {
        const double v = tsv::parse_double(f[1], f[0]);
        if (f[0] == "w1")
            m.w1 = v;
        else if (f[0] == "w2")
            m.w2 = v;
        else if (f[0] == "cap")
            m.cap = v;
        else
            throw DataError("unknown merge parameter '" + std::string(f[0]) + "'");
    });
    return m;
}

} // namespace glore::io
