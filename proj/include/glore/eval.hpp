#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "glore/error.hpp"
#include "glore/merge.hpp"
#include "glore/tsv.hpp"

namespace glore {

struct ScoredFact {
    Fact fact;
    double score = 0.0;
};

struct RankedPrediction {
    Fact candidate;
    double score = 0.0;
    bool label = false;
};

/// Score descending; equal scores fall back to (head, relation, tail).
inline bool ranks_before(const Fact& a, double sa, const Fact& b, double sb) {
    if (sa != sb)
        return sa > sb;
    return std::tie(a.head, a.relation, a.tail) < std::tie(b.head, b.relation, b.tail);
}

/// Marks each prediction by membership in the held-out facts and returns
/// them in rank order. Candidates with the NA relation are dropped.
inline std::vector<RankedPrediction> label_against_kb(std::span<const ScoredFact> predictions,
                                                      const FactSet& holdout,
                                                      const std::string& na_relation = "NA") {
    std::vector<RankedPrediction> out;
    out.reserve(predictions.size());
    for (const auto& p : predictions)
        if (p.fact.relation != na_relation)
            out.push_back({p.fact, p.score, holdout.contains(p.fact)});
    std::sort(out.begin(), out.end(), [](const RankedPrediction& a, const RankedPrediction& b) {
        return ranks_before(a.candidate, a.score, b.candidate, b.score);
    });
    return out;
}

struct PrPoint {
    std::size_t k = 0;
    double recall = 0.0;
    double precision = 0.0;
};

/// One point per prefix length k = 1..n.
inline std::vector<PrPoint> pr_curve(std::span<const RankedPrediction> ranked,
                                     std::size_t total_positives) {
    if (total_positives == 0)
        throw DataError("pr_curve needs at least one positive");
    std::vector<PrPoint> out;
    out.reserve(ranked.size());
    std::size_t tp = 0;
    for (std::size_t k = 1; k <= ranked.size(); ++k) {
        if (ranked[k - 1].label)
            ++tp;
        out.push_back({k, static_cast<double>(tp) / static_cast<double>(total_positives),
                       static_cast<double>(tp) / static_cast<double>(k)});
    }
    return out;
}

/// Precision of the top n predictions for each requested n.
inline std::map<std::size_t, double> precision_at_n(std::span<const RankedPrediction> ranked,
                                                    std::span<const std::size_t> n_values) {
    std::map<std::size_t, double> out;
    for (std::size_t n : n_values) {
        if (n == 0 || n > ranked.size())
            throw DataError("P@" + std::to_string(n) + " requested but only " +
                            std::to_string(ranked.size()) + " predictions are ranked");
        std::size_t tp = 0;
        for (std::size_t i = 0; i < n; ++i)
            tp += ranked[i].label ? 1 : 0;
        out[n] = static_cast<double>(tp) / static_cast<double>(n);
    }
    return out;
}

enum class RecallDenominator {
    /// Held-out facts whose entity pair appears among the candidates.
    PairsInCandidates,
    /// Every held-out fact.
    RawHoldout,
};

inline std::size_t recall_denominator(const FactSet& holdout, std::span<const ScoredFact> candidates,
                                      RecallDenominator kind,
                                      const std::string& na_relation = "NA") {
    if (kind == RecallDenominator::RawHoldout) {
        std::size_t n = 0;
        for (const auto& f : holdout)
            n += f.relation != na_relation ? 1 : 0;
        return n;
    }
    std::set<EntityPair> pairs;
    for (const auto& c : candidates)
        pairs.insert(c.fact.pair());
    std::size_t n = 0;
    for (const auto& f : holdout)
        if (f.relation != na_relation && pairs.contains(f.pair()))
            ++n;
    return n;
}

inline std::string format_curve_csv(std::span<const PrPoint> curve) {
    std::string out = "k,recall,precision\n";
    for (const auto& p : curve)
        out += std::to_string(p.k) + ',' + tsv::format_double(p.recall) + ',' +
               tsv::format_double(p.precision) + '\n';
    return out;
}

inline std::string format_precision_at_n_csv(const std::map<std::size_t, double>& pn) {
    std::string out = "n,precision\n";
    for (const auto& [n, p] : pn)
        out += std::to_string(n) + ',' + tsv::format_double(p) + '\n';
    return out;
}

} // namespace glore
