#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "glore/error.hpp"
#include "glore/graph.hpp"
#include "glore/model.hpp"
#include "glore/random.hpp"

namespace glore {

/// Candidate relational fact (head, relation, tail).
struct Fact {
    std::string head;
    std::string relation;
    std::string tail;

    EntityPair pair() const { return {head, tail}; }
    auto operator<=>(const Fact&) const = default;
};

using FactSet = std::set<Fact>;

/// One contextual sentence of an entity pair.
struct Context {
    std::string sentence_id;
    TextualRelation relation;
};

struct SentenceScore {
    Fact candidate;
    std::string sentence_id;
    TextualRelation relation;
    double g = 0.0;   // p(r | t) in [0, 1]
};

/// G(z | s) for every contextual sentence. A relation the model has never
/// seen scores 0.
inline std::vector<SentenceScore> sentence_scores(const EmbeddingModel& m, const std::string& head,
                                                  const std::string& tail,
                                                  std::span<const Context> contexts,
                                                  const std::string& relation) {
    std::vector<SentenceScore> out;
    out.reserve(contexts.size());
    const auto j = m.relation_index(relation);
    for (const auto& c : contexts) {
        const double g = j ? predict_distribution(m, c.relation)[*j] : 0.0;
        out.push_back({{head, relation, tail}, c.sentence_id, c.relation, g});
    }
    return out;
}

/// min(cap, sum of sentence scores).
inline double aggregate(std::span<const SentenceScore> scores, double cap) {
    if (cap < 0.0)
        throw DataError("aggregation cap must be non-negative");
    double s = 0.0;
    for (const auto& x : scores)
        s += x.g;
    return std::min(cap, s);
}

enum class Pooling { CappedSum, Max, Mean };

/// Comparison baselines next to the capped sum: max and mean pooling
/// ignore the cap.
inline double pool(std::span<const double> g, Pooling kind, double cap) {
    if (g.empty())
        return 0.0;
    switch (kind) {
    case Pooling::Max:
        return *std::max_element(g.begin(), g.end());
    case Pooling::Mean: {
        double s = 0.0;
        for (double v : g)
            s += v;
        return s / static_cast<double>(g.size());
    }
    case Pooling::CappedSum:
        break;
    }
    double s = 0.0;
    for (double v : g)
        s += v;
    return std::min(cap, s);
}

struct MergeModel {
    double w1 = 1.0;
    double w2 = 1.0;
    double cap = 1.0;

    friend bool operator==(const MergeModel&, const MergeModel&) = default;
};

/// w1 * E + w2 * G.
inline double combine(const MergeModel& mm, double e_score, double g_score) {
    return mm.w1 * e_score + mm.w2 * g_score;
}

/// Base score and uncapped sentence-score sum of one candidate. The cap is
/// applied at merge time so that it stays trainable.
struct CandidateScores {
    double e = 0.0;
    double g_sum = 0.0;
};

inline double merged_score(const MergeModel& mm, const CandidateScores& c) {
    return combine(mm, c.e, std::min(mm.cap, c.g_sum));
}

struct MergeTrainExample {
    CandidateScores positive;
    std::vector<CandidateScores> negatives;
};

namespace detail {

inline void check_examples(std::span<const MergeTrainExample> examples) {
    for (const auto& ex : examples)
        if (ex.negatives.empty())
            throw DataError("merge training example without negatives");
}

inline std::size_t pair_count(std::span<const MergeTrainExample> examples) {
    std::size_t n = 0;
    for (const auto& ex : examples)
        n += ex.negatives.size();
    return n;
}

} // namespace detail

/// Mean over all (positive, negative) pairs of max(0, 1 + E~(z-) - E~(z+)).
inline double hinge_loss(const MergeModel& mm, std::span<const MergeTrainExample> examples) {
    detail::check_examples(examples);
    const std::size_t pairs = detail::pair_count(examples);
    if (pairs == 0)
        return 0.0;
    double total = 0.0;
    for (const auto& ex : examples) {
        const double pos = merged_score(mm, ex.positive);
        for (const auto& neg : ex.negatives)
            total += std::max(0.0, 1.0 + merged_score(mm, neg) - pos);
    }
    return total / static_cast<double>(pairs);
}

struct MergeGradient {
    double w1 = 0.0, w2 = 0.0, cap = 0.0;
};

/// A subgradient of hinge_loss(). At every kink (margin exactly met, or
/// sum exactly at the cap) the zero side is taken.
inline MergeGradient hinge_subgradient(const MergeModel& mm,
                                       std::span<const MergeTrainExample> examples) {
    detail::check_examples(examples);
    MergeGradient grad;
    const std::size_t pairs = detail::pair_count(examples);
    if (pairs == 0)
        return grad;
    auto partial = [&](const CandidateScores& c) {
        const bool capped = c.g_sum > mm.cap;
        return MergeGradient{c.e, std::min(mm.cap, c.g_sum), capped ? mm.w2 : 0.0};
    };
    for (const auto& ex : examples) {
        const double pos = merged_score(mm, ex.positive);
        const auto dpos = partial(ex.positive);
        for (const auto& neg : ex.negatives) {
            if (1.0 + merged_score(mm, neg) - pos <= 0.0)
                continue;
            const auto dneg = partial(neg);
            grad.w1 += dneg.w1 - dpos.w1;
            grad.w2 += dneg.w2 - dpos.w2;
            grad.cap += dneg.cap - dpos.cap;
        }
    }
    const double n = static_cast<double>(pairs);
    grad.w1 /= n;
    grad.w2 /= n;
    grad.cap /= n;
    return grad;
}

struct MergeTrainOptions {
    double learning_rate = 0.05;
    std::size_t epochs = 200;
    std::size_t batch_size = 1024;
    double validation_fraction = 0.1;
    std::uint64_t seed = 1;
};

struct MergeTrainResult {
    MergeModel model;
    double best_validation_loss = 0.0;
    double initial_loss = 0.0;   // on the training part
    double final_loss = 0.0;     // best model, training part
};

/// Mini-batch subgradient descent on (w1, w2, cap). A shuffled
/// `validation_fraction` of the examples is held out; the parameters with
/// the lowest held-out hinge loss are returned. cap is projected to >= 0
/// after every update.
inline MergeTrainResult train_merge(std::span<const MergeTrainExample> examples,
                                    const MergeModel& init, const MergeTrainOptions& opt) {
    if (examples.empty())
        throw DataError("no merge training examples");
    detail::check_examples(examples);
    if (opt.batch_size == 0)
        throw ConfigError("merge batch_size must be >= 1");

    Rng rng(derive_seed(opt.seed, "merge/split"));
    std::vector<std::size_t> order(examples.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    rng.shuffle(order);
    std::size_t n_val = static_cast<std::size_t>(
        std::floor(opt.validation_fraction * static_cast<double>(examples.size())));
    if (examples.size() > 1)
        n_val = std::min(n_val, examples.size() - 1);
    else
        n_val = 0;
    std::vector<MergeTrainExample> val, train;
    for (std::size_t i = 0; i < order.size(); ++i)
        (i < n_val ? val : train).push_back(examples[order[i]]);
    const auto& held_out = val.empty() ? train : val;

    MergeModel mm = init;
    mm.cap = std::max(0.0, mm.cap);
    MergeTrainResult result{mm, hinge_loss(mm, held_out), hinge_loss(mm, train), 0.0};

    Rng shuffle_rng(derive_seed(opt.seed, "merge/shuffle"));
    std::vector<MergeTrainExample> batch;
    for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
        shuffle_rng.shuffle(train);
        for (std::size_t b = 0; b < train.size(); b += opt.batch_size) {
            const std::size_t e = std::min(train.size(), b + opt.batch_size);
            const auto g = hinge_subgradient(
                mm, std::span<const MergeTrainExample>(train.data() + b, e - b));
            mm.w1 -= opt.learning_rate * g.w1;
            mm.w2 -= opt.learning_rate * g.w2;
            mm.cap = std::max(0.0, mm.cap - opt.learning_rate * g.cap);
        }
        const double v = hinge_loss(mm, held_out);
        if (v < result.best_validation_loss) {
            result.best_validation_loss = v;
            result.model = mm;
        }
    }
    result.final_loss = hinge_loss(result.model, train);
    return result;
}

/// For each positive (e, r, e'), draw k relations r' != r uniformly without
/// replacement from the candidate pool, excluding any r' with (e, r', e')
/// in the KB. The pool is sorted and deduplicated first, so the draw only
/// depends on its contents.
inline std::vector<std::vector<std::string>>
negative_sample(const FactSet& kb_facts, std::span<const Fact> positives,
                const std::map<EntityPair, std::vector<std::string>>& candidate_pool,
                std::size_t k, std::uint64_t seed) {
    Rng rng(derive_seed(seed, "merge/negatives"));
    std::vector<std::vector<std::string>> out;
    out.reserve(positives.size());
    for (const auto& pos : positives) {
        const auto pair = pos.pair();
        auto it = candidate_pool.find(pair);
        std::set<std::string> pool;
        if (it != candidate_pool.end())
            pool.insert(it->second.begin(), it->second.end());
        std::vector<std::string> valid;
        for (const auto& r : pool)
            if (r != pos.relation && !kb_facts.contains(Fact{pos.head, r, pos.tail}))
                valid.push_back(r);
        if (valid.size() < k)
            throw DataError("only " + std::to_string(valid.size()) +
                            " replacement relations for (" + pos.head + ", " + pos.relation +
                            ", " + pos.tail + "), need " + std::to_string(k));
        std::vector<std::string> picked;
        for (std::size_t idx : rng.sample_without_replacement(valid.size(), k))
            picked.push_back(valid[idx]);
        out.push_back(std::move(picked));
    }
    return out;
}

/// Same relation pool for every pair.
inline std::vector<std::vector<std::string>>
negative_sample(const FactSet& kb_facts, std::span<const Fact> positives,
                std::span<const std::string> relations, std::size_t k, std::uint64_t seed) {
    std::map<EntityPair, std::vector<std::string>> pool;
    for (const auto& p : positives)
        pool[p.pair()].assign(relations.begin(), relations.end());
    return negative_sample(kb_facts, positives, pool, k, seed);
}

} // namespace glore
