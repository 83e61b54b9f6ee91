#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string_view>
#include <thread>
#include <vector>

#include "glore/error.hpp"
#include "glore/model.hpp"

namespace glore {

enum class Objective { GloRE, LoRE };

inline std::string_view to_string(Objective o) { return o == Objective::GloRE ? "glore" : "lore"; }

/// One relation-graph edge as a training target. `textual` indexes the
/// token-id sequences passed alongside; `value` is the normalized weight
/// p~(r|t) for GloRE and the raw count n_ij for LoRE.
struct LabeledEdge {
    std::size_t textual = 0;
    std::size_t relation = 0;
    double value = 0.0;
};

using Sequences = std::vector<std::vector<std::size_t>>;

inline constexpr double min_probability = 1e-12;

namespace detail {

inline const double log_floor = std::log(min_probability);

struct Clamped {
    double value;
    bool clamped;
};

inline Clamped clamped_log_prob(const ForwardCache& fc, std::size_t j) {
    const double lp = fc.log_probs[j];
    return lp < log_floor ? Clamped{log_floor, true} : Clamped{lp, false};
}

inline void validate(const EmbeddingModel& m, std::span<const std::vector<std::size_t>> seqs,
                     std::span<const LabeledEdge> edges, Objective obj) {
    for (const auto& e : edges) {
        if (e.textual >= seqs.size())
            throw DataError("edge refers to unknown textual relation " + std::to_string(e.textual));
        if (e.relation >= m.dims.relations)
            throw DataError("edge refers to unknown KB relation " + std::to_string(e.relation));
        if (!(e.value > 0.0))
            throw DataError(obj == Objective::GloRE
                                ? "GloRE target probability must be positive"
                                : "LoRE co-occurrence count must be positive");
    }
}

/// Edges grouped by textual relation so that each sequence runs forward once.
inline std::vector<std::pair<std::size_t, std::vector<std::size_t>>>
group_by_textual(std::span<const LabeledEdge> edges) {
    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t k = 0; k < edges.size(); ++k)
        groups[edges[k].textual].push_back(k);
    return {groups.begin(), groups.end()};
}

inline double normalizer(std::span<const LabeledEdge> edges, Objective obj) {
    if (obj == Objective::GloRE)
        return static_cast<double>(edges.size());
    double total = 0.0;
    for (const auto& e : edges)
        total += e.value;
    return total;
}

/// Loss contribution of one group; fills dlogits when requested.
inline double group_loss(const ForwardCache& fc, std::span<const LabeledEdge> edges,
                         std::span<const std::size_t> members, Objective obj, double norm,
                         Vector* dlogits) {
    double loss = 0.0;
    for (std::size_t k : members) {
        const auto& e = edges[k];
        const auto lp = clamped_log_prob(fc, e.relation);
        double dlp = 0.0;
        if (obj == Objective::GloRE) {
            const double diff = lp.value - std::log(e.value);
            loss += diff * diff / norm;
            dlp = 2.0 * diff / norm;
        } else {
            loss -= e.value * lp.value / norm;
            dlp = -e.value / norm;
        }
        if (dlogits && !lp.clamped) {
            // d log p_j / d logit_k = [j == k] - p_k
            for (std::size_t c = 0; c < dlogits->size(); ++c)
                (*dlogits)[c] -= dlp * fc.probs[c];
            (*dlogits)[e.relation] += dlp;
        }
    }
    return loss;
}

} // namespace detail

/// Mean squared error between predicted and target log-probabilities over
/// the batch edges (natural log). Minimized.
inline double glore_loss(const EmbeddingModel& m, std::span<const std::vector<std::size_t>> seqs,
                         std::span<const LabeledEdge> edges) {
    detail::validate(m, seqs, edges, Objective::GloRE);
    if (edges.empty())
        return 0.0;
    const double norm = detail::normalizer(edges, Objective::GloRE);
    double loss = 0.0;
    for (const auto& [t, members] : detail::group_by_textual(edges))
        loss += detail::group_loss(forward(m, seqs[t]), edges, members, Objective::GloRE, norm,
                                   nullptr);
    return loss;
}

/// Count-weighted average log-likelihood. Maximized; its maximum is 0.
inline double lore_objective(const EmbeddingModel& m,
                             std::span<const std::vector<std::size_t>> seqs,
                             std::span<const LabeledEdge> edges) {
    detail::validate(m, seqs, edges, Objective::LoRE);
    if (edges.empty())
        return 0.0;
    const double norm = detail::normalizer(edges, Objective::LoRE);
    double loss = 0.0;
    for (const auto& [t, members] : detail::group_by_textual(edges))
        loss += detail::group_loss(forward(m, seqs[t]), edges, members, Objective::LoRE, norm,
                                   nullptr);
    return -loss;
}

/// The quantity training minimizes: the GloRE loss, or the negated LoRE
/// objective.
inline double training_loss(const EmbeddingModel& m, std::span<const std::vector<std::size_t>> seqs,
                            std::span<const LabeledEdge> edges, Objective obj) {
    return obj == Objective::GloRE ? glore_loss(m, seqs, edges) : -lore_objective(m, seqs, edges);
}

/// Analytic gradient of training_loss() with respect to every parameter.
/// Returns the loss. With threads > 1 the textual-relation groups are split
/// into contiguous chunks whose partial gradients are summed in chunk order,
/// so the result depends on the thread count but not on scheduling.
inline double gradients(const EmbeddingModel& m, std::span<const std::vector<std::size_t>> seqs,
                        std::span<const LabeledEdge> edges, Objective obj, ModelParams& grad,
                        std::size_t threads = 1) {
    if (edges.empty())
        throw DataError("gradient requested for an empty batch");
    detail::validate(m, seqs, edges, obj);
    const double norm = detail::normalizer(edges, obj);
    const auto groups = detail::group_by_textual(edges);
    grad = m.params.zeros_like();

    auto run = [&](std::size_t begin, std::size_t end, ModelParams& g) {
        double loss = 0.0;
        Vector dlogits(m.dims.relations);
        for (std::size_t k = begin; k < end; ++k) {
            const auto& [t, members] = groups[k];
            const auto fc = forward(m, seqs[t]);
            std::fill(dlogits.begin(), dlogits.end(), 0.0);
            loss += detail::group_loss(fc, edges, members, obj, norm, &dlogits);
            backward(m, fc, dlogits, g);
        }
        return loss;
    };

    const std::size_t chunks = std::max<std::size_t>(1, std::min(threads, groups.size()));
    if (chunks == 1)
        return run(0, groups.size(), grad);

    std::vector<ModelParams> partial(chunks, grad);
    std::vector<double> losses(chunks, 0.0);
    {
        std::vector<std::jthread> pool;
        for (std::size_t c = 0; c < chunks; ++c) {
            const std::size_t begin = groups.size() * c / chunks;
            const std::size_t end = groups.size() * (c + 1) / chunks;
            pool.emplace_back([&, c, begin, end] { losses[c] = run(begin, end, partial[c]); });
        }
    }
    double loss = 0.0;
    for (std::size_t c = 0; c < chunks; ++c) {
        grad.add(partial[c]);
        loss += losses[c];
    }
    return loss;
}

} // namespace glore
