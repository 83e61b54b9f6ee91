#pragma once

#include <chrono>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "glore/adam.hpp"
#include "glore/error.hpp"
#include "glore/graph.hpp"
#include "glore/model.hpp"
#include "glore/objective.hpp"
#include "glore/random.hpp"
#include "glore/tsv.hpp"

namespace glore {

struct TrainConfig {
    std::size_t batch_size = 32;
    std::size_t state_size = 32;
    std::size_t embed_size = 32;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::size_t max_epochs = 200;
    std::size_t patience = 10;
    std::uint64_t seed = 1;
    Objective objective = Objective::GloRE;
    double clip_norm = 5.0;   // <= 0 disables
    double init_scale = 0.1;
    std::size_t threads = 1;
    bool record_time = true;

    /// GRU state 300, token embeddings 300, mini-batches of 128.
    static TrainConfig full_scale() {
        TrainConfig c;
        c.state_size = 300;
        c.embed_size = 300;
        c.batch_size = 128;
        return c;
    }

    void validate() const {
        if (batch_size < 1)
            throw ConfigError("batch_size must be >= 1");
        if (patience < 1)
            throw ConfigError("patience must be >= 1");
        if (state_size < 1 || embed_size < 1)
            throw ConfigError("state_size and embed_size must be >= 1");
        if (learning_rate < 0.0)
            throw ConfigError("learning_rate must be non-negative");
    }
};

struct EpochLog {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double elapsed_seconds = 0.0;
};

struct TrainResult {
    EmbeddingModel model;   // best-validation checkpoint
    std::vector<EpochLog> log;
    std::size_t best_epoch = 0;
    double best_val_loss = std::numeric_limits<double>::infinity();
};

/// Token sequences and labeled edges ready for the optimizer.
struct TrainingData {
    Sequences sequences;   // indexed like RelationGraph::textual
    std::vector<LabeledEdge> train;
    std::vector<LabeledEdge> validation;
};

/// Labeled edges for the chosen objective. GloRE uses the graph weights and
/// skips edges whose weight is not positive (only PPMI produces those);
/// LoRE uses raw counts.
inline TrainingData make_training_data(const RelationGraph& g, const Vocabulary& vocab,
                                       const EdgeSplit& split, Objective obj) {
    if (obj == Objective::GloRE && !g.weighted)
        throw DataError("GloRE training needs a normalized graph");
    TrainingData d;
    d.sequences.reserve(g.textual.size());
    for (const auto& t : g.textual)
        d.sequences.push_back(vocab.encode(t));
    auto label = [&](std::span<const std::size_t> idx, std::vector<LabeledEdge>& out) {
        for (std::size_t k : idx) {
            const auto& e = g.edges.at(k);
            const double v = obj == Objective::GloRE ? e.weight : static_cast<double>(e.count);
            if (v > 0.0)
                out.push_back({e.textual, e.relation, v});
        }
    };
    label(split.train, d.train);
    label(split.validation, d.validation);
    return d;
}

inline std::vector<std::string> relation_names(const RelationGraph& g) {
    std::vector<std::string> names;
    for (const auto& r : g.relations)
        names.push_back(r.name);
    return names;
}

/// Mini-batch Adam with early stopping on the validation loss. Stops after
/// `patience` epochs without strict improvement and returns the best
/// checkpoint. Deterministic given the seed and thread count.
inline TrainResult train(EmbeddingModel model, const TrainingData& data, const TrainConfig& cfg) {
    cfg.validate();
    if (data.train.empty())
        throw DataError("empty training set");
    const auto start = std::chrono::steady_clock::now();

    Adam adam(model.params, {cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon});
    Rng rng(derive_seed(cfg.seed, "train/shuffle"));
    const auto& val_edges = data.validation.empty() ? data.train : data.validation;

    TrainResult result;
    result.model = model;
    std::vector<LabeledEdge> order = data.train;
    std::vector<LabeledEdge> batch;
    ModelParams grad;
    std::size_t since_best = 0;

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
            const std::size_t e = std::min(order.size(), b + cfg.batch_size);
            batch.assign(order.begin() + static_cast<std::ptrdiff_t>(b),
                         order.begin() + static_cast<std::ptrdiff_t>(e));
            gradients(model, data.sequences, batch, cfg.objective, grad, cfg.threads);
            clip_global_norm(grad, cfg.clip_norm);
            adam.step(model.params, grad);
        }
        if (!model.params.all_finite())
            throw NumericError("non-finite parameter after epoch " + std::to_string(epoch));

        EpochLog row;
        row.epoch = epoch;
        row.train_loss = training_loss(model, data.sequences, data.train, cfg.objective);
        row.val_loss = training_loss(model, data.sequences, val_edges, cfg.objective);
        if (cfg.record_time)
            row.elapsed_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        result.log.push_back(row);

        if (row.val_loss < result.best_val_loss) {
            result.best_val_loss = row.val_loss;
            result.best_epoch = epoch;
            result.model = model;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    return result;
}

/// Builds the vocabulary, initializes the model from the config seed and
/// trains on the given split of `g`.
inline TrainResult train(const RelationGraph& g, const EdgeSplit& split, const TrainConfig& cfg) {
    cfg.validate();
    EmbeddingModel model(Vocabulary::from_graph(g), relation_names(g), cfg.embed_size,
                         cfg.state_size);
    model.randomize(derive_seed(cfg.seed, "train/init"), cfg.init_scale);
    auto data = make_training_data(g, model.vocab, split, cfg.objective);
    return train(std::move(model), data, cfg);
}

inline std::string format_training_log(const std::vector<EpochLog>& log) {
    std::string out = "epoch,train_loss,val_loss,elapsed_seconds\n";
    for (const auto& r : log)
        out += std::to_string(r.epoch) + ',' + tsv::format_double(r.train_loss) + ',' +
               tsv::format_double(r.val_loss) + ',' + tsv::format_double(r.elapsed_seconds) + '\n';
    return out;
}

} // namespace glore
