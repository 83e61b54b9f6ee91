#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "glore/checksum.hpp"
#include "glore/config.hpp"
#include "glore/eval.hpp"
#include "glore/graph.hpp"
#include "glore/io.hpp"
#include "glore/merge.hpp"
#include "glore/model.hpp"
#include "glore/report.hpp"
#include "glore/synth.hpp"
#include "glore/train.hpp"

namespace glore::pipeline {

namespace fs = std::filesystem;

inline const std::vector<std::string>& stage_order() {
    static const std::vector<std::string> s = {"graph", "train", "score", "merge", "eval", "report"};
    return s;
}

/// Embedding variants in their fixed order.
inline const std::vector<std::string>& embedding_variants() {
    static const std::vector<std::string> v = {"glore", "lore"};
    return v;
}

struct Paths {
    fs::path dir;

    fs::path graph() const { return dir / "graph.tsv"; }
    fs::path config() const { return dir / "config.txt"; }
    fs::path model(const std::string& v) const { return dir / ("model_" + v + ".ckpt"); }
    fs::path train_log(const std::string& v) const { return dir / ("trainlog_" + v + ".csv"); }
    fs::path scored(const std::string& v, const std::string& part) const {
        return dir / ("scored_" + v + "_" + part + ".tsv");
    }
    fs::path merge_model(const std::string& v) const { return dir / ("merge_" + v + ".tsv"); }
    fs::path merged(const std::string& v) const { return dir / ("merged_" + v + ".tsv"); }
    fs::path curve(const std::string& v) const { return dir / ("curve_" + v + ".csv"); }
    fs::path patn(const std::string& v) const { return dir / ("patn_" + v + ".csv"); }
    fs::path eval_meta() const { return dir / "eval_meta.tsv"; }
    fs::path report() const { return dir / "report.txt"; }
    fs::path report_patn() const { return dir / "report_patn.csv"; }
    fs::path plot() const { return dir / "pr_curves.svg"; }
    fs::path manifest() const { return dir / "manifest.tsv"; }
};

inline std::vector<std::string> trained_variants(const PipelineConfig& cfg) {
    std::vector<std::string> v = {"glore"};
    if (cfg.train_lore)
        v.push_back("lore");
    return v;
}

/// Variants whose checkpoint is on disk.
inline std::vector<std::string> available_variants(const Paths& p) {
    std::vector<std::string> v;
    for (const auto& name : embedding_variants())
        if (fs::exists(p.model(name)))
            v.push_back(name);
    return v;
}

namespace detail {

inline void require_file(const fs::path& path, const std::string& what) {
    if (path.empty())
        throw ConfigError(what + " path is not set");
    if (!fs::is_regular_file(path))
        throw IoError(what + " not found: " + path.string());
}

inline bool runs(const PipelineConfig& cfg, const std::string& stage) {
    return !cfg.skip_stages.contains(stage);
}

/// Edge counts scaled from 300K training / 60K validation edges out of 321,447.
inline std::pair<std::size_t, std::size_t> split_sizes(const PipelineConfig& cfg, std::size_t edges) {
    constexpr double reference = 321447.0;
    std::size_t tr = cfg.train_edges;
    std::size_t va = cfg.val_edges;
    if (tr == 0)
        tr = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(static_cast<double>(edges) * 300000.0 / reference)));
    if (va == 0)
        va = static_cast<std::size_t>(std::llround(static_cast<double>(edges) * 60000.0 / reference));
    return {tr, va};
}

inline TrainConfig train_config(const PipelineConfig& cfg, Objective obj) {
    TrainConfig t = cfg.train;
    t.objective = obj;
    t.record_time = cfg.timing;
    t.seed = derive_seed(cfg.seed, "pipeline/train/" + std::string(to_string(obj)));
    return t;
}

inline std::vector<ScoredFact> to_scored_facts(std::span<const io::MergedRow> rows) {
    std::vector<ScoredFact> out;
    out.reserve(rows.size());
    for (const auto& r : rows)
        out.push_back({r.fact, r.merged});
    return out;
}

} // namespace detail

/// Fails before any artifact is written if an input needed by the stages
/// that will run is missing.
inline void check_inputs(const PipelineConfig& cfg) {
    using detail::runs;
    if (runs(cfg, "graph")) {
        detail::require_file(cfg.corpus, "corpus");
        detail::require_file(cfg.kb, "kb");
    }
    if (runs(cfg, "score")) {
        detail::require_file(cfg.contexts, "contexts");
        detail::require_file(cfg.base_scores_train, "base_scores_train");
        detail::require_file(cfg.base_scores_test, "base_scores_test");
    }
    if (runs(cfg, "merge"))
        detail::require_file(cfg.kb, "kb");
    if (runs(cfg, "eval")) {
        detail::require_file(cfg.base_scores_test, "base_scores_test");
        detail::require_file(cfg.holdout_kb, "holdout_kb");
    }
    if (runs(cfg, "train") && !cfg.pretrained_embeddings.empty())
        detail::require_file(cfg.pretrained_embeddings, "pretrained_embeddings");
    // Every other input path that is set must exist too.
    for (const auto& [path, what] :
         std::vector<std::pair<fs::path, std::string>>{{cfg.corpus, "corpus"},
                                                      {cfg.kb, "kb"},
                                                      {cfg.contexts, "contexts"},
                                                      {cfg.base_scores_train, "base_scores_train"},
                                                      {cfg.base_scores_test, "base_scores_test"},
                                                      {cfg.holdout_kb, "holdout_kb"},
                                                      {cfg.pretrained_embeddings, "pretrained_embeddings"}})
        if (!path.empty())
            detail::require_file(path, what);
    if (cfg.negatives == 0)
        throw ConfigError("merge.negatives must be >= 1");
    cfg.train.validate();
}

// ---------------------------------------------------------------- graph

inline RelationGraph build_graph(const PipelineConfig& cfg) {
    GraphOptions opt;
    opt.allow_duplicates = cfg.allow_duplicates;
    opt.count_na_pairs = cfg.count_na_pairs;
    opt.na_relation = cfg.na_relation;
    GraphBuilder builder(opt);
    io::read_corpus(cfg.corpus, builder);
    io::register_kb(io::read_kb_facts(cfg.kb), builder);
    auto counts = prune_rows(builder.build_counts(), cfg.min_row_sum);
    if (counts.edges.empty())
        throw DataError("relation graph has no edges");
    return cfg.normalization == "ppmi" ? normalize_ppmi(counts, cfg.ppmi_alpha)
                                       : normalize_conditional(counts);
}

inline void stage_graph(const PipelineConfig& cfg) {
    write_graph_tsv(build_graph(cfg), Paths{cfg.output_dir}.graph());
}

// ---------------------------------------------------------------- train

inline TrainResult train_variant(const PipelineConfig& cfg, const RelationGraph& g,
                                 const EdgeSplit& split, Objective obj) {
    const auto tc = detail::train_config(cfg, obj);
    EmbeddingModel model(Vocabulary::from_graph(g), relation_names(g), tc.embed_size,
                         tc.state_size);
    model.randomize(derive_seed(tc.seed, "train/init"), tc.init_scale);
    if (!cfg.pretrained_embeddings.empty())
        load_pretrained_embeddings(model, cfg.pretrained_embeddings);
    auto data = make_training_data(g, model.vocab, split, obj);
    return train(std::move(model), data, tc);
}

inline void stage_train(const PipelineConfig& cfg) {
    const Paths p{cfg.output_dir};
    const auto g = read_graph_tsv(p.graph(), cfg.na_relation);
    const auto [tr, va] = detail::split_sizes(cfg, g.edges.size());
    const auto split = split_edges(g, tr, va, derive_seed(cfg.seed, "pipeline/split"));
    for (const auto& v : trained_variants(cfg)) {
        const auto obj = v == "glore" ? Objective::GloRE : Objective::LoRE;
        const auto result = train_variant(cfg, g, split, obj);
        save_checkpoint(result.model, p.model(v));
        tsv::write_file(p.train_log(v), format_training_log(result.log));
    }
}

// ---------------------------------------------------------------- score

/// Loads a checkpoint and checks it against the graph it was trained on.
inline EmbeddingModel load_model(const Paths& p, const std::string& variant,
                                 const RelationGraph& g) {
    auto m = load_checkpoint(p.model(variant));
    if (m.relations != relation_names(g))
        throw DataError("checkpoint " + p.model(variant).string() +
                        " relations do not match the graph");
    if (!(m.vocab == Vocabulary::from_graph(g)))
        throw DataError("checkpoint " + p.model(variant).string() +
                        " vocabulary does not match the graph");
    return m;
}

/// E from the base model and the uncapped sum of p(r | t) over the pair's
/// contextual sentences. Pairs without contexts get G = 0.
inline std::vector<io::ScoredCandidate> score_candidates(const EmbeddingModel& m,
                                                         std::span<const ScoredFact> base,
                                                         const io::ContextMap& contexts) {
    std::map<std::string, Vector> cache;
    auto dist = [&](const TextualRelation& t) -> const Vector& {
        const auto key = t.canonical_key();
        auto it = cache.find(key);
        if (it == cache.end())
            it = cache.emplace(key, predict_distribution(m, t)).first;
        return it->second;
    };
    std::vector<io::ScoredCandidate> out;
    out.reserve(base.size());
    for (const auto& b : base) {
        double g = 0.0;
        const auto j = m.relation_index(b.fact.relation);
        if (auto it = contexts.find(b.fact.pair()); it != contexts.end() && j)
            for (const auto& c : it->second)
                g += dist(c.relation)[*j];
        out.push_back({b.fact, {b.score, g}});
    }
    return out;
}

inline void stage_score(const PipelineConfig& cfg) {
    const Paths p{cfg.output_dir};
    const auto g = read_graph_tsv(p.graph(), cfg.na_relation);
    const auto variants = available_variants(p);
    if (variants.empty())
        throw IoError("no model checkpoint in " + p.dir.string());
    const auto contexts = io::read_contexts(cfg.contexts);
    const auto base_train = io::read_base_scores(cfg.base_scores_train);
    const auto base_test = io::read_base_scores(cfg.base_scores_test);
    for (const auto& v : variants) {
        const auto m = load_model(p, v, g);
        tsv::write_file(p.scored(v, "train"),
                        io::format_scored_candidates(score_candidates(m, base_train, contexts)));
        tsv::write_file(p.scored(v, "test"),
                        io::format_scored_candidates(score_candidates(m, base_test, contexts)));
    }
}

// ---------------------------------------------------------------- merge

/// Positives are non-NA KB facts among the candidates; each is paired with
/// K candidates of the same entity pair whose relation was replaced (NA
/// included). Positives with fewer than K admissible replacements are
/// skipped.
inline std::vector<MergeTrainExample> merge_examples(std::span<const io::ScoredCandidate> cands,
                                                     const FactSet& kb, std::size_t k,
                                                     const std::string& na, std::uint64_t seed) {
    std::map<Fact, CandidateScores> by_fact;
    std::map<EntityPair, std::vector<std::string>> pool;
    for (const auto& c : cands) {
        by_fact[c.fact] = c.scores;
        pool[c.fact.pair()].push_back(c.fact.relation);
    }
    std::vector<Fact> positives;
    for (const auto& [fact, s] : by_fact) {
        if (fact.relation == na || !kb.contains(fact))
            continue;
        std::size_t valid = 0;
        for (const auto& r : std::set<std::string>(pool[fact.pair()].begin(), pool[fact.pair()].end()))
            if (r != fact.relation && !kb.contains(Fact{fact.head, r, fact.tail}))
                ++valid;
        if (valid >= k)
            positives.push_back(fact);
    }
    const auto negatives = negative_sample(kb, positives, pool, k, seed);
    std::vector<MergeTrainExample> out;
    out.reserve(positives.size());
    for (std::size_t i = 0; i < positives.size(); ++i) {
        MergeTrainExample ex{by_fact.at(positives[i]), {}};
        for (const auto& r : negatives[i])
            ex.negatives.push_back(by_fact.at(Fact{positives[i].head, r, positives[i].tail}));
        out.push_back(std::move(ex));
    }
    return out;
}

inline std::vector<io::MergedRow> apply_merge(const MergeModel& mm,
                                              std::span<const io::ScoredCandidate> cands,
                                              const std::string& na) {
    std::vector<io::MergedRow> out;
    for (const auto& c : cands) {
        if (c.fact.relation == na)
            continue;
        const double g = std::min(mm.cap, c.scores.g_sum);
        out.push_back({c.fact, c.scores.e, g, combine(mm, c.scores.e, g)});
    }
    return out;
}

inline void stage_merge(const PipelineConfig& cfg) {
    const Paths p{cfg.output_dir};
    const auto kb = io::read_kb_facts(cfg.kb);
    std::vector<std::string> variants;
    for (const auto& v : embedding_variants())
        if (fs::exists(p.scored(v, "train")))
            variants.push_back(v);
    if (variants.empty())
        throw IoError("no scored candidates in " + p.dir.string());
    for (const auto& v : variants) {
        const auto train_c = io::read_scored_candidates(p.scored(v, "train"));
        const auto test_c = io::read_scored_candidates(p.scored(v, "test"));
        const auto examples = merge_examples(train_c, kb, cfg.negatives, cfg.na_relation,
                                             derive_seed(cfg.seed, "pipeline/negatives"));
        if (examples.empty())
            throw DataError("no merge training examples with " + std::to_string(cfg.negatives) +
                            " negatives");
        auto opt = cfg.merge;
        opt.seed = derive_seed(cfg.seed, "pipeline/merge");
        const auto result = train_merge(examples, MergeModel{}, opt);
        tsv::write_file(p.merge_model(v), io::format_merge_model(result.model));
        tsv::write_file(p.merged(v), io::format_merged(apply_merge(result.model, test_c,
                                                                   cfg.na_relation)));
    }
}

// ---------------------------------------------------------------- eval

struct VariantEval {
    std::string variant;
    std::size_t candidates = 0;
    std::size_t hits = 0;
    std::size_t denominator = 0;
    std::vector<PrPoint> curve;
    std::map<std::size_t, double> patn;
};

inline VariantEval evaluate(const std::string& variant, std::span<const ScoredFact> predictions,
                            const FactSet& holdout, std::size_t denominator,
                            std::span<const std::size_t> n_values, const std::string& na) {
    VariantEval ev{variant, 0, 0, denominator, {}, {}};
    const auto ranked = label_against_kb(predictions, holdout, na);
    ev.candidates = ranked.size();
    for (const auto& r : ranked)
        ev.hits += r.label ? 1 : 0;
    ev.curve = pr_curve(ranked, denominator);
    std::vector<std::size_t> ns;
    for (std::size_t n : n_values)
        if (n > 0 && n <= ranked.size())
            ns.push_back(n);
    ev.patn = precision_at_n(ranked, ns);
    return ev;
}

inline void stage_eval(const PipelineConfig& cfg) {
    const Paths p{cfg.output_dir};
    const auto holdout = io::read_kb_facts(cfg.holdout_kb);
    const auto base = io::read_base_scores(cfg.base_scores_test);
    const std::size_t denom = recall_denominator(holdout, base, cfg.recall, cfg.na_relation);

    std::vector<VariantEval> evals;
    evals.push_back(evaluate("base", base, holdout, denom, cfg.n_values, cfg.na_relation));
    for (const auto& v : embedding_variants()) {
        if (!fs::exists(p.merged(v)))
            continue;
        const auto rows = io::read_merged(p.merged(v));
        evals.push_back(evaluate(v, detail::to_scored_facts(rows), holdout, denom, cfg.n_values,
                                 cfg.na_relation));
    }
    std::string meta = "variant\tcandidates\thits\trecall_denominator\n";
    for (const auto& ev : evals) {
        tsv::write_file(p.curve(ev.variant), format_curve_csv(ev.curve));
        tsv::write_file(p.patn(ev.variant), format_precision_at_n_csv(ev.patn));
        meta += ev.variant + '\t' + std::to_string(ev.candidates) + '\t' +
                std::to_string(ev.hits) + '\t' + std::to_string(ev.denominator) + '\n';
    }
    tsv::write_file(p.eval_meta(), meta);
}

// ---------------------------------------------------------------- report

inline void stage_report(const PipelineConfig& cfg) {
    const Paths p{cfg.output_dir};
    const auto r = report::load(p.dir);
    tsv::write_file(p.report(), report::format_text(r));
    tsv::write_file(p.report_patn(), report::format_patn_csv(r));
    tsv::write_file(p.plot(), report::format_svg(r));
}

// ---------------------------------------------------------------- manifest

inline std::string config_hash(const PipelineConfig& cfg) { return sha256_hex(cfg.canonical()); }

/// name, path, sha256, stage for every input and artifact present.
inline std::string format_manifest(const PipelineConfig& cfg) {
    const Paths p{cfg.output_dir};
    std::string out = "# config_sha256\t" + config_hash(cfg) + "\n# seed\t" +
                      std::to_string(cfg.seed) + "\nname\tpath\tsha256\tstage\n";
    auto add = [&](const std::string& name, const fs::path& path, const std::string& stage,
                   bool relative) {
        if (path.empty() || !fs::is_regular_file(path))
            return;
        const auto shown = relative ? path.lexically_relative(p.dir) : path;
        out += name + '\t' + shown.generic_string() + '\t' + sha256_file(path) + '\t' + stage + '\n';
    };
    add("corpus", cfg.corpus, "input", false);
    add("kb", cfg.kb, "input", false);
    add("contexts", cfg.contexts, "input", false);
    add("base_scores_train", cfg.base_scores_train, "input", false);
    add("base_scores_test", cfg.base_scores_test, "input", false);
    add("holdout_kb", cfg.holdout_kb, "input", false);
    add("pretrained_embeddings", cfg.pretrained_embeddings, "input", false);
    add("config", p.config(), "config", true);
    add("graph", p.graph(), "graph", true);
    for (const auto& v : embedding_variants()) {
        add("model_" + v, p.model(v), "train", true);
        add("trainlog_" + v, p.train_log(v), "train", true);
    }
    for (const auto& v : embedding_variants()) {
        add("scored_" + v + "_train", p.scored(v, "train"), "score", true);
        add("scored_" + v + "_test", p.scored(v, "test"), "score", true);
    }
    for (const auto& v : embedding_variants()) {
        add("merge_" + v, p.merge_model(v), "merge", true);
        add("merged_" + v, p.merged(v), "merge", true);
    }
    for (const auto& v : report::variants()) {
        add("curve_" + v, p.curve(v), "eval", true);
        add("patn_" + v, p.patn(v), "eval", true);
    }
    add("eval_meta", p.eval_meta(), "eval", true);
    add("report", p.report(), "report", true);
    add("report_patn", p.report_patn(), "report", true);
    add("pr_curves", p.plot(), "report", true);
    return out;
}

inline void write_manifest(const PipelineConfig& cfg) {
    const Paths p{cfg.output_dir};
    tsv::write_file(p.config(), cfg.canonical());
    tsv::write_file(p.manifest(), format_manifest(cfg));
}

// ---------------------------------------------------------------- driver

inline void run_stage(const PipelineConfig& cfg, const std::string& stage) {
    if (stage == "graph")
        stage_graph(cfg);
    else if (stage == "train")
        stage_train(cfg);
    else if (stage == "score")
        stage_score(cfg);
    else if (stage == "merge")
        stage_merge(cfg);
    else if (stage == "eval")
        stage_eval(cfg);
    else if (stage == "report")
        stage_report(cfg);
    else
        throw ConfigError("unknown stage '" + stage + "'");
}

/// graph -> train -> score -> merge -> eval -> report. Skipped stages must
/// have left their artifacts behind; later stages read them from disk.
inline void run_pipeline(const PipelineConfig& cfg) {
    check_inputs(cfg);
    const Paths p{cfg.output_dir};
    using detail::runs;
    if (!runs(cfg, "graph") && (runs(cfg, "train") || runs(cfg, "score")) && !fs::exists(p.graph()))
        throw IoError("graph stage skipped but " + p.graph().string() + " does not exist");
    if (!runs(cfg, "train") && runs(cfg, "score") && !fs::exists(p.model("glore")))
        throw IoError("train stage skipped but " + p.model("glore").string() + " does not exist");
    for (const auto& stage : stage_order())
        if (detail::runs(cfg, stage))
            run_stage(cfg, stage);
    write_manifest(cfg);
}

/// Generates the synthetic benchmark into cfg.synth_dir, seeded from the
/// root seed.
inline SyntheticFiles run_synth(const PipelineConfig& cfg) {
    auto spec = cfg.synth;
    spec.seed = cfg.seed;
    spec.na_relation = cfg.na_relation;
    return write_synthetic(generate_synthetic(spec), cfg.synth_dir);
}

} // namespace glore::pipeline
