#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "test_support.hpp"

using namespace glore;
using glore::testing::TempDir;

namespace {

using glore::testing::random_model;
using glore::testing::sequences;
using glore::testing::zero_model;

double sum(const Vector& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

} // namespace

// ---------------------------------------------------------------- vocabulary

TEST(Vocabulary, ReservedIndicesAndUnk) {
    Vocabulary v;
    EXPECT_EQ(v.size(), 2u);
    EXPECT_EQ(Vocabulary::go, 0u);
    EXPECT_EQ(Vocabulary::unk, 1u);
    EXPECT_EQ(v.add("born"), 2u);
    EXPECT_EQ(v.add("born"), 2u);
    EXPECT_EQ(v.add("<-nsubj"), 3u);
    EXPECT_EQ(v.lookup("never-seen"), Vocabulary::unk);
    EXPECT_EQ(v.lookup("<GO>"), Vocabulary::unk);   // the name is not a token
    EXPECT_EQ(v.encode(parse_textual_relation("<-nsubj born x->")),
              (std::vector<std::size_t>{3, 2, 1}));
}

// ---------------------------------------------------------------- forward

TEST(Forward, ZeroParametersGiveZeroStateAndUniformOutput) {
    const auto m = zero_model({"<-a b c->"}, 5);
    const auto t = parse_textual_relation("<-a b c->");
    for (double v : encode(m, t))
        EXPECT_EQ(v, 0.0);
    for (double p : predict_distribution(m, t))
        EXPECT_DOUBLE_EQ(p, 0.2);
    const auto fc = forward(m, t);
    for (double z : fc.encoder.front().z)
        EXPECT_EQ(z, 0.5);
}

TEST(Forward, SequenceSensitiveAndDeterministic) {
    const auto m = random_model(3);
    const auto one = encode(m, parse_textual_relation("<-nsubjpass"));
    const auto two = encode(m, parse_textual_relation("<-nsubjpass born"));
    EXPECT_NE(one, two);
    EXPECT_EQ(encode(m, parse_textual_relation("<-nsubjpass born")), two);
    // Order matters as well.
    EXPECT_NE(encode(m, parse_textual_relation("born <-nsubjpass")), two);
}

TEST(Forward, SoftmaxSumsToOne) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto m = random_model(seed, 6, 7, 4, 2.0);
        for (const char* p : {"<-nsubjpass born nmod:in->", "word", "unseen tokens only", "x y z w v u"}) {
            const auto dist = predict_distribution(m, parse_textual_relation(p));
            EXPECT_NEAR(sum(dist), 1.0, 1e-6);
            for (double v : dist) {
                EXPECT_GE(v, 0.0);
                EXPECT_LE(v, 1.0);
            }
        }
    }
}

TEST(Forward, BiasShiftInvariance) {
    auto m = random_model(4);
    const auto t = parse_textual_relation("<-nsubjpass born nmod:in->");
    const auto before = predict_distribution(m, t);
    for (double& b : m.params.bias.values())
        b += 3.25;
    const auto after = predict_distribution(m, t);
    for (std::size_t j = 0; j < before.size(); ++j)
        EXPECT_NEAR(before[j], after[j], 1e-12);
}

TEST(Forward, GateRanges) {
    GruParams p(3, 4);
    Rng rng(8);
    GruParams::visit(p, "", [&](const std::string&, Matrix& m) {
        for (double& v : m.values())
            v = rng.uniform(-3.0, 3.0);
    });
    Vector h(4, 0.0);
    for (int step = 0; step < 20; ++step) {
        Vector x{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};
        const auto s = gru_forward(p, x, h);
        for (std::size_t i = 0; i < 4; ++i) {
            // Closed bounds: tanh and the sigmoid round to +-1 in double.
            EXPECT_GE(s.z[i], 0.0);
            EXPECT_LE(s.z[i], 1.0);
            EXPECT_GE(s.r[i], 0.0);
            EXPECT_LE(s.r[i], 1.0);
            EXPECT_GE(s.c[i], -1.0);
            EXPECT_LE(s.c[i], 1.0);
            EXPECT_NEAR(s.h[i], s.z[i] * s.h_prev[i] + (1 - s.z[i]) * s.c[i], 1e-15);
        }
        h = s.h;
    }
}

TEST(Forward, EmptySequenceRejected) {
    const auto m = random_model(1);
    EXPECT_THROW(forward(m, std::vector<std::size_t>{}), DataError);
}

TEST(Forward, AllUnkPathIsStillScored) {
    const auto m = random_model(2);
    const auto dist = predict_distribution(m, parse_textual_relation("<-zzz qqq"));
    EXPECT_NEAR(sum(dist), 1.0, 1e-12);
}

// ---------------------------------------------------------------- objectives

TEST(Objective, GloreHandExample) {
    // Four relations, zero parameters: p = 0.25 everywhere.
    const auto m = zero_model({"w"}, 4);
    const Sequences s = sequences(m, {"w"});
    const std::vector<LabeledEdge> e = {{0, 0, 0.5}};
    EXPECT_NEAR(glore_loss(m, s, e), std::log(2.0) * std::log(2.0), 1e-12);
    EXPECT_NEAR(glore_loss(m, s, e), 0.48045, 1e-5);
}

TEST(Objective, GlorePerfectReconstructionIsZeroWithZeroGradient) {
    const auto m = zero_model({"w", "v"}, 4);
    const Sequences s = sequences(m, {"w", "v"});
    std::vector<LabeledEdge> e;
    for (std::size_t t = 0; t < 2; ++t)
        for (std::size_t j = 0; j < 4; ++j)
            e.push_back({t, j, 0.25});
    EXPECT_EQ(glore_loss(m, s, e), 0.0);
    ModelParams g;
    EXPECT_EQ(gradients(m, s, e, Objective::GloRE, g), 0.0);
    EXPECT_EQ(g.squared_norm(), 0.0);
}

TEST(Objective, GloreIsAMeanOverEdges) {
    const auto m = random_model(5);
    const Sequences s = sequences(m, {"<-nsubjpass born nmod:in->", "word"});
    std::vector<LabeledEdge> e = {{0, 0, 0.7}, {0, 2, 0.3}, {1, 1, 1.0}};
    const double base = glore_loss(m, s, e);
    auto doubled = e;
    doubled.insert(doubled.end(), e.begin(), e.end());
    EXPECT_NEAR(glore_loss(m, s, doubled), base, 1e-14);
}

TEST(Objective, GloreRejectsNonPositiveTargets) {
    const auto m = zero_model({"w"}, 2);
    const Sequences s = sequences(m, {"w"});
    EXPECT_THROW(glore_loss(m, s, std::vector<LabeledEdge>{{0, 0, 0.0}}), DataError);
    EXPECT_THROW(glore_loss(m, s, std::vector<LabeledEdge>{{0, 0, -0.1}}), DataError);
}

TEST(Objective, LoreHandExample) {
    const auto m = zero_model({"w"}, 2);
    const Sequences s = sequences(m, {"w"});
    EXPECT_NEAR(lore_objective(m, s, std::vector<LabeledEdge>{{0, 0, 2.0}}), std::log(0.5), 1e-12);
    EXPECT_NEAR(lore_objective(m, s, std::vector<LabeledEdge>{{0, 0, 2.0}}), -0.69315, 1e-5);
}

TEST(Objective, LoreOneHotIsZero) {
    auto m = zero_model({"w", "v"}, 3);
    m.params.bias(1, 0) = 60.0;
    const Sequences s = sequences(m, {"w", "v"});
    EXPECT_NEAR(lore_objective(m, s, std::vector<LabeledEdge>{{0, 1, 3.0}, {1, 1, 5.0}}), 0.0, 1e-20);
}

TEST(Objective, LoreScaleInvariant) {
    const auto m = random_model(6);
    const Sequences s = sequences(m, {"<-nsubjpass born nmod:in->", "word"});
    std::vector<LabeledEdge> e = {{0, 0, 3}, {0, 2, 1}, {1, 1, 7}};
    auto scaled = e;
    for (auto& x : scaled)
        x.value *= 10;
    EXPECT_NEAR(lore_objective(m, s, e), lore_objective(m, s, scaled), 1e-14);
}

TEST(Objective, ClampedLogProbability) {
    auto m = zero_model({"w"}, 2);
    m.params.bias(0, 0) = 100.0;   // p(r1) ~ e^-100, far below the floor
    const Sequences s = sequences(m, {"w"});
    const std::vector<LabeledEdge> e = {{0, 1, 0.5}};
    const double expected = std::pow(std::log(min_probability) - std::log(0.5), 2);
    EXPECT_NEAR(glore_loss(m, s, e), expected, 1e-9);
    ModelParams g;
    gradients(m, s, e, Objective::GloRE, g);
    EXPECT_EQ(g.squared_norm(), 0.0);
}

// ---------------------------------------------------------------- gradients

TEST(Gradients, MatchFiniteDifferences) {
    for (std::uint64_t point = 1; point <= 10; ++point) {
        const auto m = random_model(100 + point);
        const Sequences s = sequences(m, {"<-nsubjpass born nmod:in->",
                                          "<-nsubj died nmod:in-> city nmod:of->", "word"});
        const std::vector<LabeledEdge> glore_edges = {
            {0, 0, 0.8}, {0, 1, 0.15}, {0, 2, 0.05}, {1, 2, 0.9}, {1, 0, 0.1}, {2, 1, 1.0}};
        const std::vector<LabeledEdge> lore_edges = {
            {0, 0, 16}, {0, 1, 3}, {0, 2, 1}, {1, 2, 9}, {1, 0, 1}, {2, 1, 4}};
        const auto g = glore::testing::gradient_check(m, s, glore_edges, Objective::GloRE);
        const auto l = glore::testing::gradient_check(m, s, lore_edges, Objective::LoRE);
        EXPECT_LT(g.max_rel_error, 1e-4) << "GloRE point " << point;
        EXPECT_LT(l.max_rel_error, 1e-4) << "LoRE point " << point;
    }
}

TEST(Gradients, UnusedEmbeddingRowsAreZero) {
    const auto m = random_model(7);
    const Sequences s = sequences(m, {"word"});
    ModelParams g;
    gradients(m, s, std::vector<LabeledEdge>{{0, 1, 0.4}}, Objective::GloRE, g);
    const auto used = m.vocab.lookup("word");
    for (std::size_t r = 0; r < g.embeddings.rows(); ++r) {
        if (r == used || r == Vocabulary::go)
            continue;
        for (double v : g.embeddings.row(r))
            EXPECT_EQ(v, 0.0) << "row " << m.vocab.name(r);
    }
}

TEST(Gradients, ThreadedMatchesSerial) {
    const auto m = random_model(8);
    const Sequences s = sequences(m, {"<-nsubjpass born nmod:in->",
                                      "<-nsubj died nmod:in-> city nmod:of->", "word"});
    const std::vector<LabeledEdge> e = {{0, 0, 0.8}, {1, 2, 0.9}, {2, 1, 1.0}, {0, 1, 0.2}};
    ModelParams serial, threaded, again;
    const double l1 = gradients(m, s, e, Objective::GloRE, serial, 1);
    const double l3 = gradients(m, s, e, Objective::GloRE, threaded, 3);
    gradients(m, s, e, Objective::GloRE, again, 3);
    EXPECT_NEAR(l1, l3, 1e-14);
    EXPECT_EQ(threaded, again);
    auto diff = serial;
    diff.add(threaded, -1.0);
    EXPECT_LT(diff.squared_norm(), 1e-26);
}

TEST(Gradients, EmptyBatchRejected) {
    const auto m = random_model(9);
    ModelParams g;
    EXPECT_THROW(gradients(m, sequences(m, {"word"}), std::vector<LabeledEdge>{}, Objective::GloRE, g),
                 DataError);
}

TEST(Gradients, ClipGlobalNorm) {
    auto m = random_model(10);
    ModelParams g = m.params;
    const double norm = std::sqrt(g.squared_norm());
    ASSERT_GT(norm, 1.0);
    clip_global_norm(g, 1.0);
    EXPECT_NEAR(std::sqrt(g.squared_norm()), 1.0, 1e-12);
    ModelParams h = m.params;
    clip_global_norm(h, 0.0);   // disabled
    EXPECT_EQ(h, m.params);
}

// ---------------------------------------------------------------- training

TEST(Training, LearningRateZeroKeepsParameters) {
    const auto g = glore::testing::toy_graph();
    TrainConfig c;
    c.embed_size = c.state_size = 8;
    c.learning_rate = 0.0;
    c.max_epochs = 5;
    c.patience = 10;
    c.record_time = false;
    const auto r = train(g, glore::testing::all_edges(g), c);
    EmbeddingModel init(Vocabulary::from_graph(g), relation_names(g), 8, 8);
    init.randomize(derive_seed(c.seed, "train/init"), c.init_scale);
    EXPECT_EQ(r.model, init);
    for (const auto& row : r.log)
        EXPECT_EQ(row.train_loss, r.log.front().train_loss);
}

TEST(Training, SameSeedSameLog) {
    const auto g = glore::testing::toy_graph();
    TrainConfig c;
    c.embed_size = c.state_size = 8;
    c.max_epochs = 30;
    c.batch_size = 2;
    c.record_time = false;
    for (auto obj : {Objective::GloRE, Objective::LoRE}) {
        c.objective = obj;
        const auto a = train(g, glore::testing::all_edges(g), c);
        const auto b = train(g, glore::testing::all_edges(g), c);
        EXPECT_EQ(format_training_log(a.log), format_training_log(b.log));
        EXPECT_EQ(a.model, b.model);
    }
}

TEST(Training, FullBatchLossNonIncreasingEarly) {
    const auto g = glore::testing::toy_graph();
    EmbeddingModel m(Vocabulary::from_graph(g), relation_names(g), 16, 16);
    m.randomize(1);
    const auto data = make_training_data(g, m.vocab, glore::testing::all_edges(g), Objective::GloRE);
    Adam adam(m.params, {1e-3, 0.9, 0.999, 1e-8});
    ModelParams grad;
    double prev = glore_loss(m, data.sequences, data.train);
    for (int step = 0; step < 10; ++step) {
        gradients(m, data.sequences, data.train, Objective::GloRE, grad);
        adam.step(m.params, grad);
        const double now = glore_loss(m, data.sequences, data.train);
        EXPECT_LE(now, prev) << "step " << step;
        prev = now;
    }
}

TEST(Training, ToyGraphConverges) {
    const auto g = glore::testing::toy_graph();
    TrainConfig c;
    c.embed_size = c.state_size = 16;
    c.max_epochs = 2000;
    c.patience = 2000;
    c.batch_size = g.edges.size();
    c.record_time = false;
    const auto r = train(g, glore::testing::all_edges(g), c);
    EXPECT_LT(r.best_val_loss, 0.01);
    auto argmax = [&](const char* path) {
        const auto p = predict_distribution(r.model, parse_textual_relation(path));
        return r.model.relations[std::max_element(p.begin(), p.end()) - p.begin()];
    };
    EXPECT_EQ(argmax(glore::testing::born_path()), "place_of_birth");
    EXPECT_EQ(argmax(glore::testing::died_path()), "place_of_death");
}

TEST(Training, EmptyTrainingSetRejected) {
    const auto g = glore::testing::toy_graph();
    EXPECT_THROW(train(g, EdgeSplit{}, TrainConfig{}), DataError);
    TrainConfig bad;
    bad.batch_size = 0;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = TrainConfig{};
    bad.patience = 0;
    EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Training, LogCsvHeader) {
    std::vector<EpochLog> log = {{1, 0.5, 0.25, 0.0}};
    EXPECT_EQ(format_training_log(log), "epoch,train_loss,val_loss,elapsed_seconds\n1,0.5,0.25,0\n");
}

// ---------------------------------------------------------------- checkpoints

TEST(Checkpoint, RoundTripIsBitIdentical) {
    TempDir dir;
    const auto m = random_model(11);
    save_checkpoint(m, dir / "m.ckpt");
    const auto back = load_checkpoint(dir / "m.ckpt");
    EXPECT_EQ(back, m);
    for (const char* p : {"<-nsubjpass born nmod:in->", "word", "unknown"}) {
        const auto t = parse_textual_relation(p);
        EXPECT_EQ(predict_distribution(back, t), predict_distribution(m, t));
    }
    EXPECT_EQ(format_checkpoint(back), tsv::read_file(dir / "m.ckpt"));
}

TEST(Checkpoint, DimensionMismatchIsReported) {
    TempDir dir;
    auto text = format_checkpoint(random_model(12));
    const auto pos = text.find("tensor\tprojection\t5\t3");
    ASSERT_NE(pos, std::string::npos);
    text.replace(pos, std::string("tensor\tprojection\t5\t3").size(), "tensor\tprojection\t5\t4");
    tsv::write_file(dir / "bad.ckpt", text);
    EXPECT_THROW(load_checkpoint(dir / "bad.ckpt"), DataError);
    tsv::write_file(dir / "junk.ckpt", "hello\n");
    EXPECT_THROW(load_checkpoint(dir / "junk.ckpt"), DataError);
    EXPECT_THROW(load_checkpoint(dir / "missing.ckpt"), IoError);
}

TEST(Checkpoint, PretrainedEmbeddingsLoad) {
    TempDir dir;
    auto m = random_model(13);
    tsv::write_file(dir / "vec.tsv", "born\t1 2 3 4 5\nnot-in-vocab\t0 0 0 0 0\n");
    EXPECT_EQ(load_pretrained_embeddings(m, dir / "vec.tsv"), 1u);
    const auto row = m.params.embeddings.row(m.vocab.lookup("born"));
    EXPECT_EQ(std::vector<double>(row.begin(), row.end()), (std::vector<double>{1, 2, 3, 4, 5}));
    tsv::write_file(dir / "short.tsv", "born\t1 2\n");
    EXPECT_THROW(load_pretrained_embeddings(m, dir / "short.tsv"), DataError);
}
