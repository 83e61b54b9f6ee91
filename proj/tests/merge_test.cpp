#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "test_support.hpp"

using namespace glore;

namespace {

std::vector<SentenceScore> scores(std::initializer_list<double> g) {
    std::vector<SentenceScore> out;
    for (double v : g) {
        SentenceScore s;
        s.g = v;
        out.push_back(s);
    }
    return out;
}

/// One example whose positive has merged score `pos` and whose single
/// negative has `neg`, under w1 = 1, w2 = 0.
MergeTrainExample margin_example(double pos, double neg) {
    return {{pos, 0.0}, {{neg, 0.0}}};
}

const MergeModel e_only{1.0, 0.0, 1.0};

/// G separates perfectly (positives above 1.5, negatives near 0); E is
/// noise wide enough that any weight on it breaks margins.
std::vector<MergeTrainExample> separable(std::uint64_t seed, std::size_t n) {
    Rng rng(seed);
    std::vector<MergeTrainExample> out;
    for (std::size_t i = 0; i < n; ++i) {
        MergeTrainExample ex;
        ex.positive = {rng.uniform(-5.0, 5.0), rng.uniform(1.5, 3.0)};
        for (int k = 0; k < 4; ++k)
            ex.negatives.push_back({rng.uniform(-5.0, 5.0), rng.uniform(0.0, 0.1)});
        out.push_back(ex);
    }
    return out;
}

} // namespace

// ---------------------------------------------------------------- aggregate

TEST(Aggregate, CapBinds) {
    const auto s = scores({0.4, 0.5});
    EXPECT_DOUBLE_EQ(aggregate(s, 0.7), 0.7);
}

TEST(Aggregate, SumBelowCap) {
    const auto s = scores({0.2, 0.3});
    EXPECT_DOUBLE_EQ(aggregate(s, 1.0), 0.5);
}

TEST(Aggregate, EmptyIsZero) {
    EXPECT_EQ(aggregate(std::vector<SentenceScore>{}, 0.7), 0.0);
}

TEST(Aggregate, NegativeCapRejected) {
    EXPECT_THROW(aggregate(scores({0.1}), -0.5), DataError);
}

TEST(Aggregate, MonotoneInScoresAndCap) {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        auto s = scores({rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1)});
        const double cap = rng.uniform(0, 3);
        const double base = aggregate(s, cap);
        EXPECT_GE(aggregate(s, cap + rng.uniform(0, 1)), base);
        s[rng.index(s.size())].g += rng.uniform(0, 1);
        EXPECT_GE(aggregate(s, cap), base);
    }
    const auto s = scores({0.25, 0.5, 0.125});
    EXPECT_DOUBLE_EQ(aggregate(s, 1e300), 0.875);
}

TEST(Aggregate, PoolingBaselines) {
    const std::vector<double> g = {0.25, 0.5, 0.75};
    EXPECT_DOUBLE_EQ(pool(g, Pooling::Max, 1.0), 0.75);
    EXPECT_DOUBLE_EQ(pool(g, Pooling::Mean, 1.0), 0.5);
    EXPECT_DOUBLE_EQ(pool(g, Pooling::CappedSum, 1.0), 1.0);
    EXPECT_DOUBLE_EQ(pool(g, Pooling::CappedSum, 5.0), 1.5);
    EXPECT_EQ(pool(std::vector<double>{}, Pooling::Mean, 1.0), 0.0);
}

// ---------------------------------------------------------------- combine

TEST(Combine, IdentityOnBase) {
    EXPECT_EQ(combine({1.0, 0.0, 1.0}, 0.37, 0.9), 0.37);
}

TEST(Combine, SentenceScoreOnly) {
    EXPECT_DOUBLE_EQ(combine({0.0, 1.0, 1.0}, 0.37, 0.7), 0.7);
}

TEST(Combine, Arithmetic) {
    EXPECT_DOUBLE_EQ(combine({2.0, 3.0, 1.0}, 0.1, 0.2), 0.8);
}

TEST(Combine, AdditiveInEachArgument) {
    const MergeModel w{0.7, -1.3, 1.0};
    Rng rng(5);
    for (int t = 0; t < 100; ++t) {
        const double e1 = rng.uniform(-2, 2), e2 = rng.uniform(-2, 2), g = rng.uniform(0, 1);
        EXPECT_NEAR(combine(w, e1 + e2, g), combine(w, e1, g) + combine(w, e2, 0.0), 1e-12);
        EXPECT_NEAR(combine(w, e1, g + e2), combine(w, e1, g) + combine(w, 0.0, e2), 1e-12);
    }
}

TEST(Combine, RankingInvariantUnderConstantShift) {
    Rng rng(9);
    std::vector<double> v(50);
    for (double& x : v)
        x = rng.uniform(-1, 1);
    std::vector<std::size_t> a(v.size()), b(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        a[i] = b[i] = i;
    std::stable_sort(a.begin(), a.end(), [&](auto i, auto j) { return v[i] > v[j]; });
    std::stable_sort(b.begin(), b.end(), [&](auto i, auto j) { return v[i] + 0.5 > v[j] + 0.5; });
    EXPECT_EQ(a, b);
}

TEST(Combine, MergedScoreAppliesCap) {
    EXPECT_DOUBLE_EQ(merged_score({1.0, 2.0, 0.7}, {0.1, 0.9}), 0.1 + 2.0 * 0.7);
    EXPECT_DOUBLE_EQ(merged_score({1.0, 2.0, 0.7}, {0.1, 0.5}), 0.1 + 2.0 * 0.5);
}

// ---------------------------------------------------------------- hinge

TEST(Hinge, MarginMetExactly) {
    const std::vector<MergeTrainExample> ex = {margin_example(1.5, 0.5), margin_example(3.0, 2.0)};
    EXPECT_EQ(hinge_loss(e_only, ex), 0.0);
}

TEST(Hinge, EqualScoresCostOne) {
    const std::vector<MergeTrainExample> ex = {margin_example(0.5, 0.5)};
    EXPECT_EQ(hinge_loss(e_only, ex), 1.0);
}

TEST(Hinge, Arithmetic) {
    const std::vector<MergeTrainExample> ex = {margin_example(0.2, 0.5)};
    EXPECT_DOUBLE_EQ(hinge_loss(e_only, ex), 1.3);
}

TEST(Hinge, MeanOverAllPairs) {
    // Two pairs from the first positive, one from the second.
    std::vector<MergeTrainExample> ex = {{{0.0, 0.0}, {{0.0, 0.0}, {1.0, 0.0}}},
                                         {{2.0, 0.0}, {{0.0, 0.0}}}};
    EXPECT_DOUBLE_EQ(hinge_loss(e_only, ex), (1.0 + 2.0 + 0.0) / 3.0);
}

TEST(Hinge, NoNegativesRejected) {
    const std::vector<MergeTrainExample> ex = {{{0.5, 0.5}, {}}};
    EXPECT_THROW(hinge_loss(e_only, ex), DataError);
    EXPECT_THROW(hinge_subgradient(e_only, ex), DataError);
}

TEST(Hinge, NonNegativeAndZeroIffMarginsMet) {
    Rng rng(11);
    for (int t = 0; t < 200; ++t) {
        std::vector<MergeTrainExample> ex;
        bool all_met = true;
        for (int i = 0; i < 3; ++i) {
            const double pos = rng.uniform(-2, 2), neg = rng.uniform(-2, 2);
            all_met = all_met && pos - neg >= 1.0;
            ex.push_back(margin_example(pos, neg));
        }
        const double l = hinge_loss(e_only, ex);
        EXPECT_GE(l, 0.0);
        EXPECT_EQ(l == 0.0, all_met);
    }
}

TEST(Hinge, SubgradientMatchesFiniteDifferencesAwayFromKinks) {
    Rng rng(17);
    int checked = 0;
    for (int t = 0; t < 300 && checked < 50; ++t) {
        const MergeModel mm{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0.2, 2)};
        std::vector<MergeTrainExample> ex;
        for (int i = 0; i < 3; ++i) {
            MergeTrainExample e;
            e.positive = {rng.uniform(-1, 1), rng.uniform(0, 3)};
            for (int k = 0; k < 2; ++k)
                e.negatives.push_back({rng.uniform(-1, 1), rng.uniform(0, 3)});
            ex.push_back(e);
        }
        // Skip points within the step of a kink.
        const double h = 1e-6;
        bool near_kink = false;
        for (const auto& e : ex) {
            const double pos = merged_score(mm, e.positive);
            near_kink = near_kink || std::abs(e.positive.g_sum - mm.cap) < 1e-3;
            for (const auto& n : e.negatives)
                near_kink = near_kink || std::abs(1 + merged_score(mm, n) - pos) < 1e-3 ||
                            std::abs(n.g_sum - mm.cap) < 1e-3;
        }
        if (near_kink)
            continue;
        const auto g = hinge_subgradient(mm, ex);
        auto fd = [&](auto bump) {
            MergeModel up = mm, down = mm;
            bump(up, h);
            bump(down, -h);
            return (hinge_loss(up, ex) - hinge_loss(down, ex)) / (2 * h);
        };
        EXPECT_NEAR(g.w1, fd([](MergeModel& m, double d) { m.w1 += d; }), 1e-6);
        EXPECT_NEAR(g.w2, fd([](MergeModel& m, double d) { m.w2 += d; }), 1e-6);
        EXPECT_NEAR(g.cap, fd([](MergeModel& m, double d) { m.cap += d; }), 1e-6);
        ++checked;
    }
    EXPECT_EQ(checked, 50);
}

TEST(Hinge, SubgradientIsZeroOnTheNoViolationSide) {
    // Margin met exactly and G exactly at the cap.
    const MergeModel mm{1.0, 1.0, 0.5};
    const std::vector<MergeTrainExample> ex = {{{1.0, 0.5}, {{0.0, 0.5}}}};
    const auto g = hinge_subgradient(mm, ex);
    EXPECT_EQ(g.w1, 0.0);
    EXPECT_EQ(g.w2, 0.0);
    EXPECT_EQ(g.cap, 0.0);
}

// ---------------------------------------------------------------- training

TEST(TrainMerge, LearnsToTrustSeparatingSentenceScore) {
    const auto ex = separable(21, 400);
    MergeTrainOptions opt;
    opt.epochs = 100;
    opt.batch_size = 32;
    const auto r = train_merge(ex, MergeModel{}, opt);
    EXPECT_LT(r.final_loss, r.initial_loss);
    EXPECT_GT(std::abs(r.model.w2), 5.0 * std::abs(r.model.w1));
    EXPECT_GE(r.model.cap, 0.0);
}

TEST(TrainMerge, ZeroLearningRateKeepsParameters) {
    const auto ex = separable(22, 50);
    MergeTrainOptions opt;
    opt.learning_rate = 0.0;
    opt.epochs = 10;
    const MergeModel init{0.3, -0.2, 0.8};
    EXPECT_EQ(train_merge(ex, init, opt).model, init);
}

TEST(TrainMerge, SameSeedSameParameters) {
    const auto ex = separable(23, 200);
    MergeTrainOptions opt;
    opt.epochs = 30;
    opt.batch_size = 16;
    opt.seed = 99;
    const auto a = train_merge(ex, MergeModel{}, opt);
    const auto b = train_merge(ex, MergeModel{}, opt);
    EXPECT_EQ(a.model, b.model);
    EXPECT_EQ(a.best_validation_loss, b.best_validation_loss);
}

TEST(TrainMerge, CapIsProjectedToNonNegative) {
    // One full-batch step: the capped negative pushes the cap far below zero.
    std::vector<MergeTrainExample> ex(20, MergeTrainExample{{0.0, 0.0}, {{0.0, 5.0}}});
    MergeTrainOptions opt;
    opt.learning_rate = 10.0;
    opt.epochs = 1;
    opt.batch_size = ex.size();
    const auto r = train_merge(ex, MergeModel{0.0, 1.0, 1.0}, opt);
    EXPECT_EQ(r.model.cap, 0.0);
}

TEST(TrainMerge, RejectsEmptyOrInvalidInput) {
    EXPECT_THROW(train_merge(std::vector<MergeTrainExample>{}, MergeModel{}, {}), DataError);
    MergeTrainOptions opt;
    opt.batch_size = 0;
    EXPECT_THROW(train_merge(separable(1, 3), MergeModel{}, opt), ConfigError);
}

// ---------------------------------------------------------------- negatives

TEST(NegativeSample, ReplacementsExcludeThePositive) {
    const std::vector<std::string> rels = {"r1", "r2", "r3"};
    const std::vector<Fact> pos = {{"e", "r1", "f"}};
    const FactSet kb(pos.begin(), pos.end());
    const auto neg = negative_sample(kb, pos, rels, 2, 7);
    ASSERT_EQ(neg.size(), 1u);
    auto got = neg[0];
    std::sort(got.begin(), got.end());
    EXPECT_EQ(got, (std::vector<std::string>{"r2", "r3"}));
}

TEST(NegativeSample, KbFactsAreNotNegatives) {
    const std::vector<std::string> rels = {"r1", "r2", "r3"};
    const std::vector<Fact> pos = {{"e", "r1", "f"}};
    const FactSet kb = {{"e", "r1", "f"}, {"e", "r2", "f"}};
    for (std::uint64_t seed = 0; seed < 20; ++seed)
        EXPECT_EQ(negative_sample(kb, pos, rels, 1, seed)[0], (std::vector<std::string>{"r3"}));
}

TEST(NegativeSample, DeterministicGivenSeed) {
    std::vector<std::string> rels;
    for (int i = 0; i < 20; ++i)
        rels.push_back("r" + std::to_string(i));
    std::vector<Fact> pos;
    for (int i = 0; i < 30; ++i)
        pos.push_back({"h" + std::to_string(i), rels[i % 20], "t"});
    const FactSet kb(pos.begin(), pos.end());
    EXPECT_EQ(negative_sample(kb, pos, rels, 4, 5), negative_sample(kb, pos, rels, 4, 5));
    EXPECT_NE(negative_sample(kb, pos, rels, 4, 5), negative_sample(kb, pos, rels, 4, 6));
}

TEST(NegativeSample, TooFewReplacementsRejected) {
    const std::vector<std::string> rels = {"r1", "r2"};
    const std::vector<Fact> pos = {{"e", "r1", "f"}};
    EXPECT_THROW(negative_sample(FactSet(pos.begin(), pos.end()), pos, rels, 2, 1), DataError);
}

// ---------------------------------------------------------------- sentence scores

TEST(SentenceScores, EmptyContexts) {
    Vocabulary v;
    const EmbeddingModel m(std::move(v), {"a", "b"}, 3, 3);
    EXPECT_TRUE(sentence_scores(m, "h", "t", std::vector<Context>{}, "a").empty());
}

TEST(SentenceScores, ZeroModelIsUniform) {
    Vocabulary v;
    v.add("born");
    const EmbeddingModel m(std::move(v), {"a", "b", "c", "d"}, 3, 3);
    const std::vector<Context> ctx = {{"s1", parse_textual_relation("<-nsubj born nmod:in->")},
                                      {"s2", parse_textual_relation("unseen")}};
    const auto s = sentence_scores(m, "h", "t", ctx, "c");
    ASSERT_EQ(s.size(), 2u);
    for (const auto& x : s) {
        EXPECT_NEAR(x.g, 0.25, 1e-15);
        EXPECT_EQ(x.candidate, (Fact{"h", "c", "t"}));
    }
    EXPECT_EQ(s[1].sentence_id, "s2");
    EXPECT_EQ(sentence_scores(m, "h", "t", ctx, "unknown")[0].g, 0.0);
}

TEST(SentenceScores, TrainedToyModelPrefersBirthPlace) {
    const auto g = glore::testing::toy_graph();
    TrainConfig c;
    c.embed_size = c.state_size = 16;
    c.max_epochs = 2000;
    c.patience = 2000;
    c.batch_size = g.edges.size();
    c.record_time = false;
    const auto r = train(g, glore::testing::all_edges(g), c);
    const std::vector<Context> ctx = {{"s", parse_textual_relation(glore::testing::born_path())}};
    EXPECT_GT(sentence_scores(r.model, "h", "t", ctx, "place_of_birth")[0].g, 0.5);
}
