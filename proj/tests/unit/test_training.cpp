#include <gtest/gtest.h>

#include <cmath>

#include "ans/error.hpp"
#include "ans/config.hpp"
#include "ans/training.hpp"
#include "support/oracles.hpp"

using namespace ans;

namespace {

TrainConfig small_config(RegularizerKind reg = RegularizerKind::ans) {
    TrainConfig cfg;
    cfg.run_id = "t";
    cfg.arch.hidden = {16, 16};
    cfg.arch.regularizer = reg;
    cfg.epochs = 5;
    cfg.batch_size = 16;
    cfg.lr = {0.05, {}, 0.1};
    cfg.record_wall_time = false;
    return cfg;
}

Dataset spirals(std::size_t per_class, std::uint64_t seed, double noise = 0.1) {
    return make_two_spirals(per_class, noise, 1.0, seed);
}

std::vector<MetricsRecord> only(const std::vector<MetricsRecord>& all, bool summaries) {
    std::vector<MetricsRecord> out;
    for (const MetricsRecord& r : all)
        if (r.is_epoch_summary() == summaries) out.push_back(r);
    return out;
}

}  // namespace

TEST(TrainBatch, GammaUsesAccuracyBeforeTheUpdate) {
    TrainConfig cfg = small_config();
    cfg.gates.schedule = {1.7, 1.0};
    const Dataset data = spirals(20, 3);
    Network net = make_network(cfg, 2, 2);
    Network probe = net;

    const Matrix& x = data.features();
    const std::vector<Label>& y = data.labels();
    std::size_t correct = 0;
    const auto pred = argmax_rows(probe.forward(x));
    for (std::size_t i = 0; i < y.size(); ++i) correct += pred[i] == y[i];
    const double m = static_cast<double>(correct) / static_cast<double>(y.size());

    SgdState opt({0.1, 0.9, 0.0});
    const BatchResult r = train_batch(net, x, y, cfg.gates, opt);
    EXPECT_EQ(r.correct, correct);
    EXPECT_EQ(r.batch_size, y.size());
    EXPECT_EQ(r.accuracy, m);
    EXPECT_NEAR(r.gamma, 1.7 * m, 1e-15);
    ASSERT_TRUE(r.mean_gate.has_value());
}

TEST(TrainBatch, VanillaReportsZeroGammaAndNoGate) {
    TrainConfig cfg = small_config(RegularizerKind::none);
    const Dataset data = spirals(10, 1);
    Network net = make_network(cfg, 2, 2);
    SgdState opt({0.1, 0.9, 0.0});
    const BatchResult r = train_batch(net, data.features(), data.labels(), cfg.gates, opt);
    EXPECT_EQ(r.gamma, 0.0);
    EXPECT_EQ(r.loss_reg, 0.0);
    EXPECT_FALSE(r.mean_gate.has_value());
}

TEST(TrainBatch, RefusesEvalMode) {
    TrainConfig cfg = small_config();
    const Dataset data = spirals(4, 1);
    Network net = make_network(cfg, 2, 2);
    net.set_mode(Mode::eval);
    SgdState opt({0.1, 0.9, 0.0});
    EXPECT_THROW(train_batch(net, data.features(), data.labels(), cfg.gates, opt), StateError);
}

TEST(Train, SingleFullBatchEpochGivesOneBatchRecord) {
    TrainConfig cfg = small_config();
    cfg.epochs = 1;
    cfg.batch_size = 64;
    const Dataset data = spirals(20, 2);
    Network net = make_network(cfg, 2, 2);
    const TrainResult r = train(net, data, cfg);
    ASSERT_EQ(r.records.size(), 2u);
    EXPECT_EQ(r.records[0].batch, std::optional<std::size_t>(0));
    EXPECT_TRUE(r.records[1].is_epoch_summary());
    EXPECT_EQ(r.records[1].accuracy, r.records[0].accuracy);
    EXPECT_EQ(r.records[1].gamma, r.records[0].gamma);
}

TEST(Train, TrailingPartialBatchIsKept) {
    TrainConfig cfg = small_config();
    cfg.epochs = 2;
    cfg.batch_size = 4;
    const Dataset data = spirals(5, 2);  // 10 samples: 4 + 4 + 2
    Network net = make_network(cfg, 2, 2);
    const TrainResult r = train(net, data, cfg);
    const auto batches = only(r.records, false);
    ASSERT_EQ(batches.size(), 6u);
    EXPECT_EQ(batches[2].batch, std::optional<std::size_t>(2));
    const double scaled = batches[2].accuracy * 2;
    EXPECT_EQ(scaled, std::round(scaled));

    const auto summaries = only(r.records, true);
    for (std::size_t e = 0; e < 2; ++e) {
        const double correct = batches[3 * e].accuracy * 4 + batches[3 * e + 1].accuracy * 4 +
                               batches[3 * e + 2].accuracy * 2;
        EXPECT_NEAR(summaries[e].accuracy, correct / 10, 1e-15);
        const double g = (batches[3 * e].gamma + batches[3 * e + 1].gamma + batches[3 * e + 2].gamma) / 3;
        EXPECT_NEAR(summaries[e].gamma, g, 1e-15);
    }
}

TEST(Train, SameConfigSameRecordsBitForBit) {
    TrainConfig cfg = small_config();
    cfg.arch.regularizer = RegularizerKind::dropout;
    const Dataset data = spirals(30, 4);
    const Dataset test = spirals(30, 5);
    Network a = make_network(cfg, 2, 2);
    Network b = make_network(cfg, 2, 2);
    const TrainResult ra = train(a, data, cfg, &test);
    const TrainResult rb = train(b, data, cfg, &test);
    EXPECT_EQ(ra.records, rb.records);
    cfg.seed = 2;
    Network c = make_network(cfg, 2, 2);
    EXPECT_NE(train(c, data, cfg, &test).records, ra.records);
}

TEST(Evaluate, IsIdempotentAndLeavesStateAlone) {
    TrainConfig cfg = small_config(RegularizerKind::dropout);
    const Dataset data = spirals(25, 6);
    Network net = make_network(cfg, 2, 2);
    std::vector<Matrix> before;
    for (const ParamRef& p : net.parameters()) before.push_back(*p.value);
    const double first = evaluate(net, data);
    EXPECT_EQ(evaluate(net, data), first);
    EXPECT_EQ(net.mode(), Mode::train);
    const auto after = net.parameters();
    for (std::size_t i = 0; i < before.size(); ++i) EXPECT_EQ(*after[i].value, before[i]);
}

TEST(Evaluate, MeasuringTestAccuracyDoesNotPerturbTraining) {
    TrainConfig cfg = small_config(RegularizerKind::dropout);
    const Dataset data = spirals(30, 7);
    const Dataset test = spirals(40, 8);
    cfg.full_train_eval = true;
    Network a = make_network(cfg, 2, 2);
    const auto with_eval = only(train(a, data, cfg, &test).records, false);
    cfg.full_train_eval = false;
    cfg.eval_test = false;
    Network b = make_network(cfg, 2, 2);
    const auto without = only(train(b, data, cfg, &test).records, false);
    EXPECT_EQ(with_eval, without);
}

TEST(Evaluate, UntrainedNetworkIsNearChance) {
    double sum = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        TrainConfig cfg = small_config();
        cfg.seed = seed;
        Network net = make_network(cfg, 2, 2);
        sum += evaluate(net, spirals(500, 100 + seed));
    }
    const double mean = sum / 5;
    EXPECT_GE(mean, 0.3);
    EXPECT_LE(mean, 0.7);
}

TEST(Train, PaperPresetStepsTheLearningRate) {
    TrainConfig cfg = preset_config("paper");
    cfg.arch.hidden = {4};
    cfg.epochs = 91;
    cfg.record_wall_time = false;
    const Dataset data = spirals(8, 1);
    Network net = make_network(cfg, 2, 2);
    const auto summaries = only(train(net, data, cfg).records, true);
    EXPECT_NEAR(summaries[0].lr, 0.1, 1e-15);
    EXPECT_NEAR(summaries[59].lr, 0.1, 1e-15);
    EXPECT_NEAR(summaries[60].lr, 0.01, 1e-15);
    EXPECT_NEAR(summaries[90].lr, 0.001, 1e-15);
}

TEST(Train, GammaTracksAccuracyAcrossEpochs) {
    // With beta = 1 the epoch-mean gamma is alpha times the mean batch accuracy,
    // so rising accuracy must mean rising gamma.
    TrainConfig cfg = small_config();
    cfg.gates.schedule = {1.3, 1.0};
    cfg.epochs = 30;
    const Dataset data = spirals(50, 9);
    Network net = make_network(cfg, 2, 2);
    const TrainResult r = train(net, data, cfg);
    std::vector<double> mean_m(cfg.epochs, 0.0), count(cfg.epochs, 0.0);
    for (const MetricsRecord& rec : only(r.records, false)) {
        mean_m[rec.epoch] += rec.accuracy;
        count[rec.epoch] += 1;
    }
    const auto summaries = only(r.records, true);
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
        mean_m[e] /= count[e];
        EXPECT_NEAR(summaries[e].gamma, 1.3 * mean_m[e], 1e-12);
    }
    for (std::size_t e = 1; e < cfg.epochs; ++e)
        if (mean_m[e] >= mean_m[e - 1]) EXPECT_GE(summaries[e].gamma, summaries[e - 1].gamma - 1e-12);
}

TEST(Train, NonFiniteObjectiveNamesTheBatch) {
    TrainConfig cfg = small_config(RegularizerKind::none);
    cfg.lr = {1e150, {}, 0.1};
    cfg.epochs = 20;
    const Dataset data = spirals(20, 1);
    Network net = make_network(cfg, 2, 2);
    try {
        train(net, data, cfg);
        FAIL() << "expected divergence";
    } catch (const TrainingError& e) {
        EXPECT_NE(std::string(e.what()).find("batch"), std::string::npos);
        EXPECT_LT(e.epoch(), 20u);
    }
}

TEST(Train, RejectsMismatchedInputWidth) {
    TrainConfig cfg = small_config();
    Network net = make_network(cfg, 3, 2);
    EXPECT_THROW(train(net, spirals(4, 1), cfg), ShapeError);
}

TEST(Train, NoiselessSpiralsAreMemorized) {
    TrainConfig cfg = small_config(RegularizerKind::none);
    cfg.arch.hidden = {64, 64};
    cfg.epochs = 300;
    cfg.batch_size = 32;
    cfg.lr = {0.1, {}, 0.1};
    cfg.weight_decay = 0.0;
    cfg.eval_test = false;
    const Dataset data = normalize_standard(make_two_spirals(100, 0.0, 1.0, 11)).train;
    Network net = make_network(cfg, 2, 2);
    train(net, data, cfg);
    EXPECT_GE(evaluate(net, data), 0.99);
}

TEST(Train, SeparatedBlobsAreLearnedWithoutHiddenLayers) {
    TrainConfig cfg = small_config(RegularizerKind::none);
    cfg.arch.hidden = {};
    cfg.epochs = 20;
    const std::vector<std::vector<double>> centers{{-5.0, 0.0}, {5.0, 0.0}};
    const Dataset train_set = make_gaussian_blobs(centers, 100, 1.0, 1);
    const Dataset test_set = make_gaussian_blobs(centers, 500, 1.0, 2);
    Network net = make_network(cfg, 2, 2);
    train(net, train_set, cfg);
    EXPECT_GE(evaluate(net, test_set), 0.99);
}

TEST(TrainConfig, ValidationNamesTheKey) {
    auto key_of = [](TrainConfig cfg) -> std::string {
        try {
            cfg.validate();
        } catch (const ConfigError& e) {
            return e.key();
        }
        return "";
    };
    TrainConfig cfg = small_config();
    EXPECT_EQ(key_of(cfg), "");
    TrainConfig c1 = cfg;
    c1.epochs = 0;
    EXPECT_EQ(key_of(c1), "train.epochs");
    TrainConfig c2 = cfg;
    c2.momentum = 1.0;
    EXPECT_EQ(key_of(c2), "optim.momentum");
    TrainConfig c3 = cfg;
    c3.data.train_size = 201;
    EXPECT_EQ(key_of(c3), "data.train_size");
    TrainConfig c4 = cfg;
    c4.data.source = DataSpec::Source::file;
    EXPECT_EQ(key_of(c4), "data.train_path");
}
