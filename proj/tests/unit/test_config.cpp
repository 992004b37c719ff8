#include <gtest/gtest.h>

#include <set>

#include "ans/config.hpp"
#include "ans/error.hpp"

using namespace ans;

namespace {

std::string error_key(std::string_view text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.key();
    }
    return "";
}

std::size_t parse_error_line(std::string_view text) {
    try {
        parse_config_text(text);
    } catch (const ParseError& e) {
        return e.line();
    }
    return 0;
}

const std::filesystem::path kConfigDir = std::filesystem::path(ANS_SOURCE_DIR) / "configs";

}  // namespace

TEST(Config, EchoRoundTripsEveryPreset) {
    for (const std::string& name : preset_names()) {
        const TrainConfig cfg = preset_config(name);
        const std::string text = echo_config(cfg);
        EXPECT_TRUE(same_config(parse_config(text), cfg)) << name;
        EXPECT_EQ(echo_config(parse_config(text)), text);
    }
}

TEST(Config, EchoCoversEveryKey) {
    const std::string text = echo_config(preset_config("desk"));
    const auto entries = parse_config_text(text);
    ASSERT_EQ(entries.size(), config_keys().size());
    for (std::size_t i = 0; i < entries.size(); ++i)
        EXPECT_EQ(entries[i].section + "." + entries[i].key, config_keys()[i].name);
}

TEST(Config, NonDefaultValuesSurviveTheRoundTrip) {
    TrainConfig cfg = preset_config("desk");
    cfg.run_id = "odd id";
    cfg.data.source = DataSpec::Source::blobs;
    cfg.data.centers = {{-1.5, 0.25}, {3, 1e-7}, {0, 4}};
    cfg.data.train_size = 300;
    cfg.data.test_size = 300;
    cfg.data.schema.delimiter = '\t';
    cfg.data.schema.label_column = 0;
    cfg.data.schema.feature_columns = {2, 1};
    cfg.data.schema.label_names = {"a", "b", "c"};
    cfg.arch.hidden = {7, 3, 5};
    cfg.arch.regularized_layers = {0, 2};
    cfg.gates.schedule = {0.1 + 0.2, 1.0 / 3.0};
    cfg.gates.gradient = GateGradient::detach;
    cfg.gates.normalization = RegNormalization::sum;
    cfg.lr = {0.3, {}, 0.5};
    cfg.decay_biases = false;
    const TrainConfig back = parse_config(echo_config(cfg));
    EXPECT_TRUE(same_config(back, cfg));
    EXPECT_EQ(back.gates.schedule.alpha, 0.1 + 0.2);
    EXPECT_EQ(back.gates.schedule.beta, 1.0 / 3.0);
    EXPECT_EQ(back.data.centers, cfg.data.centers);
    EXPECT_EQ(back.data.schema.delimiter, '\t');
}

TEST(Config, FileIsOverridesOnTopOfTheBase) {
    const TrainConfig cfg = parse_config("# comment\n[model]\nalpha = 2\n; another\n[train]\nepochs = 7\n");
    TrainConfig expected = preset_config("desk");
    expected.gates.schedule.alpha = 2;
    expected.epochs = 7;
    EXPECT_TRUE(same_config(cfg, expected));
    const TrainConfig on_paper = parse_config("[train]\nepochs = 7\n", preset_config("paper"));
    EXPECT_EQ(on_paper.batch_size, 64u);
}

TEST(Config, UnknownKeysAndSectionsAreNamed) {
    EXPECT_EQ(error_key("[model]\nalpah = 1\n"), "model.alpah");
    EXPECT_EQ(error_key("[modle]\nalpha = 1\n"), "modle");
    EXPECT_EQ(error_key("[model]\nalpha = one\n"), "model.alpha");
    EXPECT_EQ(error_key("[model]\nregularizer = l2\n"), "model.regularizer");
    EXPECT_EQ(error_key("[train]\nepochs = 0\n"), "train.epochs");
    EXPECT_EQ(error_key("[train]\nepochs = -3\n"), "train.epochs");
    EXPECT_EQ(error_key("[optim]\nmilestones = 90,60\n"), "optim.lr/optim.milestones/optim.lr_factor");
    EXPECT_EQ(error_key("[model]\nbeta = -1\n"), "model.alpha/model.beta");
}

TEST(Config, GrammarErrorsCarryTheLine) {
    EXPECT_EQ(parse_error_line("[model]\nalpha = 1\nalpha = 2\n"), 3u);
    EXPECT_EQ(parse_error_line("alpha = 1\n"), 1u);
    EXPECT_EQ(parse_error_line("[model\n"), 1u);
    EXPECT_EQ(parse_error_line("[model]\n\nno equals sign\n"), 3u);
}

TEST(Config, OverridesUseDottedKeys) {
    TrainConfig cfg = preset_config("desk");
    apply_override(cfg, "model.alpha=0.5");
    apply_override(cfg, " optim.milestones = 10, 20 ");
    EXPECT_EQ(cfg.gates.schedule.alpha, 0.5);
    EXPECT_EQ(cfg.lr.milestones, (std::vector<std::size_t>{10, 20}));
    EXPECT_EQ(get_config_value(cfg, "optim.milestones"), "10,20");
    EXPECT_THROW(apply_override(cfg, "model.alpha"), ConfigError);
    EXPECT_THROW(apply_override(cfg, "model.nope=1"), ConfigError);
}

TEST(Config, PaperPresetValues) {
    const TrainConfig p = preset_config("paper");
    EXPECT_EQ(p.batch_size, 64u);
    EXPECT_EQ(p.epochs, 120u);
    EXPECT_EQ(p.momentum, 0.9);
    EXPECT_EQ(p.weight_decay, 1e-4);
    EXPECT_EQ(p.lr.initial_lr, 0.1);
    EXPECT_EQ(p.lr.milestones, (std::vector<std::size_t>{60, 90}));
    EXPECT_EQ(p.lr.factor, 0.1);
    EXPECT_THROW(preset_config("huge"), ConfigError);
}

TEST(Suite, AblationHasTheFullGridAndBaselines) {
    const ExperimentSuite s = preset_suite("ablation");
    std::set<std::pair<double, double>> grid;
    bool vanilla = false, attention_only = false;
    for (const SuiteVariant& v : s.variants) {
        TrainConfig cfg = s.base;
        for (const auto& [k, val] : v.overrides) set_config_value(cfg, k, val);
        if (cfg.arch.regularizer == RegularizerKind::none) vanilla = true;
        if (v.name == "attention_only") {
            attention_only = true;
            EXPECT_EQ(cfg.gates.schedule.alpha, 0.0);
        } else if (cfg.arch.regularizer == RegularizerKind::ans) {
            grid.insert({cfg.gates.schedule.alpha, cfg.gates.schedule.beta});
        }
    }
    EXPECT_TRUE(vanilla);
    EXPECT_TRUE(attention_only);
    std::set<std::pair<double, double>> expected;
    for (double a : {0.5, 1.0, 2.0})
        for (double b : {0.5, 1.0, 2.0}) expected.insert({a, b});
    EXPECT_EQ(grid, expected);
    EXPECT_EQ(s.seeds, (std::vector<std::uint64_t>{1, 2, 3, 4, 5}));
}

TEST(Suite, ComparisonCoversTheThreeRegularizers) {
    const ExperimentSuite s = preset_suite("comparison");
    std::set<RegularizerKind> kinds;
    for (const PlannedRun& r : expand_suite(s)) kinds.insert(r.config.arch.regularizer);
    EXPECT_EQ(kinds.size(), 3u);
}

TEST(Suite, ExpansionIsVariantMajor) {
    const ExperimentSuite s = parse_suite(
        "[suite]\nname = t\nseeds = 3, 9\n[train]\nepochs = 4\n"
        "[variant plain]\nmodel.regularizer = none\n[variant gated]\nmodel.alpha = 2\n");
    const auto runs = expand_suite(s);
    ASSERT_EQ(runs.size(), 4u);
    EXPECT_EQ(runs[0].config.run_id, "plain:3");
    EXPECT_EQ(runs[1].config.run_id, "plain:9");
    EXPECT_EQ(runs[2].stem(), "gated.seed3");
    EXPECT_EQ(runs[3].config.seed, 9u);
    EXPECT_EQ(runs[3].config.epochs, 4u);
    EXPECT_EQ(runs[3].config.gates.schedule.alpha, 2.0);
    EXPECT_EQ(runs[0].config.arch.regularizer, RegularizerKind::none);
}

TEST(Suite, RejectsBadSuites) {
    EXPECT_THROW(parse_suite("[suite]\nname = t\n"), ConfigError);
    EXPECT_THROW(parse_suite("[suite]\nname = t\nseeds = 1,1\n[variant a]\nmodel.alpha = 1\n"), ConfigError);
    EXPECT_THROW(parse_suite("[suite]\nname = t\n[variant a b]\nmodel.alpha = 1\n"), ConfigError);
    EXPECT_THROW(parse_suite("[suite]\nname = t\n[variant a]\nmodel.alpha = -1\n"), ConfigError);
    EXPECT_THROW(parse_suite("[suite]\nname = t\n[variant a]\nmodel.nope = 1\n"), ConfigError);
}

TEST(Suite, EchoRoundTrips) {
    for (const std::string& name : suite_preset_names()) {
        const ExperimentSuite s = preset_suite(name);
        EXPECT_EQ(echo_suite(parse_suite(echo_suite(s))), echo_suite(s)) << name;
    }
}

TEST(ConfigFiles, ShippedFilesMatchTheBuiltIns) {
    for (const std::string& name : preset_names())
        EXPECT_TRUE(same_config(load_config(kConfigDir / (name + ".ini")), preset_config(name))) << name;
    for (const std::string& name : suite_preset_names())
        EXPECT_EQ(echo_suite(load_suite(kConfigDir / (name + ".ini"))), echo_suite(preset_suite(name))) << name;
}
