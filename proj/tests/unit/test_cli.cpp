#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ans/cli.hpp"
#include "ans/experiment.hpp"
#include "ans/metrics.hpp"
#include "support/oracles.hpp"

using namespace ans;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::string> tiny_run(const oracle::TempDir& dir, std::vector<std::string> extra = {}) {
    std::vector<std::string> args{"run",        "--out-dir",  dir.path().string(),
                                  "--override", "data.train_size=40",
                                  "--override", "data.test_size=40",
                                  "--override", "model.hidden=8",
                                  "--override", "train.epochs=3"};
    args.insert(args.end(), extra.begin(), extra.end());
    return args;
}

std::vector<MetricsRecord> without_wall_time(std::vector<MetricsRecord> records) {
    for (MetricsRecord& r : records) r.wall_ms = 0;
    return records;
}

std::size_t count_files(const std::filesystem::path& dir, const std::string& suffix) {
    std::size_t n = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.path().filename().string().ends_with(suffix)) ++n;
    return n;
}

}  // namespace

TEST(Cli, BlobsRunWritesEpochSummaries) {
    oracle::TempDir dir("cli");
    const Outcome o = cli(tiny_run(dir, {"--override", "data.source=blobs", "--override", "run.id=blobs"}));
    ASSERT_EQ(o.code, exit_ok) << o.err;
    const ReadResult r = read_records(dir / "blobs.metrics.jsonl");
    std::size_t epochs = 0;
    for (const MetricsRecord& rec : r.records) epochs += rec.is_epoch_summary();
    EXPECT_GE(epochs, 3u);
    EXPECT_EQ(r.malformed, 0u);
    EXPECT_TRUE(std::filesystem::exists(dir / "blobs.manifest.json"));
    EXPECT_NE(o.out.find("final test accuracy"), std::string::npos);
}

TEST(Cli, ValidationErrorsExitWithOne) {
    oracle::TempDir dir("cli");
    std::ofstream(dir / "bad.ini") << "[model]\nalpah = 1\n";
    const Outcome bad_key = cli({"run", "--config", (dir / "bad.ini").string(), "--print-config"});
    EXPECT_EQ(bad_key.code, exit_validation);
    EXPECT_NE(bad_key.err.find("model.alpah"), std::string::npos);
    EXPECT_EQ(cli({"run", "--override", "train.epochs=0"}).code, exit_validation);
    EXPECT_EQ(cli({"run", "--no-such-flag"}).code, exit_validation);
    EXPECT_EQ(cli({}).code, exit_validation);
    EXPECT_EQ(cli({"run", "--config", (dir / "absent.ini").string()}).code, exit_runtime);
    EXPECT_EQ(cli({"--help"}).code, exit_ok);
}

TEST(Cli, SeedFlagIsDeterministic) {
    oracle::TempDir a("cli"), b("cli"), c("cli");
    ASSERT_EQ(cli(tiny_run(a, {"--seed", "7"})).code, exit_ok);
    ASSERT_EQ(cli(tiny_run(b, {"--seed", "7"})).code, exit_ok);
    ASSERT_EQ(cli(tiny_run(c, {"--seed", "8"})).code, exit_ok);
    const auto ra = without_wall_time(read_records(a / "desk.metrics.jsonl").records);
    EXPECT_EQ(ra, without_wall_time(read_records(b / "desk.metrics.jsonl").records));
    EXPECT_NE(ra, without_wall_time(read_records(c / "desk.metrics.jsonl").records));
}

TEST(Cli, PrintConfigAppliesOverridesAndSeed) {
    const Outcome o = cli({"run", "--preset", "paper", "--seed", "42", "--override", "model.alpha=2", "--print-config"});
    ASSERT_EQ(o.code, exit_ok);
    EXPECT_NE(o.out.find("seed = 42"), std::string::npos);
    EXPECT_NE(o.out.find("alpha = 2"), std::string::npos);
    EXPECT_NE(o.out.find("batch_size = 64"), std::string::npos);
}

TEST(Cli, ManifestReplayReproducesTheMetrics) {
    oracle::TempDir first("cli"), second("cli");
    ASSERT_EQ(cli(tiny_run(first, {"--seed", "3"})).code, exit_ok);
    const Outcome replay =
        cli({"run", "--config", (first / "desk.manifest.json").string(), "--out-dir", second.path().string()});
    ASSERT_EQ(replay.code, exit_ok) << replay.err;
    EXPECT_EQ(without_wall_time(read_records(first / "desk.metrics.jsonl").records),
              without_wall_time(read_records(second / "desk.metrics.jsonl").records));
}

TEST(Cli, SuiteWritesOneLogPerRunAndOneSummary) {
    oracle::TempDir dir("cli");
    std::ofstream(dir / "s.ini") << "[suite]\nname = pair\nseeds = 1,2,3\n"
                                    "[data]\ntrain_size = 40\ntest_size = 40\n"
                                    "[model]\nhidden = 8\n[train]\nepochs = 2\n"
                                    "[variant plain]\nmodel.regularizer = none\n"
                                    "[variant gated]\nmodel.regularizer = ans\n";
    const auto out = dir / "out";
    const Outcome o = cli({"suite", "--config", (dir / "s.ini").string(), "--out-dir", out.string(), "--workers", "3"});
    ASSERT_EQ(o.code, exit_ok) << o.err;
    EXPECT_EQ(count_files(out, ".metrics.jsonl"), 6u);
    EXPECT_EQ(count_files(out, ".md"), 1u);
    std::ifstream md(out / "summary.md");
    const std::string text((std::istreambuf_iterator<char>(md)), std::istreambuf_iterator<char>());
    EXPECT_NE(text.find("| plain | 3 |"), std::string::npos) << text;
    EXPECT_NE(text.find("| gated | 3 |"), std::string::npos) << text;
    EXPECT_TRUE(std::filesystem::exists(out / "suite.ini"));
}

TEST(Cli, SuiteSeedsFlagReplacesTheList) {
    const Outcome o = cli({"suite", "--preset", "ablation", "--seeds", "4,5", "--print-config"});
    ASSERT_EQ(o.code, exit_ok);
    EXPECT_NE(o.out.find("seeds = 4,5"), std::string::npos);
}

TEST(Cli, GradcheckPassesAndCatchesAFault) {
    const Outcome ok = cli({"gradcheck", "--arch", "2-4-2", "--gamma", "0.5"});
    EXPECT_EQ(ok.code, exit_ok) << ok.out;
    EXPECT_NE(ok.out.find("gate0.W_a"), std::string::npos);
    const Outcome vanilla = cli({"gradcheck", "--arch", "2-4-2", "--regularizer", "none"});
    EXPECT_EQ(vanilla.code, exit_ok);
    EXPECT_EQ(vanilla.out.find("gate0"), std::string::npos);
    const Outcome bad = cli({"gradcheck", "--arch", "2-4-2", "--inject-fault", "gate0.W_a"});
    EXPECT_EQ(bad.code, exit_runtime);
    EXPECT_NE(bad.out.find("gradcheck FAILED: gate0.W_a"), std::string::npos) << bad.out;
    EXPECT_EQ(cli({"gradcheck", "--inject-fault", "gate7.W_a"}).code, exit_validation);
    EXPECT_EQ(cli({"gradcheck", "--arch", "2-x-2"}).code, exit_validation);
}

TEST(Cli, SummarizeReadsLogs) {
    oracle::TempDir dir("cli");
    ASSERT_EQ(cli(tiny_run(dir)).code, exit_ok);
    const Outcome o = cli({"summarize", (dir / "desk.metrics.jsonl").string()});
    ASSERT_EQ(o.code, exit_ok);
    EXPECT_NE(o.out.find("| desk | 1 |"), std::string::npos) << o.out;
    EXPECT_EQ(cli({"summarize", (dir / "absent.jsonl").string()}).code, exit_runtime);
}

TEST(Cli, OutDirComesFromTheEnvironment) {
    oracle::TempDir dir("cli");
    std::vector<std::string> args = tiny_run(dir);
    args.erase(args.begin() + 1, args.begin() + 3);  // drop --out-dir
    ::setenv(kOutDirEnv, (dir / "env").c_str(), 1);
    const Outcome o = cli(args);
    ::unsetenv(kOutDirEnv);
    ASSERT_EQ(o.code, exit_ok) << o.err;
    EXPECT_TRUE(std::filesystem::exists(dir / "env" / "desk.metrics.jsonl"));
}

TEST(Manifest, RecordsSeedVersionAndFingerprint) {
    oracle::TempDir dir("cli");
    ASSERT_EQ(cli(tiny_run(dir, {"--seed", "5"})).code, exit_ok);
    std::ifstream in(dir / "desk.manifest.json");
    const nlohmann::ordered_json m = nlohmann::ordered_json::parse(in);
    EXPECT_EQ(m.at("seed").get<std::uint64_t>(), 5u);
    EXPECT_EQ(m.at("version").get<std::string>(), version());
    EXPECT_EQ(m.at("run_id").get<std::string>(), "desk");
    EXPECT_EQ(m.at("config").at("train").at("epochs").get<std::string>(), "3");
    TrainConfig cfg = preset_config("desk");
    cfg.seed = 5;
    cfg.data.train_size = 40;
    cfg.data.test_size = 40;
    cfg.arch.hidden = {8};
    cfg.epochs = 3;
    EXPECT_EQ(m.at("dataset_fingerprint").get<std::string>(), data_fingerprint(prepare_data(cfg.data)));
    EXPECT_TRUE(same_config(config_from_manifest(m), cfg));
}
