#include "ans/experiment.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

#include "ans/config.hpp"
#include "ans/error.hpp"

#ifndef ANS_VERSION
#define ANS_VERSION "0.0.0"
#endif

namespace ans {

const char* version() { return ANS_VERSION; }

namespace {

std::pair<Dataset, std::optional<Dataset>> generate(const DataSpec& spec) {
    const Rng root(spec.seed);
    const std::uint64_t train_seed = root.derive("train").seed();
    const std::uint64_t test_seed = root.derive("test").seed();
    auto make = [&](std::size_t total, std::uint64_t seed) {
        if (spec.source == DataSpec::Source::spirals)
            return make_two_spirals(total / 2, spec.noise, spec.turns, seed);
        return make_gaussian_blobs(spec.centers, total / spec.centers.size(), spec.blob_std, seed);
    };
    Dataset train = make(spec.train_size, train_seed);
    std::optional<Dataset> test;
    if (spec.test_size > 0) test = make(spec.test_size, test_seed);
    return {std::move(train), std::move(test)};
}

}  // namespace

PreparedData prepare_data(const DataSpec& spec) {
    std::optional<Dataset> train;
    std::optional<Dataset> test;
    if (spec.source == DataSpec::Source::file) {
        Dataset all = load_delimited(spec.train_path, spec.schema);
        if (!spec.test_path.empty()) {
            train = std::move(all);
            test = load_delimited(spec.test_path, spec.schema);
        } else {
            auto [a, b] = split(all, SplitSpec{spec.split_fraction, spec.seed, spec.stratified});
            train = std::move(a);
            test = std::move(b);
        }
        if (test->dim() != train->dim())
            throw ShapeError("test file has " + std::to_string(test->dim()) + " features, train file has " +
                             std::to_string(train->dim()));
    } else {
        auto [a, b] = generate(spec);
        train = std::move(a);
        test = std::move(b);
    }

    if (!spec.normalize) return {std::move(*train), std::move(test)};
    std::vector<Dataset> others;
    if (test) others.push_back(*test);
    NormalizedSplits n = normalize_standard(*train, others);
    PreparedData out{std::move(n.train), std::nullopt};
    if (test) out.test = std::move(n.others[0]);
    return out;
}

std::string data_fingerprint(const PreparedData& data) {
    return "train=" + data.train.fingerprint() + ";test=" + (data.test ? data.test->fingerprint() : "none");
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

nlohmann::ordered_json make_manifest(const TrainConfig& cfg, const std::string& fingerprint,
                                     const std::string& started_utc) {
    nlohmann::ordered_json m;
    m["run_id"] = cfg.run_id;
    m["version"] = version();
    m["seed"] = cfg.seed;
    m["started_utc"] = started_utc;
    m["dataset_fingerprint"] = fingerprint;
    nlohmann::ordered_json c = nlohmann::ordered_json::object();
    for (const ConfigKey& k : config_keys()) {
        const auto dot = k.name.find('.');
        c[k.name.substr(0, dot)][k.name.substr(dot + 1)] = get_config_value(cfg, k.name);
    }
    m["config"] = std::move(c);
    return m;
}

TrainConfig config_from_manifest(const nlohmann::ordered_json& manifest) {
    if (!manifest.is_object() || !manifest.contains("config") || !manifest["config"].is_object())
        throw ConfigError("config", "manifest has no config object");
    TrainConfig cfg;
    std::size_t seen = 0;
    for (const auto& [section, keys] : manifest["config"].items()) {
        if (!keys.is_object()) throw ConfigError(section, "expected an object of key/value strings");
        for (const auto& [key, value] : keys.items()) {
            if (!value.is_string()) throw ConfigError(section + "." + key, "manifest values must be strings");
            set_config_value(cfg, section + "." + key, value.get<std::string>());
            ++seen;
        }
    }
    if (seen != config_keys().size())
        throw ConfigError("config", "manifest lists " + std::to_string(seen) + " keys, expected " +
                                        std::to_string(config_keys().size()));
    cfg.validate();
    return cfg;
}

TrainConfig load_config_or_manifest(const std::filesystem::path& path, const TrainConfig& base) {
    if (path.extension() != ".json") return load_config(path, base);
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    nlohmann::ordered_json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what(), 0);
    }
    return config_from_manifest(j);
}

std::string file_stem(const std::string& run_id) {
    std::string out = run_id;
    for (char& c : out)
        if (c == ':' || c == '/' || c == '\\' || c == ' ') c = '_';
    return out;
}

ExperimentResult run_experiment(const TrainConfig& cfg, const std::filesystem::path& out_dir, const std::string& stem,
                                std::ostream* log) {
    cfg.validate();
    const std::string started = utc_timestamp();
    const PreparedData data = prepare_data(cfg.data);

    ExperimentResult result;
    result.fingerprint = data_fingerprint(data);
    std::filesystem::create_directories(out_dir);
    result.metrics_path = out_dir / (stem + ".metrics.jsonl");
    result.manifest_path = out_dir / (stem + ".manifest.json");
    {
        std::ofstream m(result.manifest_path);
        m << make_manifest(cfg, result.fingerprint, started).dump(2) << '\n';
        if (!m) throw IoError("cannot write " + result.manifest_path.string());
    }

    Network net = make_network(cfg, data.train.dim(), data.train.num_classes());
    if (data.test && data.test->num_classes() > net.output_dim())
        throw ShapeError("test set has more classes than the training set");

    MetricsSink sink(result.metrics_path);
    auto on_record = [&](const MetricsRecord& r) {
        sink.append(r);
        if (log && r.is_epoch_summary() && (r.epoch + 1) % 10 == 0) {
            *log << cfg.run_id << " epoch " << r.epoch + 1 << "/" << cfg.epochs << " loss " << r.loss_grad
                 << " acc " << r.accuracy;
            if (r.test_acc) *log << " test " << *r.test_acc;
            *log << '\n';
        }
    };
    result.train = train(net, data.train, cfg, data.test ? &*data.test : nullptr, on_record);
    sink.flush();
    return result;
}

}  // namespace ans
