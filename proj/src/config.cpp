#include "ans/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "ans/error.hpp"

namespace ans {

namespace {

std::string_view trim(std::string_view s) {
    const auto* ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_on(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

[[noreturn]] void bad(std::string_view key, std::string_view value, const std::string& expected) {
    throw ConfigError(std::string(key), "invalid value '" + std::string(value) + "', expected " + expected);
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) bad(key, v, "a non-negative integer");
    return out;
}

std::size_t to_size(std::string_view key, std::string_view v) { return static_cast<std::size_t>(to_u64(key, v)); }

double to_real(std::string_view key, std::string_view v) {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
        bad(key, v, "a finite real number");
    return out;
}

bool to_bool(std::string_view key, std::string_view v) {
    if (v == "true") return true;
    if (v == "false") return false;
    bad(key, v, "true or false");
}

std::vector<std::size_t> to_size_list(std::string_view key, std::string_view v) {
    std::vector<std::size_t> out;
    if (v.empty()) return out;
    for (std::string_view item : split_on(v, ',')) out.push_back(to_size(key, item));
    return out;
}

std::string fmt(double x) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    (void)ec;
    return std::string(buf, ptr);
}

std::string fmt(bool b) { return b ? "true" : "false"; }

template <class T>
std::string join(const std::vector<T>& items, std::string_view sep = ",") {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        if constexpr (std::is_same_v<T, std::string>)
            out += items[i];
        else if constexpr (std::is_floating_point_v<T>)
            out += fmt(items[i]);
        else
            out += std::to_string(items[i]);
    }
    return out;
}

template <class E>
struct EnumName {
    E value;
    const char* name;
};

template <class E, std::size_t N>
E to_enum(std::string_view key, std::string_view v, const EnumName<E> (&names)[N]) {
    std::string expected;
    for (const auto& n : names) {
        if (v == n.name) return n.value;
        expected += expected.empty() ? "" : " | ";
        expected += n.name;
    }
    bad(key, v, "one of " + expected);
}

template <class E, std::size_t N>
std::string from_enum(E e, const EnumName<E> (&names)[N]) {
    for (const auto& n : names)
        if (n.value == e) return n.name;
    return "?";
}

constexpr EnumName<DataSpec::Source> kSources[] = {
    {DataSpec::Source::spirals, "spirals"}, {DataSpec::Source::blobs, "blobs"}, {DataSpec::Source::file, "file"}};
constexpr EnumName<RegularizerKind> kRegularizers[] = {
    {RegularizerKind::none, "none"}, {RegularizerKind::dropout, "dropout"}, {RegularizerKind::ans, "ans"}};
constexpr EnumName<GateGradient> kGateGradients[] = {{GateGradient::full, "full"},
                                                     {GateGradient::detach, "detach"}};
constexpr EnumName<RegNormalization> kNormalizations[] = {{RegNormalization::batch_mean, "batch_mean"},
                                                          {RegNormalization::sum, "sum"}};

struct KeyHandler {
    ConfigKey key;
    std::function<void(TrainConfig&, std::string_view)> set;
    std::function<std::string(const TrainConfig&)> get;
};

std::vector<KeyHandler> make_handlers() {
    std::vector<KeyHandler> h;
    auto add = [&](std::string name, std::string help, auto set, auto get) {
        h.push_back({{std::move(name), std::move(help)}, set, get});
    };
    using C = TrainConfig;
    using V = std::string_view;

    add("run.id", "run identifier written into every metrics record",
        [](C& c, V v) { c.run_id = std::string(v); }, [](const C& c) { return c.run_id; });
    add("run.seed", "seed for initialization, shuffling and dropout",
        [](C& c, V v) { c.seed = to_u64("run.seed", v); }, [](const C& c) { return std::to_string(c.seed); });

    add("data.source", "spirals | blobs | file",
        [](C& c, V v) { c.data.source = to_enum("data.source", v, kSources); },
        [](const C& c) { return from_enum(c.data.source, kSources); });
    add("data.seed", "seed for generated data and file splits (independent of run.seed)",
        [](C& c, V v) { c.data.seed = to_u64("data.seed", v); },
        [](const C& c) { return std::to_string(c.data.seed); });
    add("data.train_size", "generated training samples, split evenly across classes",
        [](C& c, V v) { c.data.train_size = to_size("data.train_size", v); },
        [](const C& c) { return std::to_string(c.data.train_size); });
    add("data.test_size", "generated test samples, split evenly across classes; 0 for none",
        [](C& c, V v) { c.data.test_size = to_size("data.test_size", v); },
        [](const C& c) { return std::to_string(c.data.test_size); });
    add("data.noise", "Gaussian noise std added to spiral points",
        [](C& c, V v) { c.data.noise = to_real("data.noise", v); }, [](const C& c) { return fmt(c.data.noise); });
    add("data.turns", "spiral turns",
        [](C& c, V v) { c.data.turns = to_real("data.turns", v); }, [](const C& c) { return fmt(c.data.turns); });
    add(
        "data.centers", "blob centers, points separated by ';'",
        [](C& c, V v) {
            std::vector<std::vector<double>> centers;
            for (V point : split_on(v, ';')) {
                std::vector<double> p;
                for (V coord : split_on(point, ',')) p.push_back(to_real("data.centers", coord));
                centers.push_back(std::move(p));
            }
            c.data.centers = std::move(centers);
        },
        [](const C& c) {
            std::vector<std::string> points;
            for (const auto& p : c.data.centers) points.push_back(join(p));
            return join(points, "; ");
        });
    add("data.blob_std", "isotropic std of each blob",
        [](C& c, V v) { c.data.blob_std = to_real("data.blob_std", v); },
        [](const C& c) { return fmt(c.data.blob_std); });
    add("data.train_path", "delimited training file (source = file)",
        [](C& c, V v) { c.data.train_path = std::string(v); }, [](const C& c) { return c.data.train_path; });
    add("data.test_path", "delimited test file; empty splits train_path",
        [](C& c, V v) { c.data.test_path = std::string(v); }, [](const C& c) { return c.data.test_path; });
    add(
        "data.delimiter", "single field separator character, or 'tab'",
        [](C& c, V v) {
            if (v == "tab")
                c.data.schema.delimiter = '\t';
            else if (v.size() == 1)
                c.data.schema.delimiter = v[0];
            else
                bad("data.delimiter", v, "one character or 'tab'");
        },
        [](const C& c) { return c.data.schema.delimiter == '\t' ? std::string("tab") : std::string(1, c.data.schema.delimiter); });
    add("data.has_header", "first non-comment line is a header",
        [](C& c, V v) { c.data.schema.has_header = to_bool("data.has_header", v); },
        [](const C& c) { return fmt(c.data.schema.has_header); });
    add(
        "data.label_column", "zero-based label column; empty for the last column",
        [](C& c, V v) {
            if (v.empty())
                c.data.schema.label_column.reset();
            else
                c.data.schema.label_column = to_size("data.label_column", v);
        },
        [](const C& c) {
            return c.data.schema.label_column ? std::to_string(*c.data.schema.label_column) : std::string();
        });
    add("data.feature_columns", "zero-based feature columns; empty for all but the label",
        [](C& c, V v) { c.data.schema.feature_columns = to_size_list("data.feature_columns", v); },
        [](const C& c) { return join(c.data.schema.feature_columns); });
    add(
        "data.label_names", "label strings in class order; empty for integer labels",
        [](C& c, V v) {
            c.data.schema.label_names.clear();
            if (!v.empty())
                for (V name : split_on(v, ',')) c.data.schema.label_names.emplace_back(name);
        },
        [](const C& c) { return join(c.data.schema.label_names); });
    add("data.split_fraction", "training fraction when test_path is empty",
        [](C& c, V v) { c.data.split_fraction = to_real("data.split_fraction", v); },
        [](const C& c) { return fmt(c.data.split_fraction); });
    add("data.stratified", "split per class",
        [](C& c, V v) { c.data.stratified = to_bool("data.stratified", v); },
        [](const C& c) { return fmt(c.data.stratified); });
    add("data.normalize", "z-score features with training-set statistics",
        [](C& c, V v) { c.data.normalize = to_bool("data.normalize", v); },
        [](const C& c) { return fmt(c.data.normalize); });

    add("model.hidden", "hidden layer widths; empty for a linear model",
        [](C& c, V v) { c.arch.hidden = to_size_list("model.hidden", v); },
        [](const C& c) { return join(c.arch.hidden); });
    add("model.regularizer", "none | dropout | ans",
        [](C& c, V v) { c.arch.regularizer = to_enum("model.regularizer", v, kRegularizers); },
        [](const C& c) { return from_enum(c.arch.regularizer, kRegularizers); });
    add("model.dropout", "drop probability when regularizer = dropout",
        [](C& c, V v) { c.arch.dropout_rate = to_real("model.dropout", v); },
        [](const C& c) { return fmt(c.arch.dropout_rate); });
    add("model.regularized_layers", "hidden layer indices that get the regularizer; empty for all",
        [](C& c, V v) { c.arch.regularized_layers = to_size_list("model.regularized_layers", v); },
        [](const C& c) { return join(c.arch.regularized_layers); });
    add("model.alpha", "gamma = alpha * M^beta",
        [](C& c, V v) { c.gates.schedule.alpha = to_real("model.alpha", v); },
        [](const C& c) { return fmt(c.gates.schedule.alpha); });
    add("model.beta", "gamma = alpha * M^beta",
        [](C& c, V v) { c.gates.schedule.beta = to_real("model.beta", v); },
        [](const C& c) { return fmt(c.gates.schedule.beta); });
    add("model.gate_gradient", "full | detach",
        [](C& c, V v) { c.gates.gradient = to_enum("model.gate_gradient", v, kGateGradients); },
        [](const C& c) { return from_enum(c.gates.gradient, kGateGradients); });
    add("model.reg_normalization", "batch_mean | sum",
        [](C& c, V v) { c.gates.normalization = to_enum("model.reg_normalization", v, kNormalizations); },
        [](const C& c) { return from_enum(c.gates.normalization, kNormalizations); });

    add("optim.lr", "initial learning rate",
        [](C& c, V v) { c.lr.initial_lr = to_real("optim.lr", v); }, [](const C& c) { return fmt(c.lr.initial_lr); });
    add("optim.milestones", "epochs at which lr is multiplied by lr_factor",
        [](C& c, V v) { c.lr.milestones = to_size_list("optim.milestones", v); },
        [](const C& c) { return join(c.lr.milestones); });
    add("optim.lr_factor", "lr multiplier at each milestone",
        [](C& c, V v) { c.lr.factor = to_real("optim.lr_factor", v); }, [](const C& c) { return fmt(c.lr.factor); });
    add("optim.momentum", "Nesterov momentum",
        [](C& c, V v) { c.momentum = to_real("optim.momentum", v); }, [](const C& c) { return fmt(c.momentum); });
    add("optim.weight_decay", "L2 coefficient added to gradients",
        [](C& c, V v) { c.weight_decay = to_real("optim.weight_decay", v); },
        [](const C& c) { return fmt(c.weight_decay); });
    add("optim.decay_biases", "apply weight decay to biases too",
        [](C& c, V v) { c.decay_biases = to_bool("optim.decay_biases", v); },
        [](const C& c) { return fmt(c.decay_biases); });

    add("train.epochs", "passes over the training set",
        [](C& c, V v) { c.epochs = to_size("train.epochs", v); }, [](const C& c) { return std::to_string(c.epochs); });
    add("train.batch_size", "samples per batch; the last batch may be smaller",
        [](C& c, V v) { c.batch_size = to_size("train.batch_size", v); },
        [](const C& c) { return std::to_string(c.batch_size); });
    add("train.eval_test", "test accuracy on every epoch summary",
        [](C& c, V v) { c.eval_test = to_bool("train.eval_test", v); }, [](const C& c) { return fmt(c.eval_test); });
    add("train.full_train_eval", "exact train accuracy on every epoch summary",
        [](C& c, V v) { c.full_train_eval = to_bool("train.full_train_eval", v); },
        [](const C& c) { return fmt(c.full_train_eval); });
    return h;
}

const std::vector<KeyHandler>& handlers() {
    static const std::vector<KeyHandler> h = make_handlers();
    return h;
}

const KeyHandler& handler(std::string_view key) {
    for (const KeyHandler& k : handlers())
        if (k.key.name == key) return k;
    throw ConfigError(std::string(key), "unknown config key");
}

bool is_config_section(std::string_view s) {
    return s == "run" || s == "data" || s == "model" || s == "optim" || s == "train";
}

bool valid_variant_name(std::string_view name) {
    if (name.empty()) return false;
    return std::all_of(name.begin(), name.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-';
    });
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void set_with_line(TrainConfig& cfg, const std::string& key, const std::string& value, std::size_t line) {
    try {
        set_config_value(cfg, key, value);
    } catch (const ConfigError& e) {
        throw ConfigError(e.key(), std::string(e.what()) + " (line " + std::to_string(line) + ")");
    }
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys = [] {
        std::vector<ConfigKey> out;
        for (const KeyHandler& h : handlers()) out.push_back(h.key);
        return out;
    }();
    return keys;
}

TrainConfig preset_config(std::string_view name) {
    TrainConfig c;
    if (name == "desk") {
        c.run_id = "desk";
        return c;
    }
    if (name == "paper") {
        c.run_id = "paper";
        c.batch_size = 64;
        c.epochs = 120;
        c.momentum = 0.9;
        c.weight_decay = 1e-4;
        c.lr = LrSchedule{0.1, {60, 90}, 0.1};
        return c;
    }
    throw ConfigError("preset", "unknown preset '" + std::string(name) + "' (desk | paper)");
}

std::vector<std::string> preset_names() { return {"desk", "paper"}; }

void set_config_value(TrainConfig& cfg, std::string_view key, std::string_view value) {
    handler(key).set(cfg, trim(value));
}

std::string get_config_value(const TrainConfig& cfg, std::string_view key) { return handler(key).get(cfg); }

void apply_override(TrainConfig& cfg, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos)
        throw ConfigError("", "override '" + std::string(assignment) + "' is not of the form section.key=value");
    set_config_value(cfg, trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

std::vector<ConfigEntry> parse_config_text(std::string_view text) {
    std::vector<ConfigEntry> out;
    std::string section;
    std::set<std::pair<std::string, std::string>> seen;
    std::size_t line_no = 0;
    for (std::string_view raw : split_on(text, '\n')) {
        ++line_no;
        const std::string_view line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line[0] == '[') {
            if (line.back() != ']') throw ParseError("unterminated section header", line_no);
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (section.empty()) throw ParseError("empty section name", line_no);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_no);
        const std::string key(trim(line.substr(0, eq)));
        if (key.empty()) throw ParseError("empty key", line_no);
        if (section.empty()) throw ParseError("key '" + key + "' outside any section", line_no);
        if (!seen.emplace(section, key).second)
            throw ParseError("duplicate key '" + section + "." + key + "'", line_no);
        out.push_back({section, key, std::string(trim(line.substr(eq + 1))), line_no});
    }
    return out;
}

TrainConfig parse_config(std::string_view text, const TrainConfig& base) {
    TrainConfig cfg = base;
    for (const ConfigEntry& e : parse_config_text(text)) {
        if (!is_config_section(e.section))
            throw ConfigError(e.section, "unknown section (line " + std::to_string(e.line) + ")");
        set_with_line(cfg, e.section + "." + e.key, e.value, e.line);
    }
    cfg.validate();
    return cfg;
}

TrainConfig load_config(const std::filesystem::path& path, const TrainConfig& base) {
    return parse_config(read_file(path), base);
}

std::string echo_config(const TrainConfig& cfg) {
    std::string out;
    std::string section;
    for (const KeyHandler& h : handlers()) {
        const auto dot = h.key.name.find('.');
        const std::string s = h.key.name.substr(0, dot);
        if (s != section) {
            if (!section.empty()) out += '\n';
            out += "[" + s + "]\n";
            section = s;
        }
        const std::string value = h.get(cfg);
        out += h.key.name.substr(dot + 1) + " =" + (value.empty() ? "" : " " + value) + "\n";
    }
    return out;
}

bool same_config(const TrainConfig& a, const TrainConfig& b) {
    return echo_config(a) == echo_config(b) && a.record_wall_time == b.record_wall_time;
}

void ExperimentSuite::validate() const {
    if (name.empty()) throw ConfigError("suite.name", "must not be empty");
    if (variants.empty()) throw ConfigError("suite", "no [variant NAME] sections");
    if (seeds.empty()) throw ConfigError("suite.seeds", "need at least one seed");
    std::set<std::uint64_t> unique_seeds(seeds.begin(), seeds.end());
    if (unique_seeds.size() != seeds.size()) throw ConfigError("suite.seeds", "duplicate seed");
    std::set<std::string> names;
    for (const SuiteVariant& v : variants) {
        if (!valid_variant_name(v.name))
            throw ConfigError("variant", "invalid variant name '" + v.name + "' (use letters, digits, _ . -)");
        if (!names.insert(v.name).second) throw ConfigError("variant", "duplicate variant name '" + v.name + "'");
    }
    for (const PlannedRun& r : expand_suite(*this)) {
        try {
            r.config.validate();
        } catch (const ConfigError& e) {
            throw ConfigError(e.key(), "variant '" + r.variant + "': " + e.what());
        }
    }
}

std::string PlannedRun::stem() const { return variant + ".seed" + std::to_string(seed); }

std::vector<PlannedRun> expand_suite(const ExperimentSuite& suite) {
    std::vector<PlannedRun> out;
    for (const SuiteVariant& v : suite.variants) {
        TrainConfig cfg = suite.base;
        for (const auto& [key, value] : v.overrides) {
            try {
                set_config_value(cfg, key, value);
            } catch (const ConfigError& e) {
                throw ConfigError(e.key(), "variant '" + v.name + "': " + e.what());
            }
        }
        for (std::uint64_t seed : suite.seeds) {
            PlannedRun r{v.name, seed, cfg};
            r.config.seed = seed;
            r.config.run_id = v.name + ":" + std::to_string(seed);
            out.push_back(std::move(r));
        }
    }
    return out;
}

ExperimentSuite parse_suite(std::string_view text, const TrainConfig& base) {
    ExperimentSuite suite;
    suite.base = base;
    bool have_seeds = false;
    for (const ConfigEntry& e : parse_config_text(text)) {
        if (e.section == "suite") {
            if (e.key == "name")
                suite.name = e.value;
            else if (e.key == "seeds") {
                suite.seeds.clear();
                for (std::string_view s : split_on(e.value, ',')) suite.seeds.push_back(to_u64("suite.seeds", s));
                have_seeds = true;
            } else
                throw ConfigError("suite." + e.key, "unknown config key (line " + std::to_string(e.line) + ")");
        } else if (e.section.rfind("variant", 0) == 0 &&
                   (e.section.size() == 7 || std::isspace(static_cast<unsigned char>(e.section[7])))) {
            const std::string name(trim(std::string_view(e.section).substr(7)));
            auto it = std::find_if(suite.variants.begin(), suite.variants.end(),
                                   [&](const SuiteVariant& v) { return v.name == name; });
            if (it == suite.variants.end()) {
                suite.variants.push_back({name, {}});
                it = std::prev(suite.variants.end());
            }
            handler(e.key);  // rejects unknown keys here, with the variant context below
            it->overrides.emplace_back(e.key, e.value);
        } else if (is_config_section(e.section)) {
            set_with_line(suite.base, e.section + "." + e.key, e.value, e.line);
        } else {
            throw ConfigError(e.section, "unknown section (line " + std::to_string(e.line) + ")");
        }
    }
    if (!have_seeds) suite.seeds = {1};
    suite.validate();
    return suite;
}

ExperimentSuite load_suite(const std::filesystem::path& path, const TrainConfig& base) {
    return parse_suite(read_file(path), base);
}

ExperimentSuite preset_suite(std::string_view name) {
    ExperimentSuite s;
    s.base = preset_config("desk");
    s.seeds = {1, 2, 3, 4, 5};
    if (name == "comparison") {
        s.name = "comparison";
        s.variants = {
            {"vanilla", {{"model.regularizer", "none"}}},
            {"dropout_0.3", {{"model.regularizer", "dropout"}, {"model.dropout", "0.3"}}},
            {"dropout_0.5", {{"model.regularizer", "dropout"}, {"model.dropout", "0.5"}}},
            {"ans_a1_b1", {{"model.regularizer", "ans"}, {"model.alpha", "1"}, {"model.beta", "1"}}},
        };
        return s;
    }
    if (name == "ablation") {
        s.name = "ablation";
        s.variants = {
            {"vanilla", {{"model.regularizer", "none"}}},
            {"attention_only", {{"model.regularizer", "ans"}, {"model.alpha", "0"}, {"model.beta", "1"}}},
        };
        for (const char* a : {"0.5", "1", "2"})
            for (const char* b : {"0.5", "1", "2"})
                s.variants.push_back({std::string("ans_a") + a + "_b" + b,
                                      {{"model.regularizer", "ans"}, {"model.alpha", a}, {"model.beta", b}}});
        return s;
    }
    throw ConfigError("preset", "unknown suite preset '" + std::string(name) + "' (comparison | ablation)");
}

std::vector<std::string> suite_preset_names() { return {"comparison", "ablation"}; }

std::string echo_suite(const ExperimentSuite& suite) {
    std::string out = "[suite]\nname = " + suite.name + "\nseeds = " + join(suite.seeds) + "\n\n";
    out += echo_config(suite.base);
    for (const SuiteVariant& v : suite.variants) {
        out += "\n[variant " + v.name + "]\n";
        for (const auto& [key, value] : v.overrides) out += key + " = " + value + "\n";
    }
    return out;
}

}  // namespace ans
