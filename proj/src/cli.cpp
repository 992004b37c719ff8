#include "ans/cli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <thread>

#include <CLI11.hpp>

#include "ans/error.hpp"
#include "ans/experiment.hpp"
#include "ans/summary.hpp"

namespace ans {

std::size_t SuiteOutcome::failed() const {
    return static_cast<std::size_t>(std::count_if(runs.begin(), runs.end(), [](const SuiteRunStatus& r) { return !r.ok; }));
}

SuiteOutcome run_suite(const ExperimentSuite& suite, const std::filesystem::path& out_dir, std::size_t workers,
                       std::ostream* progress) {
    suite.validate();
    const std::vector<PlannedRun> plan = expand_suite(suite);
    std::filesystem::create_directories(out_dir);
    {
        std::ofstream echo(out_dir / "suite.ini");
        echo << echo_suite(suite);
    }

    SuiteOutcome outcome;
    outcome.runs.resize(plan.size());
    std::atomic<std::size_t> next{0};
    std::mutex print;
    auto worker = [&] {
        for (std::size_t i = next++; i < plan.size(); i = next++) {
            const PlannedRun& run = plan[i];
            SuiteRunStatus& status = outcome.runs[i];
            status.variant = run.variant;
            status.seed = run.seed;
            try {
                ExperimentResult r = run_experiment(run.config, out_dir, run.stem());
                status.metrics_path = r.metrics_path;
                status.final_test_acc = r.train.final_test_acc;
                status.ok = true;
            } catch (const std::exception& e) {
                status.metrics_path = out_dir / (run.stem() + ".metrics.jsonl");
                status.error = e.what();
            }
            if (progress) {
                std::lock_guard lock(print);
                *progress << "[" << i + 1 << "/" << plan.size() << "] " << run.config.run_id;
                if (status.ok) {
                    *progress << " done";
                    if (status.final_test_acc) *progress << ", test acc " << *status.final_test_acc;
                } else {
                    *progress << " FAILED: " << status.error;
                }
                *progress << '\n';
            }
        }
    };

    const std::size_t n = std::max<std::size_t>(1, std::min(workers, plan.size()));
    std::vector<std::thread> threads;
    for (std::size_t t = 1; t < n; ++t) threads.emplace_back(worker);
    worker();
    for (std::thread& t : threads) t.join();

    std::vector<std::string> paths;
    for (const SuiteRunStatus& r : outcome.runs)
        if (std::filesystem::exists(r.metrics_path)) paths.push_back(r.metrics_path.string());
    outcome.summary_path = out_dir / "summary.md";
    std::ofstream md(outcome.summary_path);
    md << "# " << suite.name << "\n\n";
    try {
        md << render_markdown(summarize_files(paths));
    } catch (const DomainError& e) {
        md << "No completed runs: " << e.what() << "\n";
    }
    if (outcome.failed() > 0) {
        md << "\n## Failed runs\n\n";
        for (const SuiteRunStatus& r : outcome.runs)
            if (!r.ok) md << "- " << r.variant << ":" << r.seed << ": " << r.error << "\n";
    }
    if (!md) throw IoError("cannot write " + outcome.summary_path.string());
    return outcome;
}

Architecture parse_arch(const std::string& spec) {
    std::vector<std::size_t> widths;
    std::size_t start = 0;
    while (start <= spec.size()) {
        const auto dash = spec.find('-', start);
        const std::string part = spec.substr(start, dash == std::string::npos ? std::string::npos : dash - start);
        std::size_t w = 0;
        const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), w);
        if (part.empty() || ec != std::errc() || ptr != part.data() + part.size() || w == 0)
            throw ConfigError("arch", "expected widths like 2-4-2, got '" + spec + "'");
        widths.push_back(w);
        if (dash == std::string::npos) break;
        start = dash + 1;
    }
    if (widths.size() < 2) throw ConfigError("arch", "need at least input and output widths");
    Architecture a;
    a.input_dim = widths.front();
    a.num_classes = widths.back();
    a.hidden.assign(widths.begin() + 1, widths.end() - 1);
    if (a.hidden.empty()) a.regularizer = RegularizerKind::none;
    a.validate();
    return a;
}

GradcheckReport run_gradcheck(const GradcheckRequest& request) {
    const Rng root(request.seed);
    Rng init = root.derive("init");
    Network net = build_network(request.arch, init, root.derive("dropout").seed());
    if (!request.fault_block.empty()) {
        bool known = false;
        for (const ParamRef& p : net.parameters()) known = known || p.name == request.fault_block;
        if (!known) throw ConfigError("inject-fault", "no parameter block named '" + request.fault_block + "'");
        net.inject_gradient_fault(request.fault_block, 1.5);
    }
    Rng data = root.derive("gradcheck");
    // Zero biases put fully-dropped rows exactly on the ReLU kink, where the
    // central difference and the subgradient disagree; check at a generic point.
    for (const ParamRef& p : net.parameters())
        if (p.name.ends_with(".b"))
            for (double& v : p.value->data()) v = data.normal(0.0, 0.1);
    Matrix x(request.batch, request.arch.input_dim);
    for (double& v : x.data()) v = data.normal();
    std::vector<Label> y(request.batch);
    for (Label& l : y) l = static_cast<Label>(data.below(request.arch.num_classes));
    return gradcheck(net, x, y, request.gamma, request.gates);
}

namespace {

std::filesystem::path default_out_dir() {
    if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
    return "runs";
}

struct CommonOptions {
    std::string config;
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOptions& o, const std::string& preset_help) {
    cmd->add_option("--config", o.config, "config file (run: .ini or a manifest .json)");
    cmd->add_option("--preset", o.preset, preset_help);
    cmd->add_option("--seed", o.seed, "override run.seed");
    cmd->add_option("--out-dir", o.out_dir, std::string("output directory (default $") + kOutDirEnv + " or ./runs)");
    cmd->add_option("--override", o.overrides, "section.key=value, repeatable")->take_all();
}

int cmd_run(const CommonOptions& o, bool print_config, std::ostream& out) {
    TrainConfig cfg = preset_config(o.preset.empty() ? "desk" : o.preset);
    if (!o.config.empty()) cfg = load_config_or_manifest(o.config, cfg);
    for (const std::string& ov : o.overrides) apply_override(cfg, ov);
    if (o.seed) cfg.seed = *o.seed;
    cfg.validate();
    if (print_config) {
        out << echo_config(cfg);
        return exit_ok;
    }
    const std::filesystem::path dir = o.out_dir.empty() ? default_out_dir() : std::filesystem::path(o.out_dir);
    const ExperimentResult r = run_experiment(cfg, dir, file_stem(cfg.run_id), &out);
    out << std::setprecision(6) << "final train accuracy " << r.train.final_train_acc << '\n';
    if (r.train.final_test_acc) out << "final test accuracy " << *r.train.final_test_acc << '\n';
    out << "metrics  " << r.metrics_path.string() << '\n' << "manifest " << r.manifest_path.string() << '\n';
    return exit_ok;
}

int cmd_suite(const CommonOptions& o, std::size_t workers, const std::vector<std::uint64_t>& seeds, bool print_config,
              std::ostream& out) {
    ExperimentSuite suite;
    if (!o.config.empty()) {
        TrainConfig base = preset_config("desk");
        suite = load_suite(o.config, base);
        if (!o.preset.empty()) throw ConfigError("preset", "give either --config or --preset for a suite");
    } else {
        suite = preset_suite(o.preset.empty() ? "comparison" : o.preset);
    }
    for (const std::string& ov : o.overrides) apply_override(suite.base, ov);
    if (!seeds.empty()) suite.seeds = seeds;
    if (o.seed) suite.seeds = {*o.seed};
    suite.validate();
    if (print_config) {
        out << echo_suite(suite);
        return exit_ok;
    }
    const std::filesystem::path dir = (o.out_dir.empty() ? default_out_dir() : std::filesystem::path(o.out_dir));
    const SuiteOutcome r = run_suite(suite, dir, workers, &out);
    out << "summary " << r.summary_path.string() << '\n';
    if (r.failed() > 0) {
        out << r.failed() << " of " << r.runs.size() << " runs failed\n";
        return exit_runtime;
    }
    return exit_ok;
}

int cmd_gradcheck(const GradcheckRequest& req, std::ostream& out) {
    const GradcheckReport report = run_gradcheck(req);
    out << std::left << std::setw(12) << "block" << "max rel error\n";
    for (const BlockCheck& b : report.blocks)
        out << std::left << std::setw(12) << b.name << std::scientific << std::setprecision(3) << b.max_rel_error
            << std::defaultfloat << (b.max_rel_error < report.tolerance ? "" : "  FAIL") << '\n';
    if (report.passed()) {
        out << "gradcheck passed (tolerance " << report.tolerance << ")\n";
        return exit_ok;
    }
    out << "gradcheck FAILED:";
    for (const std::string& b : report.failing_blocks()) out << ' ' << b;
    out << '\n';
    return exit_runtime;
}

int cmd_summarize(const std::vector<std::string>& files, const std::string& out_path, std::ostream& out) {
    const Summary s = summarize_files(files);
    const std::string md = render_markdown(s);
    if (out_path.empty()) {
        out << md;
    } else {
        std::ofstream f(out_path);
        f << md;
        if (!f) throw IoError("cannot write " + out_path);
        out << "summary " << out_path << '\n';
    }
    if (s.malformed_lines > 0) out << "warning: skipped " << s.malformed_lines << " malformed line(s)\n";
    return exit_ok;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Train MLPs with accuracy-driven gate regularization and compare against baselines", "ans"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(version()));

    CommonOptions run_opts;
    bool run_print = false;
    CLI::App* run = app.add_subcommand("run", "train one configuration");
    add_common(run, run_opts, "base preset: desk | paper");
    run->add_flag("--print-config", run_print, "print the resolved config and exit");

    CommonOptions suite_opts;
    std::size_t workers = 1;
    std::vector<std::uint64_t> seeds;
    bool suite_print = false;
    CLI::App* suite = app.add_subcommand("suite", "run every variant x seed of a suite and summarize");
    add_common(suite, suite_opts, "built-in suite: comparison | ablation");
    suite->add_option("--workers", workers, "parallel runs")->check(CLI::PositiveNumber);
    suite->add_option("--seeds", seeds, "replace the suite's seed list")->delimiter(',');
    suite->add_flag("--print-config", suite_print, "print the resolved suite and exit");

    GradcheckRequest gc;
    std::string arch = "2-4-2";
    std::string regularizer = "ans";
    CLI::App* grad = app.add_subcommand("gradcheck", "finite-difference check of the training objective");
    grad->add_option("--arch", arch, "layer widths, e.g. 2-4-2");
    grad->add_option("--regularizer", regularizer, "none | dropout | ans");
    grad->add_option("--gamma", gc.gamma, "fixed penalty weight");
    grad->add_option("--seed", gc.seed, "initialization and batch seed");
    grad->add_option("--batch", gc.batch, "batch rows")->check(CLI::PositiveNumber);
    grad->add_option("--inject-fault", gc.fault_block, "corrupt one block's analytic gradient (self-test)");

    std::vector<std::string> files;
    std::string summary_out;
    CLI::App* summ = app.add_subcommand("summarize", "tabulate metrics logs");
    summ->add_option("files", files, "metrics .jsonl files")->required();
    summ->add_option("--out", summary_out, "write markdown here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_validation;
    }

    try {
        if (*run) return cmd_run(run_opts, run_print, out);
        if (*suite) return cmd_suite(suite_opts, workers, seeds, suite_print, out);
        if (*grad) {
            gc.arch = parse_arch(arch);
            TrainConfig tmp;
            set_config_value(tmp, "model.regularizer", regularizer);
            if (!gc.arch.hidden.empty()) gc.arch.regularizer = tmp.arch.regularizer;
            if (!(gc.gamma >= 0.0 && std::isfinite(gc.gamma))) throw ConfigError("gamma", "must be >= 0");
            return cmd_gradcheck(gc, out);
        }
        if (*summ) return cmd_summarize(files, summary_out, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return exit_validation;
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << '\n';
        return exit_validation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_runtime;
    }
    return exit_validation;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv{"ans"};
    for (const std::string& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace ans
