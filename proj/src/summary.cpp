#include "ans/summary.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "ans/error.hpp"

namespace ans {

MeanStd mean_std(std::span<const double> values) {
    MeanStd out;
    out.count = values.size();
    if (values.empty()) return out;
    double s = 0.0;
    for (double v : values) s += v;
    out.mean = s / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - out.mean) * (v - out.mean);
        out.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return out;
}

namespace {

std::string variant_of(const std::string& run_id) {
    const auto pos = run_id.rfind(':');
    return pos == std::string::npos ? run_id : run_id.substr(0, pos);
}

std::optional<RunSummary> summarize_run(const std::string& run_id, const std::vector<const MetricsRecord*>& rows) {
    RunSummary s;
    s.run_id = run_id;
    s.variant = variant_of(run_id);
    double gamma_sum = 0.0;
    for (const MetricsRecord* r : rows) {
        if (!r->is_epoch_summary()) continue;
        ++s.epochs;
        s.final_train_acc = r->train_acc_full.value_or(r->accuracy);
        s.final_test_acc = r->test_acc;
        if (r->test_acc && (!s.best_test_acc || *r->test_acc > *s.best_test_acc)) s.best_test_acc = r->test_acc;
        s.gamma_trajectory.push_back(r->gamma);
        gamma_sum += r->gamma;
        s.final_mean_gate = r->mean_gate;
    }
    if (s.epochs == 0) return std::nullopt;
    s.mean_gamma = gamma_sum / static_cast<double>(s.epochs);
    return s;
}

template <typename Getter>
std::optional<MeanStd> aggregate_optional(const std::vector<const RunSummary*>& runs, Getter get) {
    std::vector<double> values;
    for (const RunSummary* r : runs)
        if (auto v = get(*r)) values.push_back(*v);
    if (values.empty()) return std::nullopt;
    return mean_std(values);
}

}  // namespace

Summary summarize(std::span<const std::vector<MetricsRecord>> runs) {
    Summary out;
    for (const auto& log : runs) {
        // Group by run_id, keeping first-appearance order.
        std::vector<std::string> order;
        std::map<std::string, std::vector<const MetricsRecord*>> by_id;
        for (const MetricsRecord& r : log) {
            auto [it, inserted] = by_id.try_emplace(r.run_id);
            if (inserted) order.push_back(r.run_id);
            it->second.push_back(&r);
        }
        for (const std::string& id : order)
            if (auto s = summarize_run(id, by_id[id])) out.runs.push_back(std::move(*s));
    }
    if (out.runs.empty()) throw DomainError("summarize: no completed epochs in the given logs");

    std::vector<std::string> order;
    std::map<std::string, std::vector<const RunSummary*>> by_variant;
    for (const RunSummary& r : out.runs) {
        auto [it, inserted] = by_variant.try_emplace(r.variant);
        if (inserted) order.push_back(r.variant);
        it->second.push_back(&r);
    }
    for (const std::string& name : order) {
        const auto& members = by_variant[name];
        VariantSummary v;
        v.variant = name;
        v.runs = members.size();
        std::vector<double> train, gamma;
        for (const RunSummary* r : members) {
            train.push_back(r->final_train_acc);
            gamma.push_back(r->mean_gamma);
        }
        v.final_train_acc = mean_std(train);
        v.mean_gamma = mean_std(gamma);
        v.final_test_acc = aggregate_optional(members, [](const RunSummary& r) { return r.final_test_acc; });
        v.best_test_acc = aggregate_optional(members, [](const RunSummary& r) { return r.best_test_acc; });
        v.final_mean_gate = aggregate_optional(members, [](const RunSummary& r) { return r.final_mean_gate; });
        out.variants.push_back(std::move(v));
    }
    return out;
}

Summary summarize_files(std::span<const std::string> paths) {
    std::vector<std::vector<MetricsRecord>> logs;
    std::size_t malformed = 0;
    for (const std::string& p : paths) {
        ReadResult r = read_records(std::filesystem::path(p));
        malformed += r.malformed;
        logs.push_back(std::move(r.records));
    }
    Summary s = summarize(logs);
    s.malformed_lines = malformed;
    return s;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

std::string fmt(const MeanStd& m) {
    return m.stddev ? fmt(m.mean) + " ± " + fmt(*m.stddev) : fmt(m.mean);
}

std::string fmt(const std::optional<MeanStd>& m) { return m ? fmt(*m) : std::string(); }

}  // namespace

std::string render_markdown(const Summary& s) {
    std::ostringstream out;
    out << "| variant | runs | final train acc | final test acc | best test acc | mean gamma | final mean gate |\n";
    out << "|---|---:|---:|---:|---:|---:|---:|\n";
    for (const VariantSummary& v : s.variants) {
        out << "| " << v.variant << " | " << v.runs << " | " << fmt(v.final_train_acc) << " | "
            << fmt(v.final_test_acc) << " | " << fmt(v.best_test_acc) << " | " << fmt(v.mean_gamma) << " | "
            << fmt(v.final_mean_gate) << " |\n";
    }
    out << "\n| run | epochs | final train acc | final test acc | best test acc | mean gamma | first-epoch gamma | "
           "last-epoch gamma | final mean gate |\n";
    out << "|---|---:|---:|---:|---:|---:|---:|---:|---:|\n";
    for (const RunSummary& r : s.runs) {
        out << "| " << r.run_id << " | " << r.epochs << " | " << fmt(r.final_train_acc) << " | "
            << fmt(r.final_test_acc) << " | " << fmt(r.best_test_acc) << " | " << fmt(r.mean_gamma) << " | "
            << fmt(r.gamma_trajectory.front()) << " | " << fmt(r.gamma_trajectory.back()) << " | "
            << fmt(r.final_mean_gate) << " |\n";
    }
    if (s.malformed_lines > 0) out << "\nSkipped " << s.malformed_lines << " malformed line(s).\n";
    return out.str();
}

}  // namespace ans
