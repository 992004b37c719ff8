#include "ans/metrics.hpp"

#include <cmath>
#include <json.hpp>

#include "ans/error.hpp"

namespace ans {

using nlohmann::json;

namespace {

template <typename T>
json optional_json(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> optional_field(const json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<T>();
}

bool in_unit_interval(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

void MetricsRecord::validate() const {
    if (!std::isfinite(loss_grad) || !std::isfinite(loss_reg))
        throw DomainError("MetricsRecord: non-finite loss in run " + run_id);
    if (!in_unit_interval(accuracy)) throw DomainError("MetricsRecord: accuracy outside [0, 1]");
    if (mean_gate && !in_unit_interval(*mean_gate)) throw DomainError("MetricsRecord: mean_gate outside [0, 1]");
    if (train_acc_full && !in_unit_interval(*train_acc_full))
        throw DomainError("MetricsRecord: train_acc_full outside [0, 1]");
    if (test_acc && !in_unit_interval(*test_acc)) throw DomainError("MetricsRecord: test_acc outside [0, 1]");
}

std::string to_json_line(const MetricsRecord& r) {
    // ordered_json keeps the documented field order in the file.
    nlohmann::ordered_json j;
    j["run_id"] = r.run_id;
    j["kind"] = r.is_epoch_summary() ? "epoch" : "batch";
    j["epoch"] = r.epoch;
    j["batch"] = optional_json(r.batch);
    j["loss_grad"] = r.loss_grad;
    j["loss_reg"] = r.loss_reg;
    j["gamma"] = r.gamma;
    j["accuracy"] = r.accuracy;
    j["mean_gate"] = optional_json(r.mean_gate);
    j["lr"] = r.lr;
    j["wall_ms"] = r.wall_ms;
    j["train_acc_full"] = optional_json(r.train_acc_full);
    j["test_acc"] = optional_json(r.test_acc);
    return j.dump();
}

MetricsRecord parse_json_line(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("metrics record: ") + e.what(), 0);
    }
    try {
        MetricsRecord r;
        r.run_id = j.at("run_id").get<std::string>();
        r.epoch = j.at("epoch").get<std::size_t>();
        r.batch = optional_field<std::size_t>(j, "batch");
        const std::string kind = j.at("kind").get<std::string>();
        if ((kind == "epoch") != !r.batch.has_value())
            throw ParseError("metrics record: kind '" + kind + "' disagrees with batch field", 0);
        r.loss_grad = j.at("loss_grad").get<double>();
        r.loss_reg = j.at("loss_reg").get<double>();
        r.gamma = j.at("gamma").get<double>();
        r.accuracy = j.at("accuracy").get<double>();
        r.mean_gate = optional_field<double>(j, "mean_gate");
        r.lr = j.at("lr").get<double>();
        r.wall_ms = j.at("wall_ms").get<double>();
        r.train_acc_full = optional_field<double>(j, "train_acc_full");
        r.test_acc = optional_field<double>(j, "test_acc");
        return r;
    } catch (const json::exception& e) {
        throw ParseError(std::string("metrics record: ") + e.what(), 0);
    }
}

MetricsSink::MetricsSink(const std::filesystem::path& path, bool truncate)
    : path_(path), out_(path, truncate ? std::ios::trunc : std::ios::app) {
    if (!out_) throw IoError("cannot open metrics file '" + path.string() + "'");
}

void MetricsSink::append(const MetricsRecord& record) {
    out_ << to_json_line(record) << '\n';
    if (record.is_epoch_summary()) out_.flush();
    if (!out_) {
        throw IoError("write to '" + path_.string() + "' failed after " + std::to_string(written_) +
                      " records; the log is partial");
    }
    ++written_;
}

void MetricsSink::flush() {
    out_.flush();
    if (!out_) throw IoError("flush of '" + path_.string() + "' failed");
}

ReadResult read_records(std::istream& in) {
    ReadResult result;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            result.records.push_back(parse_json_line(line));
        } catch (const ParseError&) {
            ++result.malformed;
        }
    }
    return result;
}

ReadResult read_records(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open metrics file '" + path.string() + "'");
    return read_records(in);
}

}  // namespace ans
