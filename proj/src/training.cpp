#include "ans/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "ans/error.hpp"
#include "ans/ops.hpp"

namespace ans {

void TrainConfig::validate() const {
    if (run_id.empty()) throw ConfigError("run.id", "must not be empty");
    if (epochs < 1) throw ConfigError("train.epochs", "must be >= 1");
    if (batch_size < 1) throw ConfigError("train.batch_size", "must be >= 1");
    arch.validate();
    try {
        gates.schedule.validate();
    } catch (const DomainError& e) {
        throw ConfigError("model.alpha/model.beta", e.what());
    }
    try {
        lr.validate();
    } catch (const DomainError& e) {
        throw ConfigError("optim.lr/optim.milestones/optim.lr_factor", e.what());
    }
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("optim.momentum", "must lie in [0, 1)");
    if (!(weight_decay >= 0.0 && std::isfinite(weight_decay))) throw ConfigError("optim.weight_decay", "must be >= 0");

    using Source = DataSpec::Source;
    if (data.source != Source::file) {
        if (data.train_size < 2) throw ConfigError("data.train_size", "must be >= 2");
        if (data.noise < 0.0) throw ConfigError("data.noise", "must be >= 0");
    }
    if (data.source == Source::spirals && !(data.turns > 0.0)) throw ConfigError("data.turns", "must be > 0");
    if (data.source != Source::file) {
        const std::size_t classes = data.source == Source::spirals ? 2 : data.centers.size();
        if (classes > 0 && data.train_size % classes != 0)
            throw ConfigError("data.train_size", "must be a multiple of the class count " + std::to_string(classes));
        if (classes > 0 && data.test_size % classes != 0)
            throw ConfigError("data.test_size", "must be a multiple of the class count " + std::to_string(classes));
    }
    if (data.source == Source::blobs) {
        if (data.centers.size() < 2) throw ConfigError("data.centers", "need at least 2 centers");
        if (!(data.blob_std > 0.0)) throw ConfigError("data.blob_std", "must be > 0");
    }
    if (data.source == Source::file) {
        if (data.train_path.empty()) throw ConfigError("data.train_path", "required when data.source = file");
        if (data.test_path.empty() && !(data.split_fraction > 0.0 && data.split_fraction < 1.0))
            throw ConfigError("data.split_fraction", "must lie in (0, 1)");
    }
}

namespace {

std::vector<Label> slice_labels(std::span<const Label> labels, std::span<const std::size_t> idx) {
    std::vector<Label> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(labels[i]);
    return out;
}

std::size_t count_correct(std::span<const Label> predictions, std::span<const Label> labels) {
    std::size_t c = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (predictions[i] == labels[i]) ++c;
    return c;
}

}  // namespace

double objective(Network& net, const Matrix& x, std::span<const Label> y, double gamma, const GateSettings& settings) {
    const Matrix logits = net.forward(x);
    const CrossEntropyResult ce = softmax_cross_entropy(logits, y);
    const auto gates = net.cached_gates();
    return ce.loss + reg_loss(std::span<const Matrix* const>(gates), gamma, settings.normalization).l_reg_total;
}

ObjectiveTerms forward_backward(Network& net, const Matrix& x, std::span<const Label> y, const GateSettings& settings,
                                std::optional<double> fixed_gamma) {
    if (x.rows() == 0) throw DomainError("forward_backward: empty batch");
    net.zero_grad();
    const Matrix logits = net.forward(x);
    const CrossEntropyResult ce = softmax_cross_entropy(logits, y);

    ObjectiveTerms terms;
    terms.loss_grad = ce.loss;
    terms.batch_size = y.size();
    terms.correct = count_correct(ce.predictions, y);

    double g = 0.0;
    if (fixed_gamma) {
        g = *fixed_gamma;
    } else if (net.has_gates()) {
        g = gamma(settings.schedule, terms.accuracy());
    }
    const auto gates = net.cached_gates();
    terms.reg = reg_loss(std::span<const Matrix* const>(gates), g, settings.normalization);
    terms.grad_input = net.backward(ce.grad_logits, g, settings);
    return terms;
}

BatchResult train_batch(Network& net, const Matrix& x, std::span<const Label> y, const GateSettings& settings,
                        SgdState& opt, bool decay_biases) {
    if (net.mode() != Mode::train) throw StateError("train_batch: network is in eval mode");
    const ObjectiveTerms terms = forward_backward(net, x, y, settings);
    if (!std::isfinite(terms.total())) throw NumericError("train_batch: non-finite objective");

    const auto params = net.parameters(decay_biases);
    sgd_step(opt, params);

    BatchResult r;
    r.loss_grad = terms.loss_grad;
    r.loss_reg = terms.reg.l_reg_total;
    r.gamma = terms.reg.gamma;
    r.correct = terms.correct;
    r.batch_size = terms.batch_size;
    r.accuracy = terms.accuracy();
    if (!terms.reg.per_layer.empty()) r.mean_gate = terms.reg.mean_gate();
    return r;
}

double evaluate(Network& net, const Dataset& data) {
    constexpr std::size_t kChunk = 512;
    const Mode previous = net.mode();
    net.set_mode(Mode::eval);
    std::size_t correct = 0;
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < data.size(); start += kChunk) {
        const std::size_t end = std::min(start + kChunk, data.size());
        idx.resize(end - start);
        for (std::size_t i = start; i < end; ++i) idx[i - start] = i;
        const Matrix logits = net.forward(data.features().gather_rows(idx));
        const auto pred = argmax_rows(logits);
        correct += count_correct(pred, std::span<const Label>(data.labels()).subspan(start, end - start));
    }
    net.set_mode(previous);
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

Network make_network(const TrainConfig& cfg, std::size_t input_dim, std::size_t num_classes) {
    Architecture arch = cfg.arch;
    arch.input_dim = input_dim;
    arch.num_classes = num_classes;
    const Rng root(cfg.seed);
    Rng init = root.derive("init");
    return build_network(arch, init, root.derive("dropout").seed());
}

TrainResult train(Network& net, const Dataset& train_data, const TrainConfig& cfg, const Dataset* test_data,
                  const RecordCallback& on_record) {
    cfg.validate();
    if (train_data.dim() != net.input_dim())
        throw ShapeError("train: dataset has " + std::to_string(train_data.dim()) + " features, network expects " +
                         std::to_string(net.input_dim()));

    using Clock = std::chrono::steady_clock;
    const auto start = Clock::now();
    auto elapsed_ms = [&] {
        if (!cfg.record_wall_time) return 0.0;
        return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    };

    Rng shuffle_rng = Rng(cfg.seed).derive("shuffle");
    SgdState opt({lr_at(cfg.lr, 0), cfg.momentum, cfg.weight_decay});
    TrainResult result;
    auto emit = [&](MetricsRecord rec) {
        rec.validate();
        if (on_record) on_record(rec);
        result.records.push_back(std::move(rec));
    };

    const std::size_t n = train_data.size();
    const std::span<const Label> all_labels(train_data.labels());
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        net.set_mode(Mode::train);
        const double lr = lr_at(cfg.lr, epoch);
        opt.set_lr(lr);
        const std::vector<std::size_t> order = shuffle_rng.permutation(n);

        double sum_loss_grad = 0.0, sum_loss_reg = 0.0, sum_gamma = 0.0, sum_gate = 0.0;
        std::size_t batches = 0, correct = 0;
        bool gated = false;
        for (std::size_t begin = 0; begin < n; begin += cfg.batch_size) {
            const std::size_t end = std::min(begin + cfg.batch_size, n);
            const std::span<const std::size_t> idx(order.data() + begin, end - begin);
            const Matrix x = train_data.features().gather_rows(idx);
            const std::vector<Label> y = slice_labels(all_labels, idx);

            BatchResult br;
            try {
                br = train_batch(net, x, y, cfg.gates, opt, cfg.decay_biases);
            } catch (const NumericError& e) {
                throw TrainingError(e.what(), epoch, batches);
            }

            MetricsRecord rec;
            rec.run_id = cfg.run_id;
            rec.epoch = epoch;
            rec.batch = batches;
            rec.loss_grad = br.loss_grad;
            rec.loss_reg = br.loss_reg;
            rec.gamma = br.gamma;
            rec.accuracy = br.accuracy;
            rec.mean_gate = br.mean_gate;
            rec.lr = lr;
            rec.wall_ms = elapsed_ms();
            emit(std::move(rec));

            sum_loss_grad += br.loss_grad;
            sum_loss_reg += br.loss_reg;
            sum_gamma += br.gamma;
            if (br.mean_gate) {
                gated = true;
                sum_gate += *br.mean_gate;
            }
            correct += br.correct;
            ++batches;
        }

        const double nb = static_cast<double>(batches);
        MetricsRecord summary;
        summary.run_id = cfg.run_id;
        summary.epoch = epoch;
        summary.loss_grad = sum_loss_grad / nb;
        summary.loss_reg = sum_loss_reg / nb;
        summary.gamma = sum_gamma / nb;
        summary.accuracy = static_cast<double>(correct) / static_cast<double>(n);
        if (gated) summary.mean_gate = sum_gate / nb;
        summary.lr = lr;
        if (cfg.full_train_eval) summary.train_acc_full = evaluate(net, train_data);
        if (test_data && cfg.eval_test) summary.test_acc = evaluate(net, *test_data);
        summary.wall_ms = elapsed_ms();
        result.final_train_acc = summary.train_acc_full.value_or(summary.accuracy);
        result.final_test_acc = summary.test_acc;
        emit(std::move(summary));
    }
    return result;
}

}  // namespace ans
