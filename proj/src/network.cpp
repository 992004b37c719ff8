#include "ans/network.hpp"

#include <algorithm>
#include <type_traits>

#include "ans/error.hpp"

namespace ans {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::size_t layer_in(const Layer& layer) {
    return std::visit(overloaded{[](const DenseLayer& l) { return l.in_dim(); },
                                 [](const ReluLayer& l) { return l.width(); },
                                 [](const AnsGateLayer& l) { return l.width(); },
                                 [](const DropoutLayer& l) { return l.width(); }},
                      layer);
}

std::size_t layer_out(const Layer& layer) {
    return std::visit(overloaded{[](const DenseLayer& l) { return l.out_dim(); },
                                 [](const ReluLayer& l) { return l.width(); },
                                 [](const AnsGateLayer& l) { return l.width(); },
                                 [](const DropoutLayer& l) { return l.width(); }},
                      layer);
}

}  // namespace

void Architecture::validate() const {
    if (input_dim == 0) throw ConfigError("input_dim", "must be >= 1");
    if (num_classes < 2) throw ConfigError("num_classes", "need at least 2 classes");
    for (std::size_t w : hidden)
        if (w == 0) throw ConfigError("model.hidden", "hidden widths must be >= 1");
    if (regularizer == RegularizerKind::dropout && !(dropout_rate >= 0.0 && dropout_rate < 1.0))
        throw ConfigError("model.dropout", "rate must lie in [0, 1)");
    for (std::size_t i : regularized_layers) {
        if (i >= hidden.size())
            throw ConfigError("model.regularized_layers",
                              "index " + std::to_string(i) + " exceeds hidden layer count " +
                                  std::to_string(hidden.size()));
    }
    if (regularizer != RegularizerKind::none && hidden.empty())
        throw ConfigError("model.regularizer", "a regularizer needs at least one hidden layer");
}

Network::Network(std::vector<Layer> layers, std::uint64_t dropout_seed)
    : layers_(std::move(layers)), dropout_rng_(dropout_seed) {
    if (layers_.empty()) throw ShapeError("Network: empty layer stack");
    if (!std::holds_alternative<DenseLayer>(layers_.back()))
        throw ShapeError("Network: the last layer must be the dense logits layer");
    if (!std::holds_alternative<DenseLayer>(layers_.front()))
        throw ShapeError("Network: the first layer must be dense");

    bool after_activation = false;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        if (i > 0 && layer_out(layers_[i - 1]) != layer_in(layers_[i])) {
            throw ShapeError("Network: layer " + std::to_string(i - 1) + " emits " +
                             std::to_string(layer_out(layers_[i - 1])) + " features but layer " +
                             std::to_string(i) + " expects " + std::to_string(layer_in(layers_[i])));
        }
        const Layer& l = layers_[i];
        if (std::holds_alternative<DenseLayer>(l)) {
            after_activation = false;
        } else if (std::holds_alternative<ReluLayer>(l)) {
            if (i == 0 || !std::holds_alternative<DenseLayer>(layers_[i - 1]))
                throw ShapeError("Network: ReLU must follow a dense layer");
            after_activation = true;
        } else if (!after_activation) {
            throw ShapeError("Network: gate/dropout layer " + std::to_string(i) +
                             " must follow an activated hidden layer");
        }
    }
    input_dim_ = layer_in(layers_.front());
    output_dim_ = layer_out(layers_.back());
    if (output_dim_ < 2) throw ShapeError("Network: softmax head needs at least 2 outputs");
}

void Network::set_mode(Mode mode) {
    mode_ = mode;
    for (Layer& l : layers_)
        if (auto* d = std::get_if<DropoutLayer>(&l)) d->set_mode(mode);
}

Matrix Network::forward(const Matrix& x) {
    Matrix h = x;
    for (Layer& layer : layers_) {
        h = std::visit(overloaded{[&](DenseLayer& l) { return l.forward(h); },
                                  [&](ReluLayer& l) { return l.forward(h); },
                                  [&](AnsGateLayer& l) { return l.forward(h); },
                                  [&](DropoutLayer& l) { return l.forward(h, dropout_rng_); }},
                       layer);
    }
    return h;
}

Matrix Network::backward(const Matrix& grad_logits, double gamma, const GateSettings& settings) {
    Matrix grad = grad_logits;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
        grad = std::visit(
            overloaded{[&](DenseLayer& l) { return l.backward(grad); },
                       [&](ReluLayer& l) { return l.backward(grad); },
                       [&](AnsGateLayer& l) {
                           return l.backward(grad, reg_grad_z(l, gamma, settings.normalization),
                                             settings.gradient);
                       },
                       [&](DropoutLayer& l) { return l.backward(grad); }},
            *it);
    }
    if (fault_) {
        for (ParamRef& p : parameters())
            if (p.name == fault_->first)
                for (double& g : p.grad->data()) g *= fault_->second;
    }
    return grad;
}

void Network::zero_grad() {
    for (Layer& l : layers_) {
        if (auto* d = std::get_if<DenseLayer>(&l)) d->zero_grad();
        if (auto* a = std::get_if<AnsGateLayer>(&l)) a->zero_grad();
    }
}

std::vector<ParamRef> Network::parameters(bool decay_biases) {
    std::vector<ParamRef> out;
    std::size_t dense = 0;
    std::size_t gate = 0;
    for (Layer& l : layers_) {
        if (auto* d = std::get_if<DenseLayer>(&l)) {
            const std::string p = "dense" + std::to_string(dense++);
            out.push_back({p + ".W", &d->weights(), &d->grad_weights(), true});
            out.push_back({p + ".b", &d->bias(), &d->grad_bias(), decay_biases});
        } else if (auto* a = std::get_if<AnsGateLayer>(&l)) {
            const std::string p = "gate" + std::to_string(gate++);
            out.push_back({p + ".W_a", &a->weights(), &a->grad_weights(), true});
            out.push_back({p + ".b_a", &a->bias(), &a->grad_bias(), decay_biases});
        }
    }
    return out;
}

std::vector<AnsGateLayer*> Network::gate_layers() {
    std::vector<AnsGateLayer*> out;
    for (Layer& l : layers_)
        if (auto* a = std::get_if<AnsGateLayer>(&l)) out.push_back(a);
    return out;
}

std::vector<const AnsGateLayer*> Network::gate_layers() const {
    std::vector<const AnsGateLayer*> out;
    for (const Layer& l : layers_)
        if (const auto* a = std::get_if<AnsGateLayer>(&l)) out.push_back(a);
    return out;
}

bool Network::has_gates() const {
    return std::any_of(layers_.begin(), layers_.end(),
                       [](const Layer& l) { return std::holds_alternative<AnsGateLayer>(l); });
}

std::vector<const Matrix*> Network::cached_gates() const {
    std::vector<const Matrix*> out;
    for (const AnsGateLayer* g : gate_layers()) out.push_back(&g->gates());
    return out;
}

void Network::freeze_dropout(bool frozen) {
    for (Layer& l : layers_)
        if (auto* d = std::get_if<DropoutLayer>(&l)) d->set_frozen(frozen);
}

void Network::inject_gradient_fault(std::string block, double factor) {
    fault_ = std::make_pair(std::move(block), factor);
}

Network build_network(const Architecture& arch, Rng& init, std::uint64_t dropout_seed) {
    arch.validate();
    auto regularized = [&](std::size_t i) {
        if (arch.regularizer == RegularizerKind::none) return false;
        if (arch.regularized_layers.empty()) return true;
        return std::find(arch.regularized_layers.begin(), arch.regularized_layers.end(), i) !=
               arch.regularized_layers.end();
    };

    std::vector<Layer> layers;
    std::size_t width = arch.input_dim;
    for (std::size_t i = 0; i < arch.hidden.size(); ++i) {
        const std::size_t out = arch.hidden[i];
        layers.emplace_back(DenseLayer::he_normal(width, out, init));
        layers.emplace_back(ReluLayer(out));
        if (regularized(i)) {
            if (arch.regularizer == RegularizerKind::ans)
                layers.emplace_back(AnsGateLayer::xavier_uniform(out, init));
            else
                layers.emplace_back(DropoutLayer(out, arch.dropout_rate));
        }
        width = out;
    }
    layers.emplace_back(DenseLayer::he_normal(width, arch.num_classes, init));
    return Network(std::move(layers), dropout_seed);
}

Network build_vanilla_twin(const Network& net) {
    std::vector<Layer> layers;
    for (const Layer& l : net.layers()) {
        if (std::holds_alternative<DenseLayer>(l) || std::holds_alternative<ReluLayer>(l))
            layers.push_back(l);
    }
    return Network(std::move(layers));
}

}  // namespace ans
